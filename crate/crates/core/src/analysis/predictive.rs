//! Posterior-predictive checks for individual observations.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use super::de::quantile;
use crate::data::{Coordinate, IndexedData};
use crate::error::{Error, Result};
use crate::gibbs::ChainOutput;
use crate::model::ModelState;
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
pub enum ObservationSelector {
    All,
    Coordinates(Vec<Coordinate>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictiveOptions {
    pub seed: u64,
    /// Keep every predictive draw in the summaries.
    pub keep_draws: bool,
}

impl Default for PredictiveOptions {
    fn default() -> Self {
        PredictiveOptions {
            seed: 1,
            keep_draws: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSummary {
    pub coordinate: Coordinate,
    pub observed: f64,
    /// Empirical central 95% interval of the predictive draws.
    pub lo95: f64,
    pub hi95: f64,
    pub covered: bool,
    /// Mixture density at the observed value.
    pub density: f64,
    /// Mixture CDF at the observed value (probability integral transform).
    pub pit: f64,
    pub draws: Option<Vec<f64>>,
}

#[inline]
fn component(state: &ModelState, data: &IndexedData, idx: usize) -> (f64, f64) {
    let mean = state.kappa[data.slot[idx] as usize]
        + state.alpha[data.spectrum[idx] as usize]
        + state.effect(data.cell[idx] as usize);
    (mean, state.sigma())
}

fn resolve(data: &IndexedData, selector: &ObservationSelector) -> Result<Vec<usize>> {
    match selector {
        ObservationSelector::All => Ok((0..data.len()).collect()),
        ObservationSelector::Coordinates(coords) => coords
            .iter()
            .map(|c| {
                data.position(c)
                    .ok_or_else(|| Error::UnknownCoordinate(c.to_string()))
            })
            .collect(),
    }
}

fn check_design(output: &ChainOutput, data: &IndexedData) -> Result<()> {
    if output.is_empty() {
        return Err(Error::InsufficientSamples(
            "chain output holds no states".into(),
        ));
    }
    if output.design != *data.design() {
        return Err(Error::Invalid(
            "chain output and dataset have different designs".into(),
        ));
    }
    Ok(())
}

/// For each selected observation draws one replicate per stored state from
/// N(kappa + alpha + beta*gamma, sigma^2) and reports the central 95%
/// interval of those draws. Observation `i` uses its own random stream, so
/// results do not depend on the selection or on thread scheduling.
pub fn posterior_predictive(
    output: &ChainOutput,
    data: &IndexedData,
    selector: &ObservationSelector,
    options: PredictiveOptions,
) -> Result<Vec<PredictiveSummary>> {
    check_design(output, data)?;
    let indices = resolve(data, selector)?;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let n = output.samples.len() as f64;
    Ok(indices
        .par_iter()
        .map(|&idx| {
            let mut rng = seeded(options.seed, idx as u64);
            let observed = data.y[idx];
            let mut draws = Vec::with_capacity(output.samples.len());
            let mut density = 0.0;
            let mut cdf = 0.0;
            for state in &output.samples {
                let (mean, sd) = component(state, data, idx);
                let z: f64 = StandardNormal.sample(&mut rng);
                draws.push(mean + sd * z);
                let u = (observed - mean) / sd;
                density += (-0.5 * u * u).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
                cdf += std_normal.cdf(u);
            }
            let mut sorted = draws.clone();
            sorted.sort_by(f64::total_cmp);
            let lo95 = quantile(&sorted, 0.025);
            let hi95 = quantile(&sorted, 0.975);
            PredictiveSummary {
                coordinate: data.observations()[idx].coordinate(),
                observed,
                lo95,
                hi95,
                covered: lo95 <= observed && observed <= hi95,
                density: density / n,
                pit: cdf / n,
                draws: options.keep_draws.then_some(draws),
            }
        })
        .collect())
}

/// Mixture predictive density (1/N) sum phi((y - mu_s)/sigma_s) / sigma_s
/// evaluated on `grid` for one observed coordinate.
pub fn predictive_density(
    output: &ChainOutput,
    data: &IndexedData,
    coordinate: &Coordinate,
    grid: &[f64],
) -> Result<Vec<f64>> {
    check_design(output, data)?;
    let idx = data
        .position(coordinate)
        .ok_or_else(|| Error::UnknownCoordinate(coordinate.to_string()))?;
    let comps: Vec<(f64, f64)> = output
        .samples
        .iter()
        .map(|s| component(s, data, idx))
        .collect();
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    Ok(grid
        .iter()
        .map(|&y| {
            comps
                .iter()
                .map(|&(m, sd)| {
                    let u = (y - m) / sd;
                    (-0.5 * u * u).exp() / (sd * norm)
                })
                .sum::<f64>()
                / comps.len() as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tests::two_group_design;
    use crate::data::{Dataset, Observation};
    use crate::gibbs::ChainConfig;
    use crate::model::default_hyperparameters;
    use approx::assert_relative_eq;

    fn setup(sigmas: &[f64]) -> (ChainOutput, IndexedData) {
        let design = two_group_design();
        let obs = vec![Observation {
            experiment: 0,
            group: 1,
            sample: 0,
            protein: 0,
            spectrum: 0,
            log_intensity: 10.3,
        }];
        let data = IndexedData::new(&Dataset::new(design.clone(), obs)).unwrap();
        let layout = design.layout();
        let states = sigmas
            .iter()
            .map(|&sd| {
                let mut s = crate::model::ModelState::zeros(&layout, &default_hyperparameters());
                s.alpha[0] = 10.0;
                s.kappa[1] = 0.3;
                s.tau = sd.powi(-2);
                s
            })
            .collect();
        (
            ChainOutput::from_chains(design, vec![states], ChainConfig::default()),
            data,
        )
    }

    #[test]
    fn zero_residual_sits_at_median() {
        let (out, data) = setup(&[0.3]);
        let r = posterior_predictive(
            &out,
            &data,
            &ObservationSelector::All,
            PredictiveOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(r[0].pit, 0.5, epsilon = 1e-12);
        assert_relative_eq!(
            r[0].density,
            1.0 / (0.3 * (2.0 * std::f64::consts::PI).sqrt()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn wider_sigma_widens_interval() {
        let widths: Vec<f64> = [0.1, 0.3, 1.0]
            .iter()
            .map(|&sd| {
                let (out, data) = setup(&vec![sd; 400]);
                let r = posterior_predictive(
                    &out,
                    &data,
                    &ObservationSelector::All,
                    PredictiveOptions::default(),
                )
                .unwrap();
                r[0].hi95 - r[0].lo95
            })
            .collect();
        assert!(widths[0] < widths[1] && widths[1] < widths[2], "{widths:?}");
    }

    #[test]
    fn unknown_coordinate_is_an_error() {
        let (out, data) = setup(&[0.3]);
        let c = Coordinate {
            experiment: 0,
            group: 0,
            sample: 0,
            protein: 0,
            spectrum: 0,
        };
        let sel = ObservationSelector::Coordinates(vec![c]);
        assert!(matches!(
            posterior_predictive(&out, &data, &sel, PredictiveOptions::default()),
            Err(Error::UnknownCoordinate(_))
        ));
        assert!(predictive_density(&out, &data, &c, &[0.0]).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        let (out, data) = setup(&[0.2, 0.5]);
        let c = data.observations()[0].coordinate();
        let step = 0.001;
        let grid: Vec<f64> = (0..8000).map(|i| 6.3 + step * i as f64).collect();
        let total: f64 = predictive_density(&out, &data, &c, &grid)
            .unwrap()
            .iter()
            .sum::<f64>()
            * step;
        assert_relative_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn draws_are_kept_on_request() {
        let (out, data) = setup(&[0.3; 7]);
        let opts = PredictiveOptions {
            keep_draws: true,
            ..PredictiveOptions::default()
        };
        let r = posterior_predictive(&out, &data, &ObservationSelector::All, opts).unwrap();
        assert_eq!(r[0].draws.as_ref().unwrap().len(), 7);
    }
}
