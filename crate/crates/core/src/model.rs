//! Priors, model state and the joint log-posterior.
//!
//! The model for an observed log-intensity is
//!
//! ```text
//! y_egjki = kappa_egi + alpha_jk + beta_gj * gamma_gj + eps,   eps ~ N(0, 1/tau)
//! ```
//!
//! with beta_1j = gamma_1j = 0 (group 1 is the control) and the first sample of
//! each experiment's reference group pinned at kappa = 0. Noise is carried as
//! the precision `tau`; sigma = tau^(-1/2) is derived for reporting.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::config::KeyValueConfig;
use crate::data::{IndexedData, Layout};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Prior constants. Normal priors are given as (mean, precision), the Beta
/// prior on p by its two shapes and the Gamma prior on tau by (shape, rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    pub a_kappa: f64,
    pub b_kappa: f64,
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub a_p: f64,
    pub b_p: f64,
    pub a_gamma: f64,
    pub b_gamma: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        default_hyperparameters()
    }
}

/// Weakly informative defaults: kappa near 0, log-intensities in roughly
/// 4..16, about 5% of proteins differentially expressed, fold changes near 1.
pub fn default_hyperparameters() -> Hyperparameters {
    Hyperparameters {
        a_kappa: 0.0,
        b_kappa: 1.0 / 9.0,
        a_alpha: 10.0,
        b_alpha: 1.0 / 9.0,
        a_p: 1.0,
        b_p: 19.0,
        a_gamma: 0.0,
        b_gamma: 1.0,
        a_sigma: 1.0 / 1000.0,
        b_sigma: 1.0 / 1000.0,
    }
}

const HYPER_KEYS: [&str; 10] = [
    "a.kappa", "b.kappa", "a.alpha", "b.alpha", "a.p", "b.p", "a.gamma", "b.gamma", "a.sigma",
    "b.sigma",
];

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("b.kappa", self.b_kappa),
            ("b.alpha", self.b_alpha),
            ("b.gamma", self.b_gamma),
            ("a.p", self.a_p),
            ("b.p", self.b_p),
            ("a.sigma", self.a_sigma),
            ("b.sigma", self.b_sigma),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("a.kappa", self.a_kappa),
            ("a.alpha", self.a_alpha),
            ("a.gamma", self.a_gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Reads `a.kappa` .. `b.sigma`; absent keys keep their defaults.
    pub fn from_config(cfg: &KeyValueConfig) -> Result<Self> {
        let mut h = default_hyperparameters();
        let fields = h.fields_mut();
        for (key, slot) in HYPER_KEYS.iter().zip(fields) {
            if let Some(v) = cfg.get::<f64>(key)? {
                *slot = v;
            }
        }
        h.validate()?;
        Ok(h)
    }

    pub fn write_config(&self, cfg: &mut KeyValueConfig) {
        let values = [
            self.a_kappa,
            self.b_kappa,
            self.a_alpha,
            self.b_alpha,
            self.a_p,
            self.b_p,
            self.a_gamma,
            self.b_gamma,
            self.a_sigma,
            self.b_sigma,
        ];
        for (key, v) in HYPER_KEYS.iter().zip(values) {
            cfg.set(*key, v);
        }
    }

    fn fields_mut(&mut self) -> [&mut f64; 10] {
        [
            &mut self.a_kappa,
            &mut self.b_kappa,
            &mut self.a_alpha,
            &mut self.b_alpha,
            &mut self.a_p,
            &mut self.b_p,
            &mut self.a_gamma,
            &mut self.b_gamma,
            &mut self.a_sigma,
            &mut self.b_sigma,
        ]
    }

    pub fn prior_mean_p(&self) -> f64 {
        self.a_p / (self.a_p + self.b_p)
    }
}

/// One full assignment of the model parameters, stored flat according to a
/// [`Layout`]. Group-1 cells hold beta = 0, gamma = 0 and p = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub kappa: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<bool>,
    pub gamma: Vec<f64>,
    pub p: Vec<f64>,
    pub tau: f64,
}

impl ModelState {
    /// All-zero state with p at its prior mean and unit precision.
    pub fn zeros(layout: &Layout, hyper: &Hyperparameters) -> Self {
        let cells = layout.num_cells();
        let mut p = vec![hyper.prior_mean_p(); cells];
        p[..layout.num_proteins].fill(0.0);
        ModelState {
            kappa: vec![0.0; layout.num_slots()],
            alpha: vec![0.0; layout.num_spectra()],
            beta: vec![false; cells],
            gamma: vec![0.0; cells],
            p,
            tau: 1.0,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.tau.sqrt().recip()
    }

    /// beta_gj * gamma_gj for a cell.
    #[inline]
    pub fn effect(&self, cell: usize) -> f64 {
        if self.beta[cell] {
            self.gamma[cell]
        } else {
            0.0
        }
    }

    pub fn check_constraints(&self, layout: &Layout) -> Result<()> {
        if self.kappa.len() != layout.num_slots()
            || self.alpha.len() != layout.num_spectra()
            || self.beta.len() != layout.num_cells()
            || self.gamma.len() != layout.num_cells()
            || self.p.len() != layout.num_cells()
        {
            return Err(Error::Constraint(
                "state dimensions do not match the design".into(),
            ));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Constraint(format!(
                "tau = {} is not positive",
                self.tau
            )));
        }
        for &slot in layout.reference_slots() {
            if self.kappa[slot] != 0.0 {
                let (e, g, _) = layout.slot_coords(slot);
                return Err(Error::Constraint(format!(
                    "reference kappa of experiment {} (group {}) is {}",
                    e + 1,
                    g + 1,
                    self.kappa[slot]
                )));
            }
        }
        let p_count = layout.num_proteins;
        for j in 0..p_count {
            if self.beta[j] || self.gamma[j] != 0.0 {
                return Err(Error::Constraint(format!(
                    "control group beta/gamma of protein {} must be 0",
                    j + 1
                )));
            }
        }
        for cell in p_count..layout.num_cells() {
            let p = self.p[cell];
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Constraint(format!(
                    "p of cell {cell} is {p}, outside (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn normal_log_density(x: f64, mean: f64, precision: f64) -> f64 {
    let d = x - mean;
    0.5 * (precision / (2.0 * PI)).ln() - 0.5 * precision * d * d
}

fn beta_log_density(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

fn gamma_log_density(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Sum of all prior log-densities.
pub fn log_prior(state: &ModelState, layout: &Layout, hyper: &Hyperparameters) -> f64 {
    let mut lp = 0.0;
    for (slot, &k) in state.kappa.iter().enumerate() {
        if !layout.is_reference(slot) {
            lp += normal_log_density(k, hyper.a_kappa, hyper.b_kappa);
        }
    }
    for &a in &state.alpha {
        lp += normal_log_density(a, hyper.a_alpha, hyper.b_alpha);
    }
    for cell in layout.num_proteins..layout.num_cells() {
        let p = state.p[cell];
        lp += beta_log_density(p, hyper.a_p, hyper.b_p);
        lp += if state.beta[cell] {
            p.ln()
        } else {
            (1.0 - p).ln()
        };
        lp += normal_log_density(state.gamma[cell], hyper.a_gamma, hyper.b_gamma);
    }
    lp + gamma_log_density(state.tau, hyper.a_sigma, hyper.b_sigma)
}

/// Gaussian log-likelihood of the observed entries only.
pub fn log_likelihood(state: &ModelState, data: &IndexedData) -> f64 {
    let n = data.len() as f64;
    let mut ss = 0.0;
    for idx in 0..data.len() {
        let r = data.y[idx]
            - state.kappa[data.slot[idx] as usize]
            - state.alpha[data.spectrum[idx] as usize]
            - state.effect(data.cell[idx] as usize);
        ss += r * r;
    }
    0.5 * n * (state.tau / (2.0 * PI)).ln() - 0.5 * state.tau * ss
}

/// Unnormalised log posterior density in the (kappa, alpha, beta, p, gamma, tau)
/// parameterisation.
pub fn log_joint(state: &ModelState, data: &IndexedData, hyper: &Hyperparameters) -> Result<f64> {
    state.check_constraints(data.layout())?;
    Ok(log_prior(state, data.layout(), hyper) + log_likelihood(state, data))
}

/// Starting point for a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// kappa = 0, no DE, alpha at per-spectrum means.
    Neutral,
    /// As `Neutral`, plus per-sample mean offsets in kappa.
    DataDriven,
    /// Every free parameter drawn from its prior.
    Random { seed: u64 },
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitStrategy::Neutral => f.write_str("neutral"),
            InitStrategy::DataDriven => f.write_str("data-driven"),
            InitStrategy::Random { seed } => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for InitStrategy {
    type Err = Error;

    /// Accepts `neutral`, `data-driven`, `random` and `random:<seed>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "neutral" => Ok(InitStrategy::Neutral),
            "data-driven" | "data_driven" => Ok(InitStrategy::DataDriven),
            "random" => Ok(InitStrategy::Random { seed: 0 }),
            other => other
                .strip_prefix("random:")
                .and_then(|seed| seed.parse().ok())
                .map(|seed| InitStrategy::Random { seed })
                .ok_or_else(|| Error::Config(format!("unknown init strategy `{other}`"))),
        }
    }
}

const VARIANCE_FLOOR: f64 = 1e-6;

pub fn initialize_state(
    data: &IndexedData,
    hyper: &Hyperparameters,
    strategy: InitStrategy,
) -> ModelState {
    let layout = data.layout();
    match strategy {
        InitStrategy::Neutral => {
            let mut state = ModelState::zeros(layout, hyper);
            fit_alpha_and_tau(&mut state, data, hyper);
            state
        }
        InitStrategy::DataDriven => {
            let mut state = ModelState::zeros(layout, hyper);
            fit_alpha_and_tau(&mut state, data, hyper);
            let mut sums = vec![0.0; layout.num_slots()];
            for idx in 0..data.len() {
                sums[data.slot[idx] as usize] +=
                    data.y[idx] - state.alpha[data.spectrum[idx] as usize];
            }
            let offsets: Vec<f64> = sums
                .iter()
                .enumerate()
                .map(|(s, &sum)| match data.slot_count(s) {
                    0 => 0.0,
                    n => sum / n as f64,
                })
                .collect();
            for (slot, k) in state.kappa.iter_mut().enumerate() {
                let (e, _, _) = layout.slot_coords(slot);
                *k = offsets[slot] - offsets[layout.reference_slots()[e]];
            }
            fit_alpha_and_tau(&mut state, data, hyper);
            state
        }
        InitStrategy::Random { seed } => random_state(layout, hyper, &mut seeded(seed, u64::MAX)),
    }
}

/// Draws every free parameter from its prior.
pub fn random_state<R: Rng + ?Sized>(
    layout: &Layout,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> ModelState {
    let mut state = ModelState::zeros(layout, hyper);
    let kappa_sd = hyper.b_kappa.sqrt().recip();
    for (slot, k) in state.kappa.iter_mut().enumerate() {
        if !layout.is_reference(slot) {
            let z: f64 = StandardNormal.sample(rng);
            *k = hyper.a_kappa + kappa_sd * z;
        }
    }
    let alpha_sd = hyper.b_alpha.sqrt().recip();
    for a in state.alpha.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *a = hyper.a_alpha + alpha_sd * z;
    }
    let beta_dist = Beta::new(hyper.a_p, hyper.b_p).expect("validated Beta shapes");
    let gamma_sd = hyper.b_gamma.sqrt().recip();
    for cell in layout.num_proteins..layout.num_cells() {
        let p = clamp_open_unit(beta_dist.sample(rng));
        state.p[cell] = p;
        state.beta[cell] = rng.random::<f64>() < p;
        let z: f64 = StandardNormal.sample(rng);
        state.gamma[cell] = hyper.a_gamma + gamma_sd * z;
    }
    let tau_dist = Gamma::new(hyper.a_sigma, hyper.b_sigma.recip()).expect("validated Gamma");
    state.tau = clamp_precision(tau_dist.sample(rng));
    state
}

/// Sets alpha to per-spectrum means of y - kappa - effect (prior mean when a
/// spectrum is unobserved) and tau to the inverse residual variance.
fn fit_alpha_and_tau(state: &mut ModelState, data: &IndexedData, hyper: &Hyperparameters) {
    let mut sums = vec![0.0; state.alpha.len()];
    for idx in 0..data.len() {
        sums[data.spectrum[idx] as usize] += data.y[idx]
            - state.kappa[data.slot[idx] as usize]
            - state.effect(data.cell[idx] as usize);
    }
    for (k, a) in state.alpha.iter_mut().enumerate() {
        *a = match data.spectrum_count(k) {
            0 => hyper.a_alpha,
            n => sums[k] / n as f64,
        };
    }
    let residuals: Vec<f64> = (0..data.len())
        .map(|idx| {
            data.y[idx]
                - state.kappa[data.slot[idx] as usize]
                - state.alpha[data.spectrum[idx] as usize]
                - state.effect(data.cell[idx] as usize)
        })
        .collect();
    let variance = if residuals.len() < 2 {
        0.0
    } else {
        let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
        residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (residuals.len() - 1) as f64
    };
    state.tau = 1.0 / variance.max(VARIANCE_FLOOR);
}

pub(crate) fn clamp_open_unit(p: f64) -> f64 {
    const EPS: f64 = 1e-300;
    p.clamp(EPS, 1.0 - f64::EPSILON / 2.0)
}

pub(crate) fn clamp_precision(tau: f64) -> f64 {
    tau.clamp(f64::MIN_POSITIVE, f64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tests::two_group_design;
    use crate::data::{Dataset, DesignInfo, Observation};
    use approx::assert_relative_eq;

    fn single_obs_data(y: f64) -> IndexedData {
        let design = DesignInfo {
            num_experiments: 1,
            num_groups: 1,
            num_proteins: 1,
            spectra_per_protein: vec![1],
            samples_per_cell: vec![vec![1]],
            reference_group: vec![0],
            tags_per_experiment: 1,
        };
        let obs = Observation {
            experiment: 0,
            group: 0,
            sample: 0,
            protein: 0,
            spectrum: 0,
            log_intensity: y,
        };
        IndexedData::new(&Dataset::new(design, vec![obs])).unwrap()
    }

    #[test]
    fn defaults() {
        let h = default_hyperparameters();
        assert_eq!(h.a_kappa, 0.0);
        assert_relative_eq!(h.b_kappa, 1.0 / 9.0);
        assert_eq!((h.a_alpha, h.a_p, h.b_p), (10.0, 1.0, 19.0));
        assert_relative_eq!(h.prior_mean_p(), 0.05);
        assert_eq!((h.a_gamma, h.b_gamma), (0.0, 1.0));
        assert_eq!((h.a_sigma, h.b_sigma), (0.001, 0.001));
    }

    #[test]
    fn hyperparameter_config_round_trip() {
        let mut cfg = KeyValueConfig::new();
        let mut h = default_hyperparameters();
        h.b_p = 9.0;
        h.write_config(&mut cfg);
        assert_eq!(Hyperparameters::from_config(&cfg).unwrap(), h);
        cfg.set("b.kappa", -1.0);
        assert!(Hyperparameters::from_config(&cfg).is_err());
    }

    #[test]
    fn zero_residual_log_joint() {
        // Only alpha and tau are free with one group and one sample.
        let data = single_obs_data(10.0);
        let h = default_hyperparameters();
        let mut s = ModelState::zeros(data.layout(), &h);
        s.alpha[0] = 10.0;
        s.tau = 1.0 / 0.09;
        let expected = normal_log_density(10.0, 10.0, h.b_alpha)
            + gamma_log_density(s.tau, h.a_sigma, h.b_sigma)
            - 0.5 * (2.0 * PI * 0.09).ln();
        assert_relative_eq!(log_joint(&s, &data, &h).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn doubling_residual() {
        let r = 0.4;
        let data = single_obs_data(10.0 + r);
        let h = default_hyperparameters();
        let mut s = ModelState::zeros(data.layout(), &h);
        s.alpha[0] = 10.0;
        s.tau = 1.0 / 0.09;
        let base = log_likelihood(&s, &data);
        let data2 = single_obs_data(10.0 + 2.0 * r);
        let doubled = log_likelihood(&s, &data2);
        assert_relative_eq!(doubled - base, -3.0 * r * r / (2.0 * 0.09), epsilon = 1e-12);
    }

    #[test]
    fn constraint_violations_are_errors() {
        let data = IndexedData::new(&Dataset::new(two_group_design(), vec![])).unwrap();
        let h = default_hyperparameters();
        let good = ModelState::zeros(data.layout(), &h);
        assert!(log_joint(&good, &data, &h).is_ok());

        let mut bad = good.clone();
        bad.kappa[0] = 0.1;
        assert!(matches!(
            log_joint(&bad, &data, &h),
            Err(Error::Constraint(_))
        ));
        let mut bad = good.clone();
        bad.beta[0] = true;
        assert!(log_joint(&bad, &data, &h).is_err());
        let mut bad = good.clone();
        bad.tau = 0.0;
        assert!(log_joint(&bad, &data, &h).is_err());
        let mut bad = good;
        bad.p[1] = 1.0;
        assert!(log_joint(&bad, &data, &h).is_err());
    }

    #[test]
    fn empty_dataset_is_prior_only() {
        let data = IndexedData::new(&Dataset::new(two_group_design(), vec![])).unwrap();
        let h = default_hyperparameters();
        let s = random_state(data.layout(), &h, &mut seeded(3, 0));
        assert_relative_eq!(
            log_joint(&s, &data, &h).unwrap(),
            log_prior(&s, data.layout(), &h)
        );
    }

    #[test]
    fn neutral_init_on_constant_data() {
        let obs: Vec<Observation> = (0..2)
            .map(|g| Observation {
                experiment: 0,
                group: g,
                sample: 0,
                protein: 0,
                spectrum: 0,
                log_intensity: 10.0,
            })
            .collect();
        let data = IndexedData::new(&Dataset::new(two_group_design(), obs)).unwrap();
        let h = default_hyperparameters();
        let s = initialize_state(&data, &h, InitStrategy::Neutral);
        assert_eq!(s.alpha, vec![10.0]);
        assert!(s.kappa.iter().all(|&k| k == 0.0));
        assert_relative_eq!(s.tau, 1e6);
        assert!(s.check_constraints(data.layout()).is_ok());
        let dd = initialize_state(&data, &h, InitStrategy::DataDriven);
        assert!(dd.check_constraints(data.layout()).is_ok());
    }

    #[test]
    fn random_init_is_deterministic_and_constrained() {
        let data = IndexedData::new(&Dataset::new(two_group_design(), vec![])).unwrap();
        let h = default_hyperparameters();
        let a = initialize_state(&data, &h, InitStrategy::Random { seed: 11 });
        let b = initialize_state(&data, &h, InitStrategy::Random { seed: 11 });
        let c = initialize_state(&data, &h, InitStrategy::Random { seed: 12 });
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.check_constraints(data.layout()).is_ok());
    }

    #[test]
    fn init_strategy_parsing() {
        assert_eq!(
            "neutral".parse::<InitStrategy>().unwrap(),
            InitStrategy::Neutral
        );
        assert_eq!(
            "random:5".parse::<InitStrategy>().unwrap(),
            InitStrategy::Random { seed: 5 }
        );
        assert_eq!(
            InitStrategy::DataDriven
                .to_string()
                .parse::<InitStrategy>()
                .unwrap(),
            InitStrategy::DataDriven
        );
        assert!("warm".parse::<InitStrategy>().is_err());
    }
}
