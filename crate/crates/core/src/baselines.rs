//! Frequentist comparison pipeline: per-sample mean normalisation, a Welch
//! t-test per protein on pooled spectrum log-intensities, and
//! Benjamini-Hochberg adjustment.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Mean log-intensity of every sample slot (see [`crate::data::Layout`]).
pub fn sample_means(dataset: &Dataset) -> Result<Vec<f64>> {
    let layout = dataset.design.layout();
    let mut sums = vec![0.0; layout.num_slots()];
    let mut counts = vec![0usize; layout.num_slots()];
    for o in &dataset.observations {
        let s = layout.slot(o.experiment, o.group, o.sample);
        sums[s] += o.log_intensity;
        counts[s] += 1;
    }
    sums.iter()
        .zip(&counts)
        .enumerate()
        .map(|(slot, (&sum, &n))| {
            if n == 0 {
                let (e, g, i) = layout.slot_coords(slot);
                Err(Error::EmptySample(format!(
                    "(experiment {}, group {}, sample {})",
                    e + 1,
                    g + 1,
                    i + 1
                )))
            } else {
                Ok(sum / n as f64)
            }
        })
        .collect()
}

/// Subtracts each sample's mean log-intensity from its observations.
pub fn mean_normalize(dataset: &Dataset) -> Result<Dataset> {
    let layout = dataset.design.layout();
    let means = sample_means(dataset)?;
    let mut out = dataset.clone();
    for o in &mut out.observations {
        o.log_intensity -= means[layout.slot(o.experiment, o.group, o.sample)];
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Two-sided Welch unequal-variance t-test of mean(a) - mean(b). Both
/// samples need at least two values.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Option<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (n, mean, var)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let sa = va / na;
    let sb = vb / nb;
    let se2 = sa + sb;
    let diff = ma - mb;
    if se2 == 0.0 {
        // Both groups constant: no spread to test against.
        let df = na + nb - 2.0;
        return Some(if diff == 0.0 {
            WelchTest { t: 0.0, df, p: 1.0 }
        } else {
            WelchTest {
                t: diff.signum() * f64::INFINITY,
                df,
                p: 0.0,
            }
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Some(WelchTest { t, df, p })
}

/// Benjamini-Hochberg step-up adjusted p-values, returned in input order.
pub fn bh_adjust(pvalues: &[f64]) -> Vec<f64> {
    let n = pvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let mut q = vec![0.0; n];
    let mut running = 1.0f64;
    for (rank0, &i) in order.iter().enumerate().rev() {
        let rank = (rank0 + 1) as f64;
        running = running.min(pvalues[i] * n as f64 / rank);
        q[i] = running.max(pvalues[i]).min(1.0);
    }
    q
}

/// Per-protein result; untestable proteins carry `None` statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestRow {
    pub protein: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub significant: bool,
}

impl TTestRow {
    pub fn testable(&self) -> bool {
        self.p.is_some()
    }
}

/// Welch test of every protein between two groups, pooling all spectra and
/// experiments. Proteins with fewer than two observations in either group are
/// untestable and excluded from the BH denominator. Significance is q <= level.
pub fn protein_ttest(
    dataset: &Dataset,
    group_a: usize,
    group_b: usize,
    level: f64,
) -> Result<Vec<TTestRow>> {
    let design = &dataset.design;
    if group_a >= design.num_groups || group_b >= design.num_groups || group_a == group_b {
        return Err(Error::Invalid(format!(
            "cannot compare groups {} and {}",
            group_a + 1,
            group_b + 1
        )));
    }
    let mut by_protein: Vec<(Vec<f64>, Vec<f64>)> =
        vec![(Vec::new(), Vec::new()); design.num_proteins];
    for o in dataset.sorted_observations() {
        if o.group == group_a {
            by_protein[o.protein].0.push(o.log_intensity);
        } else if o.group == group_b {
            by_protein[o.protein].1.push(o.log_intensity);
        }
    }
    let mut rows: Vec<TTestRow> = by_protein
        .iter()
        .enumerate()
        .map(|(protein, (a, b))| {
            let test = welch_t_test(a, b);
            TTestRow {
                protein,
                n_a: a.len(),
                n_b: b.len(),
                t: test.map(|w| w.t),
                df: test.map(|w| w.df),
                p: test.map(|w| w.p),
                q: None,
                significant: false,
            }
        })
        .collect();
    let testable: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.testable())
        .map(|(i, _)| i)
        .collect();
    let p: Vec<f64> = testable.iter().map(|&i| rows[i].p.unwrap_or(1.0)).collect();
    for (&i, q) in testable.iter().zip(bh_adjust(&p)) {
        rows[i].q = Some(q);
        rows[i].significant = q <= level;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tests::two_group_design;
    use crate::data::{DesignInfo, Observation};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn welch_textbook_fixture() {
        // scipy.stats.ttest_ind([1,2,3], [2,3,4], equal_var=False)
        let w = welch_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert_relative_eq!(w.t, -1.224744871391589, epsilon = 1e-12);
        assert_relative_eq!(w.df, 4.0, epsilon = 1e-12);
        assert_relative_eq!(w.p, 0.2878641347266908, epsilon = 1e-9);
    }

    #[test]
    fn welch_unequal_variances() {
        // scipy.stats.ttest_ind(a, b, equal_var=False)
        let a = [19.8, 20.4, 19.6, 17.8, 18.5, 18.9, 18.3, 18.9, 19.5, 22.0];
        let b = [
            28.2, 26.6, 20.1, 23.3, 25.2, 22.1, 17.7, 27.6, 20.6, 13.7, 23.2, 17.5, 20.6, 18.0,
            23.9, 21.6, 24.3, 20.4, 24.0, 13.2,
        ];
        let w = welch_t_test(&a, &b).unwrap();
        assert_relative_eq!(w.t, -2.2192409158236233, epsilon = 1e-9);
        assert_relative_eq!(w.df, 24.496223124201244, epsilon = 1e-9);
        assert_relative_eq!(w.p, 0.03597227102979685, epsilon = 1e-9);
    }

    #[test]
    fn identical_groups() {
        let w = welch_t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((w.t, w.p), (0.0, 1.0));
        let w = welch_t_test(&[5.0, 5.0], &[5.0, 5.0]).unwrap();
        assert_eq!((w.t, w.p), (0.0, 1.0));
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn bh_fixtures() {
        assert_eq!(bh_adjust(&[0.04]), vec![0.04]);
        assert_eq!(bh_adjust(&[0.01, 0.02, 0.03, 0.04]), vec![0.04; 4]);
        assert_eq!(bh_adjust(&[1.0, 1.0, 1.0]), vec![1.0; 3]);
        let q = bh_adjust(&[0.03, 0.001, 0.5]);
        assert_relative_eq!(q[0], 0.045, epsilon = 1e-15);
        assert_relative_eq!(q[1], 0.003, epsilon = 1e-15);
        assert_relative_eq!(q[2], 0.5, epsilon = 1e-15);
        assert!(bh_adjust(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn bh_is_monotone_and_bounded(p in proptest::collection::vec(0.0f64..=1.0, 1..60)) {
            let q = bh_adjust(&p);
            let mut idx: Vec<usize> = (0..p.len()).collect();
            idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
            for w in idx.windows(2) {
                prop_assert!(q[w[0]] <= q[w[1]]);
            }
            for (pi, qi) in p.iter().zip(&q) {
                prop_assert!(*qi >= *pi && *qi <= 1.0);
            }
        }
    }

    fn obs(g: usize, i: usize, j: usize, k: usize, y: f64) -> Observation {
        Observation {
            experiment: 0,
            group: g,
            sample: i,
            protein: j,
            spectrum: k,
            log_intensity: y,
        }
    }

    #[test]
    fn normalisation() {
        let d = Dataset::new(
            two_group_design(),
            vec![obs(0, 0, 0, 0, 10.0), obs(1, 0, 0, 0, 4.0)],
        );
        let n = mean_normalize(&d).unwrap();
        assert!(n.observations.iter().all(|o| o.log_intensity == 0.0));
        assert_eq!(mean_normalize(&n).unwrap(), n);
        let empty = Dataset::new(two_group_design(), vec![obs(0, 0, 0, 0, 1.0)]);
        assert!(matches!(mean_normalize(&empty), Err(Error::EmptySample(_))));
    }

    #[test]
    fn untestable_proteins_are_flagged() {
        let design = DesignInfo {
            num_experiments: 1,
            num_groups: 2,
            num_proteins: 2,
            spectra_per_protein: vec![3, 1],
            samples_per_cell: vec![vec![1, 1]],
            reference_group: vec![0],
            tags_per_experiment: 2,
        };
        let mut o = Vec::new();
        for k in 0..3 {
            o.push(obs(0, 0, 0, k, 1.0 + k as f64));
            o.push(obs(1, 0, 0, k, 2.0 + k as f64));
        }
        o.push(obs(0, 0, 1, 0, 5.0));
        o.push(obs(1, 0, 1, 0, 5.0));
        let rows = protein_ttest(&Dataset::new(design, o), 0, 1, 0.05).unwrap();
        assert!(rows[0].testable());
        assert_relative_eq!(rows[0].p.unwrap(), 0.2878641347266908, epsilon = 1e-9);
        assert_eq!(rows[0].q, rows[0].p);
        assert!(!rows[1].testable());
        assert_eq!(rows[1].q, None);
        assert!(!rows[1].significant);
    }
}
