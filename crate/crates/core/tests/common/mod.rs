//! Reference implementations shared by the integration tests. Nothing here
//! calls into the sampler; these are the oracles it is checked against.
#![allow(dead_code)]

use isodiff::data::{Dataset, DesignInfo, IndexedData, Observation};

/// Asymptotic Kolmogorov distribution tail P(K > lambda).
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test; returns (D, p) with the Stephens small-sample
/// correction.
pub fn ks_test(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sqrt_n = n.sqrt();
    let p = kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    (d, p)
}

/// Sample mean, variance and fourth central moment.
pub fn moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    (mean, var, m4)
}

/// z-scores of the sample mean and variance against known values, using the
/// i.i.d. Monte Carlo standard errors.
pub fn moment_z(x: &[f64], mean: f64, var: f64) -> (f64, f64) {
    let n = x.len() as f64;
    let (m, v, m4) = moments(x);
    let z_mean = (m - mean) / (var / n).sqrt();
    let z_var = (v - var) / ((m4 - v * v).max(1e-300) / n).sqrt();
    (z_mean, z_var)
}

/// Batch-means z-score of mean(x) against `target` for autocorrelated x.
pub fn batch_means_z(x: &[f64], target: f64, batches: usize) -> f64 {
    let size = x.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| x[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    (grand - target) / (var / batches as f64).sqrt()
}

pub fn obs(e: usize, g: usize, i: usize, j: usize, k: usize, y: f64) -> Observation {
    Observation {
        experiment: e,
        group: g,
        sample: i,
        protein: j,
        spectrum: k,
        log_intensity: y,
    }
}

/// Complete dataset for `design` with values from `f(e, g, i, j, k)`.
pub fn complete_dataset(
    design: &DesignInfo,
    mut f: impl FnMut(usize, usize, usize, usize, usize) -> f64,
) -> Dataset {
    let mut o = Vec::new();
    for e in 0..design.num_experiments {
        for g in 0..design.num_groups {
            for i in 0..design.samples_per_cell[e][g] {
                for (j, &m) in design.spectra_per_protein.iter().enumerate() {
                    for k in 0..m {
                        o.push(obs(e, g, i, j, k, f(e, g, i, j, k)));
                    }
                }
            }
        }
    }
    Dataset::new(design.clone(), o)
}

pub fn design(m: Vec<usize>, n: Vec<Vec<usize>>) -> DesignInfo {
    let tags = n[0].iter().sum();
    DesignInfo {
        num_experiments: n.len(),
        num_groups: n[0].len(),
        num_proteins: m.len(),
        spectra_per_protein: m,
        reference_group: vec![0; n.len()],
        samples_per_cell: n,
        tags_per_experiment: tags,
    }
}

pub fn indexed(d: &Dataset) -> IndexedData {
    IndexedData::new(d).expect("valid dataset")
}
