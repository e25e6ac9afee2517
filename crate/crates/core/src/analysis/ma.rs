use std::collections::HashMap;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// A sample within the design (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleRef {
    pub experiment: usize,
    pub group: usize,
    pub sample: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaPoint {
    pub protein: usize,
    pub spectrum: usize,
    /// Average log-intensity of the two samples.
    pub a: f64,
    /// Difference y_b - y_a.
    pub m: f64,
}

/// MA-plot coordinates for every spectrum observed in both samples, in
/// (protein, spectrum) order.
pub fn ma_plot_data(
    dataset: &Dataset,
    sample_a: SampleRef,
    sample_b: SampleRef,
) -> Result<Vec<MaPoint>> {
    let design = &dataset.design;
    for s in [sample_a, sample_b] {
        let exists = design
            .samples_per_cell
            .get(s.experiment)
            .and_then(|row| row.get(s.group))
            .is_some_and(|&n| s.sample < n);
        if !exists {
            return Err(Error::Invalid(format!(
                "sample (experiment {}, group {}, sample {}) is not in the design",
                s.experiment + 1,
                s.group + 1,
                s.sample + 1
            )));
        }
    }
    let pick = |s: SampleRef| -> HashMap<(usize, usize), f64> {
        dataset
            .observations
            .iter()
            .filter(|o| o.experiment == s.experiment && o.group == s.group && o.sample == s.sample)
            .map(|o| ((o.protein, o.spectrum), o.log_intensity))
            .collect()
    };
    let a = pick(sample_a);
    let b = pick(sample_b);
    let mut points: Vec<MaPoint> = a
        .iter()
        .filter_map(|(&(protein, spectrum), &ya)| {
            b.get(&(protein, spectrum)).map(|&yb| MaPoint {
                protein,
                spectrum,
                a: 0.5 * (ya + yb),
                m: yb - ya,
            })
        })
        .collect();
    if points.is_empty() {
        return Err(Error::Invalid(
            "the two samples share no observed spectra".into(),
        ));
    }
    points.sort_by_key(|p| (p.protein, p.spectrum));
    Ok(points)
}
