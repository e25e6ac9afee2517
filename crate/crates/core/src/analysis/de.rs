use crate::error::{Error, Result};
use crate::gibbs::ChainOutput;

/// Posterior probability that beta_gj = 1 and the resulting call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeProbability {
    pub group: usize,
    pub protein: usize,
    pub prob_de: f64,
    pub classified: bool,
}

/// Posterior summary of beta_gj * gamma_gj, zeros included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectSummary {
    pub group: usize,
    pub protein: usize,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

/// One row of the DE results table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeResult {
    pub group: usize,
    pub protein: usize,
    pub prob_de: f64,
    pub mean_effect: f64,
    pub sd_effect: f64,
    pub q025: f64,
    pub q975: f64,
    pub classified: bool,
}

fn require_samples(output: &ChainOutput) -> Result<()> {
    if output.is_empty() {
        return Err(Error::InsufficientSamples(
            "chain output holds no states".into(),
        ));
    }
    Ok(())
}

/// Fraction of stored states with beta_gj = 1 for every treatment cell;
/// a protein is called DE when that fraction strictly exceeds `threshold`.
pub fn de_probabilities(output: &ChainOutput, threshold: f64) -> Result<Vec<DeProbability>> {
    require_samples(output)?;
    let layout = output.design.layout();
    let n = output.samples.len() as f64;
    Ok((layout.num_proteins..layout.num_cells())
        .map(|cell| {
            let count = output.samples.iter().filter(|s| s.beta[cell]).count();
            let prob_de = count as f64 / n;
            DeProbability {
                group: cell / layout.num_proteins,
                protein: cell % layout.num_proteins,
                prob_de,
                classified: prob_de > threshold,
            }
        })
        .collect())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Moments and 95% central interval from sorted values; summing in sorted
/// order makes the result independent of how chains were concatenated.
fn summarize_sorted(sorted: &[f64]) -> (f64, f64, f64, f64) {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = if sorted.len() > 1 {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd, quantile(sorted, 0.025), quantile(sorted, 0.975))
}

pub fn effect_summaries(output: &ChainOutput) -> Result<Vec<EffectSummary>> {
    require_samples(output)?;
    let layout = output.design.layout();
    let mut values = Vec::with_capacity(output.samples.len());
    Ok((layout.num_proteins..layout.num_cells())
        .map(|cell| {
            values.clear();
            values.extend(output.samples.iter().map(|s| s.effect(cell)));
            values.sort_by(f64::total_cmp);
            let (mean, sd, q025, q975) = summarize_sorted(&values);
            EffectSummary {
                group: cell / layout.num_proteins,
                protein: cell % layout.num_proteins,
                mean,
                sd,
                q025,
                q975,
            }
        })
        .collect())
}

/// DE probabilities joined with effect summaries, ordered by (group, protein).
pub fn de_table(output: &ChainOutput, threshold: f64) -> Result<Vec<DeResult>> {
    let probs = de_probabilities(output, threshold)?;
    let effects = effect_summaries(output)?;
    Ok(probs
        .into_iter()
        .zip(effects)
        .map(|(p, e)| DeResult {
            group: p.group,
            protein: p.protein,
            prob_de: p.prob_de,
            mean_effect: e.mean,
            sd_effect: e.sd,
            q025: e.q025,
            q975: e.q975,
            classified: p.classified,
        })
        .collect())
}
