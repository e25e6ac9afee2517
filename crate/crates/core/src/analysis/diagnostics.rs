//! Convergence diagnostics: autocorrelation, effective sample size and the
//! split-chain scale-reduction factor.

use crate::error::{Error, Result};
use crate::gibbs::ChainOutput;
use crate::params::{free_params, ParamId, ParamKind};

/// Minimum stored states per chain for diagnostics.
pub const MIN_SAMPLES_PER_CHAIN: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSelector {
    /// Every free scalar parameter.
    All,
    Kinds(Vec<ParamKind>),
    /// Explicit names such as `kappa[1,2,1]` or `tau`.
    Names(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDiagnostics {
    pub name: String,
    /// `None` for a parameter that never moves.
    pub ess: Option<f64>,
    /// `None` with fewer than two chains or zero within-chain variance.
    pub rhat: Option<f64>,
    /// Chain-averaged autocorrelation at lags 1..=max_lag.
    pub acf: Vec<Option<f64>>,
    pub chain_means: Vec<f64>,
    pub chain_sds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub max_lag: usize,
    pub total_samples: usize,
    pub params: Vec<ParamDiagnostics>,
}

/// Sample autocorrelation r_t = sum (x_i - m)(x_{i+t} - m) / sum (x_i - m)^2
/// for t = 1..=max_lag. `None` when the series is constant.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if !(denom > 0.0) {
        return None;
    }
    Some(
        (1..=max_lag)
            .map(|t| {
                if t >= n {
                    return 0.0;
                }
                (0..n - t)
                    .map(|i| (x[i] - mean) * (x[i + t] - mean))
                    .sum::<f64>()
                    / denom
            })
            .collect(),
    )
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Autocovariance at lag `t` with 1/n normalisation.
fn autocovariance(x: &[f64], mean: f64, t: usize) -> f64 {
    let n = x.len();
    (0..n - t)
        .map(|i| (x[i] - mean) * (x[i + t] - mean))
        .sum::<f64>()
        / n as f64
}

/// Multi-chain effective sample size with Geyer's initial monotone positive
/// sequence truncation. Chains are trimmed to the shortest length; the result
/// is capped at the total number of draws. `None` if the draws are constant.
pub fn effective_sample_size(chains: &[&[f64]]) -> Option<f64> {
    let m = chains.len();
    let n = chains.iter().map(|c| c.len()).min()?;
    if m == 0 || n < 4 {
        return None;
    }
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let stats: Vec<(f64, f64)> = chains.iter().map(|c| mean_var(c)).collect();
    let within = stats.iter().map(|s| s.1).sum::<f64>() / m as f64;
    let between_over_n = if m > 1 {
        mean_var(&stats.iter().map(|s| s.0).collect::<Vec<_>>()).1
    } else {
        0.0
    };
    let var_plus = (n as f64 - 1.0) / n as f64 * within + between_over_n;
    if !(var_plus > 0.0) {
        return None;
    }
    let rho = |t: usize| -> f64 {
        let acov = chains
            .iter()
            .zip(&stats)
            .map(|(c, s)| autocovariance(c, s.0, t))
            .sum::<f64>()
            / m as f64;
        1.0 - (within - acov) / var_plus
    };
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        k += 1;
    }
    let tau = (-1.0 + 2.0 * sum).max(1e-12);
    let total = (m * n) as f64;
    Some((total / tau).min(total))
}

/// Split-chain potential scale reduction. Needs at least two chains.
pub fn split_rhat(chains: &[&[f64]]) -> Option<f64> {
    if chains.len() < 2 {
        return None;
    }
    let n = chains.iter().map(|c| c.len()).min()? / 2;
    if n < 2 {
        return None;
    }
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let len = c.len();
            [&c[..n], &c[len - n..]]
        })
        .collect();
    let stats: Vec<(f64, f64)> = halves.iter().map(|c| mean_var(c)).collect();
    let within = stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64;
    if !(within > 0.0) {
        return None;
    }
    let between_over_n = mean_var(&stats.iter().map(|s| s.0).collect::<Vec<_>>()).1;
    let var_plus = (n as f64 - 1.0) / n as f64 * within + between_over_n;
    Some((var_plus / within).sqrt())
}

fn select(output: &ChainOutput, selector: &ParamSelector) -> Result<Vec<ParamId>> {
    let layout = output.design.layout();
    Ok(match selector {
        ParamSelector::All => free_params(&layout, &ParamKind::ALL),
        ParamSelector::Kinds(kinds) => free_params(&layout, kinds),
        ParamSelector::Names(names) => {
            let all = free_params(&layout, &ParamKind::ALL);
            names
                .iter()
                .map(|name| {
                    all.iter()
                        .copied()
                        .find(|p| p.name(&layout) == *name)
                        .ok_or_else(|| Error::Invalid(format!("unknown parameter `{name}`")))
                })
                .collect::<Result<_>>()?
        }
    })
}

pub fn diagnostics(
    output: &ChainOutput,
    selector: &ParamSelector,
    max_lag: usize,
) -> Result<DiagnosticsReport> {
    if output.num_chains() == 0 {
        return Err(Error::InsufficientSamples("no chains".into()));
    }
    for c in 0..output.num_chains() {
        let len = output.chain(c).len();
        if len < MIN_SAMPLES_PER_CHAIN {
            return Err(Error::InsufficientSamples(format!(
                "chain {} has {len} stored states, need at least {MIN_SAMPLES_PER_CHAIN}",
                c + 1
            )));
        }
    }
    let layout = output.design.layout();
    let params = select(output, selector)?;
    let report = params
        .into_iter()
        .map(|param| {
            let traces: Vec<Vec<f64>> = (0..output.num_chains())
                .map(|c| output.chain(c).iter().map(|s| param.value(s)).collect())
                .collect();
            let views: Vec<&[f64]> = traces.iter().map(Vec::as_slice).collect();
            let per_chain: Vec<Option<Vec<f64>>> =
                traces.iter().map(|t| autocorrelation(t, max_lag)).collect();
            let acf = (0..max_lag)
                .map(|lag| {
                    let vals: Vec<f64> = per_chain.iter().flatten().map(|a| a[lag]).collect();
                    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
                })
                .collect();
            let (chain_means, chain_sds) = traces
                .iter()
                .map(|t| {
                    let (m, v) = mean_var(t);
                    (m, v.sqrt())
                })
                .unzip();
            ParamDiagnostics {
                name: param.name(&layout),
                ess: effective_sample_size(&views),
                rhat: split_rhat(&views),
                acf,
                chain_means,
                chain_sds,
            }
        })
        .collect();
    Ok(DiagnosticsReport {
        max_lag,
        total_samples: output.samples.len(),
        params: report,
    })
}
