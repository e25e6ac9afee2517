//! Gibbs sampler: the six full-conditional updates, a fixed-scan sweep and a
//! multi-chain runner.
//!
//! All sums and counts in the conditionals range over observed entries only,
//! which is what makes the sampler exact when reporter ions are missing.

use std::ops::Range;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::config::KeyValueConfig;
use crate::data::{DesignInfo, IndexedData};
use crate::error::{Error, Result};
use crate::model::{
    clamp_open_unit, clamp_precision, initialize_state, Hyperparameters, InitStrategy, ModelState,
};
use crate::rng::{seeded, ChainRng};

#[inline]
fn draw_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, precision: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + z / precision.sqrt()
}

/// kappa_egi | . ~ N(A_egi, 1/B_egi) for every non-reference sample.
pub fn sample_kappa<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &IndexedData,
    hyper: &Hyperparameters,
    rng: &mut R,
) {
    let layout = data.layout();
    let mut sums = vec![0.0; layout.num_slots()];
    for idx in 0..data.len() {
        sums[data.slot[idx] as usize] += data.y[idx]
            - state.alpha[data.spectrum[idx] as usize]
            - state.effect(data.cell[idx] as usize);
    }
    let prior = hyper.a_kappa * hyper.b_kappa;
    for (slot, sum) in sums.into_iter().enumerate() {
        if layout.is_reference(slot) {
            state.kappa[slot] = 0.0;
            continue;
        }
        let precision = hyper.b_kappa + data.slot_count(slot) as f64 * state.tau;
        let mean = (prior + sum * state.tau) / precision;
        state.kappa[slot] = draw_normal(rng, mean, precision);
    }
}

/// alpha_jk | . ~ N(C_jk, 1/D_jk).
pub fn sample_alpha<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &IndexedData,
    hyper: &Hyperparameters,
    rng: &mut R,
) {
    let mut sums = vec![0.0; state.alpha.len()];
    for idx in 0..data.len() {
        sums[data.spectrum[idx] as usize] += data.y[idx]
            - state.kappa[data.slot[idx] as usize]
            - state.effect(data.cell[idx] as usize);
    }
    let prior = hyper.a_alpha * hyper.b_alpha;
    for (k, sum) in sums.into_iter().enumerate() {
        let precision = hyper.b_alpha + data.spectrum_count(k) as f64 * state.tau;
        let mean = (prior + sum * state.tau) / precision;
        state.alpha[k] = draw_normal(rng, mean, precision);
    }
}

/// Per-cell sums of y - kappa - alpha.
fn cell_residual_sums(state: &ModelState, data: &IndexedData) -> Vec<f64> {
    let mut sums = vec![0.0; data.layout().num_cells()];
    for idx in 0..data.len() {
        sums[data.cell[idx] as usize] += data.y[idx]
            - state.kappa[data.slot[idx] as usize]
            - state.alpha[data.spectrum[idx] as usize];
    }
    sums
}

/// Log weights (beta = 0, beta = 1) of the two-point conditional, up to a
/// shared constant. With S = sum(y - kappa - alpha) and n the cell's count,
/// sum(r - gamma)^2 - sum(r)^2 = n gamma^2 - 2 gamma S, so the common term
/// cancels.
#[inline]
pub(crate) fn beta_log_weights(p: f64, gamma: f64, sum: f64, count: f64, tau: f64) -> (f64, f64) {
    let off = (1.0 - p).ln();
    let on = p.ln() + tau * (gamma * sum - 0.5 * count * gamma * gamma);
    (off, on)
}

/// P(beta = 1 | .) from the two log weights, normalised after subtracting the
/// larger one.
#[inline]
pub(crate) fn beta_probability(off: f64, on: f64) -> f64 {
    let m = off.max(on);
    let w_off = (off - m).exp();
    let w_on = (on - m).exp();
    w_on / (w_off + w_on)
}

/// beta_gj | . for every treatment cell (g != 1).
pub fn sample_beta<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &IndexedData,
    _hyper: &Hyperparameters,
    rng: &mut R,
) {
    let layout = data.layout();
    let sums = cell_residual_sums(state, data);
    for cell in layout.num_proteins..layout.num_cells() {
        let (off, on) = beta_log_weights(
            state.p[cell],
            state.gamma[cell],
            sums[cell],
            data.cell_count(cell) as f64,
            state.tau,
        );
        let prob = beta_probability(off, on);
        state.beta[cell] = rng.random::<f64>() < prob;
    }
}

/// p_gj | . ~ Beta(a_p + beta_gj, b_p + 1 - beta_gj).
pub fn sample_p<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &IndexedData,
    hyper: &Hyperparameters,
    rng: &mut R,
) {
    let layout = data.layout();
    let on = Beta::new(hyper.a_p + 1.0, hyper.b_p).expect("validated Beta shapes");
    let off = Beta::new(hyper.a_p, hyper.b_p + 1.0).expect("validated Beta shapes");
    for cell in layout.num_proteins..layout.num_cells() {
        let draw = if state.beta[cell] {
            on.sample(rng)
        } else {
            off.sample(rng)
        };
        state.p[cell] = clamp_open_unit(draw);
    }
}

/// gamma_gj | . : the prior when beta_gj = 0, otherwise N(E_gj, 1/F_gj).
pub fn sample_gamma<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &IndexedData,
    hyper: &Hyperparameters,
    rng: &mut R,
) {
    let layout = data.layout();
    let sums = cell_residual_sums(state, data);
    let prior = hyper.a_gamma * hyper.b_gamma;
    for cell in layout.num_proteins..layout.num_cells() {
        state.gamma[cell] = if state.beta[cell] {
            let precision = hyper.b_gamma + data.cell_count(cell) as f64 * state.tau;
            draw_normal(rng, (prior + sums[cell] * state.tau) / precision, precision)
        } else {
            draw_normal(rng, hyper.a_gamma, hyper.b_gamma)
        };
    }
}

/// Sum of squared residuals over the observed entries.
pub fn residual_sum_of_squares(state: &ModelState, data: &IndexedData) -> f64 {
    let mut ss = 0.0;
    for idx in 0..data.len() {
        let r = data.y[idx]
            - state.kappa[data.slot[idx] as usize]
            - state.alpha[data.spectrum[idx] as usize]
            - state.effect(data.cell[idx] as usize);
        ss += r * r;
    }
    ss
}

/// tau | . ~ Ga(a_sigma + n/2, b_sigma + SS/2) with n the observed count.
pub fn sample_tau<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &IndexedData,
    hyper: &Hyperparameters,
    rng: &mut R,
) {
    let shape = hyper.a_sigma + 0.5 * data.len() as f64;
    let rate = hyper.b_sigma + 0.5 * residual_sum_of_squares(state, data);
    let dist = Gamma::new(shape, rate.recip()).expect("positive Gamma parameters");
    state.tau = clamp_precision(dist.sample(rng));
}

/// Which blocks a sweep refreshes. Blocks switched off are held at their
/// current values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateMask {
    pub kappa: bool,
    pub alpha: bool,
    pub beta: bool,
    pub p: bool,
    pub gamma: bool,
    pub tau: bool,
}

impl UpdateMask {
    pub const ALL: UpdateMask = UpdateMask {
        kappa: true,
        alpha: true,
        beta: true,
        p: true,
        gamma: true,
        tau: true,
    };
}

impl Default for UpdateMask {
    fn default() -> Self {
        Self::ALL
    }
}

/// One fixed-scan Gibbs sweep in the order kappa, alpha, beta, p, gamma, tau.
pub fn sweep<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &IndexedData,
    hyper: &Hyperparameters,
    rng: &mut R,
) {
    sweep_masked(state, data, hyper, rng, UpdateMask::ALL);
}

pub fn sweep_masked<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &IndexedData,
    hyper: &Hyperparameters,
    rng: &mut R,
    mask: UpdateMask,
) {
    if mask.kappa {
        sample_kappa(state, data, hyper, rng);
    }
    if mask.alpha {
        sample_alpha(state, data, hyper, rng);
    }
    if mask.beta {
        sample_beta(state, data, hyper, rng);
    }
    if mask.p {
        sample_p(state, data, hyper, rng);
    }
    if mask.gamma {
        sample_gamma(state, data, hyper, rng);
    }
    if mask.tau {
        sample_tau(state, data, hyper, rng);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainConfig {
    pub burn_in: usize,
    /// Iterations run after burn-in; every `thin`-th is stored.
    pub keep: usize,
    pub thin: usize,
    pub num_chains: usize,
    pub seed: u64,
    pub init: InitStrategy,
    /// Worker threads for running chains; 0 uses the rayon default. Has no
    /// effect on results.
    pub threads: usize,
}

impl Default for ChainConfig {
    /// Long conservative run: 100K burn-in, 100K kept, thinned by 100, 5 chains.
    fn default() -> Self {
        ChainConfig {
            burn_in: 100_000,
            keep: 100_000,
            thin: 100,
            num_chains: 5,
            seed: 1,
            init: InitStrategy::Neutral,
            threads: 0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.keep == 0 {
            return Err(Error::Config("keep must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.num_chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        Ok(())
    }

    pub fn stored_per_chain(&self) -> usize {
        self.keep / self.thin
    }

    /// Reads `burnin`, `keep`, `thin`, `chains`, `seed`, `init` and `threads`;
    /// absent keys keep their defaults.
    pub fn from_config(cfg: &KeyValueConfig) -> Result<Self> {
        let d = ChainConfig::default();
        let c = ChainConfig {
            burn_in: cfg.get_or("burnin", d.burn_in)?,
            keep: cfg.get_or("keep", d.keep)?,
            thin: cfg.get_or("thin", d.thin)?,
            num_chains: cfg.get_or("chains", d.num_chains)?,
            seed: cfg.get_or("seed", d.seed)?,
            init: cfg.get_or("init", d.init)?,
            threads: cfg.get_or("threads", d.threads)?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn write_config(&self, cfg: &mut KeyValueConfig) {
        cfg.set("burnin", self.burn_in);
        cfg.set("keep", self.keep);
        cfg.set("thin", self.thin);
        cfg.set("chains", self.num_chains);
        cfg.set("seed", self.seed);
        cfg.set("init", self.init);
    }
}

/// Stored post-burn-in states of all chains, concatenated chain by chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub design: DesignInfo,
    pub samples: Vec<ModelState>,
    pub chain_bounds: Vec<Range<usize>>,
    pub config: ChainConfig,
    pub wall_time_secs: Vec<f64>,
}

impl ChainOutput {
    /// Wraps states that were produced elsewhere (read from a trace file or
    /// built by hand); each inner vector is one chain.
    pub fn from_chains(
        design: DesignInfo,
        chains: Vec<Vec<ModelState>>,
        config: ChainConfig,
    ) -> Self {
        let mut samples = Vec::new();
        let mut chain_bounds = Vec::with_capacity(chains.len());
        for chain in chains {
            let start = samples.len();
            samples.extend(chain);
            chain_bounds.push(start..samples.len());
        }
        let wall_time_secs = vec![0.0; chain_bounds.len()];
        ChainOutput {
            design,
            samples,
            chain_bounds,
            config,
            wall_time_secs,
        }
    }

    pub fn num_chains(&self) -> usize {
        self.chain_bounds.len()
    }

    pub fn chain(&self, c: usize) -> &[ModelState] {
        &self.samples[self.chain_bounds[c].clone()]
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn run_one_chain(
    data: &IndexedData,
    hyper: &Hyperparameters,
    config: &ChainConfig,
    chain: usize,
) -> (Vec<ModelState>, f64) {
    let started = Instant::now();
    let mut rng: ChainRng = seeded(config.seed, chain as u64);
    let init = match config.init {
        InitStrategy::Random { seed } => InitStrategy::Random {
            seed: seed
                ^ config.seed.rotate_left(17)
                ^ (chain as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        },
        other => other,
    };
    let mut state = initialize_state(data, hyper, init);
    for _ in 0..config.burn_in {
        sweep(&mut state, data, hyper, &mut rng);
    }
    let mut stored = Vec::with_capacity(config.stored_per_chain());
    for t in 1..=config.keep {
        sweep(&mut state, data, hyper, &mut rng);
        if t % config.thin == 0 {
            stored.push(state.clone());
        }
    }
    (stored, started.elapsed().as_secs_f64())
}

/// Runs `num_chains` independent chains, each on its own derived RNG stream.
/// The output depends only on (data, hyper, config minus `threads`).
pub fn run_chains(
    data: &IndexedData,
    hyper: &Hyperparameters,
    config: &ChainConfig,
) -> Result<ChainOutput> {
    config.validate()?;
    hyper.validate()?;
    let work = || -> Vec<(Vec<ModelState>, f64)> {
        (0..config.num_chains)
            .into_par_iter()
            .map(|c| run_one_chain(data, hyper, config, c))
            .collect()
    };
    let results = if config.threads == 1 {
        (0..config.num_chains)
            .map(|c| run_one_chain(data, hyper, config, c))
            .collect()
    } else if config.threads > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::Invalid(format!("cannot build thread pool: {e}")))?
            .install(work)
    } else {
        work()
    };
    let (chains, times): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let mut out = ChainOutput::from_chains(data.design().clone(), chains, *config);
    out.wall_time_secs = times;
    Ok(out)
}
