//! Synthetic datasets drawn from the model, with the generating values kept
//! as ground truth.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Normal, StandardNormal};

use crate::config::KeyValueConfig;
use crate::data::{Dataset, DesignInfo, Observation};
use crate::error::{Error, Result};
use crate::model::ModelState;
use crate::rng::seeded;

/// A protein whose effect in one treatment group is fixed rather than drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spike {
    pub group: usize,
    pub protein: usize,
    pub log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub num_experiments: usize,
    pub num_groups: usize,
    pub num_proteins: usize,
    pub samples_per_cell: Vec<Vec<usize>>,
    pub reference_group: Vec<usize>,
    /// Mean of the spectra-per-protein distribution (geometric on 1, 2, ...).
    pub mean_spectra: f64,
    /// (protein, m_j) pairs that bypass the geometric draw.
    pub spectra_override: Vec<(usize, usize)>,
    pub alpha_mean: f64,
    pub alpha_sd: f64,
    /// When set, alpha is drawn per protein from N(alpha_mean, alpha_sd^2) and
    /// then per spectrum around it with this sd; otherwise spectra are i.i.d.
    pub alpha_within_sd: Option<f64>,
    /// DE probability for groups 2..G.
    pub de_prob: Vec<f64>,
    /// Fold-change bounds (lo, hi); |gamma| is uniform on (ln lo, ln hi).
    pub fold_range: (f64, f64),
    pub kappa_sd: f64,
    pub sigma: f64,
    /// Fraction of reporter ions removed completely at random.
    pub dropout: f64,
    pub spikes: Vec<Spike>,
    pub seed: u64,
}

/// Generating values of a simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub spectra_per_protein: Vec<usize>,
    pub alpha: Vec<f64>,
    pub beta: Vec<bool>,
    pub gamma: Vec<f64>,
    pub kappa: Vec<f64>,
    pub sigma: f64,
    /// Realised number of DE proteins per group (entry 0 is the control).
    pub de_counts: Vec<usize>,
}

impl GroundTruth {
    /// The truth as a model state; p is set to `p` for treatment cells.
    pub fn to_state(&self, num_proteins: usize, p: f64) -> ModelState {
        let mut probs = vec![p; self.beta.len()];
        probs[..num_proteins].fill(0.0);
        ModelState {
            kappa: self.kappa.clone(),
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            gamma: self.gamma.clone(),
            p: probs,
            tau: if self.sigma > 0.0 {
                self.sigma.powi(-2)
            } else {
                f64::MAX
            },
        }
    }
}

/// G = 4 groups (control + three treatments), 6 tags in each of 2
/// experiments with tag patterns (CTL,CTL,TRT1,TRT1,TRT2,TRT2) and
/// (CTL,TRT1,TRT2,TRT3,TRT3,TRT3), 300 proteins.
pub fn paper_scenario_spec() -> SimulationSpec {
    SimulationSpec {
        num_experiments: 2,
        num_groups: 4,
        num_proteins: 300,
        samples_per_cell: vec![vec![2, 2, 2, 0], vec![1, 1, 1, 3]],
        reference_group: vec![0, 0],
        mean_spectra: 6.0,
        spectra_override: Vec::new(),
        alpha_mean: 10.0,
        alpha_sd: 3.0,
        alpha_within_sd: None,
        de_prob: vec![0.1, 0.2, 0.3],
        fold_range: (1.5, 4.0),
        kappa_sd: 0.1,
        sigma: 0.3,
        dropout: 0.0,
        spikes: Vec::new(),
        seed: 1,
    }
}

/// Spike-in log-ratios of four xenobiotic proteins (portion B vs A).
#[allow(clippy::approx_constant)]
pub const SPIKE_LOG_RATIOS: [f64; 4] = [0.4055, -0.9676, -0.6931, 1.6094];

/// Two portions (G = 2) in triplicate across two 6-plex experiments, with four
/// spiked proteins (proteins 1-4, 20 spectra each) among 278 nulls.
pub fn spike_in_scenario_spec() -> SimulationSpec {
    SimulationSpec {
        num_experiments: 2,
        num_groups: 2,
        num_proteins: 282,
        samples_per_cell: vec![vec![3, 3], vec![3, 3]],
        reference_group: vec![0, 0],
        mean_spectra: 6.0,
        spectra_override: (0..4).map(|j| (j, 20)).collect(),
        alpha_mean: 10.0,
        alpha_sd: 3.0,
        alpha_within_sd: Some(0.5),
        de_prob: vec![0.0],
        fold_range: (1.5, 4.0),
        kappa_sd: 0.1,
        sigma: 0.3,
        dropout: 0.0,
        spikes: SPIKE_LOG_RATIOS
            .iter()
            .enumerate()
            .map(|(j, &log_ratio)| Spike {
                group: 1,
                protein: j,
                log_ratio,
            })
            .collect(),
        seed: 1,
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.num_experiments == 0 || self.num_groups == 0 || self.num_proteins == 0 {
            return bad("E, G and P must be positive".into());
        }
        if self.samples_per_cell.len() != self.num_experiments
            || self
                .samples_per_cell
                .iter()
                .any(|r| r.len() != self.num_groups)
        {
            return bad("samples table must be E rows of G entries".into());
        }
        let tags: Vec<usize> = self
            .samples_per_cell
            .iter()
            .map(|r| r.iter().sum())
            .collect();
        if tags.windows(2).any(|w| w[0] != w[1]) {
            return bad(format!("experiments use different tag counts: {tags:?}"));
        }
        if self.reference_group.len() != self.num_experiments {
            return bad("g_ref needs one entry per experiment".into());
        }
        for (e, &g) in self.reference_group.iter().enumerate() {
            if g >= self.num_groups || self.samples_per_cell[e][g] == 0 {
                return bad(format!("experiment {} has no reference sample", e + 1));
            }
        }
        if self.mean_spectra < 1.0 {
            return bad("mean spectra per protein must be at least 1".into());
        }
        if !(self.alpha_sd > 0.0) || self.alpha_within_sd.is_some_and(|s| !(s > 0.0)) {
            return bad("alpha sds must be positive".into());
        }
        if !(self.kappa_sd >= 0.0) || !(self.sigma >= 0.0) {
            return bad("kappa_sd and sigma must be non-negative".into());
        }
        if self.de_prob.len() + 1 != self.num_groups {
            return bad(format!(
                "de_prob needs {} entries (one per treatment group)",
                self.num_groups - 1
            ));
        }
        if self.de_prob.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("de_prob entries must lie in [0, 1]".into());
        }
        let (lo, hi) = self.fold_range;
        if !(lo > 1.0 && hi > lo) {
            return bad(format!("fold range ({lo}, {hi}) must satisfy 1 < lo < hi"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)".into());
        }
        for s in &self.spikes {
            if s.group == 0 || s.group >= self.num_groups || s.protein >= self.num_proteins {
                return bad(format!("spike {s:?} is outside the design"));
            }
        }
        for &(j, m) in &self.spectra_override {
            if j >= self.num_proteins || m == 0 {
                return bad(format!("spectra override ({}, {m}) is invalid", j + 1));
            }
        }
        Ok(())
    }

    pub fn tags_per_experiment(&self) -> usize {
        self.samples_per_cell[0].iter().sum()
    }

    /// Symmetric log-fold interval endpoints (ln lo, ln hi).
    pub fn log_fold_interval(&self) -> (f64, f64) {
        (self.fold_range.0.ln(), self.fold_range.1.ln())
    }

    fn design(&self, spectra_per_protein: Vec<usize>) -> DesignInfo {
        DesignInfo {
            num_experiments: self.num_experiments,
            num_groups: self.num_groups,
            num_proteins: self.num_proteins,
            spectra_per_protein,
            samples_per_cell: self.samples_per_cell.clone(),
            reference_group: self.reference_group.clone(),
            tags_per_experiment: self.tags_per_experiment(),
        }
    }

    /// Overrides fields from `E`, `G`, `P`, `n`, `g_ref` and `sim.*` keys.
    /// `sim.scenario = spike-in` switches the base from the default scenario.
    pub fn from_config(cfg: &KeyValueConfig) -> Result<Self> {
        let mut s = match cfg.raw("sim.scenario") {
            None | Some("paper") | Some("default") => paper_scenario_spec(),
            Some("spike-in") => spike_in_scenario_spec(),
            Some(other) => return Err(Error::Config(format!("unknown scenario `{other}`"))),
        };
        if let Some(v) = cfg.get("E")? {
            s.num_experiments = v;
        }
        if let Some(v) = cfg.get("G")? {
            s.num_groups = v;
        }
        if let Some(v) = cfg.get("P")? {
            s.num_proteins = v;
        }
        if let Some(v) = cfg.get_table("n")? {
            s.samples_per_cell = v;
        }
        if let Some(v) = cfg.get_list::<usize>("g_ref")? {
            s.reference_group = one_based(v, "g_ref")?;
        }
        s.mean_spectra = cfg.get_or("sim.mean_spectra", s.mean_spectra)?;
        s.alpha_mean = cfg.get_or("sim.alpha_mean", s.alpha_mean)?;
        s.alpha_sd = cfg.get_or("sim.alpha_sd", s.alpha_sd)?;
        if let Some(v) = cfg.raw("sim.alpha_within_sd") {
            s.alpha_within_sd = match v {
                "none" | "" => None,
                _ => Some(cfg.require("sim.alpha_within_sd")?),
            };
        }
        if let Some(v) = cfg.get_list("sim.de_prob")? {
            s.de_prob = v;
        }
        s.fold_range.0 = cfg.get_or("sim.fold_min", s.fold_range.0)?;
        s.fold_range.1 = cfg.get_or("sim.fold_max", s.fold_range.1)?;
        s.kappa_sd = cfg.get_or("sim.kappa_sd", s.kappa_sd)?;
        s.sigma = cfg.get_or("sim.sigma", s.sigma)?;
        s.dropout = cfg.get_or("sim.dropout", s.dropout)?;
        s.seed = cfg.get_or("sim.seed", s.seed)?;
        if let Some(items) = cfg.get_list::<String>("sim.spikes")? {
            s.spikes = items
                .iter()
                .map(|item| parse_spike(item))
                .collect::<Result<_>>()?;
        }
        if let Some(items) = cfg.get_list::<String>("sim.spectra_override")? {
            s.spectra_override = items
                .iter()
                .map(|item| {
                    let (j, m) = item.split_once(':').ok_or_else(|| {
                        Error::Config(format!("spectra override `{item}` is not protein:m"))
                    })?;
                    let j: usize = parse_field(j, item)?;
                    Ok((
                        one_based(vec![j], "sim.spectra_override")?[0],
                        parse_field(m, item)?,
                    ))
                })
                .collect::<Result<_>>()?;
        }
        s.validate()?;
        Ok(s)
    }

    /// Writes every field back as configuration keys (1-based indices).
    pub fn write_config(&self, cfg: &mut KeyValueConfig) {
        cfg.set("E", self.num_experiments);
        cfg.set("G", self.num_groups);
        cfg.set("P", self.num_proteins);
        cfg.set_table("n", &self.samples_per_cell);
        let g_ref: Vec<usize> = self.reference_group.iter().map(|g| g + 1).collect();
        cfg.set_list("g_ref", &g_ref);
        cfg.set("n_I", self.tags_per_experiment());
        cfg.set("sim.mean_spectra", self.mean_spectra);
        cfg.set("sim.alpha_mean", self.alpha_mean);
        cfg.set("sim.alpha_sd", self.alpha_sd);
        match self.alpha_within_sd {
            Some(v) => cfg.set("sim.alpha_within_sd", v),
            None => cfg.set("sim.alpha_within_sd", "none"),
        }
        cfg.set_list("sim.de_prob", &self.de_prob);
        cfg.set("sim.fold_min", self.fold_range.0);
        cfg.set("sim.fold_max", self.fold_range.1);
        cfg.set("sim.kappa_sd", self.kappa_sd);
        cfg.set("sim.sigma", self.sigma);
        cfg.set("sim.dropout", self.dropout);
        cfg.set("sim.seed", self.seed);
        let spikes: Vec<String> = self
            .spikes
            .iter()
            .map(|s| format!("{}:{}:{}", s.group + 1, s.protein + 1, s.log_ratio))
            .collect();
        cfg.set_list("sim.spikes", &spikes);
        let overrides: Vec<String> = self
            .spectra_override
            .iter()
            .map(|(j, m)| format!("{}:{m}", j + 1))
            .collect();
        cfg.set_list("sim.spectra_override", &overrides);
    }
}

fn parse_field<T: std::str::FromStr>(text: &str, item: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{item}`")))
}

fn one_based(v: Vec<usize>, key: &str) -> Result<Vec<usize>> {
    v.into_iter()
        .map(|x| {
            x.checked_sub(1)
                .ok_or_else(|| Error::Config(format!("`{key}` indices are 1-based")))
        })
        .collect()
}

/// `group:protein:log_ratio`, 1-based.
fn parse_spike(item: &str) -> Result<Spike> {
    let parts: Vec<&str> = item.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "spike `{item}` is not group:protein:log_ratio"
        )));
    }
    let idx = one_based(
        vec![parse_field(parts[0], item)?, parse_field(parts[1], item)?],
        "sim.spikes",
    )?;
    Ok(Spike {
        group: idx[0],
        protein: idx[1],
        log_ratio: parse_field(parts[2], item)?,
    })
}

/// Draws a dataset and its ground truth. Deterministic in `spec.seed`.
pub fn simulate_dataset(spec: &SimulationSpec) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let mut rng = seeded(spec.seed, 0);
    let mut dropout_rng = seeded(spec.seed, 1);

    let geometric = Geometric::new(1.0 / spec.mean_spectra)
        .map_err(|e| Error::Config(format!("geometric distribution: {e}")))?;
    let mut spectra_per_protein: Vec<usize> = (0..spec.num_proteins)
        .map(|_| 1 + geometric.sample(&mut rng) as usize)
        .collect();
    for &(j, m) in &spec.spectra_override {
        spectra_per_protein[j] = m;
    }
    let design = spec.design(spectra_per_protein.clone());
    let layout = design.layout();

    let alpha_dist = Normal::new(spec.alpha_mean, spec.alpha_sd).expect("validated sd");
    let mut alpha = Vec::with_capacity(layout.num_spectra());
    for &m in &spectra_per_protein {
        match spec.alpha_within_sd {
            Some(within) => {
                let centre = alpha_dist.sample(&mut rng);
                for _ in 0..m {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    alpha.push(centre + within * z);
                }
            }
            None => alpha.extend((0..m).map(|_| alpha_dist.sample(&mut rng))),
        }
    }

    let (lo, hi) = spec.log_fold_interval();
    let cells = layout.num_cells();
    let mut beta = vec![false; cells];
    let mut gamma = vec![0.0; cells];
    for g in 1..spec.num_groups {
        for j in 0..spec.num_proteins {
            let cell = layout.cell(g, j);
            if rng.random::<f64>() < spec.de_prob[g - 1] {
                let magnitude = rng.random_range(lo..hi);
                beta[cell] = true;
                gamma[cell] = if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                };
            }
        }
    }
    for s in &spec.spikes {
        let cell = layout.cell(s.group, s.protein);
        beta[cell] = true;
        gamma[cell] = s.log_ratio;
    }

    let mut kappa = vec![0.0; layout.num_slots()];
    for (slot, k) in kappa.iter_mut().enumerate() {
        let z: f64 = StandardNormal.sample(&mut rng);
        if !layout.is_reference(slot) {
            *k = spec.kappa_sd * z;
        }
    }

    let mut observations = Vec::with_capacity(design.complete_count());
    for slot in 0..layout.num_slots() {
        let (e, g, i) = layout.slot_coords(slot);
        for spectrum in 0..layout.num_spectra() {
            let (j, k) = layout.spectrum_coords(spectrum);
            let cell = layout.cell(g, j);
            let effect = if beta[cell] { gamma[cell] } else { 0.0 };
            let z: f64 = StandardNormal.sample(&mut rng);
            let y = kappa[slot] + alpha[spectrum] + effect + spec.sigma * z;
            if spec.dropout > 0.0 && dropout_rng.random::<f64>() < spec.dropout {
                continue;
            }
            observations.push(Observation {
                experiment: e,
                group: g,
                sample: i,
                protein: j,
                spectrum: k,
                log_intensity: y,
            });
        }
    }

    let mut de_counts = vec![0; spec.num_groups];
    for (cell, &b) in beta.iter().enumerate() {
        if b {
            de_counts[cell / spec.num_proteins] += 1;
        }
    }
    let truth = GroundTruth {
        spectra_per_protein,
        alpha,
        beta,
        gamma,
        kappa,
        sigma: spec.sigma,
        de_counts,
    };
    Ok((Dataset::new(design, observations), truth))
}

/// Draws a fresh set of observations at the coordinates of `data` given the
/// parameters in `state` (used for prior-predictive and joint-distribution
/// checks).
pub fn replicate_observations<R: Rng + ?Sized>(
    data: &crate::data::IndexedData,
    state: &ModelState,
    rng: &mut R,
) -> Dataset {
    let sd = state.sigma();
    let observations = data
        .observations()
        .iter()
        .enumerate()
        .map(|(idx, o)| {
            let z: f64 = StandardNormal.sample(rng);
            let mean = state.kappa[data.slot[idx] as usize]
                + state.alpha[data.spectrum[idx] as usize]
                + state.effect(data.cell[idx] as usize);
            Observation {
                log_intensity: mean + sd * z,
                ..*o
            }
        })
        .collect();
    Dataset::new(data.design().clone(), observations)
}
