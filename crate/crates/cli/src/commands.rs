use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use isodiff::analysis::{
    de_table, diagnostics, ma_plot_data, posterior_predictive, predictive_density,
    ObservationSelector, ParamSelector, PredictiveOptions, SampleRef,
};
use isodiff::baselines::{mean_normalize, protein_ttest};
use isodiff::config::KeyValueConfig;
use isodiff::data::{validate as validate_dataset, Coordinate, Dataset, IndexedData};
use isodiff::gibbs::{run_chains, ChainConfig};
use isodiff::io::{
    design_from_config, load_dataset_with, read_observations, read_traces, render_de_table,
    render_diagnostics, render_ground_truth, render_ma, render_predictive, render_ttest,
    save_dataset, save_traces, write_design_config, write_text, DesignSource, LoadOptions,
};
use isodiff::model::Hyperparameters;
use isodiff::simulate::{simulate_dataset, SimulationSpec};
use isodiff::Error;

use crate::manifest::RunManifest;
use crate::Common;

struct Run {
    name: &'static str,
    cfg: KeyValueConfig,
    previous: Option<RunManifest>,
    manifest: RunManifest,
    start: Instant,
}

impl Run {
    fn begin(name: &'static str, common: &Common) -> Result<Self> {
        let start = Instant::now();
        let (cfg, previous) = match (&common.manifest, &common.config) {
            (Some(path), _) => {
                let m = RunManifest::load(path)?;
                m.expect_subcommand(name)?;
                (m.key_values(), Some(m))
            }
            (None, Some(path)) => (KeyValueConfig::load(path)?, None),
            (None, None) => (KeyValueConfig::new(), None),
        };
        Ok(Run {
            name,
            cfg,
            previous,
            manifest: RunManifest::new(name, &KeyValueConfig::new()),
            start,
        })
    }

    /// An input path from the command line, else from the replayed manifest.
    fn input(&mut self, name: &str, given: Option<PathBuf>) -> Result<PathBuf> {
        let path = given
            .or_else(|| self.previous.as_ref().and_then(|m| m.input(name)))
            .ok_or_else(|| anyhow!("`{}` needs --{name}", self.name))?;
        self.manifest.inputs.insert(name.to_string(), path.clone());
        Ok(path)
    }

    fn load_options(&self, common: &Common) -> Result<LoadOptions> {
        Ok(LoadOptions {
            log_transform: common.log_transform || self.cfg.get_or("log_transform", false)?,
            require_complete: common.require_complete
                || self.cfg.get_or("require_complete", false)?,
        })
    }

    fn output(&mut self, dir: &Path, file: &str, text: &str) -> Result<()> {
        let path = dir.join(file);
        write_text(&path, text)?;
        self.manifest.outputs.push(path);
        Ok(())
    }

    fn finish(mut self, common: &Common, resolved: &KeyValueConfig) -> Result<()> {
        let outputs = std::mem::take(&mut self.manifest.outputs);
        let inputs = std::mem::take(&mut self.manifest.inputs);
        self.manifest = RunManifest::new(self.name, resolved);
        self.manifest.outputs = outputs;
        self.manifest.inputs = inputs;
        self.manifest.threads = common.threads;
        self.manifest.wall_time_secs = self.start.elapsed().as_secs_f64();
        self.manifest.save(&common.out)
    }
}

fn out_dir(common: &Common) -> Result<&Path> {
    fs::create_dir_all(&common.out)
        .with_context(|| format!("cannot create output directory {}", common.out.display()))?;
    Ok(&common.out)
}

fn write_options(options: LoadOptions, cfg: &mut KeyValueConfig) {
    cfg.set("log_transform", options.log_transform);
    cfg.set("require_complete", options.require_complete);
}

fn one_based_fields(text: &str, count: usize, what: &str) -> Result<Vec<usize>> {
    let fields: Vec<&str> = text.trim().split(':').collect();
    if fields.len() != count {
        bail!("`{text}` is not a {what}");
    }
    fields
        .iter()
        .map(|f| match f.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(anyhow!("`{text}` is not a {what} (indices are 1-based)")),
        })
        .collect()
}

fn parse_coordinate(text: &str) -> Result<Coordinate> {
    let v = one_based_fields(
        text,
        5,
        "experiment:group:sample:protein:spectrum coordinate",
    )?;
    Ok(Coordinate {
        experiment: v[0],
        group: v[1],
        sample: v[2],
        protein: v[3],
        spectrum: v[4],
    })
}

fn parse_sample(text: &str) -> Result<SampleRef> {
    let v = one_based_fields(text, 3, "experiment:group:sample reference")?;
    Ok(SampleRef {
        experiment: v[0],
        group: v[1],
        sample: v[2],
    })
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn configure_threads(threads: usize) {
    if threads > 0 {
        // Only fails if a pool already exists, which is harmless here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

pub fn simulate(common: &Common) -> Result<()> {
    let mut run = Run::begin("simulate", common)?;
    if let Some(seed) = common.seed {
        run.cfg.set("sim.seed", seed);
    }
    let spec = SimulationSpec::from_config(&run.cfg)?;
    let (dataset, truth) = simulate_dataset(&spec)?;
    let out = out_dir(common)?;

    let data_path = out.join("data.csv");
    save_dataset(&dataset, &data_path)?;
    run.manifest.outputs.push(data_path);
    run.output(
        out,
        "truth.csv",
        &render_ground_truth(&truth, &dataset.design),
    )?;
    let mut design = KeyValueConfig::new();
    write_design_config(&dataset.design, &mut design);
    run.output(out, "design.cfg", &design.to_string())?;

    let mut resolved = KeyValueConfig::new();
    spec.write_config(&mut resolved);
    println!(
        "simulated {} observations of {} proteins into {}",
        dataset.observations.len(),
        dataset.design.num_proteins,
        out.display()
    );
    run.finish(common, &resolved)
}

pub fn fit(common: &Common, data: Option<PathBuf>) -> Result<()> {
    let mut run = Run::begin("fit", common)?;
    let data_path = run.input("data", data)?;
    if let Some(seed) = common.seed {
        run.cfg.set("seed", seed);
    }
    let options = run.load_options(common)?;
    let dataset = load_dataset_with(&data_path, DesignSource::Config(run.cfg.clone()), options)?;
    let indexed = IndexedData::new(&dataset)?;
    let hyper = Hyperparameters::from_config(&run.cfg)?;
    let mut chain = ChainConfig::from_config(&run.cfg)?;
    chain.threads = common.threads;

    let output = run_chains(&indexed, &hyper, &chain)?;
    let out = out_dir(common)?;
    let traces = out.join("traces.csv");
    save_traces(&output, &traces)?;
    run.manifest.outputs.push(traces);

    let mut resolved = KeyValueConfig::new();
    write_design_config(&dataset.design, &mut resolved);
    hyper.write_config(&mut resolved);
    chain.write_config(&mut resolved);
    write_options(options, &mut resolved);
    println!(
        "{} chains, {} stored states each, {:.1}s",
        output.num_chains(),
        chain.stored_per_chain(),
        output.wall_time_secs.iter().copied().fold(0.0, f64::max)
    );
    run.finish(common, &resolved)
}

pub fn summarize(common: &Common, traces: Option<PathBuf>, max_lag: Option<usize>) -> Result<()> {
    let mut run = Run::begin("summarize", common)?;
    let traces = run.input("traces", traces)?;
    let threshold = match common.threshold {
        Some(t) => t,
        None => run.cfg.get_or("threshold", 0.5)?,
    };
    let max_lag = match max_lag {
        Some(l) => l,
        None => run.cfg.get_or("max_lag", 10)?,
    };
    let output = read_traces(&traces)?;
    if output.is_empty() {
        bail!("{}: trace file holds no states", traces.display());
    }
    let table = de_table(&output, threshold)?;
    let out = out_dir(common)?;
    run.output(out, "de.csv", &render_de_table(&table))?;
    match diagnostics(&output, &ParamSelector::All, max_lag) {
        Ok(report) => run.output(out, "diagnostics.csv", &render_diagnostics(&report))?,
        Err(Error::InsufficientSamples(msg)) => eprintln!("warning: diagnostics skipped: {msg}"),
        Err(e) => return Err(e.into()),
    }

    let mut resolved = KeyValueConfig::new();
    resolved.set("threshold", threshold);
    resolved.set("max_lag", max_lag);
    let called = table.iter().filter(|r| r.classified).count();
    println!(
        "{called} of {} group-protein effects called DE at threshold {threshold}",
        table.len()
    );
    run.finish(common, &resolved)
}

pub fn ppc(
    common: &Common,
    traces: Option<PathBuf>,
    data: Option<PathBuf>,
    select: Option<String>,
    density: Option<String>,
) -> Result<()> {
    configure_threads(common.threads);
    let mut run = Run::begin("ppc", common)?;
    let traces = run.input("traces", traces)?;
    let data_path = run.input("data", data)?;
    let seed = match common.seed {
        Some(s) => s,
        None => run.cfg.get_or("ppc.seed", 1)?,
    };
    let select = select.or_else(|| run.cfg.raw("ppc.select").map(str::to_string));
    let density = density.or_else(|| run.cfg.raw("ppc.density").map(str::to_string));
    let options = run.load_options(common)?;

    let output = read_traces(&traces)?;
    let dataset = load_dataset_with(
        &data_path,
        DesignSource::Given(output.design.clone()),
        options,
    )?;
    let indexed = IndexedData::new(&dataset)?;
    let selector = match &select {
        Some(text) => ObservationSelector::Coordinates(
            split_list(text)
                .map(parse_coordinate)
                .collect::<Result<_>>()?,
        ),
        None => ObservationSelector::All,
    };
    let predictive_options = PredictiveOptions {
        seed,
        keep_draws: false,
    };
    let rows = posterior_predictive(&output, &indexed, &selector, predictive_options)?;
    let out = out_dir(common)?;
    run.output(out, "predictive.csv", &render_predictive(&rows))?;

    if let Some(text) = &density {
        let c = parse_coordinate(text)?;
        let one = ObservationSelector::Coordinates(vec![c]);
        let s = &posterior_predictive(&output, &indexed, &one, predictive_options)?[0];
        let half = 0.5 * (s.hi95 - s.lo95).max(1e-6);
        let (lo, hi) = (s.lo95 - half, s.hi95 + half);
        let grid: Vec<f64> = (0..=200)
            .map(|i| lo + (hi - lo) * i as f64 / 200.0)
            .collect();
        let values = predictive_density(&output, &indexed, &c, &grid)?;
        let mut table = String::from("y,density\n");
        for (y, d) in grid.iter().zip(values) {
            table.push_str(&format!("{y},{d}\n"));
        }
        run.output(out, "density.csv", &table)?;
    }

    let mut resolved = KeyValueConfig::new();
    resolved.set("ppc.seed", seed);
    if let Some(text) = &select {
        resolved.set("ppc.select", text);
    }
    if let Some(text) = &density {
        resolved.set("ppc.density", text);
    }
    write_options(options, &mut resolved);
    let covered = rows.iter().filter(|r| r.covered).count();
    println!(
        "{covered} of {} observations inside their 95% predictive interval ({:.1}%)",
        rows.len(),
        100.0 * covered as f64 / rows.len().max(1) as f64
    );
    run.finish(common, &resolved)
}

pub fn baseline(common: &Common, data: Option<PathBuf>, ma: Option<String>) -> Result<()> {
    let mut run = Run::begin("baseline", common)?;
    let data_path = run.input("data", data)?;
    let level = match common.threshold {
        Some(t) => t,
        None => run.cfg.get_or("baseline.level", 0.05)?,
    };
    let normalize: bool = run.cfg.get_or("baseline.normalize", true)?;
    let ma = ma.or_else(|| run.cfg.raw("baseline.ma").map(str::to_string));
    let options = run.load_options(common)?;
    let dataset = load_dataset_with(&data_path, DesignSource::Config(run.cfg.clone()), options)?;
    let tested: Dataset = if normalize {
        mean_normalize(&dataset)?
    } else {
        dataset.clone()
    };
    let out = out_dir(common)?;
    for g in 1..dataset.design.num_groups {
        let rows = protein_ttest(&tested, 0, g, level)?;
        let significant = rows.iter().filter(|r| r.significant).count();
        println!(
            "group {} vs 1: {significant} proteins with q <= {level}",
            g + 1
        );
        run.output(
            out,
            &format!("ttest_group{}.csv", g + 1),
            &render_ttest(&rows),
        )?;
    }
    if let Some(text) = &ma {
        let samples: Vec<SampleRef> = split_list(text).map(parse_sample).collect::<Result<_>>()?;
        if samples.len() != 2 {
            bail!("--ma needs exactly two samples");
        }
        let points = ma_plot_data(&dataset, samples[0], samples[1])?;
        run.output(out, "ma.csv", &render_ma(&points))?;
    }

    let mut resolved = KeyValueConfig::new();
    write_design_config(&dataset.design, &mut resolved);
    resolved.set("baseline.level", level);
    resolved.set("baseline.normalize", normalize);
    if let Some(text) = &ma {
        resolved.set("baseline.ma", text);
    }
    write_options(options, &mut resolved);
    run.finish(common, &resolved)
}

/// Reports every violation, with source line numbers where they apply.
pub fn validate(common: &Common, data: Option<PathBuf>) -> Result<()> {
    let mut run = Run::begin("validate", common)?;
    let data_path = run.input("data", data)?;
    let options = run.load_options(common)?;
    let (observations, lines) = read_observations(&data_path, options.log_transform)?;
    let design = design_from_config(&run.cfg, &observations)?;
    let count = observations.len();
    let report = validate_dataset(&Dataset::new(design, observations));
    for v in &report.violations {
        match v.row() {
            Some(r) => println!("{}:{}: {v}", data_path.display(), lines[r]),
            None => println!("{}: {v}", data_path.display()),
        }
    }
    if !report.is_ok() {
        bail!(
            "{} violation(s) in {}",
            report.violations.len(),
            data_path.display()
        );
    }
    println!(
        "{}: {count} observations, no violations",
        data_path.display()
    );
    Ok(())
}
