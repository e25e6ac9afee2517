//! Delimited-text formats: observation tables, chain traces, ground truth and
//! result tables. Indices are 1-based in every file.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::analysis::{DeResult, DiagnosticsReport, MaPoint, PredictiveSummary};
use crate::baselines::TTestRow;
use crate::config::KeyValueConfig;
use crate::data::{validate, Coordinate, Dataset, DesignInfo, Observation};
use crate::error::{Error, Result};
use crate::gibbs::{ChainConfig, ChainOutput};
use crate::model::{Hyperparameters, ModelState};
use crate::params::{parse_name, trace_params, ParamKind};
use crate::simulate::GroundTruth;

pub const DATA_HEADER: [&str; 6] = [
    "experiment",
    "group",
    "sample",
    "protein",
    "spectrum",
    "log_intensity",
];

pub const TRACE_HEADER: [&str; 4] = ["chain", "iteration", "parameter", "value"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Values in the file are raw intensities; take natural logs on ingest.
    pub log_transform: bool,
    /// Drop (experiment, spectrum) readouts missing any reporter ion.
    pub require_complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignSource {
    Given(DesignInfo),
    /// Infer the design from the data; the reference group (0-based, one per
    /// experiment) cannot be inferred.
    Infer {
        reference_group: Vec<usize>,
    },
    /// Design keys of a configuration, see [`design_from_config`].
    Config(KeyValueConfig),
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn check_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    let line = headers.position().map_or(1, |p| p.line());
    if headers.iter().ne(expected.iter().copied()) {
        return Err(parse_error(
            path,
            line,
            format!("expected header `{}`", expected.join(",")),
        ));
    }
    Ok(())
}

/// Observations and the source line of each.
pub fn read_observations(path: &Path, log_transform: bool) -> Result<(Vec<Observation>, Vec<u64>)> {
    let mut reader = csv_reader(open(path)?);
    check_header(path, &mut reader, &DATA_HEADER)?;
    let mut observations = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != DATA_HEADER.len() {
            return Err(parse_error(
                path,
                line,
                format!(
                    "expected {} fields, found {}",
                    DATA_HEADER.len(),
                    record.len()
                ),
            ));
        }
        let mut idx = [0usize; 5];
        for (slot, (field, name)) in idx.iter_mut().zip(record.iter().zip(DATA_HEADER)) {
            let v: usize = field.parse().map_err(|_| {
                parse_error(
                    path,
                    line,
                    format!("{name} `{field}` is not a positive integer"),
                )
            })?;
            if v == 0 {
                return Err(parse_error(
                    path,
                    line,
                    format!("{name} index 0 (indices are 1-based)"),
                ));
            }
            *slot = v - 1;
        }
        let raw = &record[5];
        let mut value: f64 = raw.parse().map_err(|_| {
            parse_error(path, line, format!("log_intensity `{raw}` is not numeric"))
        })?;
        if log_transform {
            if !(value > 0.0) {
                return Err(parse_error(
                    path,
                    line,
                    format!("intensity {value} cannot be log-transformed"),
                ));
            }
            value = value.ln();
        }
        observations.push(Observation {
            experiment: idx[0],
            group: idx[1],
            sample: idx[2],
            protein: idx[3],
            spectrum: idx[4],
            log_intensity: value,
        });
        lines.push(line);
    }
    Ok((observations, lines))
}

/// Reads a dataset for a known design.
pub fn load_dataset(path: &Path, design: &DesignInfo) -> Result<Dataset> {
    load_dataset_with(
        path,
        DesignSource::Given(design.clone()),
        LoadOptions::default(),
    )
}

pub fn load_dataset_with(
    path: &Path,
    design: DesignSource,
    options: LoadOptions,
) -> Result<Dataset> {
    let (observations, lines) = read_observations(path, options.log_transform)?;
    let design = match design {
        DesignSource::Given(d) => d,
        DesignSource::Infer { reference_group } => {
            DesignInfo::infer(&observations, reference_group)?
        }
        DesignSource::Config(cfg) => design_from_config(&cfg, &observations)?,
    };
    let dataset = Dataset::new(design, observations);
    let report = validate(&dataset);
    if let Some(v) = report.violations.first() {
        return Err(match v.row() {
            Some(r) => parse_error(path, lines[r], v.to_string()),
            None => Error::Validation(report.violations),
        });
    }
    Ok(if options.require_complete {
        dataset.require_complete()
    } else {
        dataset
    })
}

pub fn write_observations<W: Write>(
    out: &mut W,
    observations: &[Observation],
) -> std::io::Result<()> {
    writeln!(out, "{}", DATA_HEADER.join(","))?;
    for o in observations {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            o.experiment + 1,
            o.group + 1,
            o.sample + 1,
            o.protein + 1,
            o.spectrum + 1,
            o.log_intensity
        )?;
    }
    Ok(())
}

/// Writes the observation table. Floats use the shortest representation
/// that parses back to the same value.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    write_observations(&mut out, &dataset.observations)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Design from configuration keys `E`, `G`, `P`, `m`, `n`, `g_ref`, `n_I`.
/// `g_ref` is required; when `m` or `n` is absent the shape is inferred from
/// the observations and any explicit keys must agree with it.
pub fn design_from_config(
    cfg: &KeyValueConfig,
    observations: &[Observation],
) -> Result<DesignInfo> {
    let g_ref: Vec<usize> = cfg
        .get_list("g_ref")?
        .ok_or_else(|| Error::Config("missing required key `g_ref`".into()))?;
    let reference_group = g_ref
        .into_iter()
        .map(|g| {
            g.checked_sub(1)
                .ok_or_else(|| Error::Config("`g_ref` entries are 1-based".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let m: Option<Vec<usize>> = cfg.get_list("m")?;
    let n: Option<Vec<Vec<usize>>> = cfg.get_table("n")?;
    let design = match (m, n) {
        (Some(m), Some(n)) => {
            let tags = n.first().map_or(0, |row| row.iter().sum());
            DesignInfo {
                num_experiments: cfg.get_or("E", n.len())?,
                num_groups: cfg.get_or("G", n.first().map_or(0, Vec::len))?,
                num_proteins: cfg.get_or("P", m.len())?,
                spectra_per_protein: m,
                samples_per_cell: n,
                reference_group,
                tags_per_experiment: cfg.get_or("n_I", tags)?,
            }
        }
        _ => {
            let inferred = DesignInfo::infer(observations, reference_group)?;
            for (key, value) in [
                ("E", inferred.num_experiments),
                ("G", inferred.num_groups),
                ("P", inferred.num_proteins),
                ("n_I", inferred.tags_per_experiment),
            ] {
                if let Some(given) = cfg.get::<usize>(key)? {
                    if given != value {
                        return Err(Error::Config(format!(
                            "`{key} = {given}` but the data imply {value}"
                        )));
                    }
                }
            }
            inferred
        }
    };
    Ok(design)
}

/// Writes the design keys so that [`design_from_config`] reproduces it.
pub fn write_design_config(design: &DesignInfo, cfg: &mut KeyValueConfig) {
    cfg.set("E", design.num_experiments);
    cfg.set("G", design.num_groups);
    cfg.set("P", design.num_proteins);
    cfg.set_list("m", &design.spectra_per_protein);
    cfg.set_table("n", &design.samples_per_cell);
    let g_ref: Vec<usize> = design.reference_group.iter().map(|g| g + 1).collect();
    cfg.set_list("g_ref", &g_ref);
    cfg.set("n_I", design.tags_per_experiment);
}

/// Long-format trace: one row per stored state per scalar parameter. A
/// leading comment records the reference groups.
pub fn write_traces<W: Write>(out: &mut W, output: &ChainOutput) -> std::io::Result<()> {
    let layout = output.design.layout();
    let params = trace_params(&layout);
    let names: Vec<String> = params.iter().map(|p| quoted(&p.name(&layout))).collect();
    let g_ref: Vec<String> = output
        .design
        .reference_group
        .iter()
        .map(|g| (g + 1).to_string())
        .collect();
    writeln!(out, "# g_ref = {}", g_ref.join(","))?;
    writeln!(out, "{}", TRACE_HEADER.join(","))?;
    let thin = output.config.thin.max(1);
    let mut line = String::new();
    for c in 0..output.num_chains() {
        for (s, state) in output.chain(c).iter().enumerate() {
            let iteration = (s + 1) * thin;
            for (p, name) in params.iter().zip(&names) {
                line.clear();
                let _ = writeln!(line, "{},{iteration},{name},{}", c + 1, p.value(state));
                out.write_all(line.as_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn save_traces(output: &ChainOutput, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    write_traces(&mut out, output)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads a trace file back into a [`ChainOutput`]. The design is rebuilt from
/// the parameter names and the `# g_ref` comment.
pub fn read_traces(path: &Path) -> Result<ChainOutput> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    let g_ref = text
        .lines()
        .take_while(|l| l.trim_start().starts_with('#'))
        .find_map(|l| {
            l.trim_start_matches('#')
                .trim()
                .strip_prefix("g_ref")
                .and_then(|rest| rest.trim().strip_prefix('='))
                .map(str::trim)
        })
        .ok_or_else(|| parse_error(path, 1, "missing `# g_ref = ...` comment"))?;
    let reference_group = g_ref
        .split(',')
        .map(|g| match g.trim().parse::<usize>() {
            Ok(v) if v > 0 => Ok(v - 1),
            _ => Err(parse_error(path, 1, format!("bad g_ref entry `{g}`"))),
        })
        .collect::<Result<Vec<_>>>()?;

    struct Row {
        chain: usize,
        iteration: usize,
        param: usize,
        value: f64,
    }
    let mut reader = csv_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?;
    if headers.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(parse_error(
            path,
            headers.position().map_or(1, |p| p.line()),
            format!("expected header `{}`", TRACE_HEADER.join(",")),
        ));
    }
    let mut names: Vec<(ParamKind, Vec<usize>)> = Vec::new();
    let mut name_ids: HashMap<String, usize> = HashMap::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| parse_error(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(parse_error(path, line, "expected 4 fields"));
        }
        let chain: usize = record[0]
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| parse_error(path, line, "bad chain index"))?;
        let iteration: usize = record[1]
            .parse()
            .map_err(|_| parse_error(path, line, "bad iteration"))?;
        let value: f64 = record[3]
            .parse()
            .map_err(|_| parse_error(path, line, "bad value"))?;
        let param = match name_ids.get(&record[2]) {
            Some(&id) => id,
            None => {
                let parsed =
                    parse_name(&record[2]).map_err(|e| parse_error(path, line, e.to_string()))?;
                names.push(parsed);
                name_ids.insert(record[2].to_string(), names.len() - 1);
                names.len() - 1
            }
        };
        rows.push(Row {
            chain: chain - 1,
            iteration,
            param,
            value,
        });
    }
    if rows.is_empty() {
        return Err(Error::InsufficientSamples(format!(
            "{} contains no trace rows",
            path.display()
        )));
    }

    let design = design_from_names(&names, reference_group)
        .map_err(|e| parse_error(path, 1, e.to_string()))?;
    let layout = design.layout();
    let hyper = Hyperparameters::default();
    let num_chains = rows.iter().map(|r| r.chain + 1).max().unwrap_or(0);
    let mut chains: Vec<Vec<ModelState>> = vec![Vec::new(); num_chains];
    let mut current: Vec<Option<usize>> = vec![None; num_chains];
    for row in &rows {
        let chain = &mut chains[row.chain];
        if current[row.chain] != Some(row.iteration) {
            current[row.chain] = Some(row.iteration);
            chain.push(ModelState::zeros(&layout, &hyper));
        }
        let state = chain.last_mut().expect("pushed above");
        let (kind, idx) = &names[row.param];
        match kind {
            ParamKind::Kappa => {
                state.kappa[layout.slot(idx[0] - 1, idx[1] - 1, idx[2] - 1)] = row.value
            }
            ParamKind::Alpha => {
                state.alpha[layout.spectrum_slot(idx[0] - 1, idx[1] - 1)] = row.value
            }
            ParamKind::Beta => state.beta[layout.cell(idx[0] - 1, idx[1] - 1)] = row.value != 0.0,
            ParamKind::Gamma => state.gamma[layout.cell(idx[0] - 1, idx[1] - 1)] = row.value,
            ParamKind::P => state.p[layout.cell(idx[0] - 1, idx[1] - 1)] = row.value,
            ParamKind::Tau => state.tau = row.value,
            ParamKind::Effect | ParamKind::Sigma => {}
        }
    }
    let stored = chains.iter().map(Vec::len).max().unwrap_or(0);
    let config = ChainConfig {
        burn_in: 0,
        keep: stored,
        thin: 1,
        num_chains,
        ..ChainConfig::default()
    };
    Ok(ChainOutput::from_chains(design, chains, config))
}

fn design_from_names(
    names: &[(ParamKind, Vec<usize>)],
    reference_group: Vec<usize>,
) -> Result<DesignInfo> {
    let mut num_experiments = 0;
    let mut num_groups = 0;
    let mut num_proteins = 0;
    for (kind, idx) in names {
        let want = match kind {
            ParamKind::Kappa => 3,
            ParamKind::Alpha | ParamKind::Beta | ParamKind::Gamma | ParamKind::P => 2,
            ParamKind::Effect => 2,
            ParamKind::Tau | ParamKind::Sigma => 0,
        };
        if idx.len() != want {
            return Err(Error::Invalid(format!(
                "parameter {} expects {want} indices",
                kind.name()
            )));
        }
        match kind {
            ParamKind::Kappa => {
                num_experiments = num_experiments.max(idx[0]);
                num_groups = num_groups.max(idx[1]);
            }
            ParamKind::Alpha => num_proteins = num_proteins.max(idx[0]),
            ParamKind::Beta | ParamKind::Gamma | ParamKind::P | ParamKind::Effect => {
                num_groups = num_groups.max(idx[0]);
                num_proteins = num_proteins.max(idx[1]);
            }
            _ => {}
        }
    }
    let mut spectra_per_protein = vec![0; num_proteins];
    let mut samples_per_cell = vec![vec![0; num_groups]; num_experiments];
    for (kind, idx) in names {
        match kind {
            ParamKind::Kappa => {
                let n = &mut samples_per_cell[idx[0] - 1][idx[1] - 1];
                *n = (*n).max(idx[2]);
            }
            ParamKind::Alpha => {
                let m = &mut spectra_per_protein[idx[0] - 1];
                *m = (*m).max(idx[1]);
            }
            _ => {}
        }
    }
    let tags_per_experiment = samples_per_cell.first().map_or(0, |r| r.iter().sum());
    let design = DesignInfo {
        num_experiments,
        num_groups,
        num_proteins,
        spectra_per_protein,
        samples_per_cell,
        reference_group,
        tags_per_experiment,
    };
    let violations = design.check();
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(design)
}

/// `parameter,indices,value` rows with colon-separated 1-based indices.
pub fn render_ground_truth(truth: &GroundTruth, design: &DesignInfo) -> String {
    let layout = design.layout();
    let mut s = String::from("parameter,indices,value\n");
    for (j, m) in truth.spectra_per_protein.iter().enumerate() {
        let _ = writeln!(s, "m,{},{m}", j + 1);
    }
    for (slot, v) in truth.kappa.iter().enumerate() {
        let (e, g, i) = layout.slot_coords(slot);
        let _ = writeln!(s, "kappa,{}:{}:{},{v}", e + 1, g + 1, i + 1);
    }
    for (k, v) in truth.alpha.iter().enumerate() {
        let (j, kk) = layout.spectrum_coords(k);
        let _ = writeln!(s, "alpha,{}:{},{v}", j + 1, kk + 1);
    }
    for cell in layout.num_proteins..layout.num_cells() {
        let (g, j) = (
            cell / layout.num_proteins + 1,
            cell % layout.num_proteins + 1,
        );
        let _ = writeln!(s, "beta,{g}:{j},{}", u8::from(truth.beta[cell]));
        let _ = writeln!(s, "gamma,{g}:{j},{}", truth.gamma[cell]);
    }
    let _ = writeln!(s, "sigma,,{}", truth.sigma);
    for (g, count) in truth.de_counts.iter().enumerate().skip(1) {
        let _ = writeln!(s, "de_count,{},{count}", g + 1);
    }
    s
}

pub fn render_de_table(rows: &[DeResult]) -> String {
    let mut s = String::from("group,protein,prob_de,mean_effect,sd_effect,q2.5,q97.5,classified\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.group + 1,
            r.protein + 1,
            r.prob_de,
            r.mean_effect,
            r.sd_effect,
            r.q025,
            r.q975,
            u8::from(r.classified)
        );
    }
    s
}

/// Parameter names such as `kappa[1,2,1]` contain commas.
fn quoted(name: &str) -> String {
    if name.contains(',') {
        format!("\"{name}\"")
    } else {
        name.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn render_diagnostics(report: &DiagnosticsReport) -> String {
    let mut s = String::from("parameter,ess,rhat");
    for lag in 1..=report.max_lag {
        let _ = write!(s, ",acf{lag}");
    }
    s.push('\n');
    for p in &report.params {
        let _ = write!(s, "{},{},{}", quoted(&p.name), opt(p.ess), opt(p.rhat));
        for lag in 0..report.max_lag {
            let _ = write!(s, ",{}", opt(p.acf.get(lag).copied().flatten()));
        }
        s.push('\n');
    }
    s
}

pub fn render_predictive(rows: &[PredictiveSummary]) -> String {
    let mut s =
        String::from("experiment,group,sample,protein,spectrum,observed,lo95,hi95,covered\n");
    for r in rows {
        let c: Coordinate = r.coordinate;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            c.experiment + 1,
            c.group + 1,
            c.sample + 1,
            c.protein + 1,
            c.spectrum + 1,
            r.observed,
            r.lo95,
            r.hi95,
            u8::from(r.covered)
        );
    }
    s
}

pub fn render_ttest(rows: &[TTestRow]) -> String {
    let mut s = String::from("protein,t,df,p,q,significant\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.protein + 1,
            opt(r.t),
            opt(r.df),
            opt(r.p),
            opt(r.q),
            u8::from(r.significant)
        );
    }
    s
}

pub fn render_ma(points: &[MaPoint]) -> String {
    let mut s = String::from("protein,spectrum,a,m\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.protein + 1, p.spectrum + 1, p.a, p.m);
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tests::two_group_design;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn minimal_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "d.csv",
            "# two samples\nexperiment,group,sample,protein,spectrum,log_intensity\n1,1,1,1,1,10.5\n1,2,1,1,1,11\n",
        );
        let d = load_dataset(&p, &two_group_design()).unwrap();
        assert_eq!(d.observations.len(), 2);
        assert_eq!(d.observations[1].group, 1);
        assert_eq!(d.observations[1].log_intensity, 11.0);
    }

    #[test]
    fn zero_index_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "d.csv",
            "experiment,group,sample,protein,spectrum,log_intensity\n1,1,1,1,1,10\n1,0,1,1,1,10\n",
        );
        let err = load_dataset(&p, &two_group_design()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn non_numeric_and_out_of_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "d.csv",
            "experiment,group,sample,protein,spectrum,log_intensity\n1,1,1,1,1,abc\n",
        );
        let err = load_dataset(&p, &two_group_design()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let p = write(
            dir.path(),
            "e.csv",
            "experiment,group,sample,protein,spectrum,log_intensity\n1,1,1,1,1,1\n1,3,1,1,1,1\n",
        );
        let err = load_dataset(&p, &two_group_design()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "d.csv", "a,b\n1,2\n");
        assert!(load_dataset(&p, &two_group_design()).is_err());
    }

    #[test]
    fn log_transform_on_ingest() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "d.csv",
            "experiment,group,sample,protein,spectrum,log_intensity\n1,1,1,1,1,1000\n",
        );
        let opts = LoadOptions {
            log_transform: true,
            require_complete: false,
        };
        let d = load_dataset_with(&p, DesignSource::Given(two_group_design()), opts).unwrap();
        assert_eq!(d.observations[0].log_intensity, 1000f64.ln());
    }

    #[test]
    fn empty_dataset_saves_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        save_dataset(&Dataset::new(two_group_design(), vec![]), &p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "experiment,group,sample,protein,spectrum,log_intensity\n"
        );
    }

    #[test]
    fn design_config_requires_g_ref() {
        let cfg = KeyValueConfig::parse("E = 1").unwrap();
        assert!(matches!(
            design_from_config(&cfg, &[]),
            Err(Error::Config(_))
        ));
        let mut cfg = KeyValueConfig::new();
        write_design_config(&two_group_design(), &mut cfg);
        assert_eq!(design_from_config(&cfg, &[]).unwrap(), two_group_design());
    }
}
