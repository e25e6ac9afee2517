use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn isodiff(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isodiff"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = isodiff(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = isodiff(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    assert!(out.stdout.is_empty() || !String::from_utf8_lossy(&out.stdout).contains("error"));
    String::from_utf8(out.stderr).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

/// Small simulated dataset plus a short fit configuration.
fn small_run(dir: &Path) {
    write(dir, "sim.cfg", "P = 30\nsim.seed = 11\n");
    ok(dir, &["simulate", "--config", "sim.cfg", "--out", "sim"]);
    let mut cfg = read(dir, "sim/design.cfg");
    cfg.push_str("burnin = 500\nkeep = 1000\nthin = 10\nchains = 2\nseed = 5\n");
    write(dir, "fit.cfg", &cfg);
}

#[test]
fn simulate_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(dir, "sim.cfg", "P = 25\n");
    ok(
        dir,
        &[
            "simulate", "--config", "sim.cfg", "--seed", "3", "--out", "a",
        ],
    );
    ok(
        dir,
        &[
            "simulate", "--config", "sim.cfg", "--seed", "3", "--out", "b",
        ],
    );
    ok(
        dir,
        &[
            "simulate", "--config", "sim.cfg", "--seed", "4", "--out", "c",
        ],
    );
    for f in ["data.csv", "truth.csv", "design.cfg"] {
        assert_eq!(
            read(dir, &format!("a/{f}")),
            read(dir, &format!("b/{f}")),
            "{f}"
        );
    }
    assert_ne!(read(dir, "a/data.csv"), read(dir, "c/data.csv"));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir, "a/manifest.json")).unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["config"]["sim.seed"], "3");
    assert_eq!(manifest["config"]["P"], "25");
}

#[test]
fn full_pipeline() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    small_run(dir);
    ok(
        dir,
        &[
            "fit",
            "--data",
            "sim/data.csv",
            "--config",
            "fit.cfg",
            "--out",
            "fit",
        ],
    );
    ok(
        dir,
        &["summarize", "--traces", "fit/traces.csv", "--out", "sum"],
    );
    let de = read(dir, "sum/de.csv");
    assert!(de.starts_with("group,protein,prob_de"));
    // 3 treatment groups x 30 proteins.
    assert_eq!(de.lines().count(), 1 + 90);
    assert!(read(dir, "sum/diagnostics.csv").contains("\"kappa[1,1,2]\""));

    let stdout = ok(
        dir,
        &[
            "ppc",
            "--traces",
            "fit/traces.csv",
            "--data",
            "sim/data.csv",
            "--out",
            "ppc",
            "--density",
            "1:1:1:1:1",
        ],
    );
    assert!(stdout.contains("predictive interval"));
    let ppc = read(dir, "ppc/predictive.csv");
    let data_rows = read(dir, "sim/data.csv").lines().count();
    assert_eq!(ppc.lines().count(), data_rows);
    assert_eq!(read(dir, "ppc/density.csv").lines().count(), 202);

    ok(
        dir,
        &[
            "baseline",
            "--data",
            "sim/data.csv",
            "--config",
            "sim/design.cfg",
            "--out",
            "base",
            "--ma",
            "1:1:1,1:2:1",
        ],
    );
    for g in 2..=4 {
        let t = read(dir, &format!("base/ttest_group{g}.csv"));
        assert_eq!(t.lines().count(), 31);
    }
    assert!(read(dir, "base/ma.csv").starts_with("protein,spectrum,a,m"));
}

#[test]
fn manifest_replay_reproduces_traces() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    small_run(dir);
    ok(
        dir,
        &[
            "fit",
            "--data",
            "sim/data.csv",
            "--config",
            "fit.cfg",
            "--out",
            "a",
            "--threads",
            "2",
        ],
    );
    ok(
        dir,
        &[
            "fit",
            "--manifest",
            "a/manifest.json",
            "--out",
            "b",
            "--threads",
            "1",
        ],
    );
    assert_eq!(read(dir, "a/traces.csv"), read(dir, "b/traces.csv"));

    ok(
        dir,
        &["summarize", "--traces", "a/traces.csv", "--out", "s1"],
    );
    ok(
        dir,
        &["summarize", "--manifest", "s1/manifest.json", "--out", "s2"],
    );
    assert_eq!(read(dir, "s1/de.csv"), read(dir, "s2/de.csv"));
    assert_eq!(
        read(dir, "s1/diagnostics.csv"),
        read(dir, "s2/diagnostics.csv")
    );

    let err = fails(
        dir,
        &["summarize", "--manifest", "a/manifest.json", "--out", "s3"],
    );
    assert!(err.contains("not `summarize`"), "{err}");
}

#[test]
fn malformed_data_reports_line() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(
        dir,
        "bad.csv",
        "experiment,group,sample,protein,spectrum,log_intensity\n1,1,1,1,1,3.0\n1,2,1,1,1,abc\n",
    );
    write(dir, "cfg", "g_ref = 1\n");
    let err = fails(
        dir,
        &["fit", "--data", "bad.csv", "--config", "cfg", "--out", "o"],
    );
    assert!(err.contains("line 3"), "{err}");

    write(
        dir,
        "dup.csv",
        "experiment,group,sample,protein,spectrum,log_intensity\n1,1,1,1,1,3.0\n1,2,1,1,1,2.0\n1,1,1,1,1,4.0\n",
    );
    let err = fails(
        dir,
        &["fit", "--data", "dup.csv", "--config", "cfg", "--out", "o"],
    );
    assert!(err.contains("line 4") && err.contains("duplicate"), "{err}");
}

#[test]
fn missing_g_ref_is_a_configuration_error() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(
        dir,
        "d.csv",
        "experiment,group,sample,protein,spectrum,log_intensity\n1,1,1,1,1,3.0\n1,2,1,1,1,2.0\n",
    );
    write(dir, "cfg", "burnin = 10\n");
    let err = fails(
        dir,
        &["fit", "--data", "d.csv", "--config", "cfg", "--out", "o"],
    );
    assert!(
        err.contains("configuration error") && err.contains("g_ref"),
        "{err}"
    );
}

#[test]
fn empty_trace_file_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(
        dir,
        "t.csv",
        "# g_ref = 1\nchain,iteration,parameter,value\n",
    );
    let err = fails(dir, &["summarize", "--traces", "t.csv", "--out", "o"]);
    assert!(err.contains("no trace rows"), "{err}");
}

#[test]
fn hand_built_trace_gives_three_quarters() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let mut t = String::from("# g_ref = 1\nchain,iteration,parameter,value\n");
    for (it, beta) in [1, 1, 0, 1].iter().enumerate() {
        for (name, v) in [
            ("\"kappa[1,1,1]\"", 0.0),
            ("\"kappa[1,2,1]\"", 0.1),
            ("\"alpha[1,1]\"", 10.0),
            ("\"beta[2,1]\"", *beta as f64),
            ("\"gamma[2,1]\"", 0.8),
            ("\"p[2,1]\"", 0.3),
            ("tau", 4.0),
        ] {
            t.push_str(&format!("1,{},{name},{v}\n", it + 1));
        }
    }
    write(dir, "t.csv", &t);
    let out = isodiff(dir, &["summarize", "--traces", "t.csv", "--out", "o"]);
    assert!(out.status.success());
    // Too few states for diagnostics; that is a warning, not a failure.
    assert!(String::from_utf8_lossy(&out.stderr).contains("diagnostics skipped"));
    let de = read(dir, "o/de.csv");
    let row: Vec<&str> = de.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], &["2", "1", "0.75"]);
    assert_eq!(row[7], "1");
    assert!((row[3].parse::<f64>().unwrap() - 0.6).abs() < 1e-12);
    ok(
        dir,
        &[
            "summarize",
            "--traces",
            "t.csv",
            "--out",
            "o2",
            "--threshold",
            "0.75",
        ],
    );
    assert!(read(dir, "o2/de.csv")
        .lines()
        .nth(1)
        .unwrap()
        .ends_with(",0"));
}

#[test]
fn unknown_coordinate_selector() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    small_run(dir);
    ok(
        dir,
        &[
            "fit",
            "--data",
            "sim/data.csv",
            "--config",
            "fit.cfg",
            "--out",
            "fit",
        ],
    );
    let err = fails(
        dir,
        &[
            "ppc",
            "--traces",
            "fit/traces.csv",
            "--data",
            "sim/data.csv",
            "--select",
            "1:1:1:99:1",
            "--out",
            "p",
        ],
    );
    assert!(err.contains("unknown observation coordinate"), "{err}");
    let err = fails(
        dir,
        &[
            "ppc",
            "--traces",
            "fit/traces.csv",
            "--data",
            "sim/data.csv",
            "--select",
            "0:1:1:1:1",
            "--out",
            "p",
        ],
    );
    assert!(err.contains("1-based"), "{err}");
}

#[test]
fn validate_lists_violations() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(
        dir,
        "d.csv",
        "experiment,group,sample,protein,spectrum,log_intensity\n1,1,1,1,1,3.0\n1,2,1,1,1,2.0\n1,2,1,1,1,2.5\n",
    );
    write(dir, "cfg", "g_ref = 1\n");
    let out = isodiff(dir, &["validate", "--data", "d.csv", "--config", "cfg"]);
    assert!(!out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("d.csv:4:"), "{stdout}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 violation"));

    write(
        dir,
        "good.csv",
        "experiment,group,sample,protein,spectrum,log_intensity\n1,1,1,1,1,3.0\n1,2,1,1,1,2.0\n",
    );
    let stdout = ok(dir, &["validate", "--data", "good.csv", "--config", "cfg"]);
    assert!(stdout.contains("2 observations, no violations"));
}

#[test]
fn log_transform_and_require_complete_flags() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let body = "experiment,group,sample,protein,spectrum,log_intensity\n\
                1,1,1,1,1,100\n1,2,1,1,1,200\n1,1,1,1,2,50\n1,1,1,2,1,30\n1,2,1,2,1,60\n";
    write(dir, "d.csv", body);
    write(
        dir,
        "cfg",
        "g_ref = 1\nburnin = 20\nkeep = 100\nthin = 1\nchains = 1\n",
    );
    ok(
        dir,
        &[
            "fit",
            "--data",
            "d.csv",
            "--config",
            "cfg",
            "--out",
            "o",
            "--log-transform",
            "--require-complete",
        ],
    );
    let manifest: serde_json::Value = serde_json::from_str(&read(dir, "o/manifest.json")).unwrap();
    assert_eq!(manifest["config"]["log_transform"], "true");
    assert_eq!(manifest["config"]["require_complete"], "true");
    // Spectrum (1,2) was only seen in one sample and is dropped; alpha stays
    // near log(100) and log(30) rather than raw intensities.
    let traces = read(dir, "o/traces.csv");
    let alpha: Vec<f64> = traces
        .lines()
        .filter(|l| l.contains("\"alpha[1,1]\""))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let mean = alpha.iter().sum::<f64>() / alpha.len() as f64;
    assert!(mean > 2.0 && mean < 7.0, "{mean}");
}

#[test]
fn missing_input_path() {
    let tmp = TempDir::new().unwrap();
    let err = fails(tmp.path(), &["fit", "--out", "o"]);
    assert!(err.contains("--data"), "{err}");
}
