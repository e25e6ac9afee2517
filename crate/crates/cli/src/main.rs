mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "isodiff",
    version,
    about = "Bayesian differential expression for isobaric-labelled proteomics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Key-value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repeat a previous run from its manifest
    #[arg(long, global = true, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Random seed, overriding the configuration
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for chains and predictive draws (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Classification threshold (posterior probability for `summarize`,
    /// q-value level for `baseline`)
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Input values are raw intensities; take natural logs
    #[arg(long, global = true)]
    pub log_transform: bool,
    /// Drop spectra missing any reporter ion in an experiment
    #[arg(long, global = true)]
    pub require_complete: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a dataset and its ground truth
    Simulate,
    /// Run the Gibbs sampler and write chain traces
    Fit {
        /// Observation table
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// DE probabilities, effect summaries and convergence diagnostics
    Summarize {
        #[arg(long)]
        traces: Option<PathBuf>,
        /// Largest autocorrelation lag reported
        #[arg(long)]
        max_lag: Option<usize>,
    },
    /// Posterior-predictive intervals for observations
    Ppc {
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Observations as experiment:group:sample:protein:spectrum (1-based),
        /// comma separated; default is every observation
        #[arg(long)]
        select: Option<String>,
        /// Also export the predictive density on a grid for this observation
        #[arg(long)]
        density: Option<String>,
    },
    /// Welch t-test with Benjamini-Hochberg adjustment
    Baseline {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Also export MA-plot data for two samples, given as
        /// experiment:group:sample,experiment:group:sample (1-based)
        #[arg(long)]
        ma: Option<String>,
    },
    /// Check a data file against its design
    Validate {
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate => commands::simulate(&cli.common),
        Command::Fit { ref data } => commands::fit(&cli.common, data.clone()),
        Command::Summarize {
            ref traces,
            max_lag,
        } => commands::summarize(&cli.common, traces.clone(), max_lag),
        Command::Ppc {
            ref traces,
            ref data,
            ref select,
            ref density,
        } => commands::ppc(
            &cli.common,
            traces.clone(),
            data.clone(),
            select.clone(),
            density.clone(),
        ),
        Command::Baseline { ref data, ref ma } => {
            commands::baseline(&cli.common, data.clone(), ma.clone())
        }
        Command::Validate { ref data } => commands::validate(&cli.common, data.clone()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
