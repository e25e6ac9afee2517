//! Bayesian differential protein expression for isobaric-labelled (iTRAQ/TMT)
//! MS/MS data spread over several experiments.
//!
//! Observed reporter-ion log-intensities are modelled as a sample
//! normalisation constant plus a per-spectrum mean plus a spike-and-slab
//! group effect, and the posterior is explored by a Gibbs sampler. The crate
//! also provides a matching data simulator, posterior summaries and
//! diagnostics, posterior-predictive checks and a t-test baseline.
//!
//! ```no_run
//! use isodiff::prelude::*;
//!
//! let (dataset, _truth) = simulate_dataset(&paper_scenario_spec())?;
//! let data = IndexedData::new(&dataset)?;
//! let config = ChainConfig { burn_in: 10_000, keep: 10_000, thin: 10, num_chains: 3, ..ChainConfig::default() };
//! let output = run_chains(&data, &Hyperparameters::default(), &config)?;
//! let table = de_table(&output, 0.5)?;
//! # Ok::<(), isodiff::Error>(())
//! ```

pub mod analysis;
pub mod baselines;
pub mod config;
pub mod data;
pub mod error;
pub mod gibbs;
pub mod io;
pub mod model;
pub mod params;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::analysis::{
        de_probabilities, de_table, diagnostics, effect_summaries, ma_plot_data,
        posterior_predictive, predictive_density, DeResult, DiagnosticsReport, ObservationSelector,
        ParamSelector, PredictiveOptions, SampleRef,
    };
    pub use crate::baselines::{bh_adjust, mean_normalize, protein_ttest, welch_t_test};
    pub use crate::config::KeyValueConfig;
    pub use crate::data::{validate, Coordinate, Dataset, DesignInfo, IndexedData, Observation};
    pub use crate::error::{Error, Result};
    pub use crate::gibbs::{run_chains, sweep, ChainConfig, ChainOutput};
    pub use crate::io::{load_dataset, save_dataset};
    pub use crate::model::{
        default_hyperparameters, initialize_state, log_joint, Hyperparameters, InitStrategy,
        ModelState,
    };
    pub use crate::simulate::{
        paper_scenario_spec, simulate_dataset, spike_in_scenario_spec, GroundTruth, SimulationSpec,
    };
}
