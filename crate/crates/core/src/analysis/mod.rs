//! Posterior summaries computed from stored chain states.

mod de;
mod diagnostics;
mod ma;
mod predictive;

pub use de::{
    de_probabilities, de_table, effect_summaries, quantile, DeProbability, DeResult, EffectSummary,
};
pub use diagnostics::{
    autocorrelation, diagnostics, effective_sample_size, split_rhat, DiagnosticsReport,
    ParamDiagnostics, ParamSelector,
};
pub use ma::{ma_plot_data, MaPoint, SampleRef};
pub use predictive::{
    posterior_predictive, predictive_density, ObservationSelector, PredictiveOptions,
    PredictiveSummary,
};
