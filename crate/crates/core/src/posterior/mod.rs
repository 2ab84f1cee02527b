//! Summaries of stored draws: point estimates, intervals, outlier
//! probabilities, regression curves, DIC and effective sample sizes.

mod draws;
mod summary;

pub use draws::{AcceptanceRates, PosteriorDraws, RunManifest};
pub(crate) use draws::fmt_f64;
pub use draws::write_json;
pub use summary::{
    dic, dic_with, effective_sample_size, observation_summaries, outlier_probabilities, quantiles, regression_curve,
    regression_values, summarize, summarize_column, write_curve_grid, write_observations_csv, write_summary_csv,
    ColumnSummary, Dic, DicVariant, ObservationSummary,
};
