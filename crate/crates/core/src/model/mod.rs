//! Data, parameters, priors and the log full conditionals.

mod conditionals;
mod data;
mod params;

pub use conditionals::{
    log_bernoulli_weight_z, log_complete_conditional_alpha, log_complete_conditional_beta,
    log_complete_conditional_gamma_tilde, log_observed_likelihood, AlphaConditional, AlphaCoupling,
    BetaConditional, GammaTildeConditional, ScalarDerivs, VectorDerivs,
};
pub(crate) use conditionals::{log_observed_likelihood_ln, z_weight};
pub(crate) use data::csv_io_error;
pub use data::SurvivalDataset;
pub use params::{gamma_from_tilde, GlobalParams, Hyperparams, LatentState, ReparamView};

#[cfg(test)]
mod tests;
