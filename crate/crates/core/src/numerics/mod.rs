//! Special functions, random streams and elementary variates.

mod rng;
mod special;
mod sum;
mod variates;

pub use rng::{stream_id, RngStream};
pub use special::{
    digamma, gamma_quantile, gamma_quantile_upper_log, ln_expm1, ln_lower_incomplete_gamma_regularized,
    ln_upper_incomplete_gamma_regularized, log1p_exp, log_add_exp, log_gamma,
    lower_incomplete_gamma_regularized, trigamma, upper_incomplete_gamma_regularized,
};
pub use sum::{compensated_sum, CompensatedSum};
pub(crate) use special::{digamma_unchecked, ln_gamma_unchecked, ln_q_unchecked, trigamma_unchecked};
pub use variates::{
    open_unit, sample_beta, sample_gamma, sample_normal, sample_truncated_gamma_lower, sample_uniform,
};

use thiserror::Error;

/// An argument outside the domain of a numerical routine.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{function}: {detail}")]
pub struct MathError {
    pub function: &'static str,
    pub detail: String,
}

impl MathError {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Self { function, detail: detail.into() }
    }
}
