//! Generalized gamma, DLH, GIG and the spike-and-slab local prior.

mod dlh;
mod gg;
mod gig;
mod mixture;

pub use dlh::{
    dlh_augmentation_conditionals, dlh_augmented_kernel, dlh_cdf, dlh_cdf_ln, dlh_log_density, dlh_quantile,
    dlh_quantile_ln, dlh_sample_direct, dlh_sample_direct_ln, dlh_transform, Augmentation, DlhParams, Saturating,
};
pub(crate) use dlh::{augmentation_ln, dlh_log_density_ln};
pub use gg::{gg_hazard, gg_log_density, gg_log_reliability, gg_mean, gg_reliability, gg_sample, GGParams};
pub(crate) use gg::{gg_log_density_ln, gg_log_reliability_ln, gg_mean_ln_theta, gg_sample_ln};
pub use gig::{gig_log_density_unnormalized, gig_mode};
pub(crate) use gig::gig_ln;
pub use mixture::LocalPriorMixture;
