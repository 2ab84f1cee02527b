//! The Gibbs sampler with adaptive independent Metropolis-Hastings steps.

mod chain;
mod config;
mod proposals;
mod steps;

pub use chain::{
    gibbs_sweep, run_chain, run_chain_on_stream, run_chains, AcceptCounter, ChainState, Diagnostics, ProposalState,
    SweepContext, CHAIN_STREAM_DOMAIN,
};
pub use config::{AdaptationPolicy, McmcConfig, ModelKind};
pub use proposals::{
    fit_gamma_proposal, fit_normal_proposal, gamma_log_density, mh_step_independent, MhOutcome, NormalProposal,
    PiecewiseLinearProposal,
};
pub use steps::{impute_censored_times, update_eta, update_s, update_z};
