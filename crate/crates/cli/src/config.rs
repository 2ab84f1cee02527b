use std::path::Path;

use robust_aft::model::Hyperparams;
use robust_aft::sampler::{AdaptationPolicy, McmcConfig, ModelKind};
use robust_aft::simulate::Scenario;
use serde::Deserialize;

use crate::CliError;

/// Options read from `--config`. Every key is optional; flags given on the
/// command line win over the file, and the file wins over the defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelKind>,
    pub n_iter: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub seed: Option<u64>,
    pub grid_size: Option<usize>,
    pub adaptation: Option<AdaptationPolicy>,
    pub chains: Option<usize>,
    pub workers: Option<usize>,
    pub probs: Option<Vec<f64>>,
    pub intercept: Option<bool>,
    pub mean_parameterization: Option<bool>,
    pub dic_marginal: Option<bool>,
    pub hyperparameters: Option<Hyperparams>,
    pub scenario: Option<Scenario>,
    pub omega: Option<f64>,
    pub n: Option<usize>,
    pub replications: Option<usize>,
    pub methods: Option<Vec<ModelKind>>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// MCMC settings with `flags > file > defaults`.
    pub fn mcmc(&self, flags: &McmcFlags) -> Result<McmcConfig, CliError> {
        let d = McmcConfig::default();
        let config = McmcConfig {
            n_iter: flags.iters.or(self.n_iter).unwrap_or(d.n_iter),
            burn_in: flags.burnin.or(self.burn_in).unwrap_or(d.burn_in),
            thin: flags.thin.or(self.thin).unwrap_or(d.thin),
            seed: flags.seed.or(self.seed).unwrap_or(d.seed),
            grid_size: flags.grid.or(self.grid_size).unwrap_or(d.grid_size),
            adaptation: flags.adaptation.or(self.adaptation).unwrap_or(d.adaptation),
            init: None,
        };
        config.validate()?;
        Ok(config)
    }
}

/// The MCMC flags shared by `fit` and `replicate`.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct McmcFlags {
    /// Total Gibbs scans [default: 4000]
    #[arg(long)]
    pub iters: Option<usize>,
    /// Scans discarded as burn-in [default: 2000]
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Keep every k-th post-burn-in scan [default: 1]
    #[arg(long)]
    pub thin: Option<usize>,
    /// Master seed [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid size of the piecewise-linear proposal for the shape parameter [default: 100]
    #[arg(long)]
    pub grid: Option<usize>,
    /// When the derivative-matched proposals are refitted [default: burn-in-only]
    #[arg(long, value_parser = parse_policy)]
    pub adaptation: Option<AdaptationPolicy>,
}

fn parse_policy(s: &str) -> Result<AdaptationPolicy, String> {
    match s.replace('-', "_").as_str() {
        "burn_in_only" => Ok(AdaptationPolicy::BurnInOnly),
        "every_scan" => Ok(AdaptationPolicy::EveryScan),
        "converged" => Ok(AdaptationPolicy::Converged),
        _ => Err(format!("unknown adaptation policy `{s}` (expected burn-in-only, every-scan or converged)")),
    }
}

pub fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: robust_aft::Error| e.to_string())
}

pub fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: robust_aft::Error| e.to_string())
}

pub fn parse_probs(s: &str) -> Result<Vec<f64>, String> {
    let probs = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("cannot parse `{t}` as a probability")))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(format!("probability {p} is outside [0, 1]"));
    }
    Ok(probs)
}

pub fn parse_methods(s: &str) -> Result<Vec<ModelKind>, String> {
    s.split(',').map(parse_model).collect()
}
