//! `robust-aft`: fit robust AFT models, generate the simulation scenarios,
//! replicate the simulation tables and summarize stored draws.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};
use nalgebra::DMatrix;
use robust_aft::model::{Hyperparams, SurvivalDataset};
use robust_aft::numerics::RngStream;
use robust_aft::posterior::{
    dic_with, observation_summaries, summarize, write_json, write_observations_csv, write_summary_csv, ColumnSummary,
    DicVariant, PosteriorDraws, RunManifest,
};
use robust_aft::sampler::{run_chains, ModelKind};
use robust_aft::simulate::{generate_scenario, run_experiment, write_experiment_tables, Scenario, ScenarioSpec};

use config::{parse_methods, parse_model, parse_probs, parse_scenario, McmcFlags, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
    Core(robust_aft::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    fn exit_code(&self) -> u8 {
        use robust_aft::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Core(E::Data { .. } | E::Config(_) | E::Unsupported(_)) => 2,
            CliError::Core(E::Io { .. }) => 3,
            CliError::Core(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<robust_aft::Error> for CliError {
    fn from(e: robust_aft::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser)]
#[command(name = "robust-aft", version, about = "Robust Bayesian AFT regression with generalized gamma likelihoods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a `time,status,<covariates>` CSV
    Fit(FitArgs),
    /// Generate one dataset from a simulation scenario
    Simulate(SimulateArgs),
    /// Run the replicated simulation experiment and write the MSE/CP tables
    Replicate(ReplicateArgs),
    /// Recompute summaries from a draws CSV
    Summarize(SummarizeArgs),
}

#[derive(clap::Args)]
struct FitArgs {
    /// rgg, rga, rwb, gg, ga or wb [default: rgg]
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JSON file of options; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    mcmc: McmcFlags,
    /// Independent chains, concatenated with chain labels [default: 1]
    #[arg(long)]
    chains: Option<usize>,
    /// Worker threads, 0 for one per core [default: 0]
    #[arg(long)]
    workers: Option<usize>,
    /// Prepend a column of ones to the covariates
    #[arg(long)]
    intercept: bool,
    /// Report -beta, the coefficients of log mean survival time
    #[arg(long)]
    mean_parameterization: bool,
    /// Quantile levels for the summary [default: 0.025,0.5,0.975]
    #[arg(long)]
    probs: Option<String>,
    /// Integrate the local scales out of the DIC likelihood
    #[arg(long)]
    dic_marginal: bool,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// GA or GG
    #[arg(long, value_parser = parse_scenario)]
    scenario: Scenario,
    /// Contamination probability among observations with x2 > 0.5
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ReplicateArgs {
    /// GA or GG (required here or in the config file)
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    /// Contamination probability [default: 0]
    #[arg(long)]
    omega: Option<f64>,
    /// Number of replicated datasets [default: 100]
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated models [default: rgg,rga,rwb,gg,ga,wb]
    #[arg(long)]
    methods: Option<String>,
    /// Sample size per dataset [default: 200]
    #[arg(long)]
    n: Option<usize>,
    /// Worker threads, 0 for one per core [default: 0]
    #[arg(long)]
    workers: Option<usize>,
    /// JSON file of options; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    mcmc: McmcFlags,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SummarizeArgs {
    /// Draws CSV written by `fit`
    draws: PathBuf,
    /// Model of the draws [default: read from manifest.json beside the draws]
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    /// Quantile levels
    #[arg(long, default_value = "0.025,0.5,0.975")]
    probs: String,
    /// Report -beta, the coefficients of log mean survival time
    #[arg(long)]
    mean_parameterization: bool,
    /// Also write summary.csv (and observations.csv) here
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stdout)
        .format_timestamp(None)
        .format_target(false)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Replicate(a) => cmd_replicate(a),
        Command::Summarize(a) => cmd_summarize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn with_intercept(data: SurvivalDataset) -> Result<SurvivalDataset, CliError> {
    let (n, p) = (data.n(), data.p());
    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { data.x()[(i, j - 1)] });
    let mut names = vec!["intercept".to_string()];
    names.extend(data.covariate_names().iter().cloned());
    Ok(SurvivalDataset::with_names(data.y().to_vec(), data.delta().to_vec(), x, names)?)
}

/// Renames `beta_j` to the covariate names and, in the mean
/// parameterization, flips their sign.
fn label_rows(rows: Vec<ColumnSummary>, names: &[String], mean_param: bool) -> Vec<ColumnSummary> {
    rows.into_iter()
        .map(|r| match r.name.strip_prefix("beta_").and_then(|j| j.parse::<usize>().ok()) {
            Some(j) => {
                let mut r = if mean_param { r.negated() } else { r };
                if let Some(name) = names.get(j) {
                    r.name = format!("beta[{name}]");
                }
                r
            }
            None => r,
        })
        .collect()
}

fn cmd_fit(a: FitArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.as_deref())?;
    let kind = a.model.or(cfg.model).unwrap_or(ModelKind::Rgg);
    let mcmc = cfg.mcmc(&a.mcmc)?;
    let chains = a.chains.or(cfg.chains).unwrap_or(1);
    if chains == 0 {
        return Err(CliError::Usage("--chains must be at least 1".into()));
    }
    let workers = a.workers.or(cfg.workers).unwrap_or(0);
    let probs = match a.probs {
        Some(s) => parse_probs(&s).map_err(CliError::Usage)?,
        None => cfg.probs.unwrap_or_else(|| vec![0.025, 0.5, 0.975]),
    };
    let mean_param = a.mean_parameterization || cfg.mean_parameterization.unwrap_or(false);
    let marginal = a.dic_marginal || cfg.dic_marginal.unwrap_or(false);

    let mut data = SurvivalDataset::from_csv_path(&a.data)?;
    if a.intercept || cfg.intercept.unwrap_or(false) {
        data = with_intercept(data)?;
    }
    let hyper = cfg.hyperparameters.clone().unwrap_or_else(|| Hyperparams::default_for(data.p()));
    hyper.validate(data.p())?;
    if data.n_censored() == data.n() {
        warn!("every observation is censored; the posterior is driven by the prior");
    }
    create_dir(&a.out)?;
    info!(
        "fitting {kind} to {} observations ({} censored), {} covariates; {} scans, burn-in {}, thin {}, {chains} chain(s)",
        data.n(),
        data.n_censored(),
        data.p(),
        mcmc.n_iter,
        mcmc.burn_in,
        mcmc.thin
    );
    let start = std::time::Instant::now();
    let mut draws = run_chains(&data, &hyper, &mcmc, kind, chains, workers)?;
    info!("sampling took {:.1} s", start.elapsed().as_secs_f64());
    if mean_param {
        draws.manifest.notes.push("summaries report -beta (mean parameterization); draws.csv keeps beta".into());
    }
    for (c, r) in draws.manifest.acceptance.iter().enumerate() {
        let fmt = |v: Option<f64>| v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "fixed".into());
        info!(
            "chain {c} acceptance: alpha~ {}, beta~ {}, gamma~ {}",
            fmt(r.alpha_tilde),
            fmt(r.beta_tilde),
            fmt(r.gamma_tilde)
        );
    }

    draws.write_csv(a.out.join("draws.csv"))?;
    draws.manifest.write_json(a.out.join("manifest.json"))?;
    let rows = label_rows(summarize(&draws, &probs)?, data.covariate_names(), mean_param);
    write_summary_csv(a.out.join("summary.csv"), &rows)?;
    if kind.is_robust() {
        let obs = observation_summaries(&draws)?;
        write_observations_csv(a.out.join("observations.csv"), &obs)?;
        let flagged = obs.iter().filter(|o| o.p_outlier > 0.5).count();
        info!("{flagged} observation(s) with P(z = 1) > 0.5");
    }
    let variant = if marginal { DicVariant::Marginal } else { DicVariant::Conditional };
    let d = dic_with(&draws, &data, variant, hyper.c_dlh)?;
    write_json(a.out.join("dic.json"), &serde_json::json!({ "variant": variant, "dic": d.dic, "p_d": d.p_d, "d_bar": d.d_bar, "d_hat": d.d_hat }))?;
    info!("DIC {:.2} (p_D {:.2})", d.dic, d.p_d);
    for r in rows.iter().filter(|r| !r.name.starts_with("lambda_")) {
        info!("{:<16} mean {:>12.5}  sd {:>10.5}  ess {:>8.1}", r.name, r.mean, r.sd, r.ess);
    }
    info!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let mut spec = ScenarioSpec::new(a.scenario, a.omega);
    spec.n = a.n;
    spec.seed = a.seed;
    spec.replications = 1;
    let mut rng = RngStream::new(a.seed, 0);
    let (data, truth) = generate_scenario(&mut rng, &spec)?;
    create_dir(&a.out)?;
    let stem = format!("scenario_{}_omega{}_seed{}", a.scenario, a.omega, a.seed);
    let csv = a.out.join(format!("{stem}.csv"));
    data.to_csv_path(&csv)?;
    write_json(a.out.join(format!("{stem}_truth.json")), &truth)?;
    info!(
        "wrote {} ({} rows, {} contaminated, censoring rate {:.3})",
        csv.display(),
        data.n(),
        truth.z.iter().filter(|z| **z).count(),
        truth.censoring_rate()
    );
    Ok(())
}

fn cmd_replicate(a: ReplicateArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.as_deref())?;
    let scenario = a
        .scenario
        .or(cfg.scenario)
        .ok_or_else(|| CliError::Usage("--scenario is required (GA or GG)".into()))?;
    let mut spec = ScenarioSpec::new(scenario, a.omega.or(cfg.omega).unwrap_or(0.0));
    spec.n = a.n.or(cfg.n).unwrap_or(spec.n);
    spec.replications = a.reps.or(cfg.replications).unwrap_or(spec.replications);
    let mcmc = cfg.mcmc(&a.mcmc)?;
    spec.seed = mcmc.seed;
    let methods = match a.methods {
        Some(s) => parse_methods(&s).map_err(CliError::Usage)?,
        None => cfg.methods.unwrap_or_else(|| ModelKind::ALL.to_vec()),
    };
    let workers = a.workers.or(cfg.workers).unwrap_or(0);
    info!(
        "scenario {scenario}, omega {}, n {}, {} replication(s), methods {}",
        spec.omega,
        spec.n,
        spec.replications,
        methods.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")
    );
    let start = std::time::Instant::now();
    let report = run_experiment(&spec, &methods, &mcmc, cfg.hyperparameters.as_ref(), workers)?;
    info!("experiment took {:.1} s", start.elapsed().as_secs_f64());
    create_dir(&a.out)?;
    write_experiment_tables(&report, &a.out)?;
    write_json(a.out.join("experiment.json"), &report)?;
    for note in &report.notes {
        warn!("{note}");
    }
    info!("mean censoring rate {:.3}", report.mean_censoring_rate);
    for c in &report.cells {
        info!("{:<4} {}: log MSE {:.2} (se {:.2}), CP {:.1}%", c.method, c.target, c.log_mse, c.log_mse_mcse, c.cp);
    }
    info!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_summarize(a: SummarizeArgs) -> Result<(), CliError> {
    let manifest_path = a.draws.parent().unwrap_or(Path::new(".")).join("manifest.json");
    let manifest: Option<RunManifest> = std::fs::read_to_string(&manifest_path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    let kind = a
        .model
        .or(manifest.as_ref().and_then(|m| m.model))
        .ok_or_else(|| CliError::Usage("cannot tell the model of the draws; pass --model".into()))?;
    let probs = parse_probs(&a.probs).map_err(CliError::Usage)?;
    let draws = PosteriorDraws::read_csv(&a.draws, kind)?;
    let names = manifest.map(|m| m.covariate_names).unwrap_or_default();
    let rows = label_rows(summarize(&draws, &probs)?, &names, a.mean_parameterization);
    if let Some(out) = &a.out {
        create_dir(out)?;
        write_summary_csv(out.join("summary.csv"), &rows)?;
        if kind.is_robust() {
            write_observations_csv(out.join("observations.csv"), &observation_summaries(&draws)?)?;
        }
    }
    let labels: Vec<String> = probs.iter().map(|p| format!("{}%", p * 100.0)).collect();
    println!("{:<16} {:>12} {:>10} {}", "parameter", "mean", "sd", labels.iter().map(|l| format!("{l:>12}")).collect::<String>());
    for r in &rows {
        let qs: String = r.quantiles.iter().map(|q| format!("{:>12.5}", q.1)).collect();
        println!("{:<16} {:>12.5} {:>10.5} {qs}", r.name, r.mean, r.sd);
    }
    Ok(())
}
