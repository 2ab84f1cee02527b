use std::path::Path;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::scenario::{generate_scenario, ScenarioSpec, REG_NAMES, REG_POINTS};
use crate::error::{Error, Result};
use crate::model::{csv_io_error, Hyperparams};
use crate::numerics::{stream_id, RngStream};
use crate::parallel::map_indexed;
use crate::posterior::{fmt_f64, quantiles, regression_values};
use crate::sampler::{run_chain, McmcConfig, ModelKind};

/// Stream domain of generated datasets; replication `r` uses index `r`.
pub const SCENARIO_STREAM_DOMAIN: u16 = 2;
/// Stream domain from which each replication's chain seed is drawn.
pub const REPLICATION_SEED_DOMAIN: u16 = 3;

/// Posterior mean and 95% interval of each target in one fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// One (method, target) cell over the successful replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub method: ModelKind,
    pub target: String,
    pub truth: f64,
    pub mse: f64,
    pub mse_mcse: f64,
    /// `ln(1 + MSE)`
    pub log_mse: f64,
    pub log_mse_mcse: f64,
    /// percent
    pub cp: f64,
    pub cp_mcse: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ScenarioSpec,
    pub methods: Vec<ModelKind>,
    pub mcmc: McmcConfig,
    pub cells: Vec<CellMetrics>,
    /// failed replications per method, in `methods` order
    pub failures: Vec<usize>,
    pub mean_censoring_rate: f64,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn cell(&self, method: ModelKind, target: &str) -> Option<&CellMetrics> {
        self.cells.iter().find(|c| c.method == method && c.target == target)
    }
}

type RepOutcome = (f64, Vec<Result<[TargetEstimate; 3]>>);

/// Fits every method to each replicated dataset and scores the posterior
/// means and 95% intervals of the three regression targets.
pub fn run_experiment(
    spec: &ScenarioSpec,
    methods: &[ModelKind],
    mcmc: &McmcConfig,
    hyper: Option<&Hyperparams>,
    workers: usize,
) -> Result<ExperimentReport> {
    spec.validate()?;
    mcmc.validate()?;
    if methods.is_empty() {
        return Err(Error::config("at least one method is required"));
    }
    let hyper = hyper.cloned().unwrap_or_else(|| Hyperparams::default_for(3));
    hyper.validate(3)?;
    let truth = spec.true_regression_values();

    let outcomes: Vec<Result<RepOutcome>> = map_indexed(spec.replications, workers, |r| {
        let mut rng = RngStream::new(spec.seed, stream_id(SCENARIO_STREAM_DOMAIN, r as u64));
        let (data, t) = generate_scenario(&mut rng, spec)?;
        let chain_seed = RngStream::new(spec.seed, stream_id(REPLICATION_SEED_DOMAIN, r as u64)).next_u64();
        let config = McmcConfig { seed: chain_seed, ..mcmc.clone() };
        let fits = methods
            .iter()
            .map(|&m| {
                let draws = run_chain(&data, &hyper, &config, m)?;
                let mut est = [TargetEstimate { mean: 0.0, lower: 0.0, upper: 0.0 }; 3];
                for (k, x) in REG_POINTS.iter().enumerate() {
                    let v = regression_values(&draws, x)?;
                    let mean = v.iter().sum::<f64>() / v.len() as f64;
                    let q = quantiles(&v, &[0.025, 0.975]);
                    if !(mean.is_finite() && q[0].is_finite() && q[1].is_finite()) {
                        return Err(Error::Numerical(format!("non-finite estimate of {}", REG_NAMES[k])));
                    }
                    est[k] = TargetEstimate { mean, lower: q[0], upper: q[1] };
                }
                Ok(est)
            })
            .collect();
        Ok((t.censoring_rate(), fits))
    });

    let mut per_method: Vec<Vec<[TargetEstimate; 3]>> = vec![Vec::new(); methods.len()];
    let mut failures = vec![0usize; methods.len()];
    let mut censoring = Vec::new();
    for o in outcomes {
        let (rate, fits) = o?;
        censoring.push(rate);
        for (m, f) in fits.into_iter().enumerate() {
            match f {
                Ok(est) => per_method[m].push(est),
                Err(_) => failures[m] += 1,
            }
        }
    }

    let mut cells = Vec::new();
    for (m, &method) in methods.iter().enumerate() {
        for k in 0..3 {
            let ests: Vec<TargetEstimate> = per_method[m].iter().map(|e| e[k]).collect();
            cells.push(score(method, REG_NAMES[k], truth[k], &ests));
        }
    }
    let mut notes = Vec::new();
    if spec.replications == 0 {
        notes.push("no replications were run; every cell is empty".to_string());
    }
    for (m, &f) in failures.iter().enumerate() {
        if f > 0 {
            notes.push(format!("{}: {f} replication(s) failed and were excluded", methods[m]));
        }
    }
    let mean_censoring_rate =
        if censoring.is_empty() { f64::NAN } else { censoring.iter().sum::<f64>() / censoring.len() as f64 };
    Ok(ExperimentReport {
        spec: spec.clone(),
        methods: methods.to_vec(),
        mcmc: mcmc.clone(),
        cells,
        failures,
        mean_censoring_rate,
        notes,
    })
}

fn score(method: ModelKind, target: &str, truth: f64, ests: &[TargetEstimate]) -> CellMetrics {
    let r = ests.len();
    let rf = r as f64;
    let sq: Vec<f64> = ests.iter().map(|e| (e.mean - truth).powi(2)).collect();
    let mse = if r == 0 { f64::NAN } else { sq.iter().sum::<f64>() / rf };
    let mse_mcse = if r < 2 {
        f64::NAN
    } else {
        (sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / (rf - 1.0) / rf).sqrt()
    };
    let covered = ests.iter().filter(|e| e.lower <= truth && truth <= e.upper).count() as f64;
    let cp = if r == 0 { f64::NAN } else { 100.0 * covered / rf };
    let cp_mcse = if r == 0 { f64::NAN } else { (cp * (100.0 - cp) / rf).sqrt() };
    CellMetrics {
        method,
        target: target.to_string(),
        truth,
        mse,
        mse_mcse,
        log_mse: mse.ln_1p(),
        // delta method
        log_mse_mcse: mse_mcse / (1.0 + mse),
        cp,
        cp_mcse,
        replications: r,
    }
}

/// Writes `table1_mse.csv` (log MSE) and `table2_cp.csv` (coverage, %) into
/// `dir`: one row per target, and per method a full-precision value, its
/// Monte Carlo SE and a 2-decimal presentation column.
pub fn write_experiment_tables(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    write_table(report, &dir.join("table1_mse.csv"), |c| (c.log_mse, c.log_mse_mcse))?;
    write_table(report, &dir.join("table2_cp.csv"), |c| (c.cp, c.cp_mcse))
}

fn write_table(report: &ExperimentReport, path: &Path, value: impl Fn(&CellMetrics) -> (f64, f64)) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io_error(path, e))?;
    let mut header = vec!["scenario".to_string(), "omega".into(), "target".into()];
    for m in &report.methods {
        header.push(m.to_string());
        header.push(format!("{m}_mcse"));
        header.push(format!("{m}_2dp"));
    }
    w.write_record(&header).map_err(|e| csv_io_error(path, e))?;
    if report.spec.replications > 0 {
        for target in REG_NAMES {
            let mut rec = vec![report.spec.scenario.to_string(), fmt_f64(report.spec.omega), target.to_string()];
            for &m in &report.methods {
                let (v, se) = report.cell(m, target).map(&value).unwrap_or((f64::NAN, f64::NAN));
                rec.push(fmt_f64(v));
                rec.push(fmt_f64(se));
                rec.push(format!("{v:.2}"));
            }
            w.write_record(&rec).map_err(|e| csv_io_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
