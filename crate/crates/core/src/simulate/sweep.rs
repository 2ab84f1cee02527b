use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{csv_io_error, Hyperparams, SurvivalDataset};
use crate::parallel::map_indexed;
use crate::posterior::{fmt_f64, outlier_probabilities, summarize_column, PosteriorDraws};
use crate::sampler::{run_chain, McmcConfig, ModelKind};

/// Outliers drift as `ln t_i = a_i + b_i ω` over `omega_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSweepSpec {
    pub outliers: Vec<usize>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub omega_grid: Vec<f64>,
}

impl RobustnessSweepSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.outliers.is_empty() {
            return Err(Error::config("the outlier set must be nonempty"));
        }
        if self.a.len() != self.outliers.len() || self.b.len() != self.outliers.len() {
            return Err(Error::config("one (a, b) pair per outlier is required"));
        }
        if self.outliers.iter().any(|&i| i >= n) {
            return Err(Error::config("outlier index out of range"));
        }
        if self.b.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::config("drift slopes b must be positive"));
        }
        if self.omega_grid.is_empty() || self.omega_grid.windows(2).any(|w| !(w[0] < w[1])) || self.omega_grid[0] < 0.0 {
            return Err(Error::config("omega grid must be nonempty, nonnegative and increasing"));
        }
        Ok(())
    }
}

/// Difference of one global parameter from its leave-outliers-out value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDistance {
    pub name: String,
    pub mean: f64,
    pub reference_mean: f64,
    pub diff_mean: f64,
    pub diff_lower: f64,
    pub diff_upper: f64,
    /// Monte Carlo SE of `mean − reference_mean`
    pub mcse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub omega: f64,
    pub parameters: Vec<ParameterDistance>,
    /// Root mean square of `diff_mean / mcse` over `β` and `α`.
    pub distance: f64,
    pub p_outlier: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: RobustnessSweepSpec,
    pub points: Vec<SweepPoint>,
}

/// Fits RGG at every grid value and compares the global parameters with an
/// RGG fit on the data without the outliers.
pub fn robustness_sweep(
    spec: &RobustnessSweepSpec,
    base: &SurvivalDataset,
    hyper: &Hyperparams,
    mcmc: &McmcConfig,
    workers: usize,
) -> Result<SweepReport> {
    spec.validate(base.n())?;
    let reduced = base.without_rows(&spec.outliers)?;
    let fits = map_indexed(spec.omega_grid.len() + 1, workers, |k| -> Result<PosteriorDraws> {
        if k == 0 {
            return run_chain(&reduced, hyper, mcmc, ModelKind::Rgg);
        }
        let omega = spec.omega_grid[k - 1];
        let mut y = base.y().to_vec();
        let mut delta = base.delta().to_vec();
        for (j, &i) in spec.outliers.iter().enumerate() {
            y[i] = (spec.a[j] + spec.b[j] * omega).exp();
            delta[i] = true;
        }
        run_chain(&base.with_responses(y, delta)?, hyper, mcmc, ModelKind::Rgg)
    });
    let mut fits = fits.into_iter().collect::<Result<Vec<_>>>()?.into_iter();
    let reference = fits.next().expect("reference fit");
    let ref_cols = global_columns(&reference);
    let mut points = Vec::new();
    for (fit, &omega) in fits.zip(&spec.omega_grid) {
        let cols = global_columns(&fit);
        let mut parameters = Vec::new();
        let mut z2 = 0.0;
        let mut counted = 0;
        for ((name, xs), (_, rs)) in cols.iter().zip(&ref_cols) {
            let a = summarize_column(name, xs, &fit.chain, &[0.025, 0.975]);
            let r = summarize_column(name, rs, &reference.chain, &[0.025, 0.975]);
            let mcse = (a.sd * a.sd / a.ess + r.sd * r.sd / r.ess).sqrt();
            let d = ParameterDistance {
                name: name.clone(),
                mean: a.mean,
                reference_mean: r.mean,
                diff_mean: a.mean - r.mean,
                diff_lower: a.quantiles[0].1 - r.quantiles[0].1,
                diff_upper: a.quantiles[1].1 - r.quantiles[1].1,
                mcse,
            };
            if name != "gamma" && mcse > 0.0 {
                z2 += (d.diff_mean / mcse).powi(2);
                counted += 1;
            }
            parameters.push(d);
        }
        let probs = outlier_probabilities(&fit)?;
        points.push(SweepPoint {
            omega,
            parameters,
            distance: (z2 / counted.max(1) as f64).sqrt(),
            p_outlier: spec.outliers.iter().map(|&i| probs[i]).collect(),
        });
    }
    Ok(SweepReport { spec: spec.clone(), points })
}

fn global_columns(d: &PosteriorDraws) -> Vec<(String, Vec<f64>)> {
    let mut out: Vec<(String, Vec<f64>)> = (0..d.p()).map(|j| (format!("beta_{j}"), d.beta_column(j))).collect();
    out.push(("alpha".into(), d.alpha.clone()));
    out.push(("gamma".into(), d.gamma.clone()));
    out
}

/// `robustness_sweep.csv`: one row per grid value.
pub fn write_sweep_csv(report: &SweepReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io_error(path, e))?;
    let Some(first) = report.points.first() else {
        w.write_record(["omega", "distance"]).map_err(|e| csv_io_error(path, e))?;
        return w.flush().map_err(|e| Error::io(path, e));
    };
    let mut header = vec!["omega".to_string(), "distance".into()];
    for p in &first.parameters {
        for suffix in ["diff_mean", "diff_q2.5", "diff_q97.5", "mcse"] {
            header.push(format!("{}_{suffix}", p.name));
        }
    }
    header.extend(report.spec.outliers.iter().map(|i| format!("p_z_{i}")));
    w.write_record(&header).map_err(|e| csv_io_error(path, e))?;
    for pt in &report.points {
        let mut rec = vec![fmt_f64(pt.omega), fmt_f64(pt.distance)];
        for p in &pt.parameters {
            rec.extend([p.diff_mean, p.diff_lower, p.diff_upper, p.mcse].map(fmt_f64));
        }
        rec.extend(pt.p_outlier.iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec).map_err(|e| csv_io_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
