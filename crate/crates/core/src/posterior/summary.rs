use std::path::Path;

use serde::{Deserialize, Serialize};

use super::draws::{fmt_f64, PosteriorDraws};
use crate::distributions::{dlh_quantile_ln, gg_log_density_ln, gg_log_reliability_ln, gg_mean_ln_theta};
use crate::error::{Error, Result};
use crate::model::{csv_io_error, log_observed_likelihood_ln, SurvivalDataset};
use crate::numerics::{log_add_exp, CompensatedSum};

/// Posterior summary of one scalar quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    /// `(level, value)` pairs in the requested order
    pub quantiles: Vec<(f64, f64)>,
    pub ess: f64,
}

impl ColumnSummary {
    /// Summary of `−X`: signs flip and the quantile levels mirror.
    pub fn negated(&self) -> Self {
        Self {
            name: self.name.clone(),
            mean: -self.mean,
            sd: self.sd,
            median: -self.median,
            quantiles: self.quantiles.iter().map(|&(p, _)| (p, -self.quantile_at(1.0 - p))).collect(),
            ess: self.ess,
        }
    }

    fn quantile_at(&self, level: f64) -> f64 {
        self.quantiles
            .iter()
            .find(|(p, _)| (p - level).abs() < 1e-12)
            .map(|&(_, v)| v)
            .unwrap_or(f64::NAN)
    }
}

/// Type-7 (linear interpolation) quantiles of `xs` at each level.
pub fn quantiles(xs: &[f64], probs: &[f64]) -> Vec<f64> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect()
}

pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let (a, b) = (sorted[lo], sorted[hi]);
    if a == b {
        a
    } else {
        a + (h - lo as f64) * (b - a)
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = CompensatedSum::default();
    xs.iter().for_each(|&x| s.add(x));
    let m = s.value() / n;
    if xs.len() < 2 || !m.is_finite() {
        return (m, if xs.len() < 2 { 0.0 } else { f64::NAN });
    }
    let mut v = CompensatedSum::default();
    xs.iter().for_each(|&x| v.add((x - m) * (x - m)));
    (m, (v.value() / (n - 1.0)).sqrt())
}

/// Summary of a column of draws; `chains` labels each draw and the ESS is
/// summed over chains.
pub fn summarize_column(name: &str, xs: &[f64], chains: &[u32], probs: &[f64]) -> ColumnSummary {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mean, sd) = mean_sd(xs);
    ColumnSummary {
        name: name.to_string(),
        mean,
        sd,
        median: quantile_sorted(&sorted, 0.5),
        quantiles: probs.iter().map(|&p| (p, quantile_sorted(&sorted, p))).collect(),
        ess: ess_by_chain(xs, chains),
    }
}

fn ess_by_chain(xs: &[f64], chains: &[u32]) -> f64 {
    let mut labels: Vec<u32> = chains.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() <= 1 {
        return effective_sample_size(xs);
    }
    labels
        .iter()
        .map(|&c| {
            let col: Vec<f64> = xs.iter().zip(chains).filter(|(_, &k)| k == c).map(|(&x, _)| x).collect();
            effective_sample_size(&col)
        })
        .sum()
}

/// Per-parameter table: `alpha`, `beta_j`, `gamma`, and for robust models
/// `s` and every `lambda_i`.
pub fn summarize(draws: &PosteriorDraws, probs: &[f64]) -> Result<Vec<ColumnSummary>> {
    if draws.is_empty() {
        return Err(Error::data("no draws to summarize"));
    }
    if let Some(p) = probs.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
        return Err(Error::config(format!("quantile level {p} is outside [0, 1]")));
    }
    let ch = &draws.chain;
    let mut out = vec![summarize_column("alpha", &draws.alpha, ch, probs)];
    for j in 0..draws.p() {
        out.push(summarize_column(&format!("beta_{j}"), &draws.beta_column(j), ch, probs));
    }
    out.push(summarize_column("gamma", &draws.gamma, ch, probs));
    if draws.model.is_robust() {
        out.push(summarize_column("s", &draws.s, ch, probs));
        for i in 0..draws.n() {
            let ll = draws.log_lambda_column(i);
            let lam: Vec<f64> = ll.iter().map(|l| l.exp()).collect();
            let mut row = summarize_column(&format!("lambda_{i}"), &lam, ch, probs);
            // the mean in log space survives λ draws beyond f64 range
            row.mean = (log_mean_exp(&ll)).exp();
            out.push(row);
        }
    }
    Ok(out)
}

fn log_mean_exp(ls: &[f64]) -> f64 {
    let m = ls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = ls.iter().map(|l| (l - m).exp()).sum();
    m + (s / ls.len() as f64).ln()
}

/// Per-observation outlier summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSummary {
    pub index: usize,
    pub p_outlier: f64,
    pub lambda_median: f64,
    pub log_lambda_median: f64,
}

/// `P(z_i = 1 | data)` as the mean of the stored indicators.
pub fn outlier_probabilities(draws: &PosteriorDraws) -> Result<Vec<f64>> {
    if !draws.model.is_robust() {
        return Err(Error::Unsupported(format!(
            "outlier probabilities need a robust model, got {}",
            draws.model
        )));
    }
    let k = draws.len();
    if k == 0 {
        return Err(Error::data("no draws"));
    }
    let mut counts = vec![0usize; draws.n()];
    for d in 0..k {
        for (c, &z) in counts.iter_mut().zip(draws.z_row(d)) {
            *c += z as usize;
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / k as f64).collect())
}

pub fn observation_summaries(draws: &PosteriorDraws) -> Result<Vec<ObservationSummary>> {
    let probs = outlier_probabilities(draws)?;
    Ok(probs
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut ll = draws.log_lambda_column(i);
            ll.sort_by(f64::total_cmp);
            let med = quantile_sorted(&ll, 0.5);
            ObservationSummary { index: i, p_outlier: p, lambda_median: med.exp(), log_lambda_median: med }
        })
        .collect())
}

/// `E[t* | x]` at every draw with `λ = 1`.
pub fn regression_values(draws: &PosteriorDraws, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != draws.p() {
        return Err(Error::data(format!("covariate vector has length {}, expected {}", x.len(), draws.p())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("covariate vector must be finite"));
    }
    Ok((0..draws.len())
        .map(|k| {
            let xb: f64 = draws.beta_row(k).iter().zip(x).map(|(b, v)| b * v).sum();
            gg_mean_ln_theta(draws.alpha[k], draws.gamma[k], xb)
        })
        .collect())
}

pub fn regression_curve(draws: &PosteriorDraws, x: &[f64], probs: &[f64]) -> Result<ColumnSummary> {
    let v = regression_values(draws, x)?;
    Ok(summarize_column("mean_time", &v, &draws.chain, probs))
}

/// Curve of `E[t* | x]` as covariate `j` runs over `grid`, the others held at
/// `base`; rows `x_grid,q2.5,q50,q97.5`.
pub fn write_curve_grid(
    path: impl AsRef<Path>,
    draws: &PosteriorDraws,
    base: &[f64],
    j: usize,
    grid: &[f64],
) -> Result<()> {
    let path = path.as_ref();
    if j >= draws.p() {
        return Err(Error::config(format!("covariate index {j} out of range")));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io_error(path, e))?;
    w.write_record(["x_grid", "q2.5", "q50", "q97.5"]).map_err(|e| csv_io_error(path, e))?;
    let mut x = base.to_vec();
    for &g in grid {
        x[j] = g;
        let q = quantiles(&regression_values(draws, &x)?, &[0.025, 0.5, 0.975]);
        w.write_record([fmt_f64(g), fmt_f64(q[0]), fmt_f64(q[1]), fmt_f64(q[2])])
            .map_err(|e| csv_io_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DicVariant {
    /// Likelihood given the drawn local scales.
    #[default]
    Conditional,
    /// Local scales integrated out under the spike-and-slab prior.
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dic {
    pub dic: f64,
    pub p_d: f64,
    pub d_bar: f64,
    pub d_hat: f64,
}

/// Conditional DIC with plug-in posterior means of `(α, β, γ, λ)`.
pub fn dic(draws: &PosteriorDraws, data: &SurvivalDataset) -> Result<Dic> {
    dic_with(draws, data, DicVariant::Conditional, 0.0)
}

/// `c_dlh` is only read by the marginal variant.
pub fn dic_with(draws: &PosteriorDraws, data: &SurvivalDataset, variant: DicVariant, c_dlh: f64) -> Result<Dic> {
    if draws.is_empty() {
        return Err(Error::data("no draws"));
    }
    if draws.n() != data.n() || draws.p() != data.p() {
        return Err(Error::data(format!(
            "draws are for n={}, p={} but the dataset has n={}, p={}",
            draws.n(),
            draws.p(),
            data.n(),
            data.p()
        )));
    }
    let k = draws.len();
    let robust = draws.model.is_robust();
    let marginal = variant == DicVariant::Marginal && robust;
    let slab = if marginal { Some(SlabNodes::new(c_dlh)?) } else { None };

    let deviance = |alpha: f64, beta: &[f64], gamma: f64, s: f64, log_lambda: &dyn Fn(usize) -> f64| -> f64 {
        match &slab {
            Some(nodes) => -2.0 * marginal_log_likelihood(alpha, beta, gamma, s, data, nodes),
            None => -2.0 * log_observed_likelihood_ln(alpha, beta, gamma, data, log_lambda),
        }
    };

    let mut d_sum = CompensatedSum::default();
    for d in 0..k {
        let row = draws.log_lambda_row(d);
        d_sum.add(deviance(draws.alpha[d], draws.beta_row(d), draws.gamma[d], draws.s[d], &|i| row[i]));
    }
    let d_bar = d_sum.value() / k as f64;

    let mean = |xs: &[f64]| -> f64 {
        let mut s = CompensatedSum::default();
        xs.iter().for_each(|&x| s.add(x));
        s.value() / xs.len() as f64
    };
    let alpha = mean(&draws.alpha);
    let gamma = mean(&draws.gamma);
    let beta: Vec<f64> = (0..draws.p()).map(|j| mean(&draws.beta_column(j))).collect();
    let s = if robust { mean(&draws.s) } else { f64::NAN };
    let log_lambda_bar: Vec<f64> =
        (0..draws.n()).map(|i| if robust { log_mean_exp(&draws.log_lambda_column(i)) } else { 0.0 }).collect();
    let d_hat = deviance(alpha, &beta, gamma, s, &|i| log_lambda_bar[i]);
    let p_d = d_bar - d_hat;
    Ok(Dic { dic: d_bar + p_d, p_d, d_bar, d_hat })
}

/// Midpoint nodes of the DLH quantile function, for integrating `λ` out.
struct SlabNodes {
    log_lambda: Vec<f64>,
}

const SLAB_NODES: usize = 400;

impl SlabNodes {
    fn new(c: f64) -> Result<Self> {
        let log_lambda = (0..SLAB_NODES)
            .map(|m| dlh_quantile_ln((m as f64 + 0.5) / SLAB_NODES as f64, c))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { log_lambda })
    }
}

fn marginal_log_likelihood(alpha: f64, beta: &[f64], gamma: f64, s: f64, data: &SurvivalDataset, nodes: &SlabNodes) -> f64 {
    let ln_m = (SLAB_NODES as f64).ln();
    let mut acc = CompensatedSum::default();
    for i in 0..data.n() {
        let xb = data.linear_predictor(i, beta);
        let ln_y = data.ln_y()[i];
        let term = |ll: f64| {
            if data.delta()[i] {
                gg_log_density_ln(ln_y, alpha, gamma, xb - ll)
            } else {
                gg_log_reliability_ln(ln_y, alpha, gamma, xb - ll)
            }
        };
        let spike = term(0.0);
        let slab = nodes.log_lambda.iter().fold(f64::NEG_INFINITY, |a, &ll| log_add_exp(a, term(ll))) - ln_m;
        acc.add(log_add_exp((-s).ln_1p() + spike, s.ln() + slab));
    }
    acc.value()
}

/// Geyer's initial monotone sequence estimator. A constant column has ESS 1;
/// fewer than 10 draws return the draw count.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 10 {
        return n as f64;
    }
    let (m, _) = mean_sd(xs);
    let c: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let autocov = |lag: usize| -> f64 { c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64 };
    let c0 = autocov(0);
    if !(c0 > 0.0) || !c0.is_finite() {
        return 1.0;
    }
    let mut tau = -1.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        tau += 2.0 * pair;
        prev = pair;
        k += 1;
    }
    (n as f64 / tau.max(1.0 / n as f64)).max(1.0)
}

pub(crate) fn level_label(p: f64) -> String {
    let pct = format!("{:.10}", p * 100.0);
    let pct = pct.trim_end_matches('0').trim_end_matches('.');
    format!("q{pct}")
}

/// `parameter,mean,sd,median,q..,ess`.
pub fn write_summary_csv(path: impl AsRef<Path>, rows: &[ColumnSummary]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io_error(path, e))?;
    let levels: Vec<f64> = rows.first().map(|r| r.quantiles.iter().map(|q| q.0).collect()).unwrap_or_default();
    let mut header = vec!["parameter".to_string(), "mean".into(), "sd".into(), "median".into()];
    header.extend(levels.iter().map(|&p| level_label(p)));
    header.push("ess".into());
    w.write_record(&header).map_err(|e| csv_io_error(path, e))?;
    for r in rows {
        let mut rec = vec![r.name.clone(), fmt_f64(r.mean), fmt_f64(r.sd), fmt_f64(r.median)];
        rec.extend(r.quantiles.iter().map(|q| fmt_f64(q.1)));
        rec.push(fmt_f64(r.ess));
        w.write_record(&rec).map_err(|e| csv_io_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `index,p_outlier,lambda_median,log_lambda_median`.
pub fn write_observations_csv(path: impl AsRef<Path>, rows: &[ObservationSummary]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io_error(path, e))?;
    w.write_record(["index", "p_outlier", "lambda_median", "log_lambda_median"]).map_err(|e| csv_io_error(path, e))?;
    for r in rows {
        w.write_record([r.index.to_string(), fmt_f64(r.p_outlier), fmt_f64(r.lambda_median), fmt_f64(r.log_lambda_median)])
            .map_err(|e| csv_io_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
