//! Derivative-matched independence proposals and the independent
//! Metropolis-Hastings step.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::model::{ScalarDerivs, VectorDerivs};
use crate::numerics::{ln_gamma_unchecked, open_unit, sample_gamma, sample_normal};

/// The `Ga(A, B)` whose log density `(A−1) ln x − Bx` has the target's first
/// and second derivatives at `x0`: `A = 1 − d2 x0²`, `B = (A−1)/x0 − d1`.
/// `None` when the target is not log-concave at `x0` or `B ≤ 0`.
pub fn fit_gamma_proposal(x0: f64, target: impl Fn(f64) -> ScalarDerivs) -> Option<(f64, f64)> {
    let d = target(x0);
    gamma_from_derivs(x0, d.d1, d.d2)
}

pub(crate) fn gamma_from_derivs(x0: f64, d1: f64, d2: f64) -> Option<(f64, f64)> {
    if !(x0 > 0.0) || !(d2 < 0.0) || !d1.is_finite() || !d2.is_finite() {
        return None;
    }
    let a = 1.0 - d2 * x0 * x0;
    let b = (a - 1.0) / x0 - d1;
    (b > 0.0 && a.is_finite() && b.is_finite()).then_some((a, b))
}

pub fn gamma_log_density(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma_unchecked(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// `N(μ, Ψ)` stored through the Cholesky factor of the precision `Ψ⁻¹`.
#[derive(Debug, Clone)]
pub struct NormalProposal {
    pub mu: DVector<f64>,
    precision_chol: Cholesky<f64, Dyn>,
    l: DMatrix<f64>,
    log_det_chol: f64,
    /// The precision had to be regularized before factorization.
    pub inflated: bool,
}

impl NormalProposal {
    /// Builds the proposal from a mean and precision; a failing Cholesky is
    /// retried with the diagonal inflated by `1e-8·trace`, growing tenfold.
    pub fn from_precision(mu: DVector<f64>, precision: DMatrix<f64>) -> Self {
        let mut inflated = false;
        let mut q = precision;
        let scale = q.trace().abs().max(1e-300);
        let mut bump = 1e-8 * scale;
        let chol = loop {
            if q.iter().all(|v| v.is_finite()) {
                if let Some(c) = q.clone().cholesky() {
                    break c;
                }
            } else {
                q = DMatrix::identity(q.nrows(), q.ncols());
            }
            inflated = true;
            for i in 0..q.nrows() {
                q[(i, i)] += bump;
            }
            bump *= 10.0;
        };
        let l = chol.l();
        let log_det_chol = l.diagonal().iter().map(|d| d.ln()).sum();
        Self { mu, precision_chol: chol, l, log_det_chol, inflated }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.precision_chol.inverse()
    }

    pub fn precision(&self) -> DMatrix<f64> {
        &self.l * self.l.transpose()
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.mu;
        // d'Qd = ‖L'd‖²
        let quad = self.l.tr_mul(&d).norm_squared();
        -0.5 * quad + self.log_det_chol - 0.5 * x.len() as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let p = self.mu.len();
        let z = DVector::from_iterator(p, (0..p).map(|_| sample_normal(rng, 0.0, 1.0).expect("unit sd")));
        // x = μ + L'^{-1} z has covariance (LL')^{-1}
        let step = self.l.transpose().solve_upper_triangular(&z).expect("positive diagonal");
        &self.mu + step
    }
}

/// One Newton step from `mu0`: `Ψ = −H⁻¹`, `μ = mu0 + Ψ g`.
pub fn fit_normal_proposal(mu0: &DVector<f64>, target: impl Fn(&DVector<f64>) -> VectorDerivs) -> NormalProposal {
    let d = target(mu0);
    normal_from_derivs(mu0, &d.gradient, &d.hessian)
}

pub(crate) fn normal_from_derivs(mu0: &DVector<f64>, g: &DVector<f64>, h: &DMatrix<f64>) -> NormalProposal {
    let mut prop = NormalProposal::from_precision(mu0.clone(), -h);
    let step = prop.precision_chol.solve(g);
    if step.iter().all(|v| v.is_finite()) {
        prop.mu = mu0 + step;
    }
    prop
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhOutcome<T> {
    pub value: T,
    pub accepted: bool,
    /// `[f(x') − q(x')] − [f(x) − q(x)]`
    pub log_ratio: f64,
    pub nonfinite: bool,
}

/// Independence Metropolis-Hastings: accept `proposal` with probability
/// `min{1, f(x')q(x) / (f(x)q(x'))}`. A non-finite log ratio rejects and is
/// reported.
pub fn mh_step_independent<T, R: Rng + ?Sized>(
    rng: &mut R,
    current: T,
    proposal: T,
    log_target: impl Fn(&T) -> f64,
    log_proposal: impl Fn(&T) -> f64,
) -> MhOutcome<T> {
    let w_new = log_target(&proposal) - log_proposal(&proposal);
    let w_old = log_target(&current) - log_proposal(&current);
    mh_decide(rng, current, proposal, w_new - w_old)
}

pub(crate) fn mh_decide<T, R: Rng + ?Sized>(rng: &mut R, current: T, proposal: T, log_ratio: f64) -> MhOutcome<T> {
    if !log_ratio.is_finite() {
        return MhOutcome { value: current, accepted: false, log_ratio, nonfinite: true };
    }
    let accept = log_ratio >= 0.0 || open_unit(rng).ln() < log_ratio;
    if accept {
        MhOutcome { value: proposal, accepted: true, log_ratio, nonfinite: false }
    } else {
        MhOutcome { value: current, accepted: false, log_ratio, nonfinite: false }
    }
}

/// Normalized piecewise-linear density on `(0, 1)` with `G` equal segments.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearProposal {
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
}

/// Node values below `exp(−700)` of the maximum are floored there so that
/// the proposal density stays positive wherever the target is.
const NODE_FLOOR_LOG: f64 = -700.0;

impl PiecewiseLinearProposal {
    /// Nodes at `g/G`, `g = 0..=G`, with values `exp(log_target(g/G) − max)`.
    /// Boundary nodes take the target's value there, which for a target
    /// vanishing at 0 and 1 pins them to zero. `None` if the target is `−∞`
    /// at every interior node.
    pub fn build(grid: usize, log_target: impl Fn(f64) -> f64) -> Option<Self> {
        let logs: Vec<f64> = (0..=grid)
            .map(|g| {
                let v = log_target(g as f64 / grid as f64);
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            })
            .collect();
        let max = logs[1..grid].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return None;
        }
        let nodes: Vec<f64> = logs
            .iter()
            .enumerate()
            .map(|(g, &l)| {
                let rel = l - max;
                if g == 0 || g == grid {
                    rel.exp().min(1.0)
                } else if rel.is_finite() {
                    rel.max(NODE_FLOOR_LOG).exp()
                } else {
                    NODE_FLOOR_LOG.exp()
                }
            })
            .collect();
        Some(Self::from_nodes(nodes))
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Self {
        let grid = nodes.len() - 1;
        let mut cumulative = Vec::with_capacity(grid + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for g in 1..=grid {
            acc += 0.5 * (nodes[g - 1] + nodes[g]) / grid as f64;
            cumulative.push(acc);
        }
        Self { nodes, cumulative, total: acc }
    }

    pub fn grid(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < 1.0) {
            return f64::NEG_INFINITY;
        }
        let gsz = self.grid();
        let pos = x * gsz as f64;
        let seg = (pos.floor() as usize).min(gsz - 1);
        let frac = pos - seg as f64;
        let v = self.nodes[seg] * (1.0 - frac) + self.nodes[seg + 1] * frac;
        v.ln() - self.total.ln()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let gsz = self.grid();
        let h = 1.0 / gsz as f64;
        let pos = x * gsz as f64;
        let seg = (pos.floor() as usize).min(gsz - 1);
        let s = x - seg as f64 * h;
        let (f0, f1) = (self.nodes[seg], self.nodes[seg + 1]);
        (self.cumulative[seg] + f0 * s + (f1 - f0) * s * s / (2.0 * h)) / self.total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let gsz = self.grid();
        let h = 1.0 / gsz as f64;
        loop {
            let target = open_unit(rng) * self.total;
            let seg = self.cumulative.partition_point(|&c| c <= target).clamp(1, gsz) - 1;
            let (f0, f1) = (self.nodes[seg], self.nodes[seg + 1]);
            let mass = self.cumulative[seg + 1] - self.cumulative[seg];
            if mass <= 0.0 {
                continue;
            }
            let u = ((target - self.cumulative[seg]) / mass).clamp(0.0, 1.0);
            // root of f0 s + (f1 − f0) s²/(2h) = u (f0 + f1) h / 2, in the
            // cancellation-free form
            let denom = f0 + (f0 * f0 + u * (f1 * f1 - f0 * f0)).max(0.0).sqrt();
            let s = if denom > 0.0 { h * u * (f0 + f1) / denom } else { h * u };
            let x = seg as f64 * h + s;
            if x > 0.0 && x < 1.0 {
                return x;
            }
        }
    }
}

/// Moment-matched `Ga(m²/v, m/v)`.
pub(crate) fn moment_matched_gamma(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m > 0.0 && v > 0.0).then(|| (m * m / v, m / v))
}

pub(crate) fn sample_gamma_proposal<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    sample_gamma(rng, shape, rate).expect("validated proposal")
}
