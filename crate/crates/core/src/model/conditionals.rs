//! Log full conditionals of the global parameters in sampler coordinates,
//! the latent-indicator weights and the observed-data likelihood.
//!
//! Throughout, `h_i = x_i'β + γ ln t_i − ln λ_i` is the log of
//! `θ_i t_i^γ` with `θ_i = exp(x_i'β)/λ_i`, and the GG complete-data
//! likelihood contributes `α(h_i − e^{h_i})` per observation plus terms
//! that do not involve the parameter being updated.

use nalgebra::{DMatrix, DVector};

use super::{GlobalParams, Hyperparams, LatentState, SurvivalDataset};
use crate::distributions::{dlh_log_density_ln, gg_log_density_ln, gg_log_reliability_ln, gig_ln};
use crate::error::{Error, Result};
use crate::numerics::{digamma_unchecked, ln_gamma_unchecked, trigamma_unchecked, CompensatedSum};

#[inline]
fn finite_or_neg_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// `Σ_i (h_i − e^{h_i})` at natural-coordinate `β` and `γ`.
pub(crate) fn sum_h_minus_exp(state: &LatentState, beta: &[f64], gamma: f64, data: &SurvivalDataset) -> f64 {
    let mut acc = CompensatedSum::default();
    for i in 0..data.n() {
        let h = data.linear_predictor(i, beta) + gamma * state.log_t[i] - state.log_lambda(i, gamma);
        acc.add(h - h.exp());
    }
    finite_or_neg_inf(acc.value())
}

/// Value and first two derivatives of a scalar log density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarDerivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// The `α̃` conditional with the data reduced to `n` and `S = Σ(h_i − e^{h_i})`.
#[derive(Debug, Clone, Copy)]
pub struct AlphaConditional {
    n: f64,
    s_sum: f64,
    gamma: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl AlphaConditional {
    pub fn new(state: &LatentState, params: &GlobalParams, data: &SurvivalDataset, hyper: &Hyperparams) -> Self {
        let s_sum = sum_h_minus_exp(state, params.beta.as_slice(), params.gamma, data);
        Self::from_parts(data.n(), s_sum, params.gamma, hyper)
    }

    pub(crate) fn from_parts(n: usize, s_sum: f64, gamma: f64, hyper: &Hyperparams) -> Self {
        Self { n: n as f64, s_sum, gamma, a: hyper.a_alpha, b: hyper.b_alpha, c: hyper.c_alpha }
    }

    /// Value and derivatives with respect to `α̃`, up to an additive constant.
    pub fn eval(&self, alpha_tilde: f64) -> ScalarDerivs {
        if !(alpha_tilde > 0.0) || !alpha_tilde.is_finite() {
            return ScalarDerivs { value: f64::NEG_INFINITY, d1: f64::NAN, d2: f64::NAN };
        }
        let g2 = self.gamma * self.gamma;
        let alpha = alpha_tilde / g2;
        let ln_a = alpha.ln();
        let n = self.n;
        let value = (self.c - 1.0) * ln_a - self.a * alpha - self.b / alpha
            + n * (alpha * ln_a - ln_gamma_unchecked(alpha))
            + alpha * self.s_sum;
        let (d1, d2) = if n > 0.0 {
            (
                (self.c - 1.0) / alpha - self.a + self.b / (alpha * alpha) + n * ln_a + n - n * digamma_unchecked(alpha)
                    + self.s_sum,
                -(self.c - 1.0) / (alpha * alpha) - 2.0 * self.b / (alpha * alpha * alpha) + n / alpha
                    - n * trigamma_unchecked(alpha),
            )
        } else {
            (
                (self.c - 1.0) / alpha - self.a + self.b / (alpha * alpha),
                -(self.c - 1.0) / (alpha * alpha) - 2.0 * self.b / (alpha * alpha * alpha),
            )
        };
        ScalarDerivs { value: finite_or_neg_inf(value), d1: d1 / g2, d2: d2 / (g2 * g2) }
    }
}

pub fn log_complete_conditional_alpha(
    alpha_tilde: f64,
    state: &LatentState,
    params: &GlobalParams,
    data: &SurvivalDataset,
    hyper: &Hyperparams,
) -> ScalarDerivs {
    AlphaConditional::new(state, params, data, hyper).eval(alpha_tilde)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorDerivs {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// The `β̃` conditional at fixed `(α, γ)` and latent state.
#[derive(Debug, Clone)]
pub struct BetaConditional<'a> {
    data: &'a SurvivalDataset,
    hyper: &'a Hyperparams,
    alpha: f64,
    gamma: f64,
    /// `γ ln t_i − ln λ_i`
    offsets: Vec<f64>,
}

impl<'a> BetaConditional<'a> {
    pub fn new(state: &LatentState, alpha: f64, gamma: f64, data: &'a SurvivalDataset, hyper: &'a Hyperparams) -> Self {
        let offsets = (0..data.n()).map(|i| gamma * state.log_t[i] - state.log_lambda(i, gamma)).collect();
        Self { data, hyper, alpha, gamma, offsets }
    }

    fn prior_resid(&self, beta_tilde: &DVector<f64>) -> DVector<f64> {
        beta_tilde * self.gamma - &self.hyper.b_beta
    }

    pub fn value(&self, beta_tilde: &DVector<f64>) -> f64 {
        let r = self.prior_resid(beta_tilde);
        let prior = -0.5 * r.dot(&(&self.hyper.a_beta * &r));
        let mut acc = CompensatedSum::default();
        let bt = beta_tilde.as_slice();
        for (i, off) in self.offsets.iter().enumerate() {
            let h = self.gamma * self.data.linear_predictor(i, bt) + off;
            acc.add(h - h.exp());
        }
        finite_or_neg_inf(prior + self.alpha * acc.value())
    }

    pub fn eval(&self, beta_tilde: &DVector<f64>) -> VectorDerivs {
        let p = beta_tilde.len();
        let g = self.gamma;
        let r = self.prior_resid(beta_tilde);
        let ar = &self.hyper.a_beta * &r;
        let mut acc = CompensatedSum::default();
        let mut grad_lik = DVector::<f64>::zeros(p);
        let mut info = DMatrix::<f64>::zeros(p, p);
        let x = self.data.x();
        let bt = beta_tilde.as_slice();
        for (i, off) in self.offsets.iter().enumerate() {
            let h = g * self.data.linear_predictor(i, bt) + off;
            let e = h.exp();
            acc.add(h - e);
            for j in 0..p {
                let xij = x[(i, j)];
                grad_lik[j] += (1.0 - e) * xij;
                for k in 0..=j {
                    info[(j, k)] += e * xij * x[(i, k)];
                }
            }
        }
        for j in 0..p {
            for k in 0..j {
                info[(k, j)] = info[(j, k)];
            }
        }
        let value = finite_or_neg_inf(-0.5 * r.dot(&ar) + self.alpha * acc.value());
        let gradient = (grad_lik * self.alpha - ar) * g;
        let hessian = (&self.hyper.a_beta + info * self.alpha) * (-g * g);
        VectorDerivs { value, gradient, hessian }
    }
}

pub fn log_complete_conditional_beta(
    beta_tilde: &DVector<f64>,
    state: &LatentState,
    params: &GlobalParams,
    data: &SurvivalDataset,
    hyper: &Hyperparams,
) -> VectorDerivs {
    BetaConditional::new(state, params.alpha, params.gamma, data, hyper).eval(beta_tilde)
}

/// How `α` moves when `γ` changes in the `γ̃` update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaCoupling {
    /// `α̃` is held fixed, so `α = α̃/γ²` and the α prior enters.
    Tilde(f64),
    /// `α` itself is fixed (the Weibull family freezes it at 1).
    Fixed(f64),
}

/// The `γ̃` conditional at fixed `(α̃ or α, β̃)` and latent state.
#[derive(Debug, Clone)]
pub struct GammaTildeConditional<'a> {
    hyper: &'a Hyperparams,
    n: f64,
    p: f64,
    alpha: AlphaCoupling,
    /// `x_i'β̃ + ln t_i − z_i ln η̃_i`
    k: Vec<f64>,
    outlier_log_eta: Vec<f64>,
    quad: (f64, f64, f64),
}

impl<'a> GammaTildeConditional<'a> {
    pub fn new(
        state: &LatentState,
        alpha: AlphaCoupling,
        beta_tilde: &DVector<f64>,
        data: &SurvivalDataset,
        hyper: &'a Hyperparams,
    ) -> Self {
        let bt = beta_tilde.as_slice();
        let k = (0..data.n())
            .map(|i| {
                let l = if state.z[i] { state.log_eta_tilde[i] } else { 0.0 };
                data.linear_predictor(i, bt) + state.log_t[i] - l
            })
            .collect();
        let outlier_log_eta = (0..data.n()).filter(|&i| state.z[i]).map(|i| state.log_eta_tilde[i]).collect();
        let ab = &hyper.a_beta * beta_tilde;
        let quad = (beta_tilde.dot(&ab), hyper.b_beta.dot(&ab), hyper.b_beta.dot(&(&hyper.a_beta * &hyper.b_beta)));
        Self { hyper, n: data.n() as f64, p: data.p() as f64, alpha, k, outlier_log_eta, quad }
    }

    /// Unnormalized log density at `γ̃`; `−∞` outside `(0, 1)`.
    pub fn eval(&self, gamma_tilde: f64) -> f64 {
        if !(gamma_tilde > 0.0 && gamma_tilde < 1.0) {
            return f64::NEG_INFINITY;
        }
        let h = self.hyper;
        let g = gamma_tilde / (1.0 - gamma_tilde);
        let ln_g = g.ln();
        let (alpha, alpha_terms) = match self.alpha {
            AlphaCoupling::Tilde(at) => {
                let a = at / (g * g);
                (a, -2.0 * ln_g + gig_ln(a, h.a_alpha, h.b_alpha, h.c_alpha))
            }
            AlphaCoupling::Fixed(a) => (a, 0.0),
        };
        let (q2, q1, q0) = self.quad;
        let beta_prior = -0.5 * (g * g * q2 - 2.0 * g * q1 + q0);
        let mut dlh = CompensatedSum::default();
        for &l in &self.outlier_log_eta {
            dlh.add(ln_g + (g - 1.0) * l + dlh_log_density_ln(g * l, h.c_dlh));
        }
        let mut lik = CompensatedSum::default();
        for &k in &self.k {
            let gk = g * k;
            lik.add(gk - gk.exp());
        }
        let v = self.p * ln_g
            + alpha_terms
            + beta_prior
            + gig_ln(g, h.a_gamma, h.b_gamma, h.c_gamma)
            + dlh.value()
            + self.n * (ln_g + alpha * alpha.ln() - ln_gamma_unchecked(alpha))
            + alpha * lik.value()
            - 2.0 * (1.0 - gamma_tilde).ln();
        finite_or_neg_inf(v)
    }
}

pub fn log_complete_conditional_gamma_tilde(
    gamma_tilde: f64,
    state: &LatentState,
    params: &GlobalParams,
    data: &SurvivalDataset,
    hyper: &Hyperparams,
) -> f64 {
    let alpha_tilde = params.alpha * params.gamma * params.gamma;
    let beta_tilde = &params.beta / params.gamma;
    GammaTildeConditional::new(state, AlphaCoupling::Tilde(alpha_tilde), &beta_tilde, data, hyper).eval(gamma_tilde)
}

/// Log of the unnormalized probability of `z_i = z_candidate` given
/// everything else, holding `η̃_i` fixed.
pub fn log_bernoulli_weight_z(
    i: usize,
    z_candidate: bool,
    state: &LatentState,
    params: &GlobalParams,
    data: &SurvivalDataset,
    hyper: &Hyperparams,
) -> f64 {
    let xb = data.linear_predictor(i, params.beta.as_slice());
    z_weight(z_candidate, xb, state.log_t[i], state.log_eta_tilde[i], params, hyper, ln_gamma_unchecked(params.alpha))
}

#[inline]
pub(crate) fn z_weight(
    z: bool,
    xb: f64,
    log_t: f64,
    log_eta_tilde: f64,
    params: &GlobalParams,
    hyper: &Hyperparams,
    ln_gamma_alpha: f64,
) -> f64 {
    let (alpha, gamma, l) = (params.alpha, params.gamma, log_eta_tilde);
    let (prior, jac, ln_eta, ln_lambda) = if z {
        (params.s.ln(), gamma.ln() + (gamma - 1.0) * l, gamma * l, gamma * l)
    } else {
        ((-params.s).ln_1p(), 0.0, l, 0.0)
    };
    // gamma density of y = α t^γ with shape α and rate r = e^{x'β}/λ
    let ln_rate = xb - ln_lambda;
    let ln_y = alpha.ln() + gamma * log_t;
    let ga = alpha * ln_rate - ln_gamma_alpha + (alpha - 1.0) * ln_y - (ln_rate + ln_y).exp();
    finite_or_neg_inf(prior + jac + dlh_log_density_ln(ln_eta, hyper.c_dlh) + ga)
}

/// Observed-data log likelihood given local scales: GG density for events,
/// GG reliability for censored times.
pub fn log_observed_likelihood(params: &GlobalParams, data: &SurvivalDataset, lambda: &[f64]) -> Result<f64> {
    if lambda.len() != data.n() {
        return Err(Error::data("one local scale per observation is required"));
    }
    if let Some(l) = lambda.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::data(format!("local scales must be positive, got {l}")));
    }
    Ok(log_observed_likelihood_ln(params.alpha, params.beta.as_slice(), params.gamma, data, |i| lambda[i].ln()))
}

pub(crate) fn log_observed_likelihood_ln(
    alpha: f64,
    beta: &[f64],
    gamma: f64,
    data: &SurvivalDataset,
    log_lambda: impl Fn(usize) -> f64,
) -> f64 {
    let mut acc = CompensatedSum::default();
    for i in 0..data.n() {
        let ln_theta = data.linear_predictor(i, beta) - log_lambda(i);
        let ln_y = data.ln_y()[i];
        acc.add(if data.delta()[i] {
            gg_log_density_ln(ln_y, alpha, gamma, ln_theta)
        } else {
            gg_log_reliability_ln(ln_y, alpha, gamma, ln_theta)
        });
    }
    acc.value()
}
