use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::Augmentation;
use crate::error::{Error, Result};

/// Global parameters `(α, β, γ, s)` in natural coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalParams {
    pub alpha: f64,
    pub beta: DVector<f64>,
    pub gamma: f64,
    pub s: f64,
}

impl GlobalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::config(format!("s must lie in (0, 1), got {}", self.s)));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::config("beta must be finite"));
        }
        Ok(())
    }
}

/// Sampler coordinates `α̃ = αγ²`, `β̃ = β/γ`, `γ̃ = γ/(1+γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReparamView {
    pub alpha_tilde: f64,
    pub beta_tilde: DVector<f64>,
    pub gamma_tilde: f64,
}

impl ReparamView {
    pub fn from_params(p: &GlobalParams) -> Self {
        Self {
            alpha_tilde: p.alpha * p.gamma * p.gamma,
            beta_tilde: &p.beta / p.gamma,
            gamma_tilde: p.gamma / (1.0 + p.gamma),
        }
    }

    pub fn gamma(&self) -> f64 {
        gamma_from_tilde(self.gamma_tilde)
    }

    pub fn to_params(&self, s: f64) -> GlobalParams {
        let gamma = self.gamma();
        GlobalParams { alpha: self.alpha_tilde / (gamma * gamma), beta: &self.beta_tilde * gamma, gamma, s }
    }
}

#[inline]
pub fn gamma_from_tilde(gt: f64) -> f64 {
    gt / (1.0 - gt)
}

/// Per-observation latent variables. Local scales are held on the log
/// scale: `log_eta_tilde[i] = ln η̃_i`, so `ln λ_i = z_i γ ln η̃_i` and
/// `λ_i = 1` exactly when `z_i = 0`. `log_t[i] = ln t_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub z: Vec<bool>,
    pub log_eta_tilde: Vec<f64>,
    pub uvw: Vec<Augmentation>,
    pub log_t: Vec<f64>,
}

impl LatentState {
    /// `z = 0`, `η̃ = 1`, uncensored `t = y`, censored `t = 1.1 C`.
    pub fn initial(y: &[f64], delta: &[bool]) -> Self {
        let n = y.len();
        Self {
            z: vec![false; n],
            log_eta_tilde: vec![0.0; n],
            uvw: vec![Augmentation { u: 1.0, v: 1.0, w: 1.0 }; n],
            log_t: y.iter().zip(delta).map(|(&v, &d)| if d { v.ln() } else { (1.1 * v).ln() }).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    #[inline]
    pub fn log_lambda(&self, i: usize, gamma: f64) -> f64 {
        if self.z[i] {
            gamma * self.log_eta_tilde[i]
        } else {
            0.0
        }
    }

    pub fn lambda(&self, i: usize, gamma: f64) -> f64 {
        self.log_lambda(i, gamma).exp()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.log_t[i].exp()
    }

    pub fn eta_tilde(&self, i: usize) -> f64 {
        self.log_eta_tilde[i].exp()
    }

    pub fn n_outliers(&self) -> usize {
        self.z.iter().filter(|z| **z).count()
    }
}

/// Prior constants: `β ~ N(b_β, A_β⁻¹)`, `α ~ GIG(a_α, b_α, c_α)`,
/// `γ ~ GIG(a_γ, b_γ, c_γ)`, `s ~ Beta(a_s, b_s)`, DLH tail index `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HyperparamsRepr", into = "HyperparamsRepr")]
pub struct Hyperparams {
    pub b_beta: DVector<f64>,
    /// Prior precision of β.
    pub a_beta: DMatrix<f64>,
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub c_alpha: f64,
    pub a_gamma: f64,
    pub b_gamma: f64,
    pub c_gamma: f64,
    pub a_s: f64,
    pub b_s: f64,
    pub c_dlh: f64,
}

impl Hyperparams {
    pub fn default_for(p: usize) -> Self {
        Self {
            b_beta: DVector::zeros(p),
            a_beta: DMatrix::identity(p, p) * 0.01,
            a_alpha: 0.01,
            b_alpha: 0.01,
            c_alpha: 1.0,
            a_gamma: 0.01,
            b_gamma: 0.01,
            c_gamma: 1.0,
            a_s: 1.0,
            b_s: 9.0,
            c_dlh: 1.0,
        }
    }

    pub fn p(&self) -> usize {
        self.b_beta.len()
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.b_beta.len() != p || self.a_beta.nrows() != p || self.a_beta.ncols() != p {
            return Err(Error::config(format!(
                "beta prior has dimension {} / {}x{} but the design has {p} columns",
                self.b_beta.len(),
                self.a_beta.nrows(),
                self.a_beta.ncols()
            )));
        }
        let scalars = [
            ("a_alpha", self.a_alpha),
            ("b_alpha", self.b_alpha),
            ("c_alpha", self.c_alpha),
            ("a_gamma", self.a_gamma),
            ("b_gamma", self.b_gamma),
            ("c_gamma", self.c_gamma),
            ("a_s", self.a_s),
            ("b_s", self.b_s),
            ("c_dlh", self.c_dlh),
        ];
        for (name, v) in scalars {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if self.b_beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("b_beta must be finite"));
        }
        let asym = (&self.a_beta - self.a_beta.transpose()).amax();
        if asym > 1e-12 * self.a_beta.amax().max(1.0) {
            return Err(Error::config("A_beta must be symmetric"));
        }
        if self.a_beta.clone().cholesky().is_none() {
            return Err(Error::config("A_beta must be positive definite"));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HyperparamsRepr {
    b_beta: Vec<f64>,
    a_beta: Vec<Vec<f64>>,
    a_alpha: f64,
    b_alpha: f64,
    c_alpha: f64,
    a_gamma: f64,
    b_gamma: f64,
    c_gamma: f64,
    a_s: f64,
    b_s: f64,
    c_dlh: f64,
}

impl TryFrom<HyperparamsRepr> for Hyperparams {
    type Error = String;

    fn try_from(r: HyperparamsRepr) -> std::result::Result<Self, String> {
        let p = r.b_beta.len();
        if r.a_beta.len() != p || r.a_beta.iter().any(|row| row.len() != p) {
            return Err(format!("a_beta must be a {p}x{p} matrix"));
        }
        let flat: Vec<f64> = r.a_beta.into_iter().flatten().collect();
        Ok(Self {
            b_beta: DVector::from_vec(r.b_beta),
            a_beta: DMatrix::from_row_slice(p, p, &flat),
            a_alpha: r.a_alpha,
            b_alpha: r.b_alpha,
            c_alpha: r.c_alpha,
            a_gamma: r.a_gamma,
            b_gamma: r.b_gamma,
            c_gamma: r.c_gamma,
            a_s: r.a_s,
            b_s: r.b_s,
            c_dlh: r.c_dlh,
        })
    }
}

impl From<Hyperparams> for HyperparamsRepr {
    fn from(h: Hyperparams) -> Self {
        let p = h.b_beta.len();
        Self {
            b_beta: h.b_beta.iter().copied().collect(),
            a_beta: (0..p).map(|i| (0..p).map(|j| h.a_beta[(i, j)]).collect()).collect(),
            a_alpha: h.a_alpha,
            b_alpha: h.b_alpha,
            c_alpha: h.c_alpha,
            a_gamma: h.a_gamma,
            b_gamma: h.b_gamma,
            c_gamma: h.c_gamma,
            a_s: h.a_s,
            b_s: h.b_s,
            c_dlh: h.c_dlh,
        }
    }
}
