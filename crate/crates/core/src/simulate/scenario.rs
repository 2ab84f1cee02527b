use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{gg_mean_ln_theta, gg_sample_ln};
use crate::error::{Error, Result};
use crate::model::SurvivalDataset;
use crate::numerics::{open_unit, sample_gamma, sample_uniform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scenario {
    /// `t* ~ Ga(α, α/θ_i)`, mean `θ_i = exp(x'β)`
    Ga,
    /// `t* ~ GG(α, γ, θ_i)` with `θ_i = exp(x'β)`
    Gg,
}

impl Scenario {
    pub fn true_params(self) -> TrueParams {
        match self {
            Scenario::Ga => TrueParams { beta: vec![0.5, 2.0, -0.5], alpha: 10.0, gamma: 1.0 },
            Scenario::Gg => TrueParams { beta: vec![4.0, 1.0, -1.0], alpha: 5.0, gamma: 2.0 },
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Ga => "GA",
            Scenario::Gg => "GG",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GA" => Ok(Scenario::Ga),
            "GG" => Ok(Scenario::Gg),
            _ => Err(Error::config(format!("unknown scenario `{s}` (expected GA or GG)"))),
        }
    }
}

/// Generating values, in the scenario's own parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub beta: Vec<f64>,
    pub alpha: f64,
    /// 1 for the gamma scenario
    pub gamma: f64,
}

/// The three evaluation points `(1, x1, x2)`.
pub const REG_POINTS: [[f64; 3]; 3] = [[1.0, 0.5, -1.0], [1.0, 1.0, 0.0], [1.0, 1.5, 1.0]];
pub const REG_NAMES: [&str; 3] = ["reg1", "reg2", "reg3"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n: usize,
    /// contamination probability among observations with `x2 > 0.5`
    pub omega: f64,
    pub true_params: TrueParams,
    pub replications: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    /// `n = 200`, 100 replications, seed 1.
    pub fn new(scenario: Scenario, omega: f64) -> Self {
        Self { scenario, n: 200, omega, true_params: scenario.true_params(), replications: 100, seed: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::config(format!("omega must lie in [0, 1], got {}", self.omega)));
        }
        if self.true_params.beta.len() != 3 {
            return Err(Error::config("scenarios use three coefficients (intercept, x1, x2)"));
        }
        if self.n < 3 {
            return Err(Error::config(format!("n must be at least p = 3, got {}", self.n)));
        }
        if !(self.true_params.alpha > 0.0 && self.true_params.gamma > 0.0) {
            return Err(Error::config("true alpha and gamma must be positive"));
        }
        Ok(())
    }

    /// `E[t* | x]` at each evaluation point under the generating law.
    pub fn true_regression_values(&self) -> [f64; 3] {
        let tp = &self.true_params;
        REG_POINTS.map(|x| {
            let xb: f64 = x.iter().zip(&tp.beta).map(|(a, b)| a * b).sum();
            match self.scenario {
                Scenario::Ga => xb.exp(),
                Scenario::Gg => gg_mean_ln_theta(tp.alpha, tp.gamma, xb),
            }
        })
    }
}

/// What was generated, alongside the observed dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub scenario: Scenario,
    pub omega: f64,
    pub true_params: TrueParams,
    pub t_star: Vec<f64>,
    pub z: Vec<bool>,
    /// `None` for an outlier, which is never censored
    pub censoring_time: Vec<Option<f64>>,
    pub c_max: f64,
    pub reg_values: [f64; 3],
}

impl Truth {
    pub fn censoring_rate(&self) -> f64 {
        let n = self.t_star.len().max(1);
        let censored = self
            .t_star
            .iter()
            .zip(&self.z)
            .zip(&self.censoring_time)
            .filter(|((t, z), c)| match c {
                Some(c) => {
                    let t = if **z { **t + 100.0 } else { **t };
                    *c < t
                }
                None => false,
            })
            .count();
        censored as f64 / n as f64
    }
}

/// Draws one dataset: covariates `x1 ~ U(0, 2)`, `x2 ~ U(−2, 2)`; clean
/// times from the scenario; outliers `t* + 100` among `x2 > 0.5` with
/// probability `ω` and never censored; `C ~ U(50, c_max)` otherwise with
/// `c_max = max(t*_1, …, t*_n, 50)`; observed `min(t, C)`.
pub fn generate_scenario<R: Rng + ?Sized>(rng: &mut R, spec: &ScenarioSpec) -> Result<(SurvivalDataset, Truth)> {
    spec.validate()?;
    let n = spec.n;
    let tp = &spec.true_params;
    let mut x = DMatrix::zeros(n, 3);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = sample_uniform(rng, 0.0, 2.0)?;
        x[(i, 2)] = sample_uniform(rng, -2.0, 2.0)?;
    }
    let mut t_star = Vec::with_capacity(n);
    for i in 0..n {
        let xb = tp.beta[0] + tp.beta[1] * x[(i, 1)] + tp.beta[2] * x[(i, 2)];
        let t = match spec.scenario {
            Scenario::Ga => sample_gamma(rng, tp.alpha, tp.alpha / xb.exp())?,
            Scenario::Gg => gg_sample_ln(rng, tp.alpha, tp.gamma, xb).exp(),
        };
        t_star.push(t);
    }
    let z: Vec<bool> = (0..n).map(|i| x[(i, 2)] > 0.5 && open_unit(rng) < spec.omega).collect();
    let c_max = t_star.iter().cloned().fold(50.0, f64::max);
    let mut censoring_time = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    for i in 0..n {
        let t = if z[i] { t_star[i] + 100.0 } else { t_star[i] };
        let c = if z[i] {
            None
        } else if c_max > 50.0 {
            Some(sample_uniform(rng, 50.0, c_max)?)
        } else {
            Some(50.0)
        };
        match c {
            Some(c) if c < t => {
                y.push(c);
                delta.push(false);
            }
            _ => {
                y.push(t);
                delta.push(true);
            }
        }
        censoring_time.push(c);
    }
    let names = vec!["intercept".to_string(), "x1".into(), "x2".into()];
    let data = SurvivalDataset::with_names(y, delta, x, names)?;
    let truth = Truth {
        scenario: spec.scenario,
        omega: spec.omega,
        true_params: tp.clone(),
        t_star,
        z,
        censoring_time,
        c_max,
        reg_values: spec.true_regression_values(),
    };
    Ok((data, truth))
}
