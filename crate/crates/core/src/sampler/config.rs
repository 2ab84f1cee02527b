use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GlobalParams;

/// Robust models carry the spike-and-slab local scales; the plain models fix
/// `λ ≡ 1`. The gamma family fixes `γ ≡ 1` and the Weibull family `α ≡ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rgg,
    Rga,
    Rwb,
    Gg,
    Ga,
    Wb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [ModelKind::Rgg, ModelKind::Rga, ModelKind::Rwb, ModelKind::Gg, ModelKind::Ga, ModelKind::Wb];

    pub fn is_robust(self) -> bool {
        matches!(self, ModelKind::Rgg | ModelKind::Rga | ModelKind::Rwb)
    }

    pub fn alpha_free(self) -> bool {
        !matches!(self, ModelKind::Rwb | ModelKind::Wb)
    }

    pub fn gamma_free(self) -> bool {
        !matches!(self, ModelKind::Rga | ModelKind::Ga)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rgg => "rgg",
            ModelKind::Rga => "rga",
            ModelKind::Rwb => "rwb",
            ModelKind::Gg => "gg",
            ModelKind::Ga => "ga",
            ModelKind::Wb => "wb",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name().to_uppercase())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::config(format!("unknown model `{s}` (expected one of rgg, rga, rwb, gg, ga, wb)")))
    }
}

/// When the derivative-matched proposals for `α̃` and `β̃` are refitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptationPolicy {
    /// One refit per scan during burn-in, frozen afterwards.
    #[default]
    BurnInOnly,
    /// One refit per scan throughout.
    EveryScan,
    /// Every scan, refits are iterated to their fixed point, so the proposal
    /// is a function of the conditioning variables only.
    Converged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default)]
    pub adaptation: AdaptationPolicy,
    #[serde(skip)]
    pub init: Option<GlobalParams>,
}

fn default_grid() -> usize {
    100
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { n_iter: 4000, burn_in: 2000, thin: 1, seed: 1, grid_size: 100, adaptation: AdaptationPolicy::default(), init: None }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 {
            return Err(Error::config("n_iter must be positive"));
        }
        if self.burn_in >= self.n_iter {
            return Err(Error::config(format!("burn_in ({}) must be below n_iter ({})", self.burn_in, self.n_iter)));
        }
        if self.thin == 0 {
            return Err(Error::config("thin must be at least 1"));
        }
        if self.grid_size < 2 {
            return Err(Error::config("grid_size must be at least 2"));
        }
        if let Some(init) = &self.init {
            init.validate()?;
        }
        Ok(())
    }

    /// Number of stored draws.
    pub fn n_saved(&self) -> usize {
        (self.n_iter - self.burn_in) / self.thin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse_and_flags() {
        assert_eq!("RGA".parse::<ModelKind>().unwrap(), ModelKind::Rga);
        assert!("lst".parse::<ModelKind>().is_err());
        assert!(!ModelKind::Rga.gamma_free() && ModelKind::Rga.alpha_free() && ModelKind::Rga.is_robust());
        assert!(!ModelKind::Wb.alpha_free() && !ModelKind::Wb.is_robust());
        assert_eq!(serde_json::to_string(&ModelKind::Rwb).unwrap(), "\"rwb\"");
    }

    #[test]
    fn config_validation_and_counts() {
        let c = McmcConfig { n_iter: 4000, burn_in: 2000, thin: 5, ..Default::default() };
        c.validate().unwrap();
        assert_eq!(c.n_saved(), 400);
        assert!(McmcConfig { burn_in: 4000, ..c.clone() }.validate().is_err());
        assert!(McmcConfig { thin: 0, ..c.clone() }.validate().is_err());
        let json = r#"{"n_iter":10,"burn_in":2,"thin":1,"seed":3,"bogus":1}"#;
        assert!(serde_json::from_str::<McmcConfig>(json).is_err());
    }
}
