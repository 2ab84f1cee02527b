//! Spike-and-slab local prior: `λ = 1` with probability `1 − s`, DLH with
//! probability `s`. The spike is the exact value 1, carried by `z = 0`.

use rand::Rng;

use super::dlh::{dlh_sample_direct_ln, DlhParams};
use crate::numerics::{open_unit, MathError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPriorMixture {
    pub s: f64,
    pub dlh: DlhParams,
}

impl LocalPriorMixture {
    pub fn new(s: f64, c: f64) -> Result<Self, MathError> {
        if !(s > 0.0 && s < 1.0) {
            return Err(MathError::domain("LocalPriorMixture", format!("s must lie in (0, 1), got {s}")));
        }
        Ok(Self { s, dlh: DlhParams::new(c)? })
    }

    /// Draws `(z, ln λ)`; `ln λ` is exactly 0 when `z = 0`.
    pub fn sample_ln<R: Rng + ?Sized>(&self, rng: &mut R) -> (bool, f64) {
        if open_unit(rng) < self.s {
            (true, dlh_sample_direct_ln(rng, self.dlh.c).expect("validated c"))
        } else {
            (false, 0.0)
        }
    }
}
