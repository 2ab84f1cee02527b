//! Elementary random variates.
//!
//! Gamma, beta and normal draws are delegated to `rand_distr`; the truncated
//! gamma sampler is implemented here on top of the log-space incomplete gamma
//! inverse.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};

use super::special::{gamma_quantile_upper_log, ln_q_unchecked};
use super::MathError;

/// Tail masses below this switch the truncated sampler to rejection.
const TAIL_FALLBACK_LN_MASS: f64 = -690.775_527_898_213_7; // ln(1e-300)

/// Uniform on the half-open interval `(0, 1]`, safe to take logs of.
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Gamma draw with the given shape and *rate*.
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64, MathError> {
    if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
        return Err(MathError::domain(
            "sample_gamma",
            format!("shape and rate must be finite and positive, got ({shape}, {rate})"),
        ));
    }
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| MathError::domain("sample_gamma", e.to_string()))?;
    // Tiny shapes can underflow to an exact zero.
    Ok(dist.sample(rng).max(f64::MIN_POSITIVE))
}

/// Beta draw on `(0, 1)`.
pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64, MathError> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(MathError::domain("sample_beta", format!("invalid parameters ({a}, {b})")));
    }
    let dist = Beta::new(a, b).map_err(|e| MathError::domain("sample_beta", e.to_string()))?;
    Ok(dist.sample(rng))
}

pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> Result<f64, MathError> {
    if !(mean.is_finite() && sd > 0.0 && sd.is_finite()) {
        return Err(MathError::domain("sample_normal", format!("invalid parameters ({mean}, {sd})")));
    }
    let dist = Normal::new(mean, sd).map_err(|e| MathError::domain("sample_normal", e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Uniform on `[lo, hi)`; `lo == hi` returns `lo`.
pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Result<f64, MathError> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(MathError::domain("sample_uniform", format!("invalid interval [{lo}, {hi})")));
    }
    Ok(lo + (hi - lo) * rng.random::<f64>())
}

/// Gamma(shape, rate) conditioned on exceeding `lower`.
///
/// Inverse CDF on the conditional upper-tail mass by default. When that mass
/// is below 1e-300 an exponential envelope anchored at `lower` is used
/// instead. The result is always strictly greater than `lower`.
pub fn sample_truncated_gamma_lower<R: Rng + ?Sized>(
    rng: &mut R,
    shape: f64,
    rate: f64,
    lower: f64,
) -> Result<f64, MathError> {
    if !(lower >= 0.0) || lower.is_nan() {
        return Err(MathError::domain(
            "sample_truncated_gamma_lower",
            format!("lower bound must be >= 0, got {lower}"),
        ));
    }
    if lower == 0.0 {
        return sample_gamma(rng, shape, rate);
    }
    if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
        return Err(MathError::domain(
            "sample_truncated_gamma_lower",
            format!("shape and rate must be finite and positive, got ({shape}, {rate})"),
        ));
    }
    let x0 = rate * lower;
    if x0 == f64::INFINITY {
        return Ok(lower.next_up());
    }
    let ln_tail = ln_q_unchecked(shape, x0);
    let draw = if ln_tail >= TAIL_FALLBACK_LN_MASS {
        let ln_q = ln_tail + open_unit(rng).ln();
        if ln_q >= 0.0 {
            // the conditioning event has (numerically) full mass
            return sample_gamma(rng, shape, rate).map(|g| g.max(lower.next_up()));
        }
        gamma_quantile_upper_log(shape, ln_q)? / rate
    } else {
        sample_tail_rejection(rng, shape, x0) / rate
    };
    Ok(if draw > lower { draw } else { lower.next_up() })
}

/// Standard Gamma(shape, 1) restricted to `(x0, ∞)` for `x0` deep in the
/// right tail (`x0 > shape − 1` is guaranteed by the caller's tail test).
fn sample_tail_rejection<R: Rng + ?Sized>(rng: &mut R, shape: f64, x0: f64) -> f64 {
    // log f(x) − log f(x0) ≤ −λ (x − x0) with λ = 1 − (shape − 1)/x0 when shape ≥ 1,
    // and ≤ −(x − x0) when shape < 1.
    let slope = if shape >= 1.0 { 1.0 - (shape - 1.0) / x0 } else { 1.0 };
    let slope = slope.max(f64::EPSILON);
    loop {
        let e = -open_unit(rng).ln() / slope;
        let x = x0 + e;
        let log_accept = (shape - 1.0) * (x / x0).ln() - (x - x0) + slope * e;
        if open_unit(rng).ln() <= log_accept {
            return x;
        }
    }
}
