//! Generalized gamma family in the `(α, γ, θ)` parameterization
//! `f(t) = γ α^α / Γ(α) · θ^α t^{αγ−1} exp(−αθ t^γ)`.
//!
//! The `_ln` variants take `ln t` and `ln θ`, which is what the sampler holds.

use rand::Rng;

use crate::numerics::{ln_gamma_unchecked, ln_q_unchecked, sample_gamma, MathError};

const RELIABILITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GGParams {
    pub alpha: f64,
    pub gamma: f64,
    pub theta: f64,
}

impl GGParams {
    pub fn new(alpha: f64, gamma: f64, theta: f64) -> Result<Self, MathError> {
        for (name, v) in [("alpha", alpha), ("gamma", gamma), ("theta", theta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MathError::domain("GGParams", format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(Self { alpha, gamma, theta })
    }

    /// Gamma special case (`γ = 1`): `t ~ Ga(α, αθ)`.
    pub fn gamma_model(alpha: f64, theta: f64) -> Result<Self, MathError> {
        Self::new(alpha, 1.0, theta)
    }

    /// Weibull special case (`α = 1`).
    pub fn weibull(gamma: f64, theta: f64) -> Result<Self, MathError> {
        Self::new(1.0, gamma, theta)
    }
}

fn check_time(function: &'static str, t: f64) -> Result<(), MathError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(MathError::domain(function, format!("time must be finite and positive, got {t}")))
    }
}

pub fn gg_log_density(t: f64, p: &GGParams) -> Result<f64, MathError> {
    check_time("gg_log_density", t)?;
    Ok(gg_log_density_ln(t.ln(), p.alpha, p.gamma, p.theta.ln()))
}

#[inline]
pub(crate) fn gg_log_density_ln(ln_t: f64, alpha: f64, gamma: f64, ln_theta: f64) -> f64 {
    gamma.ln() + alpha * alpha.ln() - ln_gamma_unchecked(alpha) + alpha * ln_theta + (alpha * gamma - 1.0) * ln_t
        - alpha * (ln_theta + gamma * ln_t).exp()
}

/// Draws `T = (g / (αθ))^{1/γ}` with `g ~ Gamma(α, 1)`.
pub fn gg_sample<R: Rng + ?Sized>(rng: &mut R, p: &GGParams) -> f64 {
    gg_sample_ln(rng, p.alpha, p.gamma, p.theta.ln()).exp()
}

/// `ln T` for a generalized gamma draw.
pub(crate) fn gg_sample_ln<R: Rng + ?Sized>(rng: &mut R, alpha: f64, gamma: f64, ln_theta: f64) -> f64 {
    let g = sample_gamma(rng, alpha, 1.0).expect("validated shape");
    (g.ln() - alpha.ln() - ln_theta) / gamma
}

/// `E[T] = (αθ)^{−1/γ} Γ(α + 1/γ) / Γ(α)`.
pub fn gg_mean(p: &GGParams) -> f64 {
    gg_mean_ln_theta(p.alpha, p.gamma, p.theta.ln())
}

#[inline]
pub(crate) fn gg_mean_ln_theta(alpha: f64, gamma: f64, ln_theta: f64) -> f64 {
    (-(alpha.ln() + ln_theta) / gamma + ln_gamma_unchecked(alpha + 1.0 / gamma) - ln_gamma_unchecked(alpha)).exp()
}

/// `R(t) = Q(α, αθ t^γ)`; underflows to 0 rather than erroring.
pub fn gg_reliability(t: f64, p: &GGParams) -> Result<f64, MathError> {
    Ok(gg_log_reliability(t, p)?.exp())
}

pub fn gg_log_reliability(t: f64, p: &GGParams) -> Result<f64, MathError> {
    check_time("gg_log_reliability", t)?;
    Ok(gg_log_reliability_ln(t.ln(), p.alpha, p.gamma, p.theta.ln()))
}

#[inline]
pub(crate) fn gg_log_reliability_ln(ln_t: f64, alpha: f64, gamma: f64, ln_theta: f64) -> f64 {
    let x = (alpha.ln() + ln_theta + gamma * ln_t).exp();
    ln_q_unchecked(alpha, x)
}

/// Hazard `f(t) / R(t)`. Errors when the reliability is below 1e-300.
pub fn gg_hazard(t: f64, p: &GGParams) -> Result<f64, MathError> {
    check_time("gg_hazard", t)?;
    let ln_t = t.ln();
    let ln_theta = p.theta.ln();
    let ln_r = gg_log_reliability_ln(ln_t, p.alpha, p.gamma, ln_theta);
    if ln_r < RELIABILITY_FLOOR.ln() {
        return Err(MathError::domain(
            "gg_hazard",
            format!("reliability underflow at t = {t} (ln R = {ln_r}); hazard overflows"),
        ));
    }
    Ok((gg_log_density_ln(ln_t, p.alpha, p.gamma, ln_theta) - ln_r).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::testutil::{assert_close, chi2_sf, integrate_to_infinity, ks_pvalue, mean, std_error};

    #[test]
    fn density_special_cases() {
        let exp1 = GGParams::new(1.0, 1.0, 1.0).unwrap();
        assert_close(gg_log_density(1.0, &exp1).unwrap(), -1.0, 1e-14);
        let weib = GGParams::weibull(2.0, 1.0).unwrap();
        assert_close(gg_log_density(1.0, &weib).unwrap(), (2.0f64).ln() - 1.0, 1e-14);
        assert!(gg_log_density(0.0, &exp1).is_err());
        assert!(gg_log_density(-1.0, &exp1).is_err());
        assert!(GGParams::new(0.0, 1.0, 1.0).is_err());
        assert!(GGParams::new(1.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        for &(a, g, th) in &[(5.0, 2.0, 3.0), (0.7, 1.0, 0.4), (2.0, 0.6, 9.0)] {
            let p = GGParams::new(a, g, th).unwrap();
            let f = |t: f64| if t > 0.0 { gg_log_density(t, &p).unwrap().exp() } else { 0.0 };
            let mass = integrate_to_infinity(&f, 0.0, 1e-12);
            assert!((mass - 1.0).abs() < 1e-8, "({a},{g},{th}): {mass}");
        }
    }

    #[test]
    fn mean_special_cases() {
        assert_close(gg_mean(&GGParams::new(1.0, 1.0, 1.0).unwrap()), 1.0, 1e-14);
        for &(a, th) in &[(0.5, 2.0), (10.0, 0.3), (100.0, 7.0)] {
            assert_close(gg_mean(&GGParams::gamma_model(a, th).unwrap()), 1.0 / th, 1e-12);
        }
    }

    #[test]
    fn sampler_matches_transform_and_moments() {
        let mut rng = RngStream::new(21, 0);
        let n = 100_000;
        let exp1 = GGParams::new(1.0, 1.0, 1.0).unwrap();
        let m = (0..n).map(|_| gg_sample(&mut rng, &exp1)).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 0.02);

        for &(a, g, th) in &[(10.0, 1.0, 2.0), (5.0, 2.0, 3.0), (0.8, 0.5, 0.2)] {
            let p = GGParams::new(a, g, th).unwrap();
            let ts: Vec<f64> = (0..n).map(|_| gg_sample(&mut rng, &p)).collect();
            // αθT^γ ~ Gamma(α, 1)
            let gs: Vec<f64> = ts.iter().map(|t| a * th * t.powf(g)).collect();
            let pv = ks_pvalue(&gs, |x| crate::numerics::lower_incomplete_gamma_regularized(a, x.max(0.0)).unwrap());
            assert!(pv > 0.01, "({a},{g},{th}) KS p = {pv}");
            let se = std_error(&ts);
            assert!((mean(&ts) - gg_mean(&p)).abs() < 3.0 * se, "({a},{g},{th}) mean");
        }
    }

    #[test]
    fn sampler_histogram_agrees_with_density() {
        // 50 bins; interior bin masses by quadrature of the density, the two
        // open-ended bins take the remainder. χ² with 49 df.
        use crate::testutil::adaptive_simpson;
        let mut rng = RngStream::new(22, 0);
        let n = 100_000;
        for &(a, g, th) in &[(5.0, 2.0, 3.0), (1.5, 0.7, 0.5), (20.0, 1.3, 10.0)] {
            let p = GGParams::new(a, g, th).unwrap();
            let density = |t: f64| if t > 0.0 { gg_log_density(t, &p).unwrap().exp() } else { 0.0 };
            let m = gg_mean(&p);
            let (lo, hi) = (0.05 * m, 3.0 * m);
            let edges: Vec<f64> = (0..=48).map(|k| lo + (hi - lo) * k as f64 / 48.0).collect();
            let mut probs: Vec<f64> = edges.windows(2).map(|w| adaptive_simpson(&density, w[0], w[1], 1e-12)).collect();
            let left = adaptive_simpson(&density, 0.0, lo, 1e-12);
            let right = 1.0 - left - probs.iter().sum::<f64>();
            probs.insert(0, left);
            probs.push(right);
            let mut counts = [0usize; 50];
            for _ in 0..n {
                let t = gg_sample(&mut rng, &p);
                let k = if t < lo { 0 } else if t >= hi { 49 } else { 1 + (((t - lo) / (hi - lo) * 48.0) as usize).min(47) };
                counts[k] += 1;
            }
            let stat: f64 = counts
                .iter()
                .zip(&probs)
                .filter(|(_, &q)| q * n as f64 > 5.0)
                .map(|(&c, &q)| (c as f64 - q * n as f64).powi(2) / (q * n as f64))
                .sum();
            let df = probs.iter().filter(|&&q| q * n as f64 > 5.0).count() as f64 - 1.0;
            assert!(chi2_sf(stat, df) > 0.001, "({a},{g},{th}) chi2 = {stat} on {df}");
        }
    }

    #[test]
    fn reliability_and_hazard() {
        let exp1 = GGParams::new(1.0, 1.0, 1.0).unwrap();
        assert_close(gg_reliability(1.0, &exp1).unwrap(), (-1.0f64).exp(), 1e-14);
        assert!((gg_reliability(1e-12, &exp1).unwrap() - 1.0).abs() < 1e-11);
        // Weibull: hazard θγt^{γ−1}, checked against density/survival ratio.
        let (g, th) = (1.7, 0.8);
        let w = GGParams::weibull(g, th).unwrap();
        for &t in &[0.1, 0.9, 2.5] {
            let ratio = gg_log_density(t, &w).unwrap().exp() / gg_reliability(t, &w).unwrap();
            assert_close(gg_hazard(t, &w).unwrap(), ratio, 1e-12);
            assert_close(gg_hazard(t, &w).unwrap(), th * g * f64::powf(t, g - 1.0), 1e-10);
        }
        // Far tail: reliability clamps to zero and the hazard refuses.
        assert_eq!(gg_reliability(1e4, &exp1).unwrap(), 0.0);
        assert!(gg_hazard(1e4, &exp1).is_err());
        assert!(gg_log_reliability(1e4, &exp1).unwrap().is_finite());
    }
}
