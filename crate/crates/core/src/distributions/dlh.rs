//! Doubly log-adjusted heavy-tailed (DLH) distribution on `(0, ∞)`:
//!
//! `G(λ | c) = c / (1+λ) · 1 / (1 + log(1+λ)) · [1 + log(1 + log(1+λ))]^{−(1+c)}`
//!
//! with CDF `1 − [1 + log(1 + log(1+λ))]^{−c}`. Draws overflow `f64` with
//! non-negligible probability (about 13% for `c = 1`), so the sampler-facing
//! entry points work with `ln λ`.

use rand::Rng;

use crate::numerics::{ln_expm1, log1p_exp, sample_beta, sample_gamma, MathError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlhParams {
    pub c: f64,
}

impl DlhParams {
    pub fn new(c: f64) -> Result<Self, MathError> {
        check_c("DlhParams", c)?;
        Ok(Self { c })
    }
}

fn check_c(function: &'static str, c: f64) -> Result<(), MathError> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(MathError::domain(function, format!("tail index c must be finite and positive, got {c}")))
    }
}

fn check_lambda(function: &'static str, lambda: f64) -> Result<(), MathError> {
    if lambda > 0.0 && !lambda.is_nan() {
        Ok(())
    } else {
        Err(MathError::domain(function, format!("lambda must be positive, got {lambda}")))
    }
}

/// A value that may have been clamped to the largest finite double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturating {
    pub value: f64,
    pub saturated: bool,
}

impl Saturating {
    fn from_raw(v: f64) -> Self {
        if v.is_finite() {
            Self { value: v, saturated: false }
        } else {
            Self { value: f64::MAX, saturated: true }
        }
    }
}

pub fn dlh_log_density(lambda: f64, c: f64) -> Result<f64, MathError> {
    check_lambda("dlh_log_density", lambda)?;
    check_c("dlh_log_density", c)?;
    let l1 = lambda.ln_1p();
    let l2 = l1.ln_1p();
    Ok(c.ln() - l1 - l2 - (1.0 + c) * l2.ln_1p())
}

/// Log density evaluated from `ln λ`.
#[inline]
pub(crate) fn dlh_log_density_ln(ln_lambda: f64, c: f64) -> f64 {
    let l1 = log1p_exp(ln_lambda);
    let l2 = l1.ln_1p();
    c.ln() - l1 - l2 - (1.0 + c) * l2.ln_1p()
}

pub fn dlh_cdf(lambda: f64, c: f64) -> Result<f64, MathError> {
    check_lambda("dlh_cdf", lambda)?;
    check_c("dlh_cdf", c)?;
    Ok(-(-c * lambda.ln_1p().ln_1p().ln_1p()).exp_m1())
}

/// CDF evaluated from `ln λ`; monotone in `ln λ`, so it doubles as the CDF
/// of the log-scale draws.
pub fn dlh_cdf_ln(ln_lambda: f64, c: f64) -> f64 {
    -(-c * log1p_exp(ln_lambda).ln_1p().ln_1p()).exp_m1()
}

/// `λ = exp(exp((1−p)^{−1/c} − 1) − 1) − 1`, saturating at `f64::MAX`.
pub fn dlh_quantile(p: f64, c: f64) -> Result<Saturating, MathError> {
    Ok(Saturating::from_raw(dlh_quantile_ln(p, c)?.exp()))
}

/// `ln λ` at level `p`.
pub fn dlh_quantile_ln(p: f64, c: f64) -> Result<f64, MathError> {
    check_c("dlh_quantile", c)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(MathError::domain("dlh_quantile", format!("expected 0 < p < 1, got {p}")));
    }
    // κ = log(1 + log(1 + λ))
    let kappa = (-(-p).ln_1p() / c).exp_m1();
    Ok(ln_expm1(kappa.exp_m1()))
}

/// The Beta(1, c) → DLH transform `b ↦ exp[exp{b/(1−b)} − 1] − 1`.
pub fn dlh_transform(b: f64) -> f64 {
    (b / (1.0 - b)).exp_m1().exp_m1()
}

/// Exact DLH draw via `b ~ Beta(1, c)`; saturates at `f64::MAX`.
pub fn dlh_sample_direct<R: Rng + ?Sized>(rng: &mut R, c: f64) -> Result<f64, MathError> {
    Ok(Saturating::from_raw(dlh_sample_direct_ln(rng, c)?.exp()).value)
}

/// `ln λ` for an exact DLH draw. Returns `+∞` only when `log(1+λ)` itself
/// overflows (probability `(1 + ln f64::MAX)^{−c}`).
pub fn dlh_sample_direct_ln<R: Rng + ?Sized>(rng: &mut R, c: f64) -> Result<f64, MathError> {
    check_c("dlh_sample_direct", c)?;
    Ok(ln_expm1(sample_kappa(rng, c)?.exp_m1()))
}

/// `κ = log(1 + log(1 + λ)) = b / (1 − b)` with `b ~ Beta(1, c)`.
pub(crate) fn sample_kappa<R: Rng + ?Sized>(rng: &mut R, c: f64) -> Result<f64, MathError> {
    loop {
        let b = sample_beta(rng, 1.0, c)?;
        // both endpoints are probability-zero events
        if b > 0.0 && b < 1.0 {
            return Ok(b / (1.0 - b));
        }
    }
}

/// The latent triple of the integral representation of `G(η | c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Augmentation {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

/// Draws `(u, v, w) | η`:
/// `u ~ Ga(1+c, 1+log(1+log(1+η)))`, `v ~ Ga(1+u, 1+log(1+η))`, `w ~ Ga(1+v, 1+1/η)`.
pub fn dlh_augmentation_conditionals<R: Rng + ?Sized>(
    rng: &mut R,
    eta: f64,
    c: f64,
) -> Result<Augmentation, MathError> {
    check_lambda("dlh_augmentation_conditionals", eta)?;
    check_c("dlh_augmentation_conditionals", c)?;
    Ok(augmentation_ln(rng, eta.ln(), c))
}

pub(crate) fn augmentation_ln<R: Rng + ?Sized>(rng: &mut R, ln_eta: f64, c: f64) -> Augmentation {
    let l1 = log1p_exp(ln_eta);
    let l2 = l1.ln_1p();
    let u = sample_gamma(rng, 1.0 + c, 1.0 + l2).expect("positive shape and rate");
    let v = sample_gamma(rng, 1.0 + u, 1.0 + l1).expect("positive shape and rate");
    let w = sample_gamma(rng, 1.0 + v, 1.0 + (-ln_eta).exp()).expect("positive shape and rate");
    Augmentation { u, v, w }
}

/// The integrand of the representation, `c η^{−1−v} e^{−w/η}` (the gamma
/// kernels of `u, v, w` are the mixing laws).
pub fn dlh_augmented_kernel(eta: f64, c: f64, aug: &Augmentation) -> f64 {
    (c.ln() - (1.0 + aug.v) * eta.ln() - aug.w / eta).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::testutil::{adaptive_simpson, assert_close, ks_pvalue, mean, std_error};

    #[test]
    fn density_values() {
        // λ → 0⁺: every log factor vanishes, density → c
        assert_close(dlh_log_density(1e-300, 1.0).unwrap().exp(), 1.0, 1e-12);
        assert_close(dlh_log_density(1e-300, 2.5).unwrap().exp(), 2.5, 1e-12);
        // λ = e − 1: (1/e)(1/2)(1 + ln 2)^{−2}
        let lam = std::f64::consts::E - 1.0;
        let direct = (1.0 / std::f64::consts::E) * 0.5 / (1.0 + std::f64::consts::LN_2).powi(2);
        assert_close(dlh_log_density(lam, 1.0).unwrap().exp(), direct, 1e-14);
        assert!((direct - 0.06417).abs() < 1e-5);
        assert!(dlh_log_density(0.0, 1.0).is_err());
        assert!(dlh_log_density(1.0, 0.0).is_err());
    }

    #[test]
    fn log_space_density_agrees() {
        for &lam in &[1e-8, 0.3, 1.0, 50.0, 1e12, 1e200] {
            assert_close(dlh_log_density_ln(f64::ln(lam), 1.3), dlh_log_density(lam, 1.3).unwrap(), 1e-12);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // Quadrature on (0, L] and the closed-form tail 1 − F(L) beyond it.
        for &c in &[0.5, 1.0, 2.0] {
            let f = |x: f64| if x > 0.0 { dlh_log_density(x, c).unwrap().exp() } else { c };
            // integrate in u = ln(1+λ) to tame the long tail
            let g = |u: f64| f(u.exp_m1()) * u.exp();
            let upper_u = 60.0;
            let body = adaptive_simpson(&g, 0.0, upper_u, 1e-13);
            let tail = 1.0 - dlh_cdf(upper_u.exp_m1(), c).unwrap();
            assert!((body + tail - 1.0).abs() <= 1e-6, "c={c}: {}", body + tail);
        }
    }

    #[test]
    fn cdf_derivative_is_density() {
        let c = 1.0;
        let mut lam = 0.01;
        while lam <= 100.0 {
            let h = 1e-6 * lam;
            let fd = (dlh_cdf(lam + h, c).unwrap() - dlh_cdf(lam - h, c).unwrap()) / (2.0 * h);
            let d = dlh_log_density(lam, c).unwrap().exp();
            assert!((fd - d).abs() <= 1e-6 * d, "λ={lam}");
            lam *= 1.9;
        }
    }

    #[test]
    fn quantile_closed_form_and_inverse() {
        let median = dlh_quantile(0.5, 1.0).unwrap();
        assert!(!median.saturated);
        assert_close(median.value, (std::f64::consts::E - 1.0).exp() - 1.0, 1e-13);
        assert!((median.value - 4.5749).abs() < 1e-4);
        for &lam in &[0.1, 1.0, 10.0] {
            let p = dlh_cdf(lam, 1.0).unwrap();
            let back = dlh_quantile(p, 1.0).unwrap().value;
            assert!((back - lam).abs() <= 1e-8 * lam, "λ={lam}: {back}");
        }
        let extreme = dlh_quantile(1.0 - 1e-15, 1.0).unwrap();
        assert!(extreme.saturated && extreme.value == f64::MAX);
        // λ overflows from p ≈ 0.868 on, ln λ only from p ≈ 0.9986
        let q99 = dlh_quantile(0.99, 1.0).unwrap();
        assert!(q99.saturated);
        assert!(dlh_quantile_ln(0.99, 1.0).unwrap().is_finite());
        assert_eq!(dlh_quantile_ln(1.0 - 1e-15, 1.0).unwrap(), f64::INFINITY);
        assert!(dlh_quantile(1.0, 1.0).is_err());
    }

    #[test]
    fn transform_boundary() {
        assert_eq!(dlh_transform(0.0), 0.0);
    }

    #[test]
    fn direct_sampler_matches_cdf() {
        // ln λ is +∞ with positive probability for small c, so KS runs on κ
        // and the transform is checked through quantile exceedances.
        let mut rng = RngStream::new(31, 0);
        for &c in &[0.5, 1.0, 2.0] {
            let kappas: Vec<f64> = (0..100_000).map(|_| sample_kappa(&mut rng, c).unwrap()).collect();
            let pv = ks_pvalue(&kappas, |k| if k <= 0.0 { 0.0 } else { 1.0 - (1.0 + k).powf(-c) });
            assert!(pv > 0.01, "c={c}: p={pv}");
            let n = 100_000;
            let draws: Vec<f64> = (0..n).map(|_| dlh_sample_direct_ln(&mut rng, c).unwrap()).collect();
            for &p in &[0.1, 0.25, 0.5, 0.75, 0.9, 0.95] {
                let q = dlh_quantile_ln(p, c).unwrap();
                let below = draws.iter().filter(|&&l| l <= q).count() as f64 / n as f64;
                assert!((below - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "c={c} p={p}: {below}");
            }
        }
    }

    #[test]
    fn direct_sampler_tail_probability() {
        let mut rng = RngStream::new(32, 0);
        let q90 = dlh_quantile_ln(0.9, 1.0).unwrap();
        let n = 100_000;
        let hits = (0..n).filter(|_| dlh_sample_direct_ln(&mut rng, 1.0).unwrap() > q90).count();
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.1).abs() < 0.005, "{frac}");
    }

    #[test]
    fn tail_index_limit() {
        // λ G(λ) (1 + log(1+λ)) [1 + log(1+log(1+λ))]^{1+c} → c
        for &c in &[0.5, 1.0, 3.0] {
            for &lam in &[1e6f64, 1e9] {
                let l1 = lam.ln_1p();
                let l2 = l1.ln_1p();
                let scaled = (lam.ln() + dlh_log_density(lam, c).unwrap() + l1.ln_1p() + (1.0 + c) * l2.ln_1p()).exp();
                assert!((scaled - c).abs() <= 0.01 * c, "c={c} λ={lam}: {scaled}");
            }
        }
    }

    #[test]
    fn log_density_finite_across_range() {
        let mut lam = 1e-300;
        while lam < 1e300 {
            assert!(dlh_log_density(lam, 1.0).unwrap().is_finite());
            lam *= 1e10;
        }
        assert!(dlh_log_density_ln(1e5, 1.0).is_finite());
    }

    #[test]
    fn augmentation_marginalizes_to_density() {
        // E_{u,v,w}[c η^{−1−v} e^{−w/η}] with u ~ Ga(1+c,1), v|u ~ Ga(1+u,1), w|v ~ Ga(1+v,1).
        let c = 1.0;
        let mut rng = RngStream::new(33, 0);
        for &eta in &[0.5, 5.0] {
            let vals: Vec<f64> = (0..1_000_000)
                .map(|_| {
                    let u = sample_gamma(&mut rng, 1.0 + c, 1.0).unwrap();
                    let v = sample_gamma(&mut rng, 1.0 + u, 1.0).unwrap();
                    let w = sample_gamma(&mut rng, 1.0 + v, 1.0).unwrap();
                    dlh_augmented_kernel(eta, c, &Augmentation { u, v, w })
                })
                .collect();
            let target = dlh_log_density(eta, c).unwrap().exp();
            assert!((mean(&vals) - target).abs() < 3.0 * std_error(&vals), "η={eta}");
        }
    }

    #[test]
    fn augmentation_conditionals_moments() {
        let c = 1.0;
        let mut rng = RngStream::new(34, 0);
        let us: Vec<f64> = (0..100_000).map(|_| dlh_augmentation_conditionals(&mut rng, 1.0, c).unwrap().u).collect();
        let expected = (1.0 + c) / (1.0 + std::f64::consts::LN_2.ln_1p());
        assert!((mean(&us) - expected).abs() < 3.0 * std_error(&us));
        // η → ∞: w's rate → 1, so E[w | v] → 1 + v
        let mut rng = RngStream::new(35, 0);
        let (mut sw, mut sv) = (0.0, 0.0);
        for _ in 0..50_000 {
            let a = augmentation_ln(&mut rng, 500.0, c);
            sw += a.w;
            sv += 1.0 + a.v;
        }
        assert!((sw / sv - 1.0).abs() < 0.02);
    }
}
