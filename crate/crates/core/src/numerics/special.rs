//! Log-gamma, polygamma and regularized incomplete gamma functions.
//!
//! Everything here is real-argument, double precision. The incomplete gamma
//! routines work in log space so that tail probabilities far below the
//! smallest normal double stay usable by the samplers.

use super::MathError;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const MAX_SERIES_ITERS: usize = 200_000;
const FPMIN: f64 = f64::MIN_POSITIVE / f64::EPSILON;

const LANCZOS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

fn check_positive(function: &'static str, x: f64) -> Result<(), MathError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(MathError::domain(function, format!("expected finite x > 0, got {x}")))
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64, MathError> {
    check_positive("log_gamma", x)?;
    Ok(ln_gamma_unchecked(x))
}

/// `ln Γ(x)` without argument validation; `x` must be positive and finite.
#[inline]
pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x >= 12.0 {
        // Stirling series; the truncation error is below 1e-17 from here on.
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let series = inv
            * (1.0 / 12.0
                - inv2
                    * (1.0 / 360.0
                        - inv2
                            * (1.0 / 1260.0
                                - inv2
                                    * (1.0 / 1680.0
                                        - inv2
                                            * (1.0 / 1188.0
                                                - inv2 * (691.0 / 360_360.0 - inv2 / 156.0))))));
        (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series
    } else {
        let mut y = x;
        let tmp = x + 5.242_187_5;
        let tmp = (x + 0.5) * tmp.ln() - tmp;
        let mut ser = 0.999_999_999_999_997_092;
        for c in LANCZOS {
            y += 1.0;
            ser += c / y;
        }
        tmp + (2.506_628_274_631_000_5 * ser / x).ln()
    }
}

/// Digamma function `ψ(x) = d/dx ln Γ(x)`.
pub fn digamma(x: f64) -> Result<f64, MathError> {
    check_positive("digamma", x)?;
    Ok(digamma_unchecked(x))
}

#[inline]
pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let f = 1.0 / (x * x);
    let tail = f
        * (1.0 / 12.0
            - f * (1.0 / 120.0
                - f * (1.0 / 252.0
                    - f * (1.0 / 240.0 - f * (1.0 / 132.0 - f * (691.0 / 32_760.0 - f / 12.0))))));
    acc + x.ln() - 0.5 / x - tail
}

/// Trigamma function `ψ'(x)`.
pub fn trigamma(x: f64) -> Result<f64, MathError> {
    check_positive("trigamma", x)?;
    Ok(trigamma_unchecked(x))
}

#[inline]
pub(crate) fn trigamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let f = inv * inv;
    let tail = inv
        + 0.5 * f
        + inv
            * f
            * (1.0 / 6.0
                - f * (1.0 / 30.0
                    - f * (1.0 / 42.0
                        - f * (1.0 / 30.0 - f * (5.0 / 66.0 - f * (691.0 / 2730.0 - f * 7.0 / 6.0))))));
    acc + tail
}

/// `a ln x − x − ln Γ(a)`, the common prefactor of both incomplete gamma expansions.
#[inline]
fn log_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma_unchecked(a)
}

/// `ln P(a, x)` by the power series; accurate for `x < a + 1`.
fn ln_lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_SERIES_ITERS {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * f64::EPSILON {
            break;
        }
    }
    sum.ln() + log_prefactor(a, x)
}

/// `ln Q(a, x)` by the modified Lentz continued fraction; accurate for `x ≥ a + 1`.
fn ln_upper_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_SERIES_ITERS {
        let fi = i as f64;
        let an = -fi * (fi - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h.ln() + log_prefactor(a, x)
}

fn check_incomplete(function: &'static str, a: f64, x: f64) -> Result<(), MathError> {
    check_positive(function, a)?;
    if x.is_nan() || x < 0.0 {
        return Err(MathError::domain(function, format!("expected x >= 0, got {x}")));
    }
    Ok(())
}

/// `ln Q(a, x)` where `Q` is the regularized upper incomplete gamma function.
pub fn ln_upper_incomplete_gamma_regularized(a: f64, x: f64) -> Result<f64, MathError> {
    check_incomplete("ln_upper_incomplete_gamma_regularized", a, x)?;
    Ok(ln_q_unchecked(a, x))
}

#[inline]
pub(crate) fn ln_q_unchecked(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x == f64::INFINITY {
        f64::NEG_INFINITY
    } else if x < a + 1.0 {
        (-ln_lower_series(a, x).exp()).ln_1p()
    } else {
        ln_upper_fraction(a, x)
    }
}

/// `ln P(a, x)` where `P = 1 − Q` is the regularized lower incomplete gamma function.
pub fn ln_lower_incomplete_gamma_regularized(a: f64, x: f64) -> Result<f64, MathError> {
    check_incomplete("ln_lower_incomplete_gamma_regularized", a, x)?;
    Ok(ln_p_unchecked(a, x))
}

#[inline]
pub(crate) fn ln_p_unchecked(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x == f64::INFINITY {
        0.0
    } else if x < a + 1.0 {
        ln_lower_series(a, x)
    } else {
        (-ln_upper_fraction(a, x).exp()).ln_1p()
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn upper_incomplete_gamma_regularized(a: f64, x: f64) -> Result<f64, MathError> {
    check_incomplete("upper_incomplete_gamma_regularized", a, x)?;
    Ok(ln_q_unchecked(a, x).exp())
}

/// Regularized lower incomplete gamma `P(a, x) = γ(a, x) / Γ(a)`.
pub fn lower_incomplete_gamma_regularized(a: f64, x: f64) -> Result<f64, MathError> {
    check_incomplete("lower_incomplete_gamma_regularized", a, x)?;
    Ok(ln_p_unchecked(a, x).exp())
}

/// Which tail a log-probability target refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tail {
    Lower,
    Upper,
}

/// Solves `ln F(a, x) = target` for `x`, where `F` is `P` (lower) or `Q` (upper).
///
/// Newton iterations on `u = ln x`, safeguarded by a bracket that is grown
/// geometrically until it straddles the root.
fn invert_log_tail(a: f64, target: f64, tail: Tail) -> f64 {
    let lng = ln_gamma_unchecked(a);
    // residual(u) is increasing in u for both tails once the sign is folded in
    let residual = |u: f64| -> (f64, f64) {
        let x = u.exp();
        let (lnf, sign) = match tail {
            Tail::Lower => (ln_p_unchecked(a, x), 1.0),
            Tail::Upper => (ln_q_unchecked(a, x), -1.0),
        };
        // d ln F / du = ± x·pdf(x) / F
        let slope = (a * u - x - lng - lnf).exp();
        (sign * (lnf - target), slope)
    };

    // Wilson-Hilferty start, or the small-x power law for small shapes.
    let u0 = {
        let p = match tail {
            Tail::Lower => target.exp(),
            Tail::Upper => -target.exp_m1(),
        };
        let p = p.clamp(1e-300, 1.0 - 1e-16);
        if a < 1.0 && p < 0.5 {
            (p.ln() + a.ln() + lng) / a
        } else {
            let z = normal_quantile_approx(p);
            let t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * a.sqrt());
            if t > 0.0 {
                a.ln() + 3.0 * t.ln()
            } else {
                a.ln()
            }
        }
    };
    let u0 = if u0.is_finite() { u0 } else { a.ln() };

    let (mut lo, mut hi) = (u0 - 0.5, u0 + 0.5);
    let mut step = 1.0;
    while residual(lo).0 > 0.0 {
        lo -= step;
        step *= 2.0;
        if lo < -745.0 {
            lo = -745.0;
            break;
        }
    }
    step = 1.0;
    while residual(hi).0 < 0.0 {
        hi += step;
        step *= 2.0;
        if hi > 709.0 {
            hi = 709.0;
            break;
        }
    }

    let mut u = u0.clamp(lo, hi);
    for _ in 0..300 {
        let (r, slope) = residual(u);
        if r == 0.0 {
            break;
        }
        if r < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let newton = u - r / slope;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - u).abs() <= 4.0 * f64::EPSILON * u.abs().max(1.0) || hi - lo <= f64::EPSILON * u.abs().max(1.0) {
            u = next;
            break;
        }
        u = next;
    }
    u.exp()
}

/// Acklam-style rational approximation to the standard normal quantile, used
/// only to seed root finding.
fn normal_quantile_approx(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < 0.02425 {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - 0.02425 {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Quantile of the standard gamma law: the `x` with `P(a, x) = p`.
pub fn gamma_quantile(a: f64, p: f64) -> Result<f64, MathError> {
    check_positive("gamma_quantile", a)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(MathError::domain("gamma_quantile", format!("expected 0 < p < 1, got {p}")));
    }
    Ok(if p <= 0.5 {
        invert_log_tail(a, p.ln(), Tail::Lower)
    } else {
        invert_log_tail(a, (-p).ln_1p(), Tail::Upper)
    })
}

/// The `x` with `ln Q(a, x) = ln_q`, for upper-tail masses too small to pass
/// through `1 − p`.
pub fn gamma_quantile_upper_log(a: f64, ln_q: f64) -> Result<f64, MathError> {
    check_positive("gamma_quantile_upper_log", a)?;
    if !(ln_q < 0.0) || ln_q == f64::NEG_INFINITY {
        return Err(MathError::domain(
            "gamma_quantile_upper_log",
            format!("expected finite ln q < 0, got {ln_q}"),
        ));
    }
    Ok(if ln_q < -std::f64::consts::LN_2 {
        invert_log_tail(a, ln_q, Tail::Upper)
    } else {
        invert_log_tail(a, (-ln_q.exp()).ln_1p(), Tail::Lower)
    })
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn log1p_exp(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else if x > -37.0 {
        x.exp().ln_1p()
    } else {
        x.exp()
    }
}

/// `ln(e^x − 1)` for `x > 0`, accurate at both ends.
#[inline]
pub fn ln_expm1(x: f64) -> f64 {
    if x > 35.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
