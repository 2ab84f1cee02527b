//! Unnormalized generalized inverse Gaussian log density
//! `(c0 − 1) ln x − a0 x − b0 / x`. Normalizing constants cancel in every
//! Metropolis-Hastings ratio, so none is computed.

use crate::numerics::MathError;

pub fn gig_log_density_unnormalized(x: f64, a0: f64, b0: f64, c0: f64) -> Result<f64, MathError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(MathError::domain("gig_log_density_unnormalized", format!("x must be positive, got {x}")));
    }
    if !(a0 > 0.0 && b0 > 0.0) {
        return Err(MathError::domain(
            "gig_log_density_unnormalized",
            format!("rates must be positive, got a0 = {a0}, b0 = {b0}"),
        ));
    }
    Ok(gig_ln(x, a0, b0, c0))
}

#[inline]
pub(crate) fn gig_ln(x: f64, a0: f64, b0: f64, c0: f64) -> f64 {
    (c0 - 1.0) * x.ln() - a0 * x - b0 / x
}

/// Mode of the GIG kernel.
pub fn gig_mode(a0: f64, b0: f64, c0: f64) -> f64 {
    let m = c0 - 1.0;
    (m + (m * m + 4.0 * a0 * b0).sqrt()) / (2.0 * a0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::assert_close;

    #[test]
    fn unit_point_and_errors() {
        assert_close(gig_log_density_unnormalized(1.0, 0.3, 0.7, 4.0).unwrap(), -1.0, 1e-15);
        assert!(gig_log_density_unnormalized(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(gig_log_density_unnormalized(1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn reciprocal_identity() {
        // kernel(x; a, b, c) = kernel(1/x; b, a, 2 − c), and with the x^{-2}
        // Jacobian 1/x has kernel(·; b, a, −c).
        let (a, b, c) = (1.3, 0.4, 2.2);
        for &x in &[0.1, 0.5, 2.0, 7.0] {
            assert_close(gig_ln(x, a, b, c), gig_ln(1.0 / x, b, a, 2.0 - c), 1e-12);
            let y = 1.0 / x;
            assert_close(gig_ln(1.0 / y, a, b, c) - 2.0 * y.ln(), gig_ln(y, b, a, -c), 1e-12);
        }
    }

    #[test]
    fn gradient_vanishes_at_mode() {
        for &(a, b, c) in &[(1.0, 1.0, 3.0), (0.01, 0.01, 2.0), (5.0, 0.2, 1.5)] {
            let m = gig_mode(a, b, c);
            let h = 1e-6 * m;
            let g = (gig_ln(m + h, a, b, c) - gig_ln(m - h, a, b, c)) / (2.0 * h);
            assert!(g.abs() < 1e-5 * (1.0 + (c - 1.0) / m), "({a},{b},{c}) grad {g}");
        }
    }
}
