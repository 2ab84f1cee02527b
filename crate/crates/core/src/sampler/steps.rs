//! The exact Gibbs steps: censored times, indicators, local scales and `s`.

use rand::Rng;

use crate::distributions::{augmentation_ln, dlh_sample_direct_ln};
use crate::model::{z_weight, GlobalParams, Hyperparams, LatentState, SurvivalDataset};
use crate::numerics::{
    ln_gamma_unchecked, log_add_exp, open_unit, sample_beta, sample_gamma, sample_truncated_gamma_lower,
};

/// `ln g0` beyond which `exp` would overflow; the truncated draw is then
/// taken from the exponential tail approximation directly in log space.
const LN_LOWER_LIMIT: f64 = 700.0;

/// Draws every censored `t_i` from the GG law truncated to `t_i > C_i`,
/// through `g = αθ_i t^γ ~ Ga(α, 1)` truncated to `g > αθ_i C_i^γ`.
pub fn impute_censored_times<R: Rng + ?Sized>(
    rng: &mut R,
    state: &mut LatentState,
    params: &GlobalParams,
    data: &SurvivalDataset,
) {
    let (alpha, gamma) = (params.alpha, params.gamma);
    let ln_alpha = alpha.ln();
    for i in 0..data.n() {
        if data.delta()[i] {
            continue;
        }
        let ln_theta = data.linear_predictor(i, params.beta.as_slice()) - state.log_lambda(i, gamma);
        let ln_c = data.ln_y()[i];
        let ln_g0 = ln_alpha + ln_theta + gamma * ln_c;
        let ln_g = if ln_g0 < LN_LOWER_LIMIT {
            let g = sample_truncated_gamma_lower(rng, alpha, 1.0, ln_g0.exp()).expect("validated parameters");
            g.ln()
        } else {
            // Ga(α,1) beyond g0 ≫ α is g0 + Exp(1 − (α−1)/g0) to first order
            let g0 = ln_g0.exp();
            let slope = if g0.is_finite() { (1.0 - (alpha - 1.0) / g0).max(0.5) } else { 1.0 };
            let e = -open_unit(rng).ln() / slope;
            ln_g0 + (e * (-ln_g0).exp()).ln_1p()
        };
        let mut lt = (ln_g - ln_alpha - ln_theta) / gamma;
        if !(lt > ln_c) {
            lt = ln_c.next_up();
        }
        state.log_t[i] = lt;
    }
}

/// Draws each `z_i` from its two-point conditional. Returns the number of
/// indices where both weights underflowed (only possible with a saturated
/// `η̃_i`); those keep `z_i = 0`.
pub fn update_z<R: Rng + ?Sized>(
    rng: &mut R,
    state: &mut LatentState,
    params: &GlobalParams,
    data: &SurvivalDataset,
    hyper: &Hyperparams,
) -> usize {
    let lga = ln_gamma_unchecked(params.alpha);
    let mut degenerate = 0;
    for i in 0..data.n() {
        let xb = data.linear_predictor(i, params.beta.as_slice());
        let (lt, le) = (state.log_t[i], state.log_eta_tilde[i]);
        let w1 = z_weight(true, xb, lt, le, params, hyper, lga);
        let w0 = z_weight(false, xb, lt, le, params, hyper, lga);
        state.z[i] = if w1 == f64::NEG_INFINITY && w0 == f64::NEG_INFINITY {
            degenerate += 1;
            false
        } else {
            let p1 = (w1 - log_add_exp(w0, w1)).exp();
            open_unit(rng) < p1
        };
    }
    degenerate
}

/// Redraws `η̃_i` (and, for `z_i = 1`, the augmentation triple first).
///
/// For `z_i = 1`: `(u, v, w)` at `η_i = η̃_i^γ`, then `e ~ Ga(v + α, w + α e^{x'β} t^γ)`
/// and `η̃_i = e^{−1/γ}`. For `z_i = 0` the local scale does not enter the
/// likelihood, so `η̃_i` is an exact DLH draw and no triple is needed.
pub fn update_eta<R: Rng + ?Sized>(
    rng: &mut R,
    state: &mut LatentState,
    params: &GlobalParams,
    data: &SurvivalDataset,
    hyper: &Hyperparams,
) {
    let (alpha, gamma, c) = (params.alpha, params.gamma, hyper.c_dlh);
    let ln_alpha = alpha.ln();
    for i in 0..data.n() {
        if state.z[i] {
            let aug = augmentation_ln(rng, gamma * state.log_eta_tilde[i], c);
            state.uvw[i] = aug;
            let xb = data.linear_predictor(i, params.beta.as_slice());
            let ln_rate = log_add_exp(aug.w.ln(), ln_alpha + xb + gamma * state.log_t[i]);
            let e = sample_gamma(rng, aug.v + alpha, 1.0).expect("positive shape");
            let ln_e = e.ln() - ln_rate;
            state.log_eta_tilde[i] = -ln_e / gamma;
        } else {
            state.log_eta_tilde[i] = dlh_sample_direct_ln(rng, c).expect("validated c");
        }
    }
}

/// `s ~ Beta(a_s + Σz, b_s + n − Σz)`.
pub fn update_s<R: Rng + ?Sized>(rng: &mut R, state: &LatentState, hyper: &Hyperparams) -> f64 {
    let k = state.n_outliers() as f64;
    let n = state.n() as f64;
    let s = sample_beta(rng, hyper.a_s + k, hyper.b_s + n - k).expect("positive shapes");
    // keep s strictly inside (0, 1) so that ln s and ln(1−s) stay finite
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}
