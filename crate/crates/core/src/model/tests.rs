use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::*;
use crate::distributions::{dlh_log_density, gg_log_density, gg_sample, gig_log_density_unnormalized, gig_mode, GGParams};
use crate::numerics::{log_gamma, RngStream};
use crate::testutil::{adaptive_simpson, assert_close, mean, std_error};

struct Fixture {
    data: SurvivalDataset,
    state: LatentState,
    params: GlobalParams,
    hyper: Hyperparams,
}

fn random_fixture(seed: u64, n: usize) -> Fixture {
    let mut rng = RngStream::new(seed, 0);
    let p = 3;
    let mut xs = Vec::with_capacity(n * p);
    for _ in 0..n {
        xs.extend([1.0, rng.random_range(0.0..2.0), rng.random_range(-2.0..2.0)]);
    }
    let x = DMatrix::from_row_slice(n, p, &xs);
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
    let delta: Vec<bool> = (0..n).map(|_| rng.random_bool(0.8)).collect();
    let data = SurvivalDataset::new(y.clone(), delta.clone(), x).unwrap();
    let mut state = LatentState::initial(&y, &delta);
    for i in 0..n {
        state.z[i] = rng.random_bool(0.3);
        state.log_eta_tilde[i] = rng.random_range(-1.0..3.0);
        if !delta[i] {
            state.log_t[i] = y[i].ln() + rng.random_range(0.01..1.0);
        }
    }
    let params = GlobalParams {
        alpha: rng.random_range(0.5..5.0),
        beta: DVector::from_vec(vec![rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]),
        gamma: rng.random_range(0.5..2.5),
        s: rng.random_range(0.05..0.5),
    };
    let mut hyper = Hyperparams::default_for(p);
    hyper.b_beta = DVector::from_vec(vec![0.3, -0.2, 0.1]);
    hyper.a_beta = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.1, 0.4, 0.05, 0.0, 0.05, 0.3]);
    hyper.c_alpha = 2.0;
    hyper.c_gamma = 1.5;
    Fixture { data, state, params, hyper }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-8)
}

#[test]
fn alpha_derivatives_match_finite_differences() {
    for seed in 0..20 {
        let f = random_fixture(100 + seed, 40);
        let cond = AlphaConditional::new(&f.state, &f.params, &f.data, &f.hyper);
        let at = f.params.alpha * f.params.gamma * f.params.gamma;
        let h = 1e-5 * at;
        let d = cond.eval(at);
        let fd1 = (cond.eval(at + h).value - cond.eval(at - h).value) / (2.0 * h);
        let fd2 = (cond.eval(at + h).d1 - cond.eval(at - h).d1) / (2.0 * h);
        assert!(rel_err(d.d1, fd1) < 1e-5, "seed {seed}: d1 {} vs {fd1}", d.d1);
        assert!(rel_err(d.d2, fd2) < 1e-5, "seed {seed}: d2 {} vs {fd2}", d.d2);
        assert_eq!(cond.eval(0.0).value, f64::NEG_INFINITY);
        assert_eq!(cond.eval(-1.0).value, f64::NEG_INFINITY);
    }
}

#[test]
fn alpha_conditional_is_proper() {
    let f = random_fixture(7, 40);
    let cond = AlphaConditional::new(&f.state, &f.params, &f.data, &f.hyper);
    let mid = cond.eval(f.params.alpha * f.params.gamma.powi(2)).value;
    assert!(cond.eval(1e-9).value < mid - 100.0);
    assert!(cond.eval(1e9).value < mid - 100.0);
}

#[test]
fn alpha_conditional_without_data_is_the_gig_prior() {
    let mut hyper = Hyperparams::default_for(1);
    (hyper.a_alpha, hyper.b_alpha, hyper.c_alpha) = (0.7, 1.3, 3.0);
    let gamma = 1.6;
    let cond = AlphaConditional::from_parts(0, 0.0, gamma, &hyper);
    let at_star = gig_mode(0.7, 1.3, 3.0) * gamma * gamma;
    assert!(cond.eval(at_star).d1.abs() < 1e-12);
    assert!(cond.eval(at_star * 1.01).value < cond.eval(at_star).value);
    assert!(cond.eval(at_star * 0.99).value < cond.eval(at_star).value);
    let v = cond.eval(2.0).value - cond.eval(5.0).value;
    let w = gig_log_density_unnormalized(2.0 / (gamma * gamma), 0.7, 1.3, 3.0).unwrap()
        - gig_log_density_unnormalized(5.0 / (gamma * gamma), 0.7, 1.3, 3.0).unwrap();
    assert_close(v, w, 1e-12);
}

#[test]
fn beta_derivatives_match_finite_differences() {
    for seed in 0..20 {
        let f = random_fixture(200 + seed, 40);
        let cond = BetaConditional::new(&f.state, f.params.alpha, f.params.gamma, &f.data, &f.hyper);
        let bt = &f.params.beta / f.params.gamma;
        let d = cond.eval(&bt);
        assert_close(d.value, cond.value(&bt), 1e-12);
        for j in 0..3 {
            let h = 1e-5 * bt[j].abs().max(1.0);
            let mut up = bt.clone();
            up[j] += h;
            let mut dn = bt.clone();
            dn[j] -= h;
            let fd = (cond.value(&up) - cond.value(&dn)) / (2.0 * h);
            assert!(rel_err(d.gradient[j], fd) < 1e-5 || (d.gradient[j] - fd).abs() < 1e-6, "seed {seed} g{j}");
            let (gu, gd) = (cond.eval(&up).gradient, cond.eval(&dn).gradient);
            for k in 0..3 {
                let fd2 = (gu[k] - gd[k]) / (2.0 * h);
                assert!(rel_err(d.hessian[(k, j)], fd2) < 1e-5, "seed {seed} H{k}{j}");
            }
        }
        assert!((-d.hessian).cholesky().is_some(), "Hessian not negative definite");
    }
}

#[test]
fn beta_mode_follows_a_dominant_prior() {
    let mut f = random_fixture(9, 30);
    f.hyper.a_beta = DMatrix::identity(3, 3) * 1e10;
    let cond = BetaConditional::new(&f.state, f.params.alpha, f.params.gamma, &f.data, &f.hyper);
    let mut b = DVector::zeros(3);
    for _ in 0..5 {
        let d = cond.eval(&b);
        b -= d.hessian.lu().solve(&d.gradient).unwrap();
    }
    let target = &f.hyper.b_beta / f.params.gamma;
    assert!((b - target).amax() < 1e-6);
}

#[test]
fn beta_likelihood_is_invariant_under_time_rescaling() {
    let f = random_fixture(11, 30);
    let k: f64 = 3.7;
    let mut scaled = f.state.clone();
    for lt in &mut scaled.log_t {
        *lt += k.ln();
    }
    let lik = |state: &LatentState, bt: &DVector<f64>| {
        let cond = BetaConditional::new(state, f.params.alpha, f.params.gamma, &f.data, &f.hyper);
        let r = bt * f.params.gamma - &f.hyper.b_beta;
        cond.value(bt) + 0.5 * r.dot(&(&f.hyper.a_beta * &r))
    };
    let bt = &f.params.beta / f.params.gamma;
    let mut shifted = bt.clone();
    // intercept of β moves by −γ ln k, so that of β̃ moves by −ln k
    shifted[0] -= k.ln();
    assert_close(lik(&scaled, &shifted), lik(&f.state, &bt), 1e-11);
}

/// Term-by-term transcription of the product form of the γ̃ conditional.
fn gamma_tilde_reference(gt: f64, f: &Fixture) -> f64 {
    let g = gt / (1.0 - gt);
    let h = &f.hyper;
    let (n, p) = (f.data.n() as f64, f.data.p() as f64);
    let at = f.params.alpha * f.params.gamma.powi(2);
    let bt = &f.params.beta / f.params.gamma;
    let a = at / (g * g);
    let mut v = p * g.ln() - 2.0 * g.ln();
    v += (h.c_alpha - 1.0) * a.ln() - h.a_alpha * a - h.b_alpha / a;
    let r = &bt * g - &h.b_beta;
    v -= 0.5 * r.dot(&(&h.a_beta * &r));
    v += (h.c_gamma - 1.0) * g.ln() - h.a_gamma * g - h.b_gamma / g;
    for i in 0..f.data.n() {
        let eta = f.state.eta_tilde(i);
        if f.state.z[i] {
            let lam = eta.powf(g);
            v += (g / eta).ln() + (lam / (1.0 + lam)).ln() - lam.ln_1p().ln_1p()
                - (1.0 + h.c_dlh) * lam.ln_1p().ln_1p().ln_1p();
        }
    }
    v += n * g.ln() + n * (a * a.ln() - log_gamma(a).unwrap());
    let mut s = 0.0;
    for i in 0..f.data.n() {
        let xb = f.data.linear_predictor(i, bt.as_slice()) * g;
        let ratio = (g * f.state.log_t[i] - if f.state.z[i] { g * f.state.log_eta_tilde[i] } else { 0.0 }).exp();
        s += xb + ratio.ln() - xb.exp() * ratio;
    }
    v + a * s - 2.0 * (1.0 - gt).ln()
}

#[test]
fn gamma_tilde_matches_product_form() {
    for seed in 0..5 {
        let f = random_fixture(300 + seed, 30);
        let base = log_complete_conditional_gamma_tilde(0.5, &f.state, &f.params, &f.data, &f.hyper)
            - gamma_tilde_reference(0.5, &f);
        for &gt in &[0.2, 0.35, 0.5, 0.65, 0.8] {
            let ours = log_complete_conditional_gamma_tilde(gt, &f.state, &f.params, &f.data, &f.hyper);
            assert_close(ours - gamma_tilde_reference(gt, &f), base, 1e-8);
        }
        for &gt in &[0.0, 1.0, -0.1] {
            assert_eq!(
                log_complete_conditional_gamma_tilde(gt, &f.state, &f.params, &f.data, &f.hyper),
                f64::NEG_INFINITY
            );
        }
    }
}

#[test]
fn gamma_tilde_jacobian_preserves_mass() {
    // Without data, ∫ exp(cond(γ̃)) dγ̃ = ∫ p_γ(γ) dγ.
    let mut hyper = Hyperparams::default_for(1);
    (hyper.a_gamma, hyper.b_gamma, hyper.c_gamma) = (1.0, 0.5, 2.5);
    (hyper.a_alpha, hyper.b_alpha, hyper.c_alpha) = (1.0, 1.0, 2.0);
    let data = SurvivalDataset::empty(1);
    let state = LatentState::initial(&[], &[]);
    let bt = DVector::from_vec(vec![0.4]);
    let cond = GammaTildeConditional::new(&state, AlphaCoupling::Tilde(1.7), &bt, &data, &hyper);
    let lhs = adaptive_simpson(&|gt: f64| cond.eval(gt).exp(), 0.0, 1.0, 1e-13);
    let p_gamma = |g: f64| {
        if g <= 0.0 {
            return 0.0;
        }
        let a = 1.7 / (g * g);
        let r = bt[0] * g - hyper.b_beta[0];
        (g.ln() - 2.0 * g.ln() + gig_log_density_unnormalized(a, 1.0, 1.0, 2.0).unwrap()
            - 0.5 * hyper.a_beta[(0, 0)] * r * r
            + gig_log_density_unnormalized(g, 1.0, 0.5, 2.5).unwrap())
        .exp()
    };
    let rhs = crate::testutil::integrate_to_infinity(&p_gamma, 0.0, 1e-13);
    assert!(rel_err(lhs, rhs) < 1e-6, "{lhs} vs {rhs}");
}

#[test]
fn z_weight_closed_forms() {
    let mut f = random_fixture(13, 10);
    let prob = |f: &Fixture, i: usize| {
        let w1 = log_bernoulli_weight_z(i, true, &f.state, &f.params, &f.data, &f.hyper);
        let w0 = log_bernoulli_weight_z(i, false, &f.state, &f.params, &f.data, &f.hyper);
        1.0 / (1.0 + (w0 - w1).exp())
    };
    f.state.log_eta_tilde[2] = 0.0;
    let (s, g) = (f.params.s, f.params.gamma);
    assert_close(prob(&f, 2), s * g / (s * g + 1.0 - s), 1e-12);
    f.params.gamma = 1.0;
    assert_close(prob(&f, 2), s, 1e-12);
    f.params.s = 1e-300;
    assert!(prob(&f, 2) < 1e-290);
    // a saturated η̃ leaves no mass for the slab and must not produce NaN
    f.params.s = 0.3;
    f.state.log_eta_tilde[3] = f64::INFINITY;
    assert_eq!(log_bernoulli_weight_z(3, true, &f.state, &f.params, &f.data, &f.hyper), f64::NEG_INFINITY);
}

#[test]
fn z_weight_matches_displayed_product() {
    let f = random_fixture(14, 10);
    let (a, g, s) = (f.params.alpha, f.params.gamma, f.params.s);
    for i in 0..10 {
        let eta = f.state.eta_tilde(i);
        let t = f.state.t(i);
        let xb = f.data.linear_predictor(i, f.params.beta.as_slice());
        let w = |z: f64| {
            let e = 1.0 - z + z * g;
            let rate = xb.exp() / eta.powf(z * g);
            let y = a * t.powf(g);
            let ga = a * rate.ln() - log_gamma(a).unwrap() + (a - 1.0) * y.ln() - rate * y;
            z * s.ln() + (1.0 - z) * (1.0 - s).ln() + e.ln() + z * (g - 1.0) * eta.ln()
                + dlh_log_density(eta.powf(e), f.hyper.c_dlh).unwrap()
                + ga
        };
        assert_close(log_bernoulli_weight_z(i, true, &f.state, &f.params, &f.data, &f.hyper), w(1.0), 1e-10);
        assert_close(log_bernoulli_weight_z(i, false, &f.state, &f.params, &f.data, &f.hyper), w(0.0), 1e-10);
    }
}

fn single(y: f64, delta: bool) -> SurvivalDataset {
    SurvivalDataset::new(vec![y], vec![delta], DMatrix::from_element(1, 1, 1.0)).unwrap()
}

#[test]
fn observed_likelihood_values() {
    let unit = GlobalParams { alpha: 1.0, beta: DVector::from_vec(vec![0.0]), gamma: 1.0, s: 0.1 };
    assert_close(log_observed_likelihood(&unit, &single(2.0, false), &[1.0]).unwrap(), -2.0, 1e-14);

    let f = random_fixture(15, 20);
    let all_events = f.data.with_responses(f.data.y().to_vec(), vec![true; 20]).unwrap();
    let ones = vec![1.0; 20];
    let direct: f64 = (0..20)
        .map(|i| {
            let th = f.data.linear_predictor(i, f.params.beta.as_slice()).exp();
            gg_log_density(f.data.y()[i], &GGParams::new(f.params.alpha, f.params.gamma, th).unwrap()).unwrap()
        })
        .sum();
    assert_close(log_observed_likelihood(&f.params, &all_events, &ones).unwrap(), direct, 1e-12);
    assert!(log_observed_likelihood(&f.params, &all_events, &vec![0.0; 20]).is_err());
}

#[test]
fn censored_contribution_matches_simulation() {
    let params = GlobalParams { alpha: 2.5, beta: DVector::from_vec(vec![0.3]), gamma: 1.4, s: 0.1 };
    let lam = 1.8;
    let y = 0.9;
    let ll = log_observed_likelihood(&params, &single(y, false), &[lam]).unwrap().exp();
    let gg = GGParams::new(2.5, 1.4, 0.3f64.exp() / lam).unwrap();
    let mut rng = RngStream::new(16, 0);
    let hits: Vec<f64> = (0..200_000).map(|_| (gg_sample(&mut rng, &gg) > y) as u8 as f64).collect();
    assert!((mean(&hits) - ll).abs() < 3.0 * std_error(&hits));
}

#[test]
fn event_likelihood_integrates_to_one() {
    let params = GlobalParams { alpha: 3.0, beta: DVector::from_vec(vec![-0.4]), gamma: 0.8, s: 0.1 };
    let f = |y: f64| {
        if y <= 0.0 {
            0.0
        } else {
            log_observed_likelihood(&params, &single(y, true), &[2.0]).unwrap().exp()
        }
    };
    let mass = crate::testutil::integrate_to_infinity(&f, 0.0, 1e-12);
    assert!((mass - 1.0).abs() < 1e-8, "{mass}");
}
