use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{AdaptationPolicy, McmcConfig, ModelKind};
use super::proposals::{
    gamma_from_derivs, gamma_log_density, mh_decide, moment_matched_gamma, normal_from_derivs, sample_gamma_proposal,
    NormalProposal, PiecewiseLinearProposal,
};
use super::steps::{impute_censored_times, update_eta, update_s, update_z};
use crate::error::Result;
use crate::model::{
    AlphaConditional, AlphaCoupling, BetaConditional, GammaTildeConditional, GlobalParams, Hyperparams, LatentState,
    ReparamView, SurvivalDataset,
};
use crate::numerics::{stream_id, RngStream};
use crate::posterior::{PosteriorDraws, RunManifest};

/// RNG stream domain for chains; chain `k` uses `stream_id(CHAIN_STREAM_DOMAIN, k)`.
pub const CHAIN_STREAM_DOMAIN: u16 = 1;

const ALPHA_HISTORY: usize = 50;
const MAX_REFITS: usize = 50;
const LAD_ITERATIONS: usize = 100;

/// Tuning parameters of the `α̃` gamma proposal and the `β̃` normal proposal.
#[derive(Debug, Clone)]
pub struct ProposalState {
    pub alpha_shape: f64,
    pub alpha_rate: f64,
    pub beta: NormalProposal,
    alpha_history: VecDeque<f64>,
}

impl ProposalState {
    pub fn new(alpha_tilde: f64, beta_tilde: &DVector<f64>) -> Self {
        let p = beta_tilde.len();
        Self {
            alpha_shape: 1.0,
            alpha_rate: 1.0 / alpha_tilde,
            beta: NormalProposal::from_precision(beta_tilde.clone(), DMatrix::identity(p, p)),
            alpha_history: VecDeque::with_capacity(ALPHA_HISTORY),
        }
    }

    pub fn alpha_mean(&self) -> f64 {
        self.alpha_shape / self.alpha_rate
    }

    fn record_alpha(&mut self, x: f64) {
        if self.alpha_history.len() == ALPHA_HISTORY {
            self.alpha_history.pop_front();
        }
        self.alpha_history.push_back(x);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptCounter {
    pub proposed: u64,
    pub accepted: u64,
}

impl AcceptCounter {
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }

    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// Per-chain bookkeeping. Acceptance counters cover the post-burn-in scans.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub alpha_tilde: AcceptCounter,
    pub beta_tilde: AcceptCounter,
    pub gamma_tilde: AcceptCounter,
    pub gamma_fit_safeguards: u64,
    pub normal_fit_inflations: u64,
    pub unconverged_refits: u64,
    pub nonfinite_ratios: u64,
    pub degenerate_z: u64,
    pub gamma_grid_failures: u64,
}

/// Everything a sweep mutates.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub view: ReparamView,
    pub s: f64,
    pub latent: LatentState,
    pub proposals: ProposalState,
}

impl ChainState {
    /// Natural-coordinate parameters, with the frozen ones of `kind` set
    /// exactly.
    pub fn params(&self, kind: ModelKind) -> GlobalParams {
        let mut p = self.view.to_params(self.s);
        if !kind.alpha_free() {
            p.alpha = 1.0;
        }
        if !kind.gamma_free() {
            p.gamma = 1.0;
        }
        p
    }

    /// `α = 1`, `γ = 1`, `β` from a least-absolute-deviations fit of `ln t`
    /// on `X` (negated: the mean time falls as `x'β` grows), `s` at its prior mean, `z = 0`,
    /// `η̃ = 1`, censored `t = 1.1 C`.
    pub fn initialize(data: &SurvivalDataset, hyper: &Hyperparams, config: &McmcConfig, kind: ModelKind) -> Self {
        let latent = LatentState::initial(data.y(), data.delta());
        let mut params = match &config.init {
            Some(p) => p.clone(),
            None => {
                let beta = robust_start(data, &latent.log_t);
                GlobalParams { alpha: 1.0, beta, gamma: 1.0, s: hyper.a_s / (hyper.a_s + hyper.b_s) }
            }
        };
        if !kind.alpha_free() {
            params.alpha = 1.0;
        }
        if !kind.gamma_free() {
            params.gamma = 1.0;
        }
        let view = ReparamView::from_params(&params);
        let proposals = ProposalState::new(view.alpha_tilde, &view.beta_tilde);
        Self { view, s: params.s, latent, proposals }
    }
}

fn robust_start(data: &SurvivalDataset, log_t: &[f64]) -> DVector<f64> {
    let p = data.p();
    if data.n() < p {
        return DVector::zeros(p);
    }
    let x = data.x();
    let y = DVector::from_column_slice(log_t);
    let Ok(mut b) = x.clone().svd(true, true).solve(&y, 1e-12) else {
        return DVector::zeros(p);
    };
    // least absolute deviations by reweighted least squares
    for _ in 0..LAD_ITERATIONS {
        let r = &y - x * &b;
        let w = r.map(|ri| 1.0 / ri.abs().max(1e-6));
        let xw = DMatrix::from_fn(x.nrows(), p, |i, j| x[(i, j)] * w[i]);
        let lhs = xw.tr_mul(x);
        let rhs = xw.tr_mul(&y);
        match lhs.cholesky().map(|c| c.solve(&rhs)) {
            Some(next) if next.iter().all(|v| v.is_finite()) => {
                let moved = (&next - &b).amax();
                b = next;
                if moved < 1e-9 {
                    break;
                }
            }
            _ => break,
        }
    }
    if b.iter().all(|v| v.is_finite()) {
        -b
    } else {
        DVector::zeros(p)
    }
}

/// Fixed inputs of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepContext<'a> {
    pub kind: ModelKind,
    pub data: &'a SurvivalDataset,
    pub hyper: &'a Hyperparams,
    pub grid_size: usize,
    pub policy: AdaptationPolicy,
    /// Refit the `α̃`/`β̃` proposals in this scan.
    pub refit: bool,
    /// Count acceptances in this scan.
    pub record: bool,
    /// Before the MH step, move `α̃` and `β̃` to the centre of the refitted
    /// proposal whenever that raises their conditional density. Used only
    /// early in burn-in, to leave the tails where an independence sampler
    /// with a light-tailed proposal stalls.
    pub warm_up: bool,
}

/// One full scan in the order censored `t` → `z` → `(u, v, w, η̃)` → `s` →
/// `α̃` → `β̃` → `γ̃`, skipping the blocks the model kind freezes.
pub fn gibbs_sweep<R: Rng + ?Sized>(rng: &mut R, state: &mut ChainState, ctx: &SweepContext, diag: &mut Diagnostics) {
    let (data, hyper, kind) = (ctx.data, ctx.hyper, ctx.kind);

    let params = state.params(kind);
    impute_censored_times(rng, &mut state.latent, &params, data);

    if kind.is_robust() {
        diag.degenerate_z += update_z(rng, &mut state.latent, &params, data, hyper) as u64;
        update_eta(rng, &mut state.latent, &params, data, hyper);
        state.s = update_s(rng, &state.latent, hyper);
    }

    if kind.alpha_free() {
        update_alpha_tilde(rng, state, ctx, diag);
    }
    update_beta_tilde(rng, state, ctx, diag);
    if kind.gamma_free() {
        update_gamma_tilde(rng, state, ctx, diag);
    }
}

fn update_alpha_tilde<R: Rng + ?Sized>(rng: &mut R, state: &mut ChainState, ctx: &SweepContext, diag: &mut Diagnostics) {
    let params = state.params(ctx.kind);
    let cond = AlphaConditional::new(&state.latent, &params, ctx.data, ctx.hyper);
    if ctx.refit {
        let rounds = if ctx.policy == AdaptationPolicy::Converged { MAX_REFITS } else { 1 };
        let mut converged = rounds == 1;
        for _ in 0..rounds {
            let c_old = state.proposals.alpha_mean();
            let d = cond.eval(c_old);
            match gamma_from_derivs(c_old, d.d1, d.d2) {
                Some((a, b)) => {
                    state.proposals.alpha_shape = a;
                    state.proposals.alpha_rate = b;
                }
                None => {
                    diag.gamma_fit_safeguards += 1;
                    let hist: Vec<f64> = state.proposals.alpha_history.iter().copied().collect();
                    let (a, b) = moment_matched_gamma(&hist).unwrap_or((1.0, 1.0 / c_old));
                    state.proposals.alpha_shape = a;
                    state.proposals.alpha_rate = b;
                    converged = true;
                    break;
                }
            }
            if (state.proposals.alpha_mean() - c_old).abs() <= 1e-10 * c_old {
                converged = true;
                break;
            }
        }
        if !converged {
            diag.unconverged_refits += 1;
        }
    }
    let (a, b) = (state.proposals.alpha_shape, state.proposals.alpha_rate);
    if ctx.warm_up {
        let centre = a / b;
        if cond.eval(centre).value > cond.eval(state.view.alpha_tilde).value {
            state.view.alpha_tilde = centre;
        }
    }
    let current = state.view.alpha_tilde;
    let proposal = sample_gamma_proposal(rng, a, b);
    let w = |x: f64| cond.eval(x).value - gamma_log_density(x, a, b);
    let out = mh_decide(rng, current, proposal, w(proposal) - w(current));
    diag.nonfinite_ratios += out.nonfinite as u64;
    if ctx.record {
        diag.alpha_tilde.record(out.accepted);
    }
    if out.accepted {
        state.proposals.record_alpha(out.value);
    }
    state.view.alpha_tilde = out.value;
}

fn update_beta_tilde<R: Rng + ?Sized>(rng: &mut R, state: &mut ChainState, ctx: &SweepContext, diag: &mut Diagnostics) {
    let params = state.params(ctx.kind);
    let cond = BetaConditional::new(&state.latent, params.alpha, params.gamma, ctx.data, ctx.hyper);
    if ctx.refit {
        let rounds = if ctx.policy == AdaptationPolicy::Converged { MAX_REFITS } else { 1 };
        let mut converged = rounds == 1;
        for _ in 0..rounds {
            let mu_old = state.proposals.beta.mu.clone();
            let d = cond.eval(&mu_old);
            let fit = normal_from_derivs(&mu_old, &d.gradient, &d.hessian);
            diag.normal_fit_inflations += fit.inflated as u64;
            let moved = (&fit.mu - &mu_old).amax();
            state.proposals.beta = fit;
            if moved <= 1e-10 * (1.0 + mu_old.amax()) {
                converged = true;
                break;
            }
        }
        if !converged {
            diag.unconverged_refits += 1;
        }
    }
    let prop = &state.proposals.beta;
    if ctx.warm_up && cond.value(&prop.mu) > cond.value(&state.view.beta_tilde) {
        state.view.beta_tilde = prop.mu.clone();
    }
    let proposal = prop.sample(rng);
    let current = state.view.beta_tilde.clone();
    let w = |x: &DVector<f64>| cond.value(x) - prop.log_density(x);
    let log_ratio = w(&proposal) - w(&current);
    let out = mh_decide(rng, current, proposal, log_ratio);
    diag.nonfinite_ratios += out.nonfinite as u64;
    if ctx.record {
        diag.beta_tilde.record(out.accepted);
    }
    state.view.beta_tilde = out.value;
}

fn update_gamma_tilde<R: Rng + ?Sized>(rng: &mut R, state: &mut ChainState, ctx: &SweepContext, diag: &mut Diagnostics) {
    let coupling = if ctx.kind.alpha_free() {
        AlphaCoupling::Tilde(state.view.alpha_tilde)
    } else {
        AlphaCoupling::Fixed(1.0)
    };
    let cond = GammaTildeConditional::new(&state.latent, coupling, &state.view.beta_tilde, ctx.data, ctx.hyper);
    let Some(pl) = PiecewiseLinearProposal::build(ctx.grid_size, |x| cond.eval(x)) else {
        diag.gamma_grid_failures += 1;
        return;
    };
    let current = state.view.gamma_tilde;
    let proposal = pl.sample(rng);
    let w = |x: f64| cond.eval(x) - pl.log_density(x);
    let out = mh_decide(rng, current, proposal, w(proposal) - w(current));
    diag.nonfinite_ratios += out.nonfinite as u64;
    if ctx.record {
        diag.gamma_tilde.record(out.accepted);
    }
    state.view.gamma_tilde = out.value;
    if !ctx.kind.alpha_free() {
        let g = state.view.gamma();
        state.view.alpha_tilde = g * g;
    }
}

/// Runs one chain on stream `stream_id(CHAIN_STREAM_DOMAIN, chain)`.
pub fn run_chain_on_stream(
    data: &SurvivalDataset,
    hyper: &Hyperparams,
    config: &McmcConfig,
    kind: ModelKind,
    chain: u32,
) -> Result<PosteriorDraws> {
    config.validate()?;
    hyper.validate(data.p())?;
    let mut rng = RngStream::new(config.seed, stream_id(CHAIN_STREAM_DOMAIN, chain as u64));
    let mut state = ChainState::initialize(data, hyper, config, kind);
    let mut diag = Diagnostics::default();
    let mut draws = PosteriorDraws::with_capacity(kind, data.n(), data.p(), config.n_saved());
    for it in 0..config.n_iter {
        let in_burn_in = it < config.burn_in;
        let refit = match config.adaptation {
            AdaptationPolicy::BurnInOnly => in_burn_in || it == 0,
            AdaptationPolicy::EveryScan | AdaptationPolicy::Converged => true,
        };
        let ctx = SweepContext {
            kind,
            data,
            hyper,
            grid_size: config.grid_size,
            policy: config.adaptation,
            refit,
            record: !in_burn_in,
            warm_up: it < config.burn_in / 2,
        };
        gibbs_sweep(&mut rng, &mut state, &ctx, &mut diag);
        if !in_burn_in && (it + 1 - config.burn_in).is_multiple_of(config.thin) {
            draws.push(&state.params(kind), &state.latent, chain);
        }
    }
    draws.manifest = RunManifest::new(kind, config, hyper, data, 1, vec![diag]);
    Ok(draws)
}

pub fn run_chain(data: &SurvivalDataset, hyper: &Hyperparams, config: &McmcConfig, kind: ModelKind) -> Result<PosteriorDraws> {
    run_chain_on_stream(data, hyper, config, kind, 0)
}

/// `k` independent chains on distinct streams, concatenated in chain order.
pub fn run_chains(
    data: &SurvivalDataset,
    hyper: &Hyperparams,
    config: &McmcConfig,
    kind: ModelKind,
    k: usize,
    workers: usize,
) -> Result<PosteriorDraws> {
    let chains = crate::parallel::map_indexed(k, workers, |c| run_chain_on_stream(data, hyper, config, kind, c as u32));
    let mut merged: Option<PosteriorDraws> = None;
    let mut diags = Vec::with_capacity(k);
    for d in chains {
        let d = d?;
        diags.extend(d.manifest.diagnostics.iter().cloned());
        match merged.as_mut() {
            None => merged = Some(d),
            Some(m) => m.append(d),
        }
    }
    let mut merged = merged.ok_or_else(|| crate::Error::config("at least one chain is required"))?;
    merged.manifest = RunManifest::new(kind, config, hyper, data, k, diags);
    Ok(merged)
}
