//! Random-walk Metropolis updates for the risk-neutral parameters and the
//! volatility-of-volatility pair `(rho, sigma_omega)`.
//!
//! Outside the reduced mode, models with jumps use targets with the jump
//! indicators and sizes integrated out (see [`super::collapsed`]); the
//! caller must redraw the jumps afterwards. Otherwise the targets come from
//! sufficient statistics collected once per sweep, so each proposal costs
//! O(1) except the jump-intensity pair.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::collapsed::{MixtureDays, MixtureParams};
use super::likelihood::Dynamics;
use super::types::{LatentState, Observations, PriorHyper};
use crate::model::{affine_loadings, ModelVariant, ParamId, Params, QParams};

/// Step size with acceptance bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomWalk {
    pub scale: f64,
    pub accepted: u64,
    pub proposed: u64,
    window_accepted: u32,
    window_proposed: u32,
}

impl RandomWalk {
    pub fn new(scale: f64) -> Self {
        RandomWalk {
            scale,
            accepted: 0,
            proposed: 0,
            window_accepted: 0,
            window_proposed: 0,
        }
    }

    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.window_proposed += 1;
        if accepted {
            self.accepted += 1;
            self.window_accepted += 1;
        }
    }

    /// Rescale toward the target acceptance rate using the current window.
    pub fn adapt(&mut self, target: f64) {
        if self.window_proposed > 0 {
            let rate = self.window_accepted as f64 / self.window_proposed as f64;
            self.scale = (self.scale * (2.0 * (rate - target)).exp()).clamp(1e-10, 1e3);
        }
        self.window_accepted = 0;
        self.window_proposed = 0;
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Index of each risk-neutral block in [`QSteps`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QBlock {
    Alpha,
    KappaQ,
    Lambda0,
    Lambda1,
    MuY,
    MuOmega,
    SigmaYJSq,
}

impl QBlock {
    pub const ALL: [QBlock; 7] = [
        QBlock::Alpha,
        QBlock::KappaQ,
        QBlock::Lambda0,
        QBlock::Lambda1,
        QBlock::MuY,
        QBlock::MuOmega,
        QBlock::SigmaYJSq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QBlock::Alpha => "alpha_omega",
            QBlock::KappaQ => "kappa_omega_Q",
            QBlock::Lambda0 => "lambda0",
            QBlock::Lambda1 => "lambda1",
            QBlock::MuY => "mu_y",
            QBlock::MuOmega => "mu_omega",
            QBlock::SigmaYJSq => "sigma_y_J",
        }
    }

    fn is_free(self, variant: ModelVariant) -> bool {
        match self {
            QBlock::Alpha | QBlock::KappaQ => true,
            QBlock::Lambda0 | QBlock::MuY | QBlock::SigmaYJSq => variant.has_jumps(),
            QBlock::Lambda1 => variant.has_state_intensity(),
            QBlock::MuOmega => variant.has_vol_jumps(),
        }
    }

    fn get(self, q: &QParams) -> f64 {
        match self {
            QBlock::Alpha => q.alpha_omega,
            QBlock::KappaQ => q.kappa_omega_q,
            QBlock::Lambda0 => q.lambda0,
            QBlock::Lambda1 => q.lambda1,
            QBlock::MuY => q.mu_y,
            QBlock::MuOmega => q.mu_omega,
            QBlock::SigmaYJSq => q.sigma_y_j * q.sigma_y_j,
        }
    }

    fn set(self, q: &mut QParams, v: f64) {
        match self {
            QBlock::Alpha => q.alpha_omega = v,
            QBlock::KappaQ => q.kappa_omega_q = v,
            QBlock::Lambda0 => q.lambda0 = v,
            QBlock::Lambda1 => q.lambda1 = v,
            QBlock::MuY => q.mu_y = v,
            QBlock::MuOmega => q.mu_omega = v,
            QBlock::SigmaYJSq => q.sigma_y_j = v.max(0.0).sqrt(),
        }
    }
}

/// Sums for the VVIX² sum of squared errors as a function of `(A, B)`.
#[derive(Debug, Clone, Copy, Default)]
struct VvixSums {
    n: f64,
    vv: f64,
    v: f64,
    vw: f64,
    w: f64,
    ww: f64,
}

impl VvixSums {
    fn collect(data: &Observations, state: &LatentState) -> Self {
        let mut s = VvixSums::default();
        for i in 1..=data.days() {
            let v = data.vvix_sq[i];
            let w = state.omega[i];
            s.n += 1.0;
            s.vv += v * v;
            s.v += v;
            s.vw += v * w;
            s.w += w;
            s.ww += w * w;
        }
        s
    }

    fn sse(&self, a: f64, b: f64) -> f64 {
        (self.vv - 2.0 * a * self.v - 2.0 * b * self.vw
            + self.n * a * a
            + 2.0 * a * b * self.w
            + b * b * self.ww)
            .max(0.0)
    }
}

/// Sums giving the volatility-equation likelihood as a function of
/// `alpha_omega` with everything else fixed.
#[derive(Debug, Clone, Copy, Default)]
struct AlphaSums {
    uu: f64,
    ug: f64,
    gg: f64,
    cu: f64,
    cg: f64,
    one_m: f64,
    rho: f64,
}

impl AlphaSums {
    fn collect(data: &Observations, state: &LatentState, dy: &Dynamics) -> Self {
        let mut s = AlphaSums {
            one_m: 1.0 - dy.rho * dy.rho,
            rho: dy.rho,
            ..Default::default()
        };
        for i in 2..=data.days() {
            let w_prev = state.omega[i - 1];
            let sd = dy.step_var(w_prev).sqrt();
            let c = dy.y_resid(data, state, i) / sd;
            let r0 = state.omega[i] - state.jump_omega(i) - dy.coef.c1 * w_prev;
            let u = r0 / (dy.sigma_omega * sd);
            let g = dy.delta / (dy.sigma_omega * sd);
            s.uu += u * u;
            s.ug += u * g;
            s.gg += g * g;
            s.cu += c * u;
            s.cg += c * g;
        }
        s
    }

    fn log_lik(&self, alpha: f64) -> f64 {
        let dd = self.uu - 2.0 * alpha * self.ug + alpha * alpha * self.gg;
        let cd = self.cu - alpha * self.cg;
        -(dd - 2.0 * self.rho * cd) / (2.0 * self.one_m)
    }
}

fn intensity_log_lik(state: &LatentState, q: &QParams, delta: f64) -> f64 {
    let t = state.days();
    let mut total = 0.0;
    for i in 2..=t + 1 {
        let p = ((q.lambda0 + q.lambda1 * state.omega[i - 1]) * delta).clamp(
            super::likelihood::PROB_EPS,
            1.0 - super::likelihood::PROB_EPS,
        );
        total += if state.n[i] == 1 {
            p.ln()
        } else {
            (1.0 - p).ln()
        };
    }
    total
}

fn jump_variance_log_lik(state: &LatentState, mean: f64, var: f64) -> f64 {
    let t = state.days();
    let ss: f64 = (2..=t + 1).map(|i| (state.j_y[i] - mean).powi(2)).sum();
    -0.5 * t as f64 * var.ln() - ss / (2.0 * var)
}

fn block_log_prior(block: QBlock, q: &QParams, prior: &PriorHyper) -> f64 {
    match block {
        QBlock::Alpha => prior.alpha_omega.log_density(q.alpha_omega),
        QBlock::KappaQ => prior.kappa_omega_q.log_density(q.kappa_omega_q),
        QBlock::Lambda0 => prior.lambda0.log_density(q.lambda0),
        QBlock::Lambda1 => prior.lambda1.log_density(q.lambda1),
        QBlock::MuY => prior.mu_y.log_density(q.mu_y),
        QBlock::MuOmega => prior.mu_omega.log_density(q.mu_omega),
        QBlock::SigmaYJSq => prior.sigma_y_j_sq.log_density(q.sigma_y_j * q.sigma_y_j),
    }
}

/// Settings shared by the parameter Metropolis updates.
#[derive(Debug, Clone, Copy)]
pub struct MhSettings {
    pub variant: ModelVariant,
    pub delta: f64,
    pub tau: f64,
    pub floor: f64,
    pub vvix_enabled: bool,
    pub reduced: bool,
    pub proposals: usize,
}

impl MhSettings {
    /// Whether parameter moves integrate the jumps out.
    pub fn collapsed(&self) -> bool {
        !self.reduced && self.variant.has_jumps()
    }
}

/// Log target of the risk-neutral block given the latent path, with the
/// jump-intensity term cached between evaluations.
struct QTarget<'a> {
    state: &'a LatentState,
    prior: &'a PriorHyper,
    variant: ModelVariant,
    vvix: Option<VvixSums>,
    alpha: Option<AlphaSums>,
    /// Jump-marginal transition terms; replaces `alpha` and the jump terms.
    mixture: Option<(MixtureDays, MixtureParams)>,
    sp2: f64,
    tau: f64,
    delta: f64,
    mu_y_jp: f64,
}

#[derive(Debug, Clone, Copy)]
struct QValue {
    /// Parameters the cached `dynamic` term depends on.
    key: [f64; 4],
    dynamic: f64,
    total: f64,
}

impl QTarget<'_> {
    fn eval(&self, q: &QParams, cached: Option<&QValue>) -> Option<QValue> {
        q.validate().ok()?;
        let mut total = 0.0;
        for block in QBlock::ALL {
            if block.is_free(self.variant) {
                total += block_log_prior(block, q, self.prior);
            }
        }
        if let Some(s) = &self.vvix {
            let l = affine_loadings(q, self.tau).ok()?;
            total -= s.sse(l.a, l.b) / (2.0 * self.sp2);
        }
        let mut key = [q.lambda0, q.lambda1, f64::NAN, f64::NAN];
        let mut dynamic = 0.0;
        if let Some((days, base)) = &self.mixture {
            key = [q.alpha_omega, q.lambda0, q.lambda1, q.sigma_y_j];
            dynamic = match cached {
                Some(c) if c.key == key => c.dynamic,
                _ => {
                    let m = MixtureParams {
                        alpha_omega: q.alpha_omega,
                        lambda0: q.lambda0,
                        lambda1: q.lambda1,
                        var_y: q.sigma_y_j * q.sigma_y_j,
                        ..*base
                    };
                    days.log_lik(&m)
                }
            };
            total += dynamic;
        } else if let Some(a) = &self.alpha {
            total += a.log_lik(q.alpha_omega);
            if self.variant.has_jumps() {
                let var = q.sigma_y_j * q.sigma_y_j;
                total += jump_variance_log_lik(self.state, self.mu_y_jp, var);
                dynamic = match cached {
                    Some(c) if c.key[..2] == key[..2] => c.dynamic,
                    _ => intensity_log_lik(self.state, q, self.delta),
                };
                total += dynamic;
            }
        }
        total.is_finite().then_some(QValue {
            key,
            dynamic,
            total,
        })
    }
}

/// Step sizes of the risk-neutral updates: one per coordinate plus moves
/// along directions the data barely constrain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSteps {
    pub single: [RandomWalk; 7],
    /// `(lambda0, mu_omega) -> (lambda0 e^s, mu_omega e^-s)` with
    /// `kappa_omega_q` shifted to keep the effective reversion speed.
    pub product: RandomWalk,
    /// `lambda1 -> lambda1 + s` with `kappa_omega_q` shifted likewise.
    pub shear: RandomWalk,
    /// `(lambda0, lambda1) -> (lambda0 - s w_bar, lambda1 + s)`, keeping the
    /// mean jump intensity over the current path, with the same shift of
    /// `kappa_omega_q`.
    pub intensity: RandomWalk,
}

impl QSteps {
    pub fn walks_mut(&mut self) -> impl Iterator<Item = &mut RandomWalk> {
        self.single
            .iter_mut()
            .chain([&mut self.product, &mut self.shear, &mut self.intensity])
    }
}

pub fn initial_q_steps(prior: &PriorHyper) -> QSteps {
    let s = prior.steps;
    QSteps {
        single: [
            RandomWalk::new(s.alpha_omega),
            RandomWalk::new(s.kappa_omega_q),
            RandomWalk::new(s.lambda0),
            RandomWalk::new(s.lambda1),
            RandomWalk::new(s.mu_y),
            RandomWalk::new(s.mu_omega),
            RandomWalk::new(s.sigma_y_j_sq),
        ],
        product: RandomWalk::new(0.3),
        shear: RandomWalk::new(s.lambda1),
        intensity: RandomWalk::new(s.lambda1),
    }
}

fn metropolis<R: Rng>(
    target: &QTarget<'_>,
    current: &mut (QParams, QValue),
    proposal: QParams,
    log_jacobian: f64,
    walk: &mut RandomWalk,
    rng: &mut R,
) {
    let u: f64 = rng.random();
    let accept = match target.eval(&proposal, Some(&current.1)) {
        Some(v) => u.ln() < v.total - current.1.total + log_jacobian,
        None => false,
    };
    if accept {
        let v = target
            .eval(&proposal, Some(&current.1))
            .expect("just evaluated");
        *current = (proposal, v);
    }
    walk.record(accept);
}

/// Random-walk updates of the free risk-neutral parameters: one pass of
/// single-coordinate moves, the two ridge moves, and a sign flip of the
/// logVIX jump mean (which enters only through its square).
pub fn sample_q_params<R: Rng>(
    data: &Observations,
    state: &LatentState,
    params: &mut Params,
    prior: &PriorHyper,
    settings: &MhSettings,
    steps: &mut QSteps,
    rng: &mut R,
) {
    let full = !settings.reduced;
    let collapsed = settings.collapsed();
    let dy = Dynamics::new(params, settings.delta, settings.floor);
    let target = QTarget {
        state,
        prior,
        variant: settings.variant,
        vvix: settings
            .vvix_enabled
            .then(|| VvixSums::collect(data, state)),
        alpha: (full && !collapsed).then(|| AlphaSums::collect(data, state, &dy)),
        mixture: collapsed.then(|| {
            (
                MixtureDays::collect(data, state, &dy),
                MixtureParams::new(params, settings.variant),
            )
        }),
        sp2: params.e.sigma_p * params.e.sigma_p,
        tau: settings.tau,
        delta: settings.delta,
        mu_y_jp: params.p.mu_y_jp,
    };
    let Some(value) = target.eval(&params.q, None) else {
        return;
    };
    let mut current = (params.q, value);
    let variant = settings.variant;

    for (k, block) in QBlock::ALL.into_iter().enumerate() {
        if !block.is_free(variant) {
            continue;
        }
        for _ in 0..settings.proposals {
            let z: f64 = rng.sample(StandardNormal);
            let x = block.get(&current.0) + steps.single[k].scale * z;
            if block == QBlock::SigmaYJSq && !(x > 0.0) {
                let _: f64 = rng.random();
                steps.single[k].record(false);
                continue;
            }
            let mut proposal = current.0;
            block.set(&mut proposal, x);
            metropolis(
                &target,
                &mut current,
                proposal,
                0.0,
                &mut steps.single[k],
                rng,
            );
        }
    }

    if variant.has_vol_jumps() && current.0.lambda0 > 0.0 {
        for _ in 0..settings.proposals {
            let z: f64 = rng.sample(StandardNormal);
            let e = steps.product.scale * z;
            let q = current.0;
            let mut proposal = q;
            proposal.lambda0 = q.lambda0 * e.exp();
            proposal.mu_omega = q.mu_omega * (-e).exp();
            proposal.kappa_omega_q = q.kappa_omega_q + q.lambda1 * (proposal.mu_omega - q.mu_omega);
            // The map has unit Jacobian in (lambda0, mu_omega, kappa_omega_q).
            metropolis(
                &target,
                &mut current,
                proposal,
                0.0,
                &mut steps.product,
                rng,
            );
        }
    }
    if variant.has_state_intensity() {
        for _ in 0..settings.proposals {
            let z: f64 = rng.sample(StandardNormal);
            let e = steps.shear.scale * z;
            let q = current.0;
            let mut proposal = q;
            proposal.lambda1 = q.lambda1 + e;
            proposal.kappa_omega_q = q.kappa_omega_q + e * q.mu_omega;
            metropolis(&target, &mut current, proposal, 0.0, &mut steps.shear, rng);
        }
        let t = state.days();
        let w_bar = state.omega[1..=t].iter().sum::<f64>() / t as f64;
        for _ in 0..settings.proposals {
            let z: f64 = rng.sample(StandardNormal);
            let e = steps.intensity.scale * z;
            let q = current.0;
            let mut proposal = q;
            proposal.lambda0 = q.lambda0 - e * w_bar;
            proposal.lambda1 = q.lambda1 + e;
            proposal.kappa_omega_q = q.kappa_omega_q + e * q.mu_omega;
            metropolis(
                &target,
                &mut current,
                proposal,
                0.0,
                &mut steps.intensity,
                rng,
            );
        }
    }
    if variant.has_jumps() && prior.mu_y.mean == 0.0 && rng.random::<bool>() {
        // With a prior centred at zero this is an exact symmetry of the
        // target, so the flip is always accepted.
        current.0.mu_y = -current.0.mu_y;
    }
    params.q = current.0;
}

/// Sums giving the joint transition likelihood as a function of
/// `(rho, sigma_omega)`.
#[derive(Debug, Clone, Copy, Default)]
struct CorrSums {
    n: f64,
    cc: f64,
    ww: f64,
    cw: f64,
}

impl CorrSums {
    fn collect(data: &Observations, state: &LatentState, dy: &Dynamics) -> Self {
        let mut s = CorrSums::default();
        for i in 2..=data.days() {
            let sd = dy.step_var(state.omega[i - 1]).sqrt();
            let c = dy.y_resid(data, state, i) / sd;
            let w = dy.w_resid(state, i) / sd;
            s.n += 1.0;
            s.cc += c * c;
            s.ww += w * w;
            s.cw += c * w;
        }
        s
    }

    fn log_lik(&self, rho: f64, sigma: f64) -> f64 {
        let one_m = 1.0 - rho * rho;
        -(self.cc + self.ww / (sigma * sigma) - 2.0 * rho * self.cw / sigma) / (2.0 * one_m)
            - self.n * (sigma * one_m.sqrt()).ln()
    }
}

/// Joint random-walk update of `(rho, sigma_omega)`; `walk.scale`
/// multiplies the per-coordinate base steps.
#[allow(clippy::too_many_arguments)]
pub fn sample_rho_sigma_omega<R: Rng>(
    data: &Observations,
    state: &LatentState,
    params: &mut Params,
    prior: &PriorHyper,
    settings: &MhSettings,
    walk: &mut RandomWalk,
    rng: &mut R,
) {
    let dy = Dynamics::new(params, settings.delta, settings.floor);
    let base = prior.steps;
    let collapsed = settings.collapsed();
    let sums = (!collapsed).then(|| CorrSums::collect(data, state, &dy));
    let mixture = collapsed.then(|| {
        (
            MixtureDays::collect(data, state, &dy),
            MixtureParams::new(params, settings.variant),
        )
    });
    let log_lik = |rho: f64, sigma: f64| match (&sums, &mixture) {
        (Some(s), _) => s.log_lik(rho, sigma),
        (None, Some((days, m))) => days.log_lik(&MixtureParams {
            rho,
            sigma_omega: sigma,
            ..*m
        }),
        (None, None) => unreachable!("one of the two targets is always built"),
    };
    let mut current = log_lik(params.p.rho, params.p.sigma_omega);
    for _ in 0..settings.proposals {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let (rho, sig) = (params.p.rho, params.p.sigma_omega);
        let rho_new = rho + walk.scale * base.rho * z1;
        let sig_new = sig + walk.scale * base.sigma_omega * z2;
        if !(rho_new.abs() < 1.0 && sig_new > 0.0) {
            walk.record(false);
            continue;
        }
        let proposed = log_lik(rho_new, sig_new);
        let log_ratio = proposed - current + prior.rho.log_density(rho_new)
            - prior.rho.log_density(rho)
            + prior.sigma_omega.log_density(sig_new)
            - prior.sigma_omega.log_density(sig);
        let accept = log_ratio.is_finite() && u.ln() < log_ratio;
        if accept {
            params.p.rho = rho_new;
            params.p.sigma_omega = sig_new;
            current = proposed;
        }
        walk.record(accept);
    }
}

/// Volatility-equation terms of days `2..=T` given the jumps, as a
/// function of `(alpha_omega, kappa_omega_P)`.
struct DriftDays {
    /// Standardized logVIX residual.
    c: Vec<f64>,
    /// `w_i - j^w_i n_i - w_{i-1}`.
    r_base: Vec<f64>,
    w_prev: Vec<f64>,
    sd: Vec<f64>,
    rho: f64,
    sigma: f64,
    delta: f64,
}

impl DriftDays {
    fn collect(data: &Observations, state: &LatentState, dy: &Dynamics) -> Self {
        let t = data.days();
        let mut d = DriftDays {
            c: Vec::with_capacity(t),
            r_base: Vec::with_capacity(t),
            w_prev: Vec::with_capacity(t),
            sd: Vec::with_capacity(t),
            rho: dy.rho,
            sigma: dy.sigma_omega,
            delta: dy.delta,
        };
        for i in 2..=t {
            let w_prev = state.omega[i - 1];
            let sd = dy.step_var(w_prev).sqrt();
            d.c.push(dy.y_resid(data, state, i) / sd);
            d.r_base.push(state.omega[i] - state.jump_omega(i) - w_prev);
            d.w_prev.push(w_prev);
            d.sd.push(sd);
        }
        d
    }

    fn log_lik(&self, alpha: f64, kappa_p: f64) -> f64 {
        let mut total = 0.0;
        for k in 0..self.c.len() {
            let r = self.r_base[k] + (kappa_p * self.w_prev[k] - alpha) * self.delta;
            let u = r / (self.sigma * self.sd[k]);
            total += u * u - 2.0 * self.rho * self.c[k] * u;
        }
        -total / (2.0 * (1.0 - self.rho * self.rho))
    }
}

/// Step sizes of the two ridge moves in [`sample_drift_ridge`].
#[derive(Debug, Clone)]
pub struct RidgeWalks {
    pub drift: RandomWalk,
    pub loading: RandomWalk,
}

impl RidgeWalks {
    pub fn new(drift: f64, loading: f64) -> Self {
        RidgeWalks {
            drift: RandomWalk::new(drift),
            loading: RandomWalk::new(loading),
        }
    }
}

/// Random walks that move `alpha_omega` together with `kappa_omega_P`.
///
/// The first shifts `(alpha_omega, kappa_omega_P)` by `(e w_bar, e)`,
/// keeping the volatility drift at the path average `w_bar` fixed. The
/// second shifts `mu_omega` by `s`, `kappa_omega_Q` by `lambda1 s`,
/// `alpha_omega` by `-lambda0 s` and `kappa_omega_P` by `-lambda0 s / w_bar`,
/// which leaves both VVIX loadings and the drift at `w_bar` unchanged; it
/// runs only when `mu_omega` is free. Skipped in the reduced mode.
#[allow(clippy::too_many_arguments)]
pub fn sample_drift_ridge<R: Rng>(
    data: &Observations,
    state: &LatentState,
    params: &mut Params,
    prior: &PriorHyper,
    settings: &MhSettings,
    walks: &mut RidgeWalks,
    rng: &mut R,
) {
    if settings.reduced {
        return;
    }
    let dy = Dynamics::new(params, settings.delta, settings.floor);
    let t = data.days();
    let w_bar = state.omega[1..=t].iter().sum::<f64>() / t as f64;
    let kappa0 = params.p.kappa_omega_p;
    let vvix = settings
        .vvix_enabled
        .then(|| VvixSums::collect(data, state));
    let sp2 = params.e.sigma_p * params.e.sigma_p;
    let collapsed = settings.collapsed();
    let mixture = collapsed.then(|| {
        (
            MixtureDays::collect(data, state, &dy),
            MixtureParams::new(params, settings.variant),
        )
    });
    let drift = (!collapsed).then(|| DriftDays::collect(data, state, &dy));
    let log_post = |q: &QParams, kappa_p: f64| -> Option<f64> {
        if !(kappa_p > 0.0) {
            return None;
        }
        q.validate().ok()?;
        let mut total = prior.alpha_omega.log_density(q.alpha_omega)
            + prior.kappa_omega_q.log_density(q.kappa_omega_q)
            + prior.mu_omega.log_density(q.mu_omega)
            + prior.kappa_omega_p.log_density(kappa_p);
        if let Some(s) = &vvix {
            let l = affine_loadings(q, settings.tau).ok()?;
            total -= s.sse(l.a, l.b) / (2.0 * sp2);
        }
        total += match (&mixture, &drift) {
            (Some((days, m)), _) => days.log_lik(&MixtureParams {
                alpha_omega: q.alpha_omega,
                kappa_p_shift: kappa_p - kappa0,
                ..*m
            }),
            (None, Some(d)) => d.log_lik(q.alpha_omega, kappa_p),
            (None, None) => unreachable!("one of the two targets is always built"),
        };
        total.is_finite().then_some(total)
    };
    let Some(mut current) = log_post(&params.q, kappa0) else {
        return;
    };
    let loading_ridge = settings.variant.is_free(ParamId::MuOmega) && w_bar > 0.0;
    for _ in 0..settings.proposals {
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let e = walks.drift.scale * z;
        let mut q = params.q;
        q.alpha_omega += e * w_bar;
        let kappa_p = params.p.kappa_omega_p + e;
        let accept = match log_post(&q, kappa_p) {
            Some(proposed) if u.ln() < proposed - current => {
                params.q = q;
                params.p.kappa_omega_p = kappa_p;
                current = proposed;
                true
            }
            _ => false,
        };
        walks.drift.record(accept);

        if !loading_ridge {
            continue;
        }
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let s = walks.loading.scale * z;
        let mut q = params.q;
        q.mu_omega += s;
        q.kappa_omega_q += q.lambda1 * s;
        q.alpha_omega -= q.lambda0 * s;
        let kappa_p = params.p.kappa_omega_p - q.lambda0 * s / w_bar;
        let accept = match log_post(&q, kappa_p) {
            Some(proposed) if u.ln() < proposed - current => {
                params.q = q;
                params.p.kappa_omega_p = kappa_p;
                current = proposed;
                true
            }
            _ => false,
        };
        walks.loading.record(accept);
    }
}

/// Jump-marginal log posterior of the volatility path and the parameters,
/// up to a constant, for [`sample_vvix_rescaling`].
fn rescaling_log_target(
    data: &Observations,
    state: &LatentState,
    params: &Params,
    prior: &PriorHyper,
    settings: &MhSettings,
) -> Option<f64> {
    params.validate().ok()?;
    let variant = settings.variant;
    let l = affine_loadings(&params.q, settings.tau).ok()?;
    let dy = Dynamics::new(params, settings.delta, settings.floor);
    let p = &params.p;
    let mut total = prior.kappa_omega_q.log_density(params.q.kappa_omega_q)
        + prior.alpha_omega.log_density(params.q.alpha_omega)
        + prior.sigma_omega.log_density(p.sigma_omega)
        + prior.varsigma_v.log_density(p.varsigma_v);
    if variant.is_free(ParamId::MuOmegaJp) {
        total += prior.mu_omega_jp.log_density(p.mu_omega_jp);
    }
    if variant.is_free(ParamId::SigmaOmegaJ) {
        total += prior.sigma_omega_j_sq.log_density(p.sigma_omega_j.powi(2));
    }
    if let Some(g) = prior.omega_initial {
        total += g.log_density(state.omega[1]);
    }
    if settings.vvix_enabled {
        let sp2 = params.e.sigma_p * params.e.sigma_p;
        total -= VvixSums::collect(data, state).sse(l.a, l.b) / (2.0 * sp2);
    }
    total += MixtureDays::collect(data, state, &dy).log_lik(&MixtureParams::new(params, variant));
    total.is_finite().then_some(total)
}

/// Joint move of `kappa_omega_Q` and the scale of the volatility path.
///
/// `kappa_omega_Q` takes a random-walk step, which changes the VVIX
/// loadings from `(A, B)` to `(A', B')`. Every `w_i` is mapped to
/// `(A + B w_i - A') / B'` so the VVIX residuals stay put, and with
/// `c = B / B'` the parameters that carry the units of `w` follow:
/// `alpha_omega`, `mu_omega^P` and `sigma_omega^J` scale by `c`,
/// `sigma_omega` by `sqrt(c)` and `varsigma_V` by `1 / c`. The acceptance
/// ratio uses the jump-marginal posterior and the Jacobian of the map.
/// Skipped in the reduced mode.
#[allow(clippy::too_many_arguments)]
pub fn sample_vvix_rescaling<R: Rng>(
    data: &Observations,
    state: &mut LatentState,
    params: &mut Params,
    prior: &PriorHyper,
    settings: &MhSettings,
    walk: &mut RandomWalk,
    rng: &mut R,
) {
    if settings.reduced || !settings.vvix_enabled {
        return;
    }
    let variant = settings.variant;
    let t = data.days();
    let Some(mut current) = rescaling_log_target(data, state, params, prior, settings) else {
        return;
    };
    let vol_jumps = variant.is_free(ParamId::MuOmegaJp);
    // Powers of c in the Jacobian: the path, alpha, sigma_omega, varsigma_V
    // and, with volatility jumps, the jump mean and the jump variance.
    let mut jacobian_power = t as f64 + 1.0 + 0.5 - 1.0;
    if vol_jumps {
        jacobian_power += 1.0 + 2.0;
    }
    let mut proposal = state.clone();
    for _ in 0..settings.proposals {
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let step = walk.scale * z;
        let accept = (|| {
            let old = affine_loadings(&params.q, settings.tau).ok()?;
            let mut q = params.q;
            q.kappa_omega_q += step;
            let b_new = affine_loadings(&q, settings.tau).ok()?.b;
            let c = old.b / b_new;
            q.alpha_omega *= c;
            let new = affine_loadings(&q, settings.tau).ok()?;
            let mut p = *params;
            p.q = q;
            p.p.sigma_omega *= c.sqrt();
            p.p.varsigma_v /= c;
            if vol_jumps {
                p.p.mu_omega_jp *= c;
                p.p.sigma_omega_j *= c;
            }
            for i in 1..=t {
                let w = (old.a + old.b * state.omega[i] - new.a) / new.b;
                if !(w > 0.0) {
                    return None;
                }
                proposal.omega[i] = w;
            }
            let proposed = rescaling_log_target(data, &proposal, &p, prior, settings)?;
            let log_ratio = proposed - current + jacobian_power * c.ln();
            (u.ln() < log_ratio).then_some((p, proposed))
        })();
        match accept {
            Some((p, proposed)) => {
                *params = p;
                state.omega[1..=t].copy_from_slice(&proposal.omega[1..=t]);
                current = proposed;
                walk.record(true);
            }
            None => walk.record(false),
        }
    }
}
