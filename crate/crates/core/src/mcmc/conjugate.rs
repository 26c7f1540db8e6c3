//! Closed-form Gibbs updates: normal drift parameters, jump-size
//! distribution and the pricing-error variance.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};

use super::likelihood::Dynamics;
use super::types::{InvGammaPrior, LatentState, NormalPrior, Observations, PriorHyper};
use crate::model::{affine_loadings, ModelVariant, Params, QParams};

/// Accumulator for a normal-normal update with a scalar coefficient:
/// observations `r_k = x_k * beta + e_k`, `e_k ~ N(0, v_k)`.
#[derive(Debug, Clone, Copy)]
pub struct NormalUpdate {
    prec: f64,
    lin: f64,
}

impl NormalUpdate {
    pub fn from_prior(prior: NormalPrior) -> Self {
        NormalUpdate {
            prec: 1.0 / prior.var,
            lin: prior.mean / prior.var,
        }
    }

    #[inline]
    pub fn observe(&mut self, x: f64, r: f64, v: f64) {
        self.prec += x * x / v;
        self.lin += x * r / v;
    }

    pub fn mean(&self) -> f64 {
        self.lin / self.prec
    }

    pub fn var(&self) -> f64 {
        1.0 / self.prec
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean() + self.var().sqrt() * z
    }

    pub fn sample_positive<R: Rng>(&self, rng: &mut R) -> f64 {
        truncated_normal_positive(self.mean(), self.var().sqrt(), rng)
    }
}

/// `N(mean, sd²)` conditioned on `(0, inf)`.
pub fn truncated_normal_positive<R: Rng>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    let a = -mean / sd;
    let z = if a < 0.5 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z > a {
                break z;
            }
        }
    } else {
        // Exponential proposal shifted to the truncation point.
        let rate = 0.5 * (a + (a * a + 4.0).sqrt());
        let exp = Exp::new(rate).expect("positive rate");
        loop {
            let x = a + exp.sample(rng);
            let u: f64 = rng.random();
            if u.ln() < -0.5 * (x - rate).powi(2) {
                break x;
            }
        }
    };
    // Guard against rounding to exactly zero far in the tail.
    (mean + sd * z).max(f64::MIN_POSITIVE)
}

/// Draw from `IG(shape, scale)`.
pub fn inverse_gamma<R: Rng>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0).expect("positive shape");
    scale / g.sample(rng)
}

fn ig_posterior(prior: InvGammaPrior, count: usize, ss: f64) -> (f64, f64) {
    (prior.shape + 0.5 * count as f64, prior.scale + 0.5 * ss)
}

/// Last day whose logVIX transition enters the drift updates.
fn last_day(data: &Observations, reduced: bool) -> usize {
    if reduced {
        data.days()
    } else {
        data.days() + 1
    }
}

/// Per-day pieces of the logVIX equation with the volatility shock
/// conditioned out: `(Y_{i-1}, w_{i-1}, target, residual variance)` where
/// `target = Y~_i - Y_{i-1} - shift`.
fn y_rows(
    data: &Observations,
    state: &LatentState,
    dy: &Dynamics,
    reduced: bool,
) -> Vec<(f64, f64, f64, f64)> {
    let t = data.days();
    (2..=last_day(data, reduced))
        .map(|i| {
            let w_prev = state.omega[i - 1];
            let s2 = dy.step_var(w_prev);
            let y_adj = data.y[i] - state.jump_y(i) - data.y[i - 1];
            if i <= t {
                let rw = dy.w_resid(state, i);
                // E[Y shock | w shock] = rho * rw / sigma_omega.
                let shift = dy.rho * rw / dy.sigma_omega;
                (
                    data.y[i - 1],
                    w_prev,
                    y_adj - shift,
                    s2 * (1.0 - dy.rho * dy.rho),
                )
            } else {
                (data.y[i - 1], w_prev, y_adj, s2)
            }
        })
        .collect()
}

/// Update `theta`, `kappa_V`, `varsigma_V` and `kappa_omega^P` in turn,
/// each from its normal full conditional (speeds truncated to be positive).
pub fn sample_p_drift_params<R: Rng>(
    data: &Observations,
    state: &LatentState,
    params: &mut Params,
    prior: &PriorHyper,
    delta: f64,
    floor: f64,
    reduced: bool,
    rng: &mut R,
) {
    // theta: target + kappa_V Y dt + varsigma_V w dt = kappa_V dt * theta.
    let dy = Dynamics::new(params, delta, floor);
    let rows = y_rows(data, state, &dy, reduced);
    let p = &mut params.p;
    let mut up = NormalUpdate::from_prior(prior.theta);
    for &(y_prev, w_prev, r, v) in &rows {
        up.observe(
            p.kappa_v * delta,
            r + p.kappa_v * y_prev * delta + p.varsigma_v * w_prev * delta,
            v,
        );
    }
    p.theta = up.sample(rng);

    let mut up = NormalUpdate::from_prior(prior.kappa_v);
    for &(y_prev, w_prev, r, v) in &rows {
        up.observe(
            (p.theta - y_prev) * delta,
            r + p.varsigma_v * w_prev * delta,
            v,
        );
    }
    p.kappa_v = up.sample_positive(rng);

    let mut up = NormalUpdate::from_prior(prior.varsigma_v);
    for &(y_prev, w_prev, r, v) in &rows {
        up.observe(
            -w_prev * delta,
            r - p.kappa_v * (p.theta - y_prev) * delta,
            v,
        );
    }
    p.varsigma_v = up.sample(rng);

    // kappa_omega^P from the volatility equation given the logVIX shock.
    let dy = Dynamics::new(params, delta, floor);
    let t = data.days();
    let sig = dy.sigma_omega;
    let rho = dy.rho;
    let mut up = NormalUpdate::from_prior(prior.kappa_omega_p);
    for i in 2..=t {
        let w_prev = state.omega[i - 1];
        let s2 = dy.step_var(w_prev);
        let ry = dy.y_resid(data, state, i);
        let w_adj = state.omega[i] - state.jump_omega(i);
        let r = w_adj - w_prev - params.q.alpha_omega * delta - sig * rho * ry;
        up.observe(-w_prev * delta, r, sig * sig * s2 * (1.0 - rho * rho));
    }
    params.p.kappa_omega_p = up.sample_positive(rng);
}

/// Jump-size means and the volatility-jump variance from their conjugate
/// conditionals given the sizes on jump days; the logVIX jump variance by
/// an independence proposal from its jump-size conditional, corrected by
/// the VVIX² likelihood. The sizes carried on days without a jump affect
/// nothing else, so they are integrated out here and redrawn from the
/// updated size distribution afterwards.
/// Returns whether the variance proposal was accepted (`None` if not
/// attempted).
#[allow(clippy::too_many_arguments)]
pub fn sample_jump_distribution_params<R: Rng>(
    data: &Observations,
    state: &mut LatentState,
    params: &mut Params,
    prior: &PriorHyper,
    variant: ModelVariant,
    tau: f64,
    vvix_enabled: bool,
    reduced: bool,
    rng: &mut R,
) -> Option<bool> {
    if !variant.has_jumps() {
        return None;
    }
    let t = data.days();
    let jump_days: Vec<usize> = (2..=t + 1).filter(|&i| state.n[i] == 1).collect();
    let count = jump_days.len();

    let vy = params.q.sigma_y_j.powi(2);
    let mut up = NormalUpdate::from_prior(prior.mu_y_jp);
    for &i in &jump_days {
        up.observe(1.0, state.j_y[i], vy);
    }
    params.p.mu_y_jp = up.sample(rng);

    if variant.has_vol_jumps() {
        let vw = params.p.sigma_omega_j.powi(2);
        let mut up = NormalUpdate::from_prior(prior.mu_omega_jp);
        for &i in &jump_days {
            up.observe(1.0, state.j_omega[i], vw);
        }
        params.p.mu_omega_jp = up.sample(rng);
        let ss: f64 = jump_days
            .iter()
            .map(|&i| (state.j_omega[i] - params.p.mu_omega_jp).powi(2))
            .sum();
        let (a, b) = ig_posterior(prior.sigma_omega_j_sq, count, ss);
        params.p.sigma_omega_j = inverse_gamma(a, b, rng).sqrt();
    }

    let ss: f64 = jump_days
        .iter()
        .map(|&i| (state.j_y[i] - params.p.mu_y_jp).powi(2))
        .sum();
    let (a, b) = ig_posterior(prior.sigma_y_j_sq, count, ss);
    let proposal = inverse_gamma(a, b, rng).sqrt();
    let u: f64 = rng.random();
    let accepted = if !vvix_enabled || reduced {
        params.q.sigma_y_j = proposal;
        true
    } else {
        let mut q_new = params.q;
        q_new.sigma_y_j = proposal;
        let log_ratio = vvix_log_likelihood(data, state, &q_new, params.e.sigma_p, tau)
            - vvix_log_likelihood(data, state, &params.q, params.e.sigma_p, tau);
        let accept = log_ratio.is_finite() && u.ln() < log_ratio;
        if accept {
            params.q.sigma_y_j = proposal;
        }
        accept
    };

    for i in 2..=t + 1 {
        if state.n[i] == 1 {
            continue;
        }
        let z: f64 = rng.sample(StandardNormal);
        state.j_y[i] = params.p.mu_y_jp + params.q.sigma_y_j * z;
        if variant.has_vol_jumps() {
            let z: f64 = rng.sample(StandardNormal);
            state.j_omega[i] = params.p.mu_omega_jp + params.p.sigma_omega_j * z;
        }
    }
    Some(accepted)
}

/// VVIX² log likelihood up to a constant, days `1..=T`.
pub fn vvix_log_likelihood(
    data: &Observations,
    state: &LatentState,
    q: &QParams,
    sigma_p: f64,
    tau: f64,
) -> f64 {
    let Ok(l) = affine_loadings(q, tau) else {
        return f64::NEG_INFINITY;
    };
    let sse: f64 = (1..=data.days())
        .map(|i| (data.vvix_sq[i] - l.a - l.b * state.omega[i]).powi(2))
        .sum();
    -sse / (2.0 * sigma_p * sigma_p)
}

/// Pricing-error variance from its inverse-gamma conditional; a prior draw
/// when VVIX is not used.
pub fn sample_sigma_p<R: Rng>(
    data: &Observations,
    state: &LatentState,
    params: &mut Params,
    prior: &PriorHyper,
    tau: f64,
    vvix_enabled: bool,
    reduced: bool,
    rng: &mut R,
) {
    let (a, b) = if vvix_enabled {
        let l = affine_loadings(&params.q, tau).expect("Q parameters kept valid");
        let first = if reduced { 2 } else { 1 };
        let days = first..=data.days();
        let count = days.clone().count();
        let ss: f64 = days
            .map(|i| (data.vvix_sq[i] - l.a - l.b * state.omega[i]).powi(2))
            .sum();
        ig_posterior(prior.sigma_p_sq, count, ss)
    } else {
        (prior.sigma_p_sq.shape, prior.sigma_p_sq.scale)
    };
    params.e.sigma_p = inverse_gamma(a, b, rng).sqrt();
}
