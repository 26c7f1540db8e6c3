//! Updates of the latent volatility path, jump indicators and jump sizes.

use rand::Rng;
use rand_distr::StandardNormal;

use super::likelihood::Dynamics;
use super::types::{GammaPrior, LatentState, Observations};
use crate::model::{AffineLoading, ModelVariant, Params};

/// Everything held fixed while latent variables are updated.
#[derive(Debug, Clone, Copy)]
pub struct LatentContext<'a> {
    pub data: &'a Observations,
    pub params: &'a Params,
    pub dynamics: Dynamics,
    /// `None` disables the VVIX² pricing-error term.
    pub loading: Option<AffineLoading>,
    pub variant: ModelVariant,
    pub reduced: bool,
    pub omega_initial: Option<GammaPrior>,
}

impl LatentContext<'_> {
    /// Log full conditional of `w_i` (up to a constant) at value `w`.
    pub fn omega_log_target(&self, state: &LatentState, i: usize, w: f64) -> f64 {
        let data = self.data;
        let dy = &self.dynamics;
        let t = data.days();
        let mut lp = 0.0;
        if i == 1 {
            if let Some(g) = self.omega_initial {
                lp += g.log_density(w);
            }
        } else {
            let ry = dy.y_resid(data, state, i);
            let rw = w - state.jump_omega(i) - dy.w_mean(state.omega[i - 1]);
            lp += dy.pair_log_density(ry, rw, state.omega[i - 1]);
        }
        let ry_next = data.y[i + 1] - state.jump_y(i + 1) - dy.y_mean(data.y[i], w);
        if i < t {
            let rw_next = state.omega[i + 1] - state.jump_omega(i + 1) - dy.w_mean(w);
            lp += dy.pair_log_density(ry_next, rw_next, w);
        } else {
            lp += dy.single_log_density(ry_next, w);
        }
        if let Some(l) = self.loading {
            let e = data.vvix_sq[i] - l.a - l.b * w;
            lp -= e * e / (2.0 * self.params.e.sigma_p * self.params.e.sigma_p);
        }
        if self.variant.has_jumps() && !self.reduced {
            lp += dy.indicator_log_density(state.n[i + 1], w);
        }
        lp
    }
}

/// Outcome of one Metropolis proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Accepted,
    Rejected,
    /// Rejected because the target was not finite.
    NonFinite,
}

/// Random-walk Metropolis update of `w_i`, `1 <= i <= T`.
pub fn sample_volatility_point<R: Rng>(
    i: usize,
    state: &mut LatentState,
    ctx: &LatentContext<'_>,
    step: f64,
    rng: &mut R,
) -> Move {
    let current = state.omega[i];
    let z: f64 = rng.sample(StandardNormal);
    let proposal = current + step * z;
    let u: f64 = rng.random();
    if !(proposal > 0.0) {
        return Move::Rejected;
    }
    let lp_new = ctx.omega_log_target(state, i, proposal);
    if !lp_new.is_finite() {
        return Move::NonFinite;
    }
    let lp_old = ctx.omega_log_target(state, i, current);
    if u.ln() < lp_new - lp_old {
        state.omega[i] = proposal;
        Move::Accepted
    } else {
        Move::Rejected
    }
}

/// Posterior probability that day `i` (`2 <= i <= T+1`) carries a jump,
/// given the current jump sizes.
pub fn jump_posterior_prob(i: usize, state: &LatentState, ctx: &LatentContext<'_>) -> f64 {
    if !ctx.variant.has_jumps() {
        return 0.0;
    }
    let dy = &ctx.dynamics;
    let w_prev = state.omega[i - 1];
    if !(dy.raw_jump_prob(w_prev) > 0.0) {
        return 0.0;
    }
    let data = ctx.data;
    let t = data.days();
    let p = dy.jump_prob(w_prev);
    let ry0 = data.y[i] - dy.y_mean(data.y[i - 1], w_prev);
    let ry1 = ry0 - state.j_y[i];
    let (l0, l1) = if i <= t {
        let rw0 = state.omega[i] - dy.w_mean(w_prev);
        let jw = if ctx.variant.has_vol_jumps() {
            state.j_omega[i]
        } else {
            0.0
        };
        (
            dy.pair_log_density(ry0, rw0, w_prev),
            dy.pair_log_density(ry1, rw0 - jw, w_prev),
        )
    } else {
        (
            dy.single_log_density(ry0, w_prev),
            dy.single_log_density(ry1, w_prev),
        )
    };
    let log_odds = (l1 + p.ln()) - (l0 + (1.0 - p).ln());
    1.0 / (1.0 + (-log_odds).exp())
}

pub fn sample_jump_indicator<R: Rng>(
    i: usize,
    state: &mut LatentState,
    ctx: &LatentContext<'_>,
    rng: &mut R,
) -> u8 {
    let prob = jump_posterior_prob(i, state, ctx);
    let u: f64 = rng.random();
    let n = (u < prob) as u8;
    state.n[i] = n;
    n
}

fn draw_normal<R: Rng>(mean: f64, var: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    if var > 0.0 {
        mean + var.sqrt() * z
    } else {
        mean
    }
}

/// Conditional law `(mean, variance)` of the logVIX jump on day `i <= T`
/// given the volatility jump `j_w`.
pub fn jump_y_conditional(
    ry: f64,
    rw: f64,
    j_w: f64,
    w_prev: f64,
    ctx: &LatentContext<'_>,
) -> (f64, f64) {
    let dy = &ctx.dynamics;
    let p = &ctx.params.p;
    let vy = ctx.params.q.sigma_y_j.powi(2);
    if !(vy > 0.0) {
        return (p.mu_y_jp, 0.0);
    }
    let s2 = dy.step_var(w_prev);
    let one_m = 1.0 - dy.rho * dy.rho;
    let prec = 1.0 / (s2 * one_m) + 1.0 / vy;
    let lin = (ry - dy.rho / dy.sigma_omega * (rw - j_w)) / (s2 * one_m) + p.mu_y_jp / vy;
    (lin / prec, 1.0 / prec)
}

/// Law `(mean, variance)` of the volatility jump on day `i <= T` with the
/// logVIX jump integrated out.
pub fn jump_omega_marginal(ry: f64, rw: f64, w_prev: f64, ctx: &LatentContext<'_>) -> (f64, f64) {
    let dy = &ctx.dynamics;
    let p = &ctx.params.p;
    let vy = ctx.params.q.sigma_y_j.powi(2);
    let vw = p.sigma_omega_j.powi(2);
    let s2 = dy.step_var(w_prev);
    let sig = dy.sigma_omega;
    let rho = dy.rho;
    let one_m = 1.0 - rho * rho;
    if !(vw > 0.0) {
        return (p.mu_omega_jp, 0.0);
    }
    if ctx.reduced {
        let prec = 1.0 / (sig * sig * s2) + 1.0 / vw;
        let lin = rw / (sig * sig * s2) + p.mu_omega_jp / vw;
        return (lin / prec, 1.0 / prec);
    }
    if !(vy > 0.0) {
        // logVIX jump pinned at its mean: condition on the implied shock.
        let prec = 1.0 / (sig * sig * s2 * one_m) + 1.0 / vw;
        let lin =
            (rw - sig * rho * (ry - p.mu_y_jp)) / (sig * sig * s2 * one_m) + p.mu_omega_jp / vw;
        return (lin / prec, 1.0 / prec);
    }
    // Inverse shock covariance scaled by det = s2² sig² (1 - rho²).
    let k = 1.0 / (s2 * sig * sig * one_m);
    let i_yy = k * sig * sig;
    let i_yw = -k * rho * sig;
    let i_ww = k;
    let l_yy = i_yy + 1.0 / vy;
    let l_ww = i_ww + 1.0 / vw;
    let l_yw = i_yw;
    let h_y = i_yy * ry + i_yw * rw + p.mu_y_jp / vy;
    let h_w = i_yw * ry + i_ww * rw + p.mu_omega_jp / vw;
    let det = l_yy * l_ww - l_yw * l_yw;
    let var_w = l_yy / det;
    let mean_w = (l_yy * h_w - l_yw * h_y) / det;
    (mean_w, var_w)
}

/// Draw `(j^y_i, j^w_i)` for day `2 <= i <= T+1`.
pub fn sample_jump_sizes<R: Rng>(
    i: usize,
    state: &mut LatentState,
    ctx: &LatentContext<'_>,
    rng: &mut R,
) -> (f64, f64) {
    let p = &ctx.params.p;
    let vy = ctx.params.q.sigma_y_j.powi(2);
    let vw = if ctx.variant.has_vol_jumps() {
        p.sigma_omega_j.powi(2)
    } else {
        0.0
    };
    let mu_w = if ctx.variant.has_vol_jumps() {
        p.mu_omega_jp
    } else {
        0.0
    };
    let t = ctx.data.days();
    let (j_y, j_w) = if !ctx.variant.has_jumps() {
        (0.0, 0.0)
    } else if state.n[i] == 0 {
        let jw = draw_normal(mu_w, vw, rng);
        let jy = draw_normal(p.mu_y_jp, vy, rng);
        (jy, jw)
    } else {
        let dy = &ctx.dynamics;
        let data = ctx.data;
        let w_prev = state.omega[i - 1];
        let ry = data.y[i] - dy.y_mean(data.y[i - 1], w_prev);
        if i > t {
            let jw = draw_normal(mu_w, vw, rng);
            let jy = if vy > 0.0 {
                let s2 = dy.step_var(w_prev);
                let prec = 1.0 / s2 + 1.0 / vy;
                let lin = ry / s2 + p.mu_y_jp / vy;
                draw_normal(lin / prec, 1.0 / prec, rng)
            } else {
                draw_normal(p.mu_y_jp, 0.0, rng)
            };
            (jy, jw)
        } else {
            let rw = state.omega[i] - dy.w_mean(w_prev);
            let jw = if ctx.variant.has_vol_jumps() {
                let (m, v) = jump_omega_marginal(ry, rw, w_prev, ctx);
                draw_normal(m, v, rng)
            } else {
                draw_normal(0.0, 0.0, rng)
            };
            let (m, v) = jump_y_conditional(ry, rw, jw, w_prev, ctx);
            (draw_normal(m, v, rng), jw)
        }
    };
    state.j_y[i] = j_y;
    state.j_omega[i] = j_w;
    (j_y, j_w)
}
