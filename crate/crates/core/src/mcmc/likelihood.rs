//! Density pieces of the discretized joint model.
//!
//! For days `2..=T` the pair `(Y_i, w_i)` is bivariate normal given day
//! `i - 1` and the jump; day `T + 1` contributes only the univariate logVIX
//! transition. VVIX² pricing errors enter for days `1..=T`, jump indicators
//! and sizes for days `2..=T+1`.

use std::f64::consts::PI;

use super::types::{LatentState, Observations, PriorHyper};
use crate::model::{affine_loadings, coefficients, Coefficients, ModelVariant, Params};

/// Jump probabilities are kept inside `[EPS, 1 - EPS]`.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct Dynamics {
    pub coef: Coefficients,
    pub rho: f64,
    pub sigma_omega: f64,
    pub delta: f64,
    pub floor: f64,
    pub lambda0: f64,
    pub lambda1: f64,
}

impl Dynamics {
    pub fn new(params: &Params, delta: f64, floor: f64) -> Self {
        Dynamics {
            coef: coefficients(&params.p, &params.q, delta),
            rho: params.p.rho,
            sigma_omega: params.p.sigma_omega,
            delta,
            floor,
            lambda0: params.q.lambda0,
            lambda1: params.q.lambda1,
        }
    }

    /// Variance of the logVIX shock given the previous day's volatility.
    #[inline]
    pub fn step_var(&self, w_prev: f64) -> f64 {
        w_prev.max(self.floor) * self.delta
    }

    #[inline]
    pub fn y_mean(&self, y_prev: f64, w_prev: f64) -> f64 {
        self.coef.a0 + self.coef.a1 * y_prev + self.coef.a2 * w_prev
    }

    #[inline]
    pub fn w_mean(&self, w_prev: f64) -> f64 {
        self.coef.c0 + self.coef.c1 * w_prev
    }

    /// Log density of the bivariate transition given the two residuals.
    #[inline]
    pub fn pair_log_density(&self, ry: f64, rw: f64, w_prev: f64) -> f64 {
        let v = self.step_var(w_prev);
        let s = v.sqrt();
        let c = ry / s;
        let d = rw / (self.sigma_omega * s);
        let one_m = 1.0 - self.rho * self.rho;
        -(c * c + d * d - 2.0 * self.rho * c * d) / (2.0 * one_m)
            - (2.0 * PI).ln()
            - (v * self.sigma_omega * one_m.sqrt()).ln()
    }

    #[inline]
    pub fn single_log_density(&self, ry: f64, w_prev: f64) -> f64 {
        let v = self.step_var(w_prev);
        -0.5 * (2.0 * PI * v).ln() - ry * ry / (2.0 * v)
    }

    /// Raw jump intensity times the step, before clamping.
    #[inline]
    pub fn raw_jump_prob(&self, w_prev: f64) -> f64 {
        (self.lambda0 + self.lambda1 * w_prev) * self.delta
    }

    #[inline]
    pub fn jump_prob(&self, w_prev: f64) -> f64 {
        self.raw_jump_prob(w_prev).clamp(PROB_EPS, 1.0 - PROB_EPS)
    }

    #[inline]
    pub fn indicator_log_density(&self, n: u8, w_prev: f64) -> f64 {
        let p = self.jump_prob(w_prev);
        if n == 1 {
            p.ln()
        } else {
            (1.0 - p).ln()
        }
    }

    /// Jump-adjusted logVIX residual of day `i`.
    #[inline]
    pub fn y_resid(&self, data: &Observations, state: &LatentState, i: usize) -> f64 {
        data.y[i] - state.jump_y(i) - self.y_mean(data.y[i - 1], state.omega[i - 1])
    }

    /// Jump-adjusted volatility residual of day `i` (`2 <= i <= T`).
    #[inline]
    pub fn w_resid(&self, state: &LatentState, i: usize) -> f64 {
        state.omega[i] - state.jump_omega(i) - self.w_mean(state.omega[i - 1])
    }

    /// Transition log density of day `i` in `2..=T+1`.
    pub fn transition_log_density(
        &self,
        data: &Observations,
        state: &LatentState,
        i: usize,
    ) -> f64 {
        let t = data.days();
        let ry = self.y_resid(data, state, i);
        if i <= t {
            let rw = self.w_resid(state, i);
            self.pair_log_density(ry, rw, state.omega[i - 1])
        } else {
            self.single_log_density(ry, state.omega[i - 1])
        }
    }
}

fn normal_log_density(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - (x - mean).powi(2) / (2.0 * var)
}

/// Log of the complete-data density of `(Y, VVIX², latent)` given the
/// parameters, summed term by term. Used as an oracle for the local updates.
pub fn log_complete_data(
    data: &Observations,
    state: &LatentState,
    params: &Params,
    variant: ModelVariant,
    delta: f64,
    tau: f64,
    floor: f64,
    vvix_enabled: bool,
) -> f64 {
    let t = data.days();
    let dyn_ = Dynamics::new(params, delta, floor);
    let mut total = 0.0;
    for i in 2..=t + 1 {
        total += dyn_.transition_log_density(data, state, i);
    }
    if vvix_enabled {
        let l = affine_loadings(&params.q, tau).expect("valid Q parameters");
        let var = params.e.sigma_p * params.e.sigma_p;
        for i in 1..=t {
            total += normal_log_density(data.vvix_sq[i], l.a + l.b * state.omega[i], var);
        }
    }
    if variant.has_jumps() {
        for i in 2..=t + 1 {
            total += dyn_.indicator_log_density(state.n[i], state.omega[i - 1]);
            let vy = params.q.sigma_y_j.powi(2);
            total += normal_log_density(state.j_y[i], params.p.mu_y_jp, vy);
            if variant.has_vol_jumps() {
                let vw = params.p.sigma_omega_j.powi(2);
                total += normal_log_density(state.j_omega[i], params.p.mu_omega_jp, vw);
            }
        }
    }
    total
}

/// Log prior density (up to a constant) of the free parameters.
pub fn log_prior(
    params: &Params,
    prior: &PriorHyper,
    variant: ModelVariant,
    vvix_enabled: bool,
) -> f64 {
    let p = &params.p;
    let q = &params.q;
    let mut lp = prior.theta.log_density(p.theta)
        + prior.kappa_v.log_density(p.kappa_v)
        + prior.varsigma_v.log_density(p.varsigma_v)
        + prior.kappa_omega_p.log_density(p.kappa_omega_p)
        + prior.rho.log_density(p.rho)
        + prior.sigma_omega.log_density(p.sigma_omega)
        + prior.alpha_omega.log_density(q.alpha_omega)
        + prior.kappa_omega_q.log_density(q.kappa_omega_q);
    if vvix_enabled {
        lp += prior.sigma_p_sq.log_density(params.e.sigma_p.powi(2));
    }
    if variant.has_jumps() {
        lp += prior.lambda0.log_density(q.lambda0)
            + prior.mu_y_jp.log_density(p.mu_y_jp)
            + prior.mu_y.log_density(q.mu_y)
            + prior.sigma_y_j_sq.log_density(q.sigma_y_j.powi(2));
    }
    if variant.has_vol_jumps() {
        lp += prior.mu_omega_jp.log_density(p.mu_omega_jp)
            + prior.mu_omega.log_density(q.mu_omega)
            + prior.sigma_omega_j_sq.log_density(p.sigma_omega_j.powi(2));
    }
    if variant.has_state_intensity() {
        lp += prior.lambda1.log_density(q.lambda1);
    }
    lp
}
