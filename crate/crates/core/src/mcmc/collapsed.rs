//! Transition likelihood with the jump indicator and jump sizes integrated
//! out, and the matching exact redraw of all jumps.
//!
//! Given the volatility path, each day's `(Y_i, w_i)` pair is a two-part
//! normal mixture: no jump with probability `1 - p_i`, or a jump whose
//! normal sizes add their mean and variance to the diffusive shock.
//! Parameter moves against this marginal, followed by [`redraw_jumps`],
//! form a valid blocked update of the parameters together with the jumps.

use std::f64::consts::PI;

use rand::Rng;

use super::latent::{sample_jump_sizes, LatentContext};
use super::likelihood::{Dynamics, PROB_EPS};
use super::types::{LatentState, Observations};
use crate::model::{ModelVariant, Params};

/// Parameters the marginal depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    pub alpha_omega: f64,
    pub rho: f64,
    pub sigma_omega: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub mu_y: f64,
    pub var_y: f64,
    pub mu_w: f64,
    pub var_w: f64,
    /// Change of `kappa_omega_P` relative to the one the days were
    /// collected with.
    pub kappa_p_shift: f64,
}

impl MixtureParams {
    pub fn new(params: &Params, variant: ModelVariant) -> Self {
        let vol = variant.has_vol_jumps();
        MixtureParams {
            alpha_omega: params.q.alpha_omega,
            rho: params.p.rho,
            sigma_omega: params.p.sigma_omega,
            lambda0: params.q.lambda0,
            lambda1: if variant.has_state_intensity() {
                params.q.lambda1
            } else {
                0.0
            },
            mu_y: params.p.mu_y_jp,
            var_y: params.q.sigma_y_j.powi(2),
            mu_w: if vol { params.p.mu_omega_jp } else { 0.0 },
            var_w: if vol {
                params.p.sigma_omega_j.powi(2)
            } else {
                0.0
            },
            kappa_p_shift: 0.0,
        }
    }
}

/// Jump-free residual pieces of days `2..=T+1` under fixed drift
/// coefficients other than `alpha_omega`.
#[derive(Debug, Clone)]
pub struct MixtureDays {
    /// `Y_i - a0 - a1 Y_{i-1} - a2 w_{i-1}`.
    ry: Vec<f64>,
    /// `w_i - c1 w_{i-1}`; the last day has none.
    rw_base: Vec<f64>,
    var: Vec<f64>,
    w_prev: Vec<f64>,
    delta: f64,
}

fn log_normal(x: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + x * x / var)
}

/// Log density of `(x, y)` under a centred normal with covariance
/// `[[a, c], [c, b]]`.
fn log_normal2(x: f64, y: f64, a: f64, b: f64, c: f64) -> f64 {
    let det = a * b - c * c;
    -(2.0 * PI).ln() - 0.5 * det.ln() - 0.5 * (b * x * x - 2.0 * c * x * y + a * y * y) / det
}

fn log_mix(p: f64, l0: f64, l1: f64) -> f64 {
    let a = (1.0 - p).ln() + l0;
    let b = p.ln() + l1;
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl MixtureDays {
    pub fn collect(data: &Observations, state: &LatentState, dy: &Dynamics) -> Self {
        let t = data.days();
        let mut d = MixtureDays {
            ry: Vec::with_capacity(t),
            rw_base: Vec::with_capacity(t),
            var: Vec::with_capacity(t),
            w_prev: Vec::with_capacity(t),
            delta: dy.delta,
        };
        for i in 2..=t + 1 {
            let w_prev = state.omega[i - 1];
            d.ry.push(data.y[i] - dy.y_mean(data.y[i - 1], w_prev));
            if i <= t {
                d.rw_base.push(state.omega[i] - dy.coef.c1 * w_prev);
            }
            d.var.push(dy.step_var(w_prev));
            d.w_prev.push(w_prev);
        }
        d
    }

    fn prob(&self, m: &MixtureParams, w_prev: f64) -> f64 {
        ((m.lambda0 + m.lambda1 * w_prev) * self.delta).clamp(PROB_EPS, 1.0 - PROB_EPS)
    }

    /// Log of the jump-marginal transition density of all days.
    pub fn log_lik(&self, m: &MixtureParams) -> f64 {
        let c0 = m.alpha_omega * self.delta;
        let dk = m.kappa_p_shift * self.delta;
        let s2 = m.sigma_omega * m.sigma_omega;
        let rs = m.rho * m.sigma_omega;
        let jumps = m.lambda0 > 0.0 || m.lambda1 > 0.0;
        let mut total = 0.0;
        for (k, &rw_base) in self.rw_base.iter().enumerate() {
            let v = self.var[k];
            let ry = self.ry[k];
            let rw = rw_base + dk * self.w_prev[k] - c0;
            let l0 = log_normal2(ry, rw, v, s2 * v, rs * v);
            if !jumps {
                total += l0;
                continue;
            }
            let p = self.prob(m, self.w_prev[k]);
            let l1 = log_normal2(
                ry - m.mu_y,
                rw - m.mu_w,
                v + m.var_y,
                s2 * v + m.var_w,
                rs * v,
            );
            total += log_mix(p, l0, l1);
        }
        let k = self.ry.len() - 1;
        let v = self.var[k];
        if !jumps {
            return total + log_normal(self.ry[k], v);
        }
        let p = self.prob(m, self.w_prev[k]);
        total += log_mix(
            p,
            log_normal(self.ry[k], v),
            log_normal(self.ry[k] - m.mu_y, v + m.var_y),
        );
        total
    }
}

/// Probability of a jump on day `i` given the volatility path and the
/// parameters, with the jump sizes integrated out.
pub fn jump_marginal_prob(i: usize, state: &LatentState, ctx: &LatentContext<'_>) -> f64 {
    if !ctx.variant.has_jumps() {
        return 0.0;
    }
    let dy = &ctx.dynamics;
    let m = MixtureParams::new(ctx.params, ctx.variant);
    let data = ctx.data;
    let w_prev = state.omega[i - 1];
    let p = dy.jump_prob(w_prev);
    let v = dy.step_var(w_prev);
    let ry = data.y[i] - dy.y_mean(data.y[i - 1], w_prev);
    let (l0, l1) = if i <= data.days() {
        let rw = state.omega[i] - dy.w_mean(w_prev);
        let s2 = m.sigma_omega * m.sigma_omega;
        let rs = m.rho * m.sigma_omega;
        (
            log_normal2(ry, rw, v, s2 * v, rs * v),
            log_normal2(
                ry - m.mu_y,
                rw - m.mu_w,
                v + m.var_y,
                s2 * v + m.var_w,
                rs * v,
            ),
        )
    } else {
        (log_normal(ry, v), log_normal(ry - m.mu_y, v + m.var_y))
    };
    let log_odds = (l1 + p.ln()) - (l0 + (1.0 - p).ln());
    1.0 / (1.0 + (-log_odds).exp())
}

/// Draw every jump indicator and size from its joint conditional given the
/// volatility path and the parameters.
pub fn redraw_jumps<R: Rng>(state: &mut LatentState, ctx: &LatentContext<'_>, rng: &mut R) {
    if !ctx.variant.has_jumps() {
        return;
    }
    for i in 2..=ctx.data.days() + 1 {
        let prob = jump_marginal_prob(i, state, ctx);
        let u: f64 = rng.random();
        state.n[i] = (u < prob) as u8;
        sample_jump_sizes(i, state, ctx, rng);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::likelihood::log_complete_data;
    use crate::model::{DEFAULT_DELTA, DEFAULT_TAU};
    use crate::simulator::{simulate_observed, SimulationConfig};

    /// One-day marginal against a brute-force sum over the indicator and a
    /// grid integral over the jump sizes of the complete-data density.
    #[test]
    fn marginal_matches_numerical_integration() {
        let mut params = Params::svjj_s_reference();
        params.q.sigma_y_j = 0.05;
        params.p.sigma_omega_j = 0.08;
        params.q.lambda0 = 30.0;
        let variant = ModelVariant::SvjjS;
        let path =
            simulate_observed(variant, &params, &SimulationConfig::new(2, 5), DEFAULT_TAU).unwrap();
        let data = Observations::from_path(&path).unwrap();
        let mut state = LatentState::from_path(&path);
        let dy = Dynamics::new(&params, DEFAULT_DELTA, 1e-8);
        let days = MixtureDays::collect(&data, &state, &dy);
        let m = MixtureParams::new(&params, variant);

        // Complete-data density without the VVIX term, as a function of the
        // jump variables of day 2, with day 3 held at no jump.
        state.n[3] = 0;
        state.j_y[3] = params.p.mu_y_jp;
        state.j_omega[3] = params.p.mu_omega_jp;
        let mut dens = |n: u8, jy: f64, jw: f64| {
            state.n[2] = n;
            state.j_y[2] = jy;
            state.j_omega[2] = jw;
            log_complete_data(
                &data,
                &state,
                &params,
                variant,
                DEFAULT_DELTA,
                DEFAULT_TAU,
                1e-8,
                false,
            )
            .exp()
        };
        let (sy, sw) = (params.q.sigma_y_j, params.p.sigma_omega_j);
        let grid = 400;
        let (hy, hw) = (12.0 * sy / grid as f64, 12.0 * sw / grid as f64);
        let mut with_jump = 0.0;
        for a in 0..grid {
            let jy = params.p.mu_y_jp - 6.0 * sy + (a as f64 + 0.5) * hy;
            for b in 0..grid {
                let jw = params.p.mu_omega_jp - 6.0 * sw + (b as f64 + 0.5) * hw;
                with_jump += dens(1, jy, jw) * hy * hw;
            }
        }
        // With n = 0 the jump sizes still carry their prior density, which
        // integrates to one.
        let mut without = 0.0;
        for a in 0..grid {
            let jy = params.p.mu_y_jp - 6.0 * sy + (a as f64 + 0.5) * hy;
            for b in 0..grid {
                let jw = params.p.mu_omega_jp - 6.0 * sw + (b as f64 + 0.5) * hw;
                without += dens(0, jy, jw) * hy * hw;
            }
        }
        let brute = (with_jump + without).ln();
        // Day 3 under no jump, plus the densities of its jump sizes held at
        // their means.
        let p3 = days.prob(&m, state.omega[2]);
        let day3 = (1.0 - p3).ln()
            + log_normal(days.ry[1], days.var[1])
            + log_normal(0.0, m.var_y)
            + log_normal(0.0, m.var_w);
        let day2 = days.log_lik(&m)
            - log_mix(
                p3,
                log_normal(days.ry[1], days.var[1]),
                log_normal(days.ry[1] - m.mu_y, days.var[1] + m.var_y),
            );
        assert!(
            (brute - (day2 + day3)).abs() < 1e-6,
            "{brute} vs {}",
            day2 + day3
        );
    }
}
