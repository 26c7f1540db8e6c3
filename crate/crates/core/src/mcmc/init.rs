//! Data-driven starting values for the chain.
//!
//! Starting from the prior centers with a smooth volatility guess lets the
//! sampler settle in a region where diffusive volatility absorbs the jumps
//! and the path is far too rough; it rarely leaves within a few thousand
//! sweeps. The starting point built here matches the data's volatility
//! level, its VVIX² shape and its large moves instead.

use std::f64::consts::FRAC_PI_2;

use super::types::{ChainConfig, LatentState, Observations, PriorHyper};
use crate::model::{ModelVariant, Params};
use crate::stats;

/// Centered jump-robust rolling variance of logVIX changes (annualized),
/// from adjacent products of absolute changes.
pub fn rolling_variance_path(y: &[f64], delta: f64, half_window: usize) -> Vec<f64> {
    let r: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let prods: Vec<f64> = r
        .windows(2)
        .map(|w| FRAC_PI_2 * w[0].abs() * w[1].abs())
        .collect();
    let overall = stats::mean(&prods) / delta;
    let floor = (1e-3 * overall).max(1e-6);
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half_window).min(prods.len() - 1);
            let hi = (i + half_window).clamp(lo + 1, prods.len());
            let v = stats::mean(&prods[lo..hi]) / delta;
            if v.is_finite() {
                v.max(floor)
            } else {
                overall
            }
        })
        .collect()
}

fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mx = stats::mean(x);
    let my = stats::mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    (intercept, slope, (sse / x.len() as f64).sqrt())
}

/// Effective reversion speed whose integrated-variance loading over `tau`
/// equals `alpha_q`, by bisection.
fn speed_for_loading(alpha_q: f64, tau: f64) -> f64 {
    let loading = |k: f64| -(-k * tau).exp_m1() / k;
    let (mut lo, mut hi) = (1e-3, 200.0);
    if alpha_q >= loading(lo) {
        return lo;
    }
    if alpha_q <= loading(hi) {
        return hi;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if loading(mid) > alpha_q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Starting parameters and latent state. `init` replaces the estimated
/// starting parameters when given; the latent start is always data-driven.
pub fn initial_values(
    data: &Observations,
    variant: ModelVariant,
    config: &ChainConfig,
    prior: &PriorHyper,
    init: Option<Params>,
) -> (Params, LatentState) {
    let t = data.days();
    let delta = config.delta;
    let tau = config.tau;
    let rv = rolling_variance_path(&data.y, delta, 11);
    let level = stats::mean(&rv[1..=t]);

    let mut omega = rv.clone();
    let mut vvix_fit = None;
    if config.vvix_enabled {
        let v = &data.vvix_sq[1..=t];
        let (a, b, _) = ols(v, &rv[1..=t]);
        if b > 0.0 {
            let floor = 0.05 * level;
            let mapped: Vec<f64> = v.iter().map(|x| (a + b * x).max(floor)).collect();
            for i in 1..=t {
                let lo = i.saturating_sub(2).max(1);
                let hi = (i + 2).min(t);
                omega[i] = stats::mean(&mapped[lo - 1..hi]);
            }
            omega[0] = omega[1];
            omega[t + 1] = omega[t];
            vvix_fit = Some(ols(&omega[1..=t], v));
        }
    }

    let mut params = prior.center();
    let p = &mut params.p;
    p.theta = stats::mean(&data.y);
    let (_, c1, resid_sd) = ols(&omega[1..t], &omega[2..=t]);
    p.kappa_omega_p = ((1.0 - c1) / delta).clamp(1.0, 50.0);
    params.q.alpha_omega = p.kappa_omega_p * level;
    p.sigma_omega = (resid_sd / (level * delta).sqrt()).clamp(0.3, 3.0);
    let dy: Vec<f64> = (2..=t).map(|i| data.y[i] - data.y[i - 1]).collect();
    let dw: Vec<f64> = (2..=t).map(|i| omega[i] - omega[i - 1]).collect();
    p.rho = stats::correlation(&dy, &dw).unwrap_or(0.0).clamp(-0.9, 0.9);

    let mut state = LatentState::zeros(t);
    state.omega.copy_from_slice(&omega);
    let mut flagged = 0usize;
    if variant.has_jumps() {
        for i in 2..=t + 1 {
            let r = data.y[i] - data.y[i - 1];
            let sd = (omega[i - 1] * delta).sqrt();
            if r.abs() > 4.0 * sd {
                state.n[i] = 1;
                flagged += 1;
            }
        }
        let q = &mut params.q;
        let years = t as f64 * delta;
        if !variant.has_state_intensity() {
            q.lambda1 = 0.0;
        }
        q.lambda0 = (flagged as f64 / years - q.lambda1 * level).max(0.5);
    }

    if let Some((a, b, sd)) = vvix_fit {
        let q = &mut params.q;
        let alpha_q = (b * tau).min(0.999 * tau);
        let k_eff = speed_for_loading(alpha_q, tau);
        let alpha_q = -(-k_eff * tau).exp_m1() / k_eff;
        let drift = a * tau * k_eff / (tau - alpha_q);
        if variant.has_vol_jumps() && q.lambda0 > 0.0 {
            q.mu_omega = ((drift - q.alpha_omega) / q.lambda0).clamp(-5.0, 5.0);
        }
        let lambda1 = if variant.has_state_intensity() {
            q.lambda1
        } else {
            0.0
        };
        let mu_omega = if variant.has_vol_jumps() {
            q.mu_omega
        } else {
            0.0
        };
        q.kappa_omega_q = k_eff + lambda1 * mu_omega;
        params.e.sigma_p = sd.max(1e-3);
    }

    let mut params = init.unwrap_or(params).restricted(variant);
    if params.validate().is_err() {
        params = prior.center().restricted(variant);
    }
    if variant.has_jumps() && params.q.sigma_y_j <= 0.0 {
        params.q.sigma_y_j = prior.sigma_y_j_sq.mean().sqrt();
    }
    if variant.has_vol_jumps() && params.p.sigma_omega_j <= 0.0 {
        params.p.sigma_omega_j = prior.sigma_omega_j_sq.mean().sqrt();
    }
    (params, state)
}
