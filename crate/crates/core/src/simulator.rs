//! Euler simulation of the physical-measure dynamics
//!
//! ```text
//! Y_i - Y_{i-1} = (kV theta - kV Y_{i-1} - sV w_{i-1}) D + sqrt(w_{i-1} D) e^y_i + j^y_i n_i
//! w_i - w_{i-1} = (a_w - kP w_{i-1}) D + s_w sqrt(w_{i-1} D) e^w_i + j^w_i n_i
//! ```
//!
//! with `corr(e^y, e^w) = rho`, `n_i ~ Bernoulli(min(1, (l0 + l1 w_{i-1}) D))`
//! and normal jump sizes under P. Volatility is floored after every step.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{affine_loadings, apply_variant, ModelVariant, PParams, QParams};
use crate::rng::{self, streams};

pub const DEFAULT_OMEGA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct SimulationConfig {
    /// Number of modelled days `T`; the path has `T + 2` logVIX values.
    pub days: usize,
    pub delta: f64,
    /// Initial logVIX; stationary mean when `None`.
    pub y0: Option<f64>,
    /// Initial variance; stationary mean when `None`.
    pub omega0: Option<f64>,
    pub omega_floor: f64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(days: usize, seed: u64) -> Self {
        SimulationConfig {
            days,
            delta: crate::model::DEFAULT_DELTA,
            y0: None,
            omega0: None,
            omega_floor: DEFAULT_OMEGA_FLOOR,
            seed,
        }
    }
}

/// One simulated trajectory. `y`, `n`, `j_y`, `j_omega` and the shocks are
/// indexed `0..=T+1`; `omega` covers `0..=T`. Entry 0 of the jump and shock
/// vectors is unused (zero).
#[derive(Debug, Clone, Serialize)]
pub struct SimulatedPath {
    pub y: Vec<f64>,
    pub omega: Vec<f64>,
    pub n: Vec<u8>,
    pub j_y: Vec<f64>,
    pub j_omega: Vec<f64>,
    pub eps_y: Vec<f64>,
    pub eps_omega: Vec<f64>,
    /// Observed decimal VVIX², indices `0..=T`; empty until observed.
    pub vvix_sq: Vec<f64>,
    pub delta: f64,
    pub seed: u64,
    /// Steps where the jump probability `(l0 + l1 w) D` exceeded one.
    pub clamped_steps: usize,
    /// Steps where the volatility floor was applied.
    pub floored_steps: usize,
}

impl SimulatedPath {
    pub fn days(&self) -> usize {
        self.y.len() - 2
    }
}

/// Stationary means `(E[Y], E[w])` of the P dynamics, ignoring the floor.
pub fn stationary_means(p: &PParams, q: &QParams) -> (f64, f64) {
    let denom = p.kappa_omega_p - q.lambda1 * p.mu_omega_jp;
    let omega_bar = if denom > 0.0 {
        ((q.alpha_omega + q.lambda0 * p.mu_omega_jp) / denom).max(0.0)
    } else {
        q.alpha_omega / p.kappa_omega_p
    };
    let intensity = q.lambda0 + q.lambda1 * omega_bar;
    let y_bar = p.theta + (intensity * p.mu_y_jp - p.varsigma_v * omega_bar) / p.kappa_v;
    (y_bar, omega_bar)
}

fn validate_for_simulation(p: &PParams, q: &QParams) -> Result<()> {
    let all = [
        p.kappa_v,
        p.varsigma_v,
        p.theta,
        p.kappa_omega_p,
        p.mu_y_jp,
        p.mu_omega_jp,
        p.sigma_omega_j,
        p.rho,
        p.sigma_omega,
        q.alpha_omega,
        q.kappa_omega_q,
        q.lambda0,
        q.lambda1,
        q.mu_y,
        q.mu_omega,
        q.sigma_y_j,
    ];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("params", "all parameters must be finite"));
    }
    if !(p.rho > -1.0 && p.rho < 1.0) {
        return Err(Error::param("rho", "must lie in (-1, 1)"));
    }
    if p.sigma_omega < 0.0 || p.sigma_omega_j < 0.0 || q.sigma_y_j < 0.0 {
        return Err(Error::param("sigma", "volatilities must be nonnegative"));
    }
    if q.alpha_omega < 0.0 || q.lambda0 < 0.0 || q.lambda1 < 0.0 {
        return Err(Error::param(
            "alpha_omega/lambda",
            "drift constant and intensities must be nonnegative",
        ));
    }
    if p.kappa_v <= 0.0 {
        return Err(Error::param("kappa_v", "must be positive"));
    }
    Ok(())
}

pub fn simulate_path(
    variant: ModelVariant,
    p: &PParams,
    q: &QParams,
    config: &SimulationConfig,
) -> Result<SimulatedPath> {
    let mut rng = rng::stream(config.seed, streams::PATH);
    simulate_path_with(variant, p, q, config, &mut rng)
}

/// As [`simulate_path`] but drawing from a caller-supplied generator.
pub fn simulate_path_with<R: Rng>(
    variant: ModelVariant,
    p: &PParams,
    q: &QParams,
    config: &SimulationConfig,
    rng: &mut R,
) -> Result<SimulatedPath> {
    let (p, q) = apply_variant(variant, p, q);
    validate_for_simulation(&p, &q)?;
    if config.days < 2 {
        return Err(Error::param("days", "need at least 2 days"));
    }
    if !(config.delta > 0.0) {
        return Err(Error::param("delta", "must be positive"));
    }
    let floor = config.omega_floor;
    let (y_bar, omega_bar) = stationary_means(&p, &q);
    let y0 = config.y0.unwrap_or(y_bar);
    let omega0 = config.omega0.unwrap_or(omega_bar);
    if !(omega0 >= 0.0) {
        return Err(Error::param("omega0", "must be nonnegative"));
    }

    let t = config.days;
    let dt = config.delta;
    let len = t + 2;
    let mut path = SimulatedPath {
        y: vec![0.0; len],
        omega: vec![0.0; t + 1],
        n: vec![0; len],
        j_y: vec![0.0; len],
        j_omega: vec![0.0; len],
        eps_y: vec![0.0; len],
        eps_omega: vec![0.0; len],
        vvix_sq: Vec::new(),
        delta: dt,
        seed: config.seed,
        clamped_steps: 0,
        floored_steps: 0,
    };
    path.y[0] = y0;
    let mut omega_prev = omega0.max(floor);
    if omega0 < floor {
        path.floored_steps += 1;
    }
    path.omega[0] = omega_prev;

    let a0 = p.kappa_v * p.theta * dt;
    let a1 = 1.0 - p.kappa_v * dt;
    let a2 = -p.varsigma_v * dt;
    let c0 = q.alpha_omega * dt;
    let c1 = 1.0 - p.kappa_omega_p * dt;
    let rho_c = (1.0 - p.rho * p.rho).sqrt();

    for i in 1..len {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let zy: f64 = rng.sample(StandardNormal);
        let zw: f64 = rng.sample(StandardNormal);

        let eps_y = z1;
        let eps_w = p.rho * z1 + rho_c * z2;
        let mut prob = (q.lambda0 + q.lambda1 * omega_prev) * dt;
        if prob > 1.0 {
            prob = 1.0;
            path.clamped_steps += 1;
        }
        let jumped = variant.has_jumps() && u < prob;
        let j_y = p.mu_y_jp + q.sigma_y_j * zy;
        let j_w = p.mu_omega_jp + p.sigma_omega_j * zw;

        let sd = (omega_prev * dt).sqrt();
        let y_prev = path.y[i - 1];
        let mut y_next = a0 + a1 * y_prev + a2 * omega_prev + sd * eps_y;
        let mut w_next = c0 + c1 * omega_prev + p.sigma_omega * sd * eps_w;
        if jumped {
            y_next += j_y;
            w_next += j_w;
        }
        if w_next < floor {
            w_next = floor;
            path.floored_steps += 1;
        }

        path.y[i] = y_next;
        path.n[i] = jumped as u8;
        path.j_y[i] = j_y;
        path.j_omega[i] = j_w;
        path.eps_y[i] = eps_y;
        path.eps_omega[i] = eps_w;
        if i <= t {
            path.omega[i] = w_next;
        }
        omega_prev = w_next;
    }
    if path.clamped_steps > 0 {
        log::warn!(
            "jump probability exceeded one on {} steps; clamped",
            path.clamped_steps
        );
    }
    Ok(path)
}

/// Noisy decimal VVIX² for days `0..=T`: `A + B w_i + N(0, sigma_p²)`.
pub fn observe_vvix(
    path: &SimulatedPath,
    q: &QParams,
    tau: f64,
    sigma_p: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(sigma_p >= 0.0) {
        return Err(Error::param("sigma_p", "must be nonnegative"));
    }
    let loading = affine_loadings(q, tau)?;
    let mut rng = rng::stream(seed, streams::VVIX_NOISE);
    Ok(path
        .omega
        .iter()
        .map(|&w| {
            let z: f64 = rng.sample(StandardNormal);
            loading.vvix_squared(w) + sigma_p * z
        })
        .collect())
}

/// Simulate a path and attach VVIX² observations in one step.
pub fn simulate_observed(
    variant: ModelVariant,
    params: &crate::model::Params,
    config: &SimulationConfig,
    tau: f64,
) -> Result<SimulatedPath> {
    let (p, q) = apply_variant(variant, &params.p, &params.q);
    let mut path = simulate_path(variant, &p, &q, config)?;
    path.vvix_sq = observe_vvix(&path, &q, tau, params.e.sigma_p, config.seed)?;
    Ok(path)
}
