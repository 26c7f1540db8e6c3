//! Fit diagnostics: standardized residuals, normal Q-Q data, posterior jump
//! profiles, descriptive statistics and posterior-predictive p-values.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::mcmc::{ChainOutput, Dynamics, LatentState, LatentSummary, Observations};
use crate::model::{ModelVariant, Params};
use crate::rng::{self, streams};
use crate::simulator::{simulate_path_with, SimulationConfig};
use crate::stats;

/// Standardized shocks implied by a latent path and a parameter set.
/// `eps_y[k]` belongs to day `k + 2` (days `2..=T+1`), `eps_omega[k]` to
/// day `k + 2` (days `2..=T`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSeries {
    pub eps_y: Vec<f64>,
    pub eps_omega: Vec<f64>,
}

/// logVIX residuals `(Y~_i - a0 - a1 Y_{i-1} - a2 w_{i-1}) / sqrt(w_{i-1} D)`
/// for days `2..=T+1`, with `Y~` the jump-adjusted level.
pub fn vix_residuals(
    data: &Observations,
    state: &LatentState,
    params: &Params,
    delta: f64,
    floor: f64,
) -> Vec<f64> {
    let dy = Dynamics::new(params, delta, floor);
    (2..=data.days() + 1)
        .map(|i| dy.y_resid(data, state, i) / dy.step_var(state.omega[i - 1]).sqrt())
        .collect()
}

/// Volatility residuals `(w~_i - c0 - c1 w_{i-1}) / (s_w sqrt(w_{i-1} D))`
/// for days `2..=T`.
pub fn vol_residuals(state: &LatentState, params: &Params, delta: f64, floor: f64) -> Vec<f64> {
    let dy = Dynamics::new(params, delta, floor);
    (2..=state.days())
        .map(|i| {
            dy.w_resid(state, i) / (params.p.sigma_omega * dy.step_var(state.omega[i - 1]).sqrt())
        })
        .collect()
}

pub fn residuals(
    data: &Observations,
    state: &LatentState,
    params: &Params,
    delta: f64,
    floor: f64,
) -> ResidualSeries {
    ResidualSeries {
        eps_y: vix_residuals(data, state, params, delta, floor),
        eps_omega: vol_residuals(state, params, delta, floor),
    }
}

/// Latent path built from posterior means: `w` is the posterior mean
/// volatility and every day carries its posterior mean realized jump.
pub fn plug_in_state(latent: &LatentSummary) -> LatentState {
    let len = latent.omega_mean.len();
    LatentState {
        omega: latent.omega_mean.clone(),
        n: vec![1; len],
        j_y: latent.jump_y_mean.clone(),
        j_omega: latent.jump_omega_mean.clone(),
    }
}

/// Residuals at the posterior means of the parameters and latent variables.
pub fn posterior_residuals(data: &Observations, chain: &ChainOutput) -> ResidualSeries {
    let cfg = &chain.config;
    residuals(
        data,
        &plug_in_state(&chain.latent),
        &chain.posterior_mean(),
        cfg.delta,
        cfg.omega_floor,
    )
}

/// Residuals of every stored snapshot, concatenated.
pub fn snapshot_residuals(data: &Observations, chain: &ChainOutput) -> ResidualSeries {
    let cfg = &chain.config;
    let mut out = ResidualSeries {
        eps_y: Vec::new(),
        eps_omega: Vec::new(),
    };
    for snap in &chain.snapshots {
        let r = residuals(data, &snap.state, &snap.params, cfg.delta, cfg.omega_floor);
        out.eps_y.extend(r.eps_y);
        out.eps_omega.extend(r.eps_omega);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub sample: f64,
}

/// Order statistics against standard normal quantiles at `(k - 0.5) / n`.
pub fn qq_points(residuals: &[f64]) -> Result<Vec<QqPoint>> {
    let n = residuals.len();
    if n < 2 {
        return Err(Error::Domain("Q-Q data needs at least two points".into()));
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let normal = Normal::standard();
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(k, sample)| QqPoint {
            theoretical: normal.inverse_cdf((k as f64 + 0.5) / n as f64),
            sample,
        })
        .collect())
}

/// Per-day posterior jump probability and mean realized jump sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpProfile {
    /// Day index `i` in `2..=T+1`.
    pub day: Vec<usize>,
    pub probability: Vec<f64>,
    pub jump_y: Vec<f64>,
    pub jump_omega: Vec<f64>,
}

pub fn posterior_jump_profile(chain: &ChainOutput) -> Result<JumpProfile> {
    if chain.draws.is_empty() {
        return Err(Error::Domain("chain has no retained draws".into()));
    }
    let l = &chain.latent;
    let days: Vec<usize> = (2..l.jump_prob.len()).collect();
    Ok(JumpProfile {
        probability: days.iter().map(|&i| l.jump_prob[i]).collect(),
        jump_y: days.iter().map(|&i| l.jump_y_mean[i]).collect(),
        jump_omega: days.iter().map(|&i| l.jump_omega_mean[i]).collect(),
        day: days,
    })
}

/// Descriptive statistics of a series. Kurtosis is excess kurtosis;
/// skewness and kurtosis are undefined for a constant series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub volatility: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub min: f64,
    pub max: f64,
}

pub fn summary_stats(series: &[f64]) -> Result<SummaryStats> {
    if series.len() < 4 {
        return Err(Error::Domain(
            "summary statistics need at least 4 values".into(),
        ));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("series contains non-finite values".into()));
    }
    Ok(SummaryStats {
        n: series.len(),
        mean: stats::mean(series),
        volatility: stats::sample_sd(series),
        skewness: stats::skewness(series),
        excess_kurtosis: stats::excess_kurtosis(series),
        min: series.iter().copied().fold(f64::INFINITY, f64::min),
        max: series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Statistics of a logVIX path used in the predictive check. The first five
/// describe the level, the rest its daily changes. Skewness and kurtosis
/// are NaN for a constant level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveStatistics {
    pub stadev: f64,
    pub skewness: f64,
    /// Excess kurtosis.
    pub kurtosis: f64,
    pub maximum: f64,
    pub minimum: f64,
    pub maxjump: f64,
    pub minjump: f64,
    pub avgmax10: f64,
    pub avgmin10: f64,
    pub perc0_01: f64,
    pub perc0_05: f64,
    pub perc0_95: f64,
    pub perc0_99: f64,
}

impl PredictiveStatistics {
    pub const NAMES: [&'static str; 13] = [
        "stadev", "skewness", "kurtosis", "maximum", "minimum", "maxjump", "minjump", "avgmax10",
        "avgmin10", "perc0.01", "perc0.05", "perc0.95", "perc0.99",
    ];

    pub fn values(&self) -> [f64; 13] {
        [
            self.stadev,
            self.skewness,
            self.kurtosis,
            self.maximum,
            self.minimum,
            self.maxjump,
            self.minjump,
            self.avgmax10,
            self.avgmin10,
            self.perc0_01,
            self.perc0_05,
            self.perc0_95,
            self.perc0_99,
        ]
    }
}

pub fn predictive_statistics(y: &[f64]) -> Result<PredictiveStatistics> {
    if y.len() < 11 {
        return Err(Error::Domain(
            "predictive statistics need at least 11 values".into(),
        ));
    }
    if y.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("series contains non-finite values".into()));
    }
    let mut dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    dy.sort_by(|a, b| a.total_cmp(b));
    let m = dy.len();
    Ok(PredictiveStatistics {
        stadev: stats::sample_sd(y),
        skewness: stats::skewness(y).unwrap_or(f64::NAN),
        kurtosis: stats::excess_kurtosis(y).unwrap_or(f64::NAN),
        maximum: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        minimum: y.iter().copied().fold(f64::INFINITY, f64::min),
        maxjump: dy[m - 1],
        minjump: dy[0],
        avgmax10: stats::mean(&dy[m - 10..]),
        avgmin10: stats::mean(&dy[..10]),
        perc0_01: stats::quantile_sorted(&dy, 0.01),
        perc0_05: stats::quantile_sorted(&dy, 0.05),
        perc0_95: stats::quantile_sorted(&dy, 0.95),
        perc0_99: stats::quantile_sorted(&dy, 0.99),
    })
}

/// Fraction of simulated statistics strictly above the observed one, per
/// statistic. NaN comparisons count as not exceeding.
pub fn exceedance_fractions(
    observed: &PredictiveStatistics,
    simulated: &[PredictiveStatistics],
) -> [f64; 13] {
    let obs = observed.values();
    let mut counts = [0usize; 13];
    for s in simulated {
        for (c, (v, o)) in counts.iter_mut().zip(s.values().iter().zip(&obs)) {
            if v > o {
                *c += 1;
            }
        }
    }
    let n = simulated.len().max(1) as f64;
    counts.map(|c| c as f64 / n)
}

/// What the predictive paths are simulated from.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveModel {
    pub variant: ModelVariant,
    /// Path `k` uses `params[k % params.len()]`.
    pub params: Vec<Params>,
    pub y0: f64,
    pub omega0: f64,
    pub delta: f64,
    pub omega_floor: f64,
}

impl PredictiveModel {
    /// Paths start at the first observed level and the posterior mean of the
    /// first day's volatility. With `posterior_draws` each path cycles
    /// through the retained draws; otherwise all use the posterior mean.
    pub fn from_chain(chain: &ChainOutput, data: &Observations, posterior_draws: bool) -> Self {
        let params = if posterior_draws {
            (0..chain.draws.len())
                .map(|k| chain.draw_params(k))
                .collect()
        } else {
            vec![chain.posterior_mean()]
        };
        PredictiveModel {
            variant: chain.variant,
            params,
            y0: data.y[0],
            omega0: chain.latent.omega_mean[1],
            delta: chain.config.delta,
            omega_floor: chain.config.omega_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueTable {
    pub observed: PredictiveStatistics,
    pub p_values: [f64; 13],
    pub simulations: usize,
    pub seed: u64,
}

impl PValueTable {
    /// Rows of `(statistic, observed value, p-value)`.
    pub fn rows(&self) -> Vec<(&'static str, f64, f64)> {
        PredictiveStatistics::NAMES
            .iter()
            .zip(self.observed.values())
            .zip(self.p_values)
            .map(|((n, o), p)| (*n, o, p))
            .collect()
    }
}

/// Statistics of `simulations` predictive paths, each as long as `observed`
/// and seeded from its own stream of `seed`.
pub fn simulate_statistics(
    model: &PredictiveModel,
    days: usize,
    simulations: usize,
    seed: u64,
) -> Result<Vec<PredictiveStatistics>> {
    if model.params.is_empty() {
        return Err(Error::Domain(
            "predictive model has no parameter sets".into(),
        ));
    }
    let mut cfg = SimulationConfig::new(days, seed);
    cfg.delta = model.delta;
    cfg.y0 = Some(model.y0);
    cfg.omega0 = Some(model.omega0);
    cfg.omega_floor = model.omega_floor;
    (0..simulations)
        .map(|k| {
            let params = &model.params[k % model.params.len()];
            let mut r = rng::stream(seed, streams::PREDICTIVE + k as u64);
            let path = simulate_path_with(model.variant, &params.p, &params.q, &cfg, &mut r)?;
            predictive_statistics(&path.y)
        })
        .collect()
}

/// Posterior-predictive p-values `#{sim_k > obs_k} / N` for the 13
/// statistics of the observed logVIX path `y` (indices `0..=T+1`).
pub fn pvalue_study(
    model: &PredictiveModel,
    y: &[f64],
    simulations: usize,
    seed: u64,
) -> Result<PValueTable> {
    if simulations == 0 {
        return Err(Error::Domain(
            "need at least one predictive simulation".into(),
        ));
    }
    let observed = predictive_statistics(y)?;
    let sims = simulate_statistics(model, y.len() - 2, simulations, seed)?;
    Ok(PValueTable {
        observed,
        p_values: exceedance_fractions(&observed, &sims),
        simulations,
        seed,
    })
}

/// Pearson correlation between an estimated volatility path and the
/// observed VVIX.
pub fn proxy_correlation(omega: &[f64], vvix: &[f64]) -> Result<f64> {
    if omega.len() != vvix.len() {
        return Err(Error::Domain("series lengths differ".into()));
    }
    if omega.len() < 2 {
        return Err(Error::Domain(
            "correlation needs at least two points".into(),
        ));
    }
    stats::correlation(omega, vvix)
        .ok_or_else(|| Error::Domain("correlation undefined for a constant series".into()))
}
