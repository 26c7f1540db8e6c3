//! The Gibbs sweep and the chain driver.

use std::collections::BTreeMap;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::collapsed::redraw_jumps;
use super::conjugate::{sample_jump_distribution_params, sample_p_drift_params, sample_sigma_p};
use super::init::initial_values;
use super::latent::{
    sample_jump_indicator, sample_jump_sizes, sample_volatility_point, LatentContext, Move,
};
use super::likelihood::Dynamics;
use super::metropolis::{
    initial_q_steps, sample_drift_ridge, sample_q_params, sample_rho_sigma_omega,
    sample_vvix_rescaling, MhSettings, QBlock, QSteps, RandomWalk, RidgeWalks,
};
use super::types::{ChainConfig, LatentState, Observations, PriorHyper};
use crate::error::{Error, Result};
use crate::model::{affine_loadings, ModelVariant, ParamId, Params};
use crate::rng::{self, streams, SimRng};
use crate::stats;

/// Output column names: the 17 estimated parameters then the derived
/// volatility risk premium.
pub fn draw_columns() -> Vec<String> {
    ParamId::ALL
        .iter()
        .map(|p| p.name().to_string())
        .chain(std::iter::once("varsigma_omega".to_string()))
        .collect()
}

fn draw_row(params: &Params) -> Vec<f64> {
    ParamId::ALL
        .iter()
        .map(|&id| params.get(id))
        .chain(std::iter::once(params.varsigma_omega()))
        .collect()
}

/// Posterior mean, standard deviation and central 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

impl PosteriorSummary {
    pub fn from_draws(xs: &[f64]) -> Self {
        let mut sorted = xs.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        PosteriorSummary {
            mean: stats::mean(xs),
            sd: if xs.len() > 1 {
                stats::sample_sd(xs)
            } else {
                0.0
            },
            q025: stats::quantile_sorted(&sorted, 0.025),
            q975: stats::quantile_sorted(&sorted, 0.975),
        }
    }

    pub fn covers(&self, value: f64) -> bool {
        self.q025 <= value && value <= self.q975
    }
}

/// Per-day posterior averages over the retained draws, indexed like the
/// observations (`0..=T+1`); entries outside a quantity's range are zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LatentSummary {
    pub omega_mean: Vec<f64>,
    pub omega_sd: Vec<f64>,
    pub jump_prob: Vec<f64>,
    /// Posterior mean of the realized logVIX jump `j^y n`.
    pub jump_y_mean: Vec<f64>,
    pub jump_omega_mean: Vec<f64>,
}

/// A retained draw of parameters together with the full latent path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub sweep: usize,
    pub params: Params,
    pub state: LatentState,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainOutput {
    pub variant: ModelVariant,
    pub config: ChainConfig,
    pub prior: PriorHyper,
    pub columns: Vec<String>,
    /// One row per retained draw, columns as in `columns`.
    pub draws: Vec<Vec<f64>>,
    pub acceptance: BTreeMap<String, f64>,
    pub latent: LatentSummary,
    pub snapshots: Vec<Snapshot>,
    /// Metropolis proposals rejected because the target was not finite.
    pub nonfinite_rejections: u64,
}

impl ChainOutput {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.draws.iter().map(|row| row[k]).collect())
    }

    pub fn param_draws(&self, id: ParamId) -> Vec<f64> {
        self.column(id.name())
            .expect("every parameter has a column")
    }

    pub fn summary(&self, id: ParamId) -> PosteriorSummary {
        PosteriorSummary::from_draws(&self.param_draws(id))
    }

    pub fn summaries(&self) -> Vec<(String, PosteriorSummary)> {
        self.columns
            .iter()
            .map(|c| {
                (
                    c.clone(),
                    PosteriorSummary::from_draws(&self.column(c).unwrap()),
                )
            })
            .collect()
    }

    /// Posterior-mean parameter set.
    pub fn posterior_mean(&self) -> Params {
        let mut params = Params::svjj_s_reference();
        for id in ParamId::ALL {
            params.set(id, stats::mean(&self.param_draws(id)));
        }
        params
    }

    /// Parameter set of retained draw `k`.
    pub fn draw_params(&self, k: usize) -> Params {
        let mut params = Params::svjj_s_reference();
        for (j, id) in ParamId::ALL.iter().enumerate() {
            params.set(*id, self.draws[k][j]);
        }
        params
    }
}

#[derive(Debug, Default, Clone)]
struct LatentAccumulator {
    count: f64,
    w_sum: Vec<f64>,
    w_sq: Vec<f64>,
    n_sum: Vec<f64>,
    jy_sum: Vec<f64>,
    jw_sum: Vec<f64>,
}

impl LatentAccumulator {
    fn new(len: usize) -> Self {
        LatentAccumulator {
            count: 0.0,
            w_sum: vec![0.0; len],
            w_sq: vec![0.0; len],
            n_sum: vec![0.0; len],
            jy_sum: vec![0.0; len],
            jw_sum: vec![0.0; len],
        }
    }

    fn add(&mut self, s: &LatentState) {
        self.count += 1.0;
        let t = s.days();
        for i in 1..=t {
            self.w_sum[i] += s.omega[i];
            self.w_sq[i] += s.omega[i] * s.omega[i];
        }
        for i in 2..=t + 1 {
            self.n_sum[i] += s.n[i] as f64;
            self.jy_sum[i] += s.jump_y(i);
            self.jw_sum[i] += s.jump_omega(i);
        }
    }

    fn finish(&self) -> LatentSummary {
        let c = self.count.max(1.0);
        let omega_mean: Vec<f64> = self.w_sum.iter().map(|v| v / c).collect();
        let omega_sd = self
            .w_sq
            .iter()
            .zip(&omega_mean)
            .map(|(sq, m)| (sq / c - m * m).max(0.0).sqrt())
            .collect();
        LatentSummary {
            omega_mean,
            omega_sd,
            jump_prob: self.n_sum.iter().map(|v| v / c).collect(),
            jump_y_mean: self.jy_sum.iter().map(|v| v / c).collect(),
            jump_omega_mean: self.jw_sum.iter().map(|v| v / c).collect(),
        }
    }
}

/// Initial steps of the two ridge moves, in units of `kappa_omega_P` and
/// `mu_omega`.
const DRIFT_RIDGE_STEP: f64 = 0.5;
const LOADING_RIDGE_STEP: f64 = 0.2;
/// Initial `kappa_omega_Q` step of the path rescaling move.
const RESCALING_STEP: f64 = 0.3;

/// Gibbs sampler state for one chain.
pub struct Sampler<'a> {
    data: &'a Observations,
    variant: ModelVariant,
    config: ChainConfig,
    prior: PriorHyper,
    pub params: Params,
    pub state: LatentState,
    rng: SimRng,
    omega_walks: Vec<RandomWalk>,
    q_steps: QSteps,
    corr_walk: RandomWalk,
    ridge_walks: RidgeWalks,
    rescale_walk: RandomWalk,
    sigma_y_independence: RandomWalk,
    nonfinite: u64,
    sweeps_done: usize,
}

impl<'a> Sampler<'a> {
    /// Start at `init` (restricted to the variant) or at data-driven
    /// starting values; see [`initial_values`].
    pub fn new(
        data: &'a Observations,
        variant: ModelVariant,
        config: ChainConfig,
        prior: PriorHyper,
        init: Option<Params>,
    ) -> Result<Self> {
        config.validate()?;
        prior.validate()?;
        let (params, state) = initial_values(data, variant, &config, &prior, init);
        params.validate()?;
        let t = data.days();

        let mut rng = rng::stream(config.seed, streams::CHAIN);
        let mut sampler = Sampler {
            data,
            variant,
            config: config.clone(),
            prior,
            params,
            state,
            rng: rng::seeded(0),
            omega_walks: vec![RandomWalk::new(prior.steps.omega); t + 2],
            q_steps: initial_q_steps(&prior),
            corr_walk: RandomWalk::new(1.0),
            ridge_walks: RidgeWalks::new(DRIFT_RIDGE_STEP, LOADING_RIDGE_STEP),
            rescale_walk: RandomWalk::new(RESCALING_STEP),
            sigma_y_independence: RandomWalk::new(1.0),
            nonfinite: 0,
            sweeps_done: 0,
        };
        // Jump sizes start as prior draws.
        let p = sampler.params;
        let ctx = sampler.context_for(&p);
        for i in 2..=t + 1 {
            sample_jump_sizes(i, &mut sampler.state, &ctx, &mut rng);
        }
        sampler.rng = rng;
        Ok(sampler)
    }

    fn context_for<'b>(&self, params: &'b Params) -> LatentContext<'b>
    where
        'a: 'b,
    {
        LatentContext {
            data: self.data,
            params,
            dynamics: Dynamics::new(params, self.config.delta, self.config.omega_floor),
            loading: if self.config.vvix_enabled {
                affine_loadings(&params.q, self.config.tau).ok()
            } else {
                None
            },
            variant: self.variant,
            reduced: self.config.reduced_conditionals,
            omega_initial: self.prior.omega_initial,
        }
    }

    fn settings(&self) -> MhSettings {
        MhSettings {
            variant: self.variant,
            delta: self.config.delta,
            tau: self.config.tau,
            floor: self.config.omega_floor,
            vvix_enabled: self.config.vvix_enabled,
            reduced: self.config.reduced_conditionals,
            proposals: self.config.proposals_per_block,
        }
    }

    /// One full Gibbs sweep over latent variables and parameters.
    pub fn sweep(&mut self) -> Result<()> {
        let t = self.data.days();
        let params = self.params;
        {
            let ctx = self.context_for(&params);
            for _ in 0..self.config.latent_passes {
                for i in 1..=t {
                    let step = self.omega_walks[i].scale;
                    let mv = sample_volatility_point(i, &mut self.state, &ctx, step, &mut self.rng);
                    if mv == Move::NonFinite {
                        self.nonfinite += 1;
                    }
                    self.omega_walks[i].record(mv == Move::Accepted);
                }
                if self.variant.has_jumps() {
                    for i in 2..=t + 1 {
                        sample_jump_indicator(i, &mut self.state, &ctx, &mut self.rng);
                    }
                    for i in 2..=t + 1 {
                        sample_jump_sizes(i, &mut self.state, &ctx, &mut self.rng);
                    }
                }
            }
        }
        let reduced = self.config.reduced_conditionals;
        let vvix = self.config.vvix_enabled;
        sample_p_drift_params(
            self.data,
            &self.state,
            &mut self.params,
            &self.prior,
            self.config.delta,
            self.config.omega_floor,
            reduced,
            &mut self.rng,
        );
        if let Some(acc) = sample_jump_distribution_params(
            self.data,
            &mut self.state,
            &mut self.params,
            &self.prior,
            self.variant,
            self.config.tau,
            vvix,
            reduced,
            &mut self.rng,
        ) {
            self.sigma_y_independence.record(acc);
        }
        let settings = self.settings();
        sample_rho_sigma_omega(
            self.data,
            &self.state,
            &mut self.params,
            &self.prior,
            &settings,
            &mut self.corr_walk,
            &mut self.rng,
        );
        sample_q_params(
            self.data,
            &self.state,
            &mut self.params,
            &self.prior,
            &settings,
            &mut self.q_steps,
            &mut self.rng,
        );
        sample_drift_ridge(
            self.data,
            &self.state,
            &mut self.params,
            &self.prior,
            &settings,
            &mut self.ridge_walks,
            &mut self.rng,
        );
        sample_vvix_rescaling(
            self.data,
            &mut self.state,
            &mut self.params,
            &self.prior,
            &settings,
            &mut self.rescale_walk,
            &mut self.rng,
        );
        if settings.collapsed() {
            // The moves above integrated the jumps out; draw them back.
            let params = self.params;
            let ctx = self.context_for(&params);
            redraw_jumps(&mut self.state, &ctx, &mut self.rng);
        }
        sample_sigma_p(
            self.data,
            &self.state,
            &mut self.params,
            &self.prior,
            self.config.tau,
            vvix,
            reduced,
            &mut self.rng,
        );
        self.sweeps_done += 1;
        self.check()
    }

    fn check(&self) -> Result<()> {
        let bad_params = self.params.validate().err().map(|e| e.to_string());
        let finite_draws = draw_row(&self.params).iter().all(|v| v.is_finite());
        if let Some(detail) = bad_params {
            return Err(Error::Divergent {
                sweep: self.sweeps_done,
                detail,
            });
        }
        if !finite_draws || !self.state.is_finite() {
            return Err(Error::Divergent {
                sweep: self.sweeps_done,
                detail: "non-finite parameter or latent value".into(),
            });
        }
        Ok(())
    }

    fn adapt(&mut self) {
        let target = self.config.target_acceptance;
        for w in &mut self.omega_walks {
            w.adapt(target);
        }
        for w in self.q_steps.walks_mut() {
            w.adapt(target);
        }
        self.corr_walk.adapt(target);
        self.ridge_walks.drift.adapt(target);
        self.ridge_walks.loading.adapt(target);
        self.rescale_walk.adapt(target);
    }

    fn acceptance(&self) -> BTreeMap<String, f64> {
        let t = self.data.days();
        let mut out = BTreeMap::new();
        let (acc, prop) = self.omega_walks[1..=t]
            .iter()
            .fold((0u64, 0u64), |(a, p), w| (a + w.accepted, p + w.proposed));
        out.insert("omega".to_string(), acc as f64 / prop.max(1) as f64);
        for (k, block) in QBlock::ALL.iter().enumerate() {
            if self.q_steps.single[k].proposed > 0 {
                out.insert(block.name().to_string(), self.q_steps.single[k].rate());
            }
        }
        for (name, w) in [
            ("q_product", &self.q_steps.product),
            ("q_shear", &self.q_steps.shear),
            ("q_intensity", &self.q_steps.intensity),
        ] {
            if w.proposed > 0 {
                out.insert(name.to_string(), w.rate());
            }
        }
        out.insert("rho_sigma_omega".to_string(), self.corr_walk.rate());
        for (name, w) in [
            ("alpha_kappa_omega_P", &self.ridge_walks.drift),
            ("vvix_loading_ridge", &self.ridge_walks.loading),
            ("vvix_rescaling", &self.rescale_walk),
        ] {
            if w.proposed > 0 {
                out.insert(name.to_string(), w.rate());
            }
        }
        if self.sigma_y_independence.proposed > 0 {
            out.insert(
                "sigma_y_J_independence".to_string(),
                self.sigma_y_independence.rate(),
            );
        }
        out
    }

    /// Run burn-in (with step-size adaptation) and the retained sweeps.
    pub fn run(mut self) -> Result<ChainOutput> {
        let cfg = self.config.clone();
        let t = self.data.days();
        let retained = cfg.retained();
        let snap_every = if cfg.latent_snapshots == 0 {
            usize::MAX
        } else {
            retained.div_ceil(cfg.latent_snapshots).max(1)
        };
        let mut draws = Vec::with_capacity(retained);
        let mut acc = LatentAccumulator::new(t + 2);
        let mut snapshots = Vec::new();
        for g in 0..cfg.iterations {
            self.sweep()?;
            if g < cfg.burn_in {
                if (g + 1) % cfg.adapt_every == 0 {
                    self.adapt();
                }
                continue;
            }
            let k = g - cfg.burn_in;
            if k % cfg.thin != 0 {
                continue;
            }
            draws.push(draw_row(&self.params));
            acc.add(&self.state);
            let idx = draws.len() - 1;
            if idx % snap_every == 0 && snapshots.len() < cfg.latent_snapshots {
                snapshots.push(Snapshot {
                    sweep: g,
                    params: self.params,
                    state: self.state.clone(),
                });
            }
            if (g + 1) % 1000 == 0 {
                debug!("sweep {} of {}", g + 1, cfg.iterations);
            }
        }
        info!(
            "chain finished: {} sweeps, {} retained draws",
            cfg.iterations,
            draws.len()
        );
        Ok(ChainOutput {
            variant: self.variant,
            config: cfg,
            prior: self.prior,
            columns: draw_columns(),
            draws,
            acceptance: self.acceptance(),
            latent: acc.finish(),
            snapshots,
            nonfinite_rejections: self.nonfinite,
        })
    }
}

/// Estimate `variant` on `data`.
pub fn run_chain(
    data: &Observations,
    variant: ModelVariant,
    config: &ChainConfig,
    prior: &PriorHyper,
    init: Option<Params>,
) -> Result<ChainOutput> {
    Sampler::new(data, variant, config.clone(), *prior, init)?.run()
}
