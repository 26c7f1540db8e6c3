use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Params, DEFAULT_DELTA, DEFAULT_TAU};
use crate::simulator::{SimulatedPath, DEFAULT_OMEGA_FLOOR};

/// Daily observations indexed `0..=T+1`. Only `vvix_sq[1..=T]` enters the
/// likelihood; the boundary entries may be NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observations {
    pub y: Vec<f64>,
    pub vvix_sq: Vec<f64>,
}

impl Observations {
    pub fn new(y: Vec<f64>, vvix_sq: Vec<f64>) -> Result<Self> {
        if y.len() != vvix_sq.len() {
            return Err(Error::param(
                "observations",
                "logVIX and VVIX² lengths differ",
            ));
        }
        if y.len() < 4 {
            return Err(Error::param("observations", "need at least 4 days"));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input {
                row: i,
                reason: "non-finite logVIX".into(),
            });
        }
        let t = y.len() - 2;
        if let Some(i) = (1..=t).find(|&i| !vvix_sq[i].is_finite()) {
            return Err(Error::Input {
                row: i,
                reason: "non-finite VVIX²".into(),
            });
        }
        Ok(Observations { y, vvix_sq })
    }

    /// From a simulated path with attached VVIX² observations.
    pub fn from_path(path: &SimulatedPath) -> Result<Self> {
        let mut vvix = path.vvix_sq.clone();
        vvix.resize(path.y.len(), f64::NAN);
        Observations::new(path.y.clone(), vvix)
    }

    /// Number of modelled days `T`.
    pub fn days(&self) -> usize {
        self.y.len() - 2
    }
}

/// Latent variables, indexed like the observations. `omega` is meaningful
/// on `1..=T`; `n`, `j_y`, `j_omega` on `2..=T+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub omega: Vec<f64>,
    pub n: Vec<u8>,
    pub j_y: Vec<f64>,
    pub j_omega: Vec<f64>,
}

impl LatentState {
    pub fn zeros(days: usize) -> Self {
        let len = days + 2;
        LatentState {
            omega: vec![0.0; len],
            n: vec![0; len],
            j_y: vec![0.0; len],
            j_omega: vec![0.0; len],
        }
    }

    /// The true latent path of a simulation.
    pub fn from_path(path: &SimulatedPath) -> Self {
        let days = path.days();
        let mut s = LatentState::zeros(days);
        s.omega[..=days].copy_from_slice(&path.omega);
        s.n.copy_from_slice(&path.n);
        s.j_y.copy_from_slice(&path.j_y);
        s.j_omega.copy_from_slice(&path.j_omega);
        s.n[1] = 0;
        s.n[0] = 0;
        s
    }

    pub fn days(&self) -> usize {
        self.omega.len() - 2
    }

    /// Realized logVIX jump `j^y_i n_i`.
    pub fn jump_y(&self, i: usize) -> f64 {
        if self.n[i] == 1 {
            self.j_y[i]
        } else {
            0.0
        }
    }

    pub fn jump_omega(&self, i: usize) -> f64 {
        if self.n[i] == 1 {
            self.j_omega[i]
        } else {
            0.0
        }
    }

    pub fn is_finite(&self) -> bool {
        let t = self.days();
        (1..=t).all(|i| self.omega[i].is_finite())
            && self.j_y.iter().all(|v| v.is_finite())
            && self.j_omega.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub var: f64,
}

impl NormalPrior {
    pub const fn new(mean: f64, var: f64) -> Self {
        NormalPrior { mean, var }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        -0.5 * (x - self.mean).powi(2) / self.var
    }
}

/// Inverse-gamma prior with density proportional to `x^{-shape-1} e^{-scale/x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl InvGammaPrior {
    pub const fn new(shape: f64, scale: f64) -> Self {
        InvGammaPrior { shape, scale }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        -(self.shape + 1.0) * x.ln() - self.scale / x
    }

    pub fn mean(&self) -> f64 {
        if self.shape > 1.0 {
            self.scale / (self.shape - 1.0)
        } else {
            self.scale
        }
    }
}

/// Gamma prior (shape, rate), used only for the optional first-day variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn log_density(&self, x: f64) -> f64 {
        (self.shape - 1.0) * x.ln() - self.rate * x
    }
}

/// Initial random-walk proposal scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProposalSteps {
    pub omega: f64,
    pub alpha_omega: f64,
    pub kappa_omega_q: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub mu_y: f64,
    pub mu_omega: f64,
    pub sigma_y_j_sq: f64,
    pub rho: f64,
    pub sigma_omega: f64,
}

impl Default for ProposalSteps {
    fn default() -> Self {
        ProposalSteps {
            omega: 0.05,
            alpha_omega: 0.2,
            kappa_omega_q: 0.1,
            lambda0: 0.3,
            lambda1: 0.3,
            mu_y: 0.02,
            mu_omega: 0.05,
            sigma_y_j_sq: 0.003,
            rho: 0.02,
            sigma_omega: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorHyper {
    pub theta: NormalPrior,
    pub kappa_v: NormalPrior,
    pub varsigma_v: NormalPrior,
    pub kappa_omega_p: NormalPrior,
    pub mu_y_jp: NormalPrior,
    pub mu_omega_jp: NormalPrior,
    pub rho: NormalPrior,
    pub sigma_omega: NormalPrior,
    pub alpha_omega: NormalPrior,
    pub kappa_omega_q: NormalPrior,
    pub lambda0: NormalPrior,
    pub lambda1: NormalPrior,
    pub mu_y: NormalPrior,
    pub mu_omega: NormalPrior,
    pub sigma_omega_j_sq: InvGammaPrior,
    pub sigma_y_j_sq: InvGammaPrior,
    pub sigma_p_sq: InvGammaPrior,
    /// Proper prior on the first-day variance; flat on `(0, inf)` when absent.
    pub omega_initial: Option<GammaPrior>,
    pub steps: ProposalSteps,
}

const DIFFUSE: f64 = 25.0;

impl Default for PriorHyper {
    fn default() -> Self {
        let ig = InvGammaPrior::new(2.5, 0.1);
        PriorHyper {
            theta: NormalPrior::new(2.9, DIFFUSE),
            kappa_v: NormalPrior::new(2.0, DIFFUSE),
            varsigma_v: NormalPrior::new(0.0, DIFFUSE),
            kappa_omega_p: NormalPrior::new(5.0, DIFFUSE),
            mu_y_jp: NormalPrior::new(0.0, DIFFUSE),
            mu_omega_jp: NormalPrior::new(0.0, DIFFUSE),
            rho: NormalPrior::new(0.0, DIFFUSE),
            sigma_omega: NormalPrior::new(1.0, DIFFUSE),
            alpha_omega: NormalPrior::new(3.0, DIFFUSE),
            kappa_omega_q: NormalPrior::new(3.0, DIFFUSE),
            lambda0: NormalPrior::new(2.0, DIFFUSE),
            lambda1: NormalPrior::new(1.0, DIFFUSE),
            mu_y: NormalPrior::new(0.0, DIFFUSE),
            mu_omega: NormalPrior::new(0.0, DIFFUSE),
            sigma_omega_j_sq: ig,
            sigma_y_j_sq: ig,
            sigma_p_sq: ig,
            omega_initial: None,
            steps: ProposalSteps::default(),
        }
    }
}

impl PriorHyper {
    /// Default priors with the logVIX level and volatility centers matched
    /// to the sample moments of the data.
    pub fn moment_matched(data: &Observations, delta: f64) -> Self {
        let mut prior = PriorHyper::default();
        let y = &data.y;
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
        let dm = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - dm).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
        let omega_bar = var / delta;
        prior.theta.mean = mean;
        if omega_bar.is_finite() && omega_bar > 0.0 {
            prior.alpha_omega.mean = prior.kappa_omega_p.mean * omega_bar;
        }
        prior
    }

    pub fn validate(&self) -> Result<()> {
        let normals = [
            self.theta,
            self.kappa_v,
            self.varsigma_v,
            self.kappa_omega_p,
            self.mu_y_jp,
            self.mu_omega_jp,
            self.rho,
            self.sigma_omega,
            self.alpha_omega,
            self.kappa_omega_q,
            self.lambda0,
            self.lambda1,
            self.mu_y,
            self.mu_omega,
        ];
        if normals
            .iter()
            .any(|p| !(p.var > 0.0) || !p.mean.is_finite())
        {
            return Err(Error::Config(
                "normal prior variances must be positive".into(),
            ));
        }
        let igs = [self.sigma_omega_j_sq, self.sigma_y_j_sq, self.sigma_p_sq];
        if igs.iter().any(|p| !(p.shape > 0.0 && p.scale > 0.0)) {
            return Err(Error::Config(
                "inverse-gamma shape and scale must be positive".into(),
            ));
        }
        if let Some(g) = self.omega_initial {
            if !(g.shape > 0.0 && g.rate > 0.0) {
                return Err(Error::Config(
                    "initial-variance prior must be proper".into(),
                ));
            }
        }
        let s = self.steps;
        let steps = [
            s.omega,
            s.alpha_omega,
            s.kappa_omega_q,
            s.lambda0,
            s.lambda1,
            s.mu_y,
            s.mu_omega,
            s.sigma_y_j_sq,
            s.rho,
            s.sigma_omega,
        ];
        if steps.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("proposal steps must be positive".into()));
        }
        Ok(())
    }

    /// Parameters at the prior centers (inverse-gamma means for variances).
    pub fn center(&self) -> Params {
        use crate::model::{PParams, PricingError, QParams};
        Params {
            p: PParams {
                kappa_v: self.kappa_v.mean.max(0.1),
                varsigma_v: self.varsigma_v.mean,
                theta: self.theta.mean,
                kappa_omega_p: self.kappa_omega_p.mean.max(0.1),
                mu_y_jp: self.mu_y_jp.mean,
                mu_omega_jp: self.mu_omega_jp.mean,
                sigma_omega_j: self.sigma_omega_j_sq.mean().sqrt(),
                rho: self.rho.mean.clamp(-0.9, 0.9),
                sigma_omega: self.sigma_omega.mean.max(0.05),
            },
            q: QParams {
                alpha_omega: self.alpha_omega.mean.max(0.05),
                kappa_omega_q: self.kappa_omega_q.mean.max(0.1),
                lambda0: self.lambda0.mean.max(0.0),
                lambda1: self.lambda1.mean.max(0.0),
                mu_y: self.mu_y.mean,
                mu_omega: self.mu_omega.mean,
                sigma_y_j: self.sigma_y_j_sq.mean().sqrt(),
            },
            e: PricingError {
                sigma_p: self.sigma_p_sq.mean().sqrt(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub delta: f64,
    pub tau: f64,
    /// Sweeps per step-size adaptation window (burn-in only).
    pub adapt_every: usize,
    pub target_acceptance: f64,
    pub seed: u64,
    /// When false the VVIX likelihood is dropped (VIX-only estimation).
    pub vvix_enabled: bool,
    /// Use the reduced conditionals: VVIX-only Q target, no intensity
    /// factor in the volatility update, volatility jump sizes drawn from the
    /// volatility equation alone, and `T - 1` pricing errors for `sigma_P`.
    pub reduced_conditionals: bool,
    pub omega_floor: f64,
    /// Retained latent paths kept for per-draw diagnostics.
    pub latent_snapshots: usize,
    /// Metropolis proposals per parameter block per sweep.
    pub proposals_per_block: usize,
    /// Passes over the latent variables per sweep.
    pub latent_passes: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            iterations: 5000,
            burn_in: 2000,
            thin: 1,
            delta: DEFAULT_DELTA,
            tau: DEFAULT_TAU,
            adapt_every: 50,
            target_acceptance: 0.4,
            seed: 1,
            vvix_enabled: true,
            reduced_conditionals: false,
            omega_floor: DEFAULT_OMEGA_FLOOR,
            latent_snapshots: 50,
            proposals_per_block: 3,
            latent_passes: 5,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::Config(
                "burn-in must be smaller than iterations".into(),
            ));
        }
        if self.thin == 0 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.tau > 0.0) {
            return Err(Error::Config("delta and tau must be positive".into()));
        }
        if self.adapt_every == 0 {
            return Err(Error::Config("adaptation window must be positive".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::Config("target acceptance must lie in (0, 1)".into()));
        }
        if !(self.omega_floor > 0.0) {
            return Err(Error::Config("volatility floor must be positive".into()));
        }
        if self.latent_passes == 0 {
            return Err(Error::Config(
                "need at least one latent pass per sweep".into(),
            ));
        }
        if self.proposals_per_block == 0 {
            return Err(Error::Config("need at least one proposal per block".into()));
        }
        Ok(())
    }

    /// Number of retained draws.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}
