//! Parameter sets, nested model variants and the affine map from latent
//! volatility to model-implied VVIX².
//!
//! Units: `Y = ln(VIX)` with VIX in index points, `omega` is the annualized
//! variance of `Y`, and VVIX enters as a decimal (index / 100) before squaring.
//! Horizons and rates are in years.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default VVIX horizon: 30 calendar days.
pub const DEFAULT_TAU: f64 = 30.0 / 365.0;

/// Default daily step: one trading day.
pub const DEFAULT_DELTA: f64 = 1.0 / 252.0;

/// Below this `|kappa_eff * tau|` the loadings switch to their Taylor limits.
const SERIES_SWITCH: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    /// Pure diffusion, no jumps.
    #[serde(rename = "SV")]
    Sv,
    /// Jumps in logVIX only, constant intensity.
    #[serde(rename = "SVJ_C")]
    SvjC,
    /// Co-jumps in logVIX and volatility, constant intensity.
    #[serde(rename = "SVJJ_C")]
    SvjjC,
    /// Co-jumps with volatility-dependent intensity.
    #[serde(rename = "SVJJ_S")]
    SvjjS,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::Sv,
        ModelVariant::SvjC,
        ModelVariant::SvjjC,
        ModelVariant::SvjjS,
    ];

    pub fn has_jumps(self) -> bool {
        self != ModelVariant::Sv
    }

    pub fn has_vol_jumps(self) -> bool {
        matches!(self, ModelVariant::SvjjC | ModelVariant::SvjjS)
    }

    pub fn has_state_intensity(self) -> bool {
        self == ModelVariant::SvjjS
    }

    /// Whether `param` is estimated (not pinned to zero) under this variant.
    pub fn is_free(self, param: ParamId) -> bool {
        use ParamId::*;
        match param {
            Lambda0 | MuYJp | MuY | SigmaYJ => self.has_jumps(),
            MuOmegaJp | MuOmega | SigmaOmegaJ => self.has_vol_jumps(),
            Lambda1 => self.has_state_intensity(),
            _ => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::Sv => "SV",
            ModelVariant::SvjC => "SVJ_C",
            ModelVariant::SvjjC => "SVJJ_C",
            ModelVariant::SvjjS => "SVJJ_S",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "SV" => Ok(ModelVariant::Sv),
            "SVJ_C" | "SVJ" => Ok(ModelVariant::SvjC),
            "SVJJ_C" => Ok(ModelVariant::SvjjC),
            "SVJJ_S" => Ok(ModelVariant::SvjjS),
            other => Err(Error::Config(format!("unknown model variant `{other}`"))),
        }
    }
}

/// Physical-measure parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PParams {
    pub kappa_v: f64,
    pub varsigma_v: f64,
    pub theta: f64,
    pub kappa_omega_p: f64,
    pub mu_y_jp: f64,
    pub mu_omega_jp: f64,
    pub sigma_omega_j: f64,
    pub rho: f64,
    pub sigma_omega: f64,
}

impl PParams {
    pub fn validate(&self) -> Result<()> {
        check_finite(&[
            ("kappa_v", self.kappa_v),
            ("varsigma_v", self.varsigma_v),
            ("theta", self.theta),
            ("kappa_omega_p", self.kappa_omega_p),
            ("mu_y_jp", self.mu_y_jp),
            ("mu_omega_jp", self.mu_omega_jp),
            ("sigma_omega_j", self.sigma_omega_j),
            ("rho", self.rho),
            ("sigma_omega", self.sigma_omega),
        ])?;
        if self.kappa_v <= 0.0 {
            return Err(Error::param("kappa_v", "must be positive"));
        }
        if self.kappa_omega_p <= 0.0 {
            return Err(Error::param("kappa_omega_p", "must be positive"));
        }
        if self.sigma_omega <= 0.0 {
            return Err(Error::param("sigma_omega", "must be positive"));
        }
        if self.sigma_omega_j < 0.0 {
            return Err(Error::param("sigma_omega_j", "must be nonnegative"));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::param("rho", "must lie in (-1, 1)"));
        }
        Ok(())
    }
}

/// Risk-neutral parameters. `sigma_y_j` is shared with the physical measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QParams {
    pub alpha_omega: f64,
    pub kappa_omega_q: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub mu_y: f64,
    pub mu_omega: f64,
    pub sigma_y_j: f64,
}

impl QParams {
    /// Mean-reversion speed of `omega` under Q once state-dependent jumps
    /// are compensated.
    pub fn kappa_eff(&self) -> f64 {
        self.kappa_omega_q - self.lambda1 * self.mu_omega
    }

    /// Second moment of the logVIX jump size under Q.
    pub fn jump_second_moment(&self) -> f64 {
        self.mu_y * self.mu_y + self.sigma_y_j * self.sigma_y_j
    }

    pub fn validate(&self) -> Result<()> {
        check_finite(&[
            ("alpha_omega", self.alpha_omega),
            ("kappa_omega_q", self.kappa_omega_q),
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
            ("mu_y", self.mu_y),
            ("mu_omega", self.mu_omega),
            ("sigma_y_j", self.sigma_y_j),
        ])?;
        if self.alpha_omega <= 0.0 {
            return Err(Error::param("alpha_omega", "must be positive"));
        }
        if self.lambda0 < 0.0 {
            return Err(Error::param("lambda0", "must be nonnegative"));
        }
        if self.lambda1 < 0.0 {
            return Err(Error::param("lambda1", "must be nonnegative"));
        }
        if self.sigma_y_j < 0.0 {
            return Err(Error::param("sigma_y_j", "must be nonnegative"));
        }
        if self.kappa_eff() <= 0.0 {
            return Err(Error::Invariant(format!(
                "kappa_omega_q - lambda1 * mu_omega = {} must be positive",
                self.kappa_eff()
            )));
        }
        Ok(())
    }
}

/// Standard deviation of the VVIX² pricing error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingError {
    pub sigma_p: f64,
}

impl PricingError {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_p.is_finite() && self.sigma_p > 0.0) {
            return Err(Error::param("sigma_p", "must be positive and finite"));
        }
        Ok(())
    }
}

/// All estimated parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p: PParams,
    pub q: QParams,
    pub e: PricingError,
}

impl Params {
    /// Posterior means reported for the stochastic-intensity double-jump
    /// model fitted to daily VIX/VVIX from January 2007 to November 2014.
    pub fn svjj_s_reference() -> Self {
        Params {
            p: PParams {
                kappa_v: 2.1093,
                varsigma_v: -0.1538,
                theta: 2.3312,
                kappa_omega_p: 6.2849,
                mu_y_jp: 0.1551,
                mu_omega_jp: 0.1430,
                sigma_omega_j: 0.1420,
                rho: 0.4998,
                sigma_omega: 0.8461,
            },
            q: QParams {
                alpha_omega: 3.7938,
                kappa_omega_q: 2.5674,
                lambda0: 2.7557,
                lambda1: 1.6086,
                mu_y: -0.0960,
                mu_omega: -1.2046,
                sigma_y_j: 0.1231,
            },
            e: PricingError { sigma_p: 0.0612 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.p.validate()?;
        self.q.validate()?;
        self.e.validate()
    }

    /// Volatility risk premium implied by the two mean-reversion speeds.
    pub fn varsigma_omega(&self) -> f64 {
        (self.p.kappa_omega_p - self.q.kappa_omega_q) / self.p.sigma_omega
    }

    pub fn get(&self, id: ParamId) -> f64 {
        use ParamId::*;
        match id {
            KappaV => self.p.kappa_v,
            VarsigmaV => self.p.varsigma_v,
            Theta => self.p.theta,
            KappaOmegaP => self.p.kappa_omega_p,
            MuYJp => self.p.mu_y_jp,
            MuOmegaJp => self.p.mu_omega_jp,
            SigmaOmegaJ => self.p.sigma_omega_j,
            Rho => self.p.rho,
            SigmaOmega => self.p.sigma_omega,
            AlphaOmega => self.q.alpha_omega,
            KappaOmegaQ => self.q.kappa_omega_q,
            Lambda0 => self.q.lambda0,
            Lambda1 => self.q.lambda1,
            MuY => self.q.mu_y,
            MuOmega => self.q.mu_omega,
            SigmaYJ => self.q.sigma_y_j,
            SigmaP => self.e.sigma_p,
        }
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        use ParamId::*;
        let slot = match id {
            KappaV => &mut self.p.kappa_v,
            VarsigmaV => &mut self.p.varsigma_v,
            Theta => &mut self.p.theta,
            KappaOmegaP => &mut self.p.kappa_omega_p,
            MuYJp => &mut self.p.mu_y_jp,
            MuOmegaJp => &mut self.p.mu_omega_jp,
            SigmaOmegaJ => &mut self.p.sigma_omega_j,
            Rho => &mut self.p.rho,
            SigmaOmega => &mut self.p.sigma_omega,
            AlphaOmega => &mut self.q.alpha_omega,
            KappaOmegaQ => &mut self.q.kappa_omega_q,
            Lambda0 => &mut self.q.lambda0,
            Lambda1 => &mut self.q.lambda1,
            MuY => &mut self.q.mu_y,
            MuOmega => &mut self.q.mu_omega,
            SigmaYJ => &mut self.q.sigma_y_j,
            SigmaP => &mut self.e.sigma_p,
        };
        *slot = value;
    }

    /// Copy with the variant's zero restrictions applied.
    pub fn restricted(&self, variant: ModelVariant) -> Self {
        let (p, q) = apply_variant(variant, &self.p, &self.q);
        Params { p, q, e: self.e }
    }
}

/// Identifier for every estimated scalar, in output column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamId {
    KappaV,
    VarsigmaV,
    Theta,
    KappaOmegaP,
    MuYJp,
    MuOmegaJp,
    SigmaOmegaJ,
    Rho,
    SigmaOmega,
    AlphaOmega,
    KappaOmegaQ,
    Lambda0,
    Lambda1,
    MuY,
    MuOmega,
    SigmaYJ,
    SigmaP,
}

impl ParamId {
    pub const ALL: [ParamId; 17] = [
        ParamId::KappaV,
        ParamId::VarsigmaV,
        ParamId::Theta,
        ParamId::KappaOmegaP,
        ParamId::MuYJp,
        ParamId::MuOmegaJp,
        ParamId::SigmaOmegaJ,
        ParamId::Rho,
        ParamId::SigmaOmega,
        ParamId::AlphaOmega,
        ParamId::KappaOmegaQ,
        ParamId::Lambda0,
        ParamId::Lambda1,
        ParamId::MuY,
        ParamId::MuOmega,
        ParamId::SigmaYJ,
        ParamId::SigmaP,
    ];

    pub fn name(self) -> &'static str {
        use ParamId::*;
        match self {
            KappaV => "kappa_V",
            VarsigmaV => "varsigma_V",
            Theta => "theta",
            KappaOmegaP => "kappa_omega_P",
            MuYJp => "mu_y_JP",
            MuOmegaJp => "mu_omega_JP",
            SigmaOmegaJ => "sigma_omega_J",
            Rho => "rho",
            SigmaOmega => "sigma_omega",
            AlphaOmega => "alpha_omega",
            KappaOmegaQ => "kappa_omega_Q",
            Lambda0 => "lambda0",
            Lambda1 => "lambda1",
            MuY => "mu_y",
            MuOmega => "mu_omega",
            SigmaYJ => "sigma_y_J",
            SigmaP => "sigma_P",
        }
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Loadings of model VVIX² on spot volatility over horizon `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineLoading {
    pub tau: f64,
    pub alpha_q: f64,
    pub beta_q: f64,
    pub a: f64,
    pub b: f64,
}

impl AffineLoading {
    pub fn vvix_squared(&self, omega: f64) -> f64 {
        self.a + self.b * omega
    }
}

/// `lambda0 + lambda1 * omega`.
pub fn jump_intensity(q: &QParams, omega: f64) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!(
            "jump intensity needs nonnegative variance, got {omega}"
        )));
    }
    Ok(q.lambda0 + q.lambda1 * omega)
}

/// Q-expectation of integrated variance over `[t, t + tau]`, returned as
/// `(alpha_q, beta_q, alpha_q * omega_t + beta_q)`.
pub fn expected_integrated_variance(
    q: &QParams,
    omega_t: f64,
    tau: f64,
) -> Result<(f64, f64, f64)> {
    let (alpha_q, beta_q) = integrated_variance_terms(q, tau)?;
    Ok((alpha_q, beta_q, alpha_q * omega_t + beta_q))
}

fn integrated_variance_terms(q: &QParams, tau: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::param("tau", "must be positive"));
    }
    let k = q.kappa_eff();
    if !(k > 0.0) {
        return Err(Error::Invariant(format!(
            "effective mean reversion {k} must be positive"
        )));
    }
    let x = k * tau;
    let drift = q.alpha_omega + q.lambda0 * q.mu_omega;
    let alpha_q = if x.abs() < SERIES_SWITCH {
        tau * (1.0 - 0.5 * x)
    } else {
        -(-x).exp_m1() / k
    };
    // (tau - alpha_q) / k; the closed form cancels badly for small x.
    let gap_over_k = if x < 1e-4 {
        tau * tau * (0.5 - x / 6.0 + x * x / 24.0)
    } else {
        (tau - alpha_q) / k
    };
    Ok((alpha_q, gap_over_k * drift))
}

/// Q-expectation of the summed squared logVIX jumps over `[t, t + tau]`.
pub fn expected_jump_quadratic(q: &QParams, omega_t: f64, tau: f64) -> Result<f64> {
    let (alpha_q, beta_q) = integrated_variance_terms(q, tau)?;
    Ok(q.jump_second_moment()
        * (q.lambda0 * tau + q.lambda1 * beta_q + q.lambda1 * alpha_q * omega_t))
}

pub fn affine_loadings(q: &QParams, tau: f64) -> Result<AffineLoading> {
    let (alpha_q, beta_q) = integrated_variance_terms(q, tau)?;
    let m2 = q.jump_second_moment();
    let a = (beta_q + m2 * (q.lambda0 * tau + q.lambda1 * beta_q)) / tau;
    let b = (1.0 + q.lambda1 * m2) * alpha_q / tau;
    Ok(AffineLoading {
        tau,
        alpha_q,
        beta_q,
        a,
        b,
    })
}

pub fn model_vvix_squared(q: &QParams, omega_t: f64, tau: f64) -> Result<f64> {
    Ok(affine_loadings(q, tau)?.vvix_squared(omega_t))
}

/// Mean-reversion speed of volatility under P given the Q speed and the
/// volatility risk premium.
pub fn p_from_q_drift(q: &QParams, varsigma_omega: f64, sigma_omega: f64) -> f64 {
    q.kappa_omega_q + varsigma_omega * sigma_omega
}

pub fn apply_variant(variant: ModelVariant, p: &PParams, q: &QParams) -> (PParams, QParams) {
    let mut p = *p;
    let mut q = *q;
    if !variant.has_state_intensity() {
        q.lambda1 = 0.0;
    }
    if !variant.has_vol_jumps() {
        p.mu_omega_jp = 0.0;
        p.sigma_omega_j = 0.0;
        q.mu_omega = 0.0;
    }
    if !variant.has_jumps() {
        q.lambda0 = 0.0;
        p.mu_y_jp = 0.0;
        q.mu_y = 0.0;
        q.sigma_y_j = 0.0;
    }
    (p, q)
}

/// Coefficients of the jump-adjusted daily discretization:
/// `Y~_i = a0 + a1 Y_{i-1} + a2 w_{i-1} + ...`, `w~_i = c0 + c1 w_{i-1} + ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub c0: f64,
    pub c1: f64,
}

pub fn coefficients(p: &PParams, q: &QParams, delta: f64) -> Coefficients {
    Coefficients {
        a0: p.kappa_v * p.theta * delta,
        a1: 1.0 - p.kappa_v * delta,
        a2: -p.varsigma_v * delta,
        c0: q.alpha_omega * delta,
        c1: 1.0 - p.kappa_omega_p * delta,
    }
}

fn check_finite(values: &[(&'static str, f64)]) -> Result<()> {
    for &(name, v) in values {
        if !v.is_finite() {
            return Err(Error::param(name, format!("non-finite value {v}")));
        }
    }
    Ok(())
}
