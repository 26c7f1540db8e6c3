//! Daily-frequency jump and co-jump detection.
//!
//! Step one flags days whose rolling window shows a significant gap between
//! realized variance and bipower variation, studentized by tripower
//! quarticity. Step two studentizes the rolling cross-product of two return
//! series and flags days with an unusually large common component.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 22;

/// `E|Z|^{4/3}` for standard normal `Z`.
pub fn mu_43() -> f64 {
    2f64.powf(2.0 / 3.0) * gamma(7.0 / 6.0) / gamma(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnMode {
    /// `r_t = X_t - X_{t-1}`.
    #[default]
    Level,
    /// `r_t = ln X_t - ln X_{t-1}`.
    Log,
}

pub fn returns(series: &[f64], mode: ReturnMode) -> Result<Vec<f64>> {
    match mode {
        ReturnMode::Level => Ok(series.windows(2).map(|w| w[1] - w[0]).collect()),
        ReturnMode::Log => {
            if series.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::Domain("log returns need positive levels".into()));
            }
            Ok(series.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RollingJumpStats {
    /// Index into the level series.
    pub t: usize,
    pub rv: f64,
    pub bv: f64,
    /// Undefined when `rv == 0`.
    pub rj: Option<f64>,
    /// Undefined for windows shorter than three.
    pub tp: Option<f64>,
    pub z: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CojumpStats {
    pub t: usize,
    pub cp: f64,
    pub z_cp: Option<f64>,
    pub flagged: bool,
}

fn two_sided_critical(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", "must lie in (0, 1)"));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// Rolling statistics on level series `x_0..x_T` for every day
/// `t = n+2 ..= T`, with the flag left unset.
pub fn rolling_stats(series: &[f64], n: usize) -> Result<Vec<RollingJumpStats>> {
    rolling_stats_with(series, n, ReturnMode::Level)
}

pub fn rolling_stats_with(
    series: &[f64],
    n: usize,
    mode: ReturnMode,
) -> Result<Vec<RollingJumpStats>> {
    if n < 2 {
        return Err(Error::param("n", "window must be at least 2"));
    }
    if series.len() <= n + 2 {
        return Err(Error::param(
            "series",
            format!("length {} must exceed window + 2 = {}", series.len(), n + 2),
        ));
    }
    let r = returns(series, mode)?;
    // r[t - 1] is the return ending at level index t.
    let ret = |t: usize| r[t - 1];
    let mu = mu_43();
    let tp_scale = if n > 2 {
        Some(mu.powi(-3) * (n * n) as f64 / (n - 2) as f64)
    } else {
        None
    };
    let z_var = ((PI / 2.0).powi(2) + PI - 5.0) / n as f64;
    let last = series.len() - 1;

    let mut out = Vec::with_capacity(last - n - 1);
    for t in (n + 2)..=last {
        let rv: f64 = (0..=n).map(|k| ret(t - k).powi(2)).sum();
        let bv = PI / 2.0
            * (0..n)
                .map(|k| ret(t - k).abs() * ret(t - k - 1).abs())
                .sum::<f64>();
        let tp = tp_scale.map(|s| {
            s * (0..n)
                .map(|k| {
                    (ret(t - k).abs() * ret(t - k - 1).abs() * ret(t - k - 2).abs()).powf(4.0 / 3.0)
                })
                .sum::<f64>()
        });
        let rj = (rv > 0.0).then(|| (rv - bv) / rv);
        let z = match (rj, tp) {
            (Some(rj), Some(tp)) if bv > 0.0 => {
                let ratio = (tp / (bv * bv)).max(1.0);
                Some(rj / (z_var * ratio).sqrt())
            }
            _ => None,
        };
        out.push(RollingJumpStats {
            t,
            rv,
            bv,
            rj,
            tp,
            z,
            flagged: false,
        });
    }
    Ok(out)
}

/// Rolling statistics with `|z_t| > Phi^{-1}(1 - alpha/2)` flags.
pub fn detect_jumps(series: &[f64], n: usize, alpha: f64) -> Result<Vec<RollingJumpStats>> {
    detect_jumps_with(series, n, alpha, ReturnMode::Level)
}

pub fn detect_jumps_with(
    series: &[f64],
    n: usize,
    alpha: f64,
    mode: ReturnMode,
) -> Result<Vec<RollingJumpStats>> {
    let crit = two_sided_critical(alpha)?;
    let mut stats = rolling_stats_with(series, n, mode)?;
    for s in &mut stats {
        s.flagged = s.z.is_some_and(|z| z.abs() > crit);
    }
    Ok(stats)
}

/// Studentized rolling cross-products for days `t = n ..= T`.
pub fn detect_cojumps(
    series1: &[f64],
    series2: &[f64],
    n: usize,
    alpha: f64,
) -> Result<Vec<CojumpStats>> {
    detect_cojumps_with(series1, series2, n, alpha, ReturnMode::Level)
}

pub fn detect_cojumps_with(
    series1: &[f64],
    series2: &[f64],
    n: usize,
    alpha: f64,
    mode: ReturnMode,
) -> Result<Vec<CojumpStats>> {
    if series1.len() != series2.len() {
        return Err(Error::param(
            "series",
            "co-jump inputs must have equal length",
        ));
    }
    if n < 1 {
        return Err(Error::param("n", "window must be positive"));
    }
    if series1.len() <= n {
        return Err(Error::param("series", "series shorter than the window"));
    }
    let crit = two_sided_critical(alpha)?;
    let r1 = returns(series1, mode)?;
    let r2 = returns(series2, mode)?;
    let last = series1.len() - 1;
    let cp: Vec<(usize, f64)> = (n..=last)
        .map(|t| (t, (0..n).map(|k| r1[t - k - 1] * r2[t - k - 1]).sum()))
        .collect();
    let count = cp.len() as f64;
    let mean = cp.iter().map(|&(_, c)| c).sum::<f64>() / count;
    let sd = (cp.iter().map(|&(_, c)| (c - mean).powi(2)).sum::<f64>() / count).sqrt();
    let defined = sd > 0.0 && sd.is_finite();
    Ok(cp
        .into_iter()
        .map(|(t, c)| {
            let z_cp = defined.then(|| (c - mean) / sd);
            CojumpStats {
                t,
                cp: c,
                z_cp,
                flagged: z_cp.is_some_and(|z| z.abs() > crit),
            }
        })
        .collect())
}

/// Days flagged in both jump series and in the co-jump statistic.
pub fn common_jump_days(
    jumps1: &[RollingJumpStats],
    jumps2: &[RollingJumpStats],
    cojumps: &[CojumpStats],
) -> Vec<usize> {
    use std::collections::BTreeSet;
    let a: BTreeSet<usize> = jumps1.iter().filter(|s| s.flagged).map(|s| s.t).collect();
    let b: BTreeSet<usize> = jumps2.iter().filter(|s| s.flagged).map(|s| s.t).collect();
    cojumps
        .iter()
        .filter(|c| c.flagged && a.contains(&c.t) && b.contains(&c.t))
        .map(|c| c.t)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_returns_closed_form() {
        let series: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let stats = rolling_stats(&series, 2).unwrap();
        let s = stats[0];
        assert_eq!(s.t, 4);
        assert_eq!(s.rv, 3.0);
        assert!((s.bv - PI).abs() < 1e-15);
        assert!((s.rj.unwrap() - (3.0 - PI) / 3.0).abs() < 1e-15);
        assert!((s.rj.unwrap() + 0.0472).abs() < 1e-4);
        assert!(s.tp.is_none());
    }

    #[test]
    fn zero_returns_are_undefined() {
        let series = vec![5.0; 40];
        let stats = detect_jumps(&series, 5, 0.05).unwrap();
        for s in stats {
            assert_eq!(s.rv, 0.0);
            assert!(s.rj.is_none() && s.z.is_none());
            assert!(!s.flagged);
        }
    }

    #[test]
    fn mu_43_value() {
        assert!((mu_43() - 0.830_86).abs() < 1e-5);
    }

    #[test]
    fn alpha_near_one_flags_everything_defined() {
        let series: Vec<f64> = (0..200).map(|i| ((i * 7919) % 113) as f64 * 0.1).collect();
        let stats = detect_jumps(&series, 10, 1.0 - 1e-12).unwrap();
        for s in stats {
            if let Some(z) = s.z {
                if z != 0.0 {
                    assert!(s.flagged);
                }
            }
        }
    }

    #[test]
    fn invalid_arguments() {
        let series = vec![1.0; 10];
        assert!(rolling_stats(&series, 8).is_err());
        assert!(detect_jumps(&[0.0; 50], 5, 1.5).is_err());
        assert!(detect_cojumps(&[0.0; 50], &[0.0; 49], 5, 0.05).is_err());
    }

    #[test]
    fn identical_series_cojump_is_rv_like() {
        let series: Vec<f64> = (0..120)
            .map(|i| (i as f64 * 0.37).sin() * 3.0 + i as f64 * 0.01)
            .collect();
        let stats = detect_cojumps(&series, &series, 10, 0.05).unwrap();
        assert!(stats.iter().all(|s| s.cp >= 0.0));
        let mean: f64 = stats.iter().map(|s| s.z_cp.unwrap()).sum::<f64>() / stats.len() as f64;
        assert!(mean.abs() < 1e-12);
        let var: f64 =
            stats.iter().map(|s| s.z_cp.unwrap().powi(2)).sum::<f64>() / stats.len() as f64;
        assert!((var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_cross_products_are_undefined() {
        let a = vec![1.0; 30];
        let b: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let stats = detect_cojumps(&a, &b, 5, 0.05).unwrap();
        assert!(stats.iter().all(|s| s.z_cp.is_none() && !s.flagged));
    }

    #[test]
    fn log_mode_rejects_nonpositive() {
        assert!(rolling_stats_with(&[1.0, 0.0, 2.0, 3.0, 4.0, 5.0], 2, ReturnMode::Log).is_err());
    }
}
