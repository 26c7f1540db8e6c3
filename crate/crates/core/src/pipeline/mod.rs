//! End-to-end workflows behind the command-line interface.

pub mod artifacts;
pub mod config;
pub mod series;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::info;
use serde::{Deserialize, Serialize};

pub use artifacts::{ArtifactWriter, Provenance};
pub use config::{JumpTestSettings, PathSettings, RunConfig, SimulationSettings};
pub use series::{business_days, ingest_csv, parse_csv, ObservedSeries};

use crate::diagnostics::{
    posterior_jump_profile, posterior_residuals, proxy_correlation, pvalue_study, qq_points,
    snapshot_residuals, summary_stats, PredictiveModel, QqPoint, ResidualSeries, SummaryStats,
};
use crate::error::{Error, Result};
use crate::jump_tests::{common_jump_days, detect_cojumps_with, detect_jumps_with};
use crate::mcmc::{run_chain, ChainOutput, Observations, PosteriorSummary};
use crate::model::Params;
use crate::simulator::{simulate_observed, SimulationConfig};
use artifacts::{num, opt};

pub const CHAIN_FILE: &str = "chain.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    TestJumps,
    Estimate,
    Simulate,
    Diagnose,
    PvalueStudy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::TestJumps => "test-jumps",
            Command::Estimate => "estimate",
            Command::Simulate => "simulate",
            Command::Diagnose => "diagnose",
            Command::PvalueStudy => "pvalue-study",
        }
    }
}

/// Run `command` and return the files written.
pub fn run_command(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let out_dir = cfg
        .paths
        .output_dir
        .clone()
        .ok_or_else(|| Error::Config("no output directory given".into()))?;
    let seed = match command {
        Command::Estimate => cfg.chain.seed,
        _ => cfg.simulation.seed,
    };
    let prov = Provenance::new(command.name(), cfg.hash(), seed);
    let mut w = ArtifactWriter::new(&out_dir, prov)?;
    match command {
        Command::TestJumps => test_jumps(cfg, &read_input(cfg)?, &mut w)?,
        Command::Estimate => estimate(cfg, &read_input(cfg)?, &mut w)?,
        Command::Simulate => simulate(cfg, &mut w)?,
        Command::Diagnose => diagnose(&load_estimate(&out_dir)?, &mut w)?,
        Command::PvalueStudy => predictive(cfg, &load_estimate(&out_dir)?, &mut w)?,
    }
    let files = w.finish();
    info!(
        "{} wrote {} files to {}",
        command.name(),
        files.len(),
        out_dir.display()
    );
    Ok(files)
}

fn read_input(cfg: &RunConfig) -> Result<ObservedSeries> {
    let path = cfg
        .paths
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("no input file given".into()))?;
    ingest_csv(path)
}

fn dates_as_strings(dates: &[NaiveDate]) -> Vec<String> {
    dates.iter().map(|d| d.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct JumpCounts {
    days: usize,
    window: usize,
    alpha: f64,
    vix_jumps: usize,
    vvix_jumps: usize,
    cojumps: usize,
    common_jumps: usize,
}

fn test_jumps(cfg: &RunConfig, s: &ObservedSeries, w: &mut ArtifactWriter) -> Result<()> {
    let j = &cfg.jump_test;
    let vix = detect_jumps_with(&s.vix, j.window, j.alpha, j.returns)?;
    let vvix = detect_jumps_with(&s.vvix, j.window, j.alpha, j.returns)?;
    let co = detect_cojumps_with(&s.vix, &s.vvix, j.window, j.alpha, j.returns)?;
    let common = common_jump_days(&vix, &vvix, &co);

    let by_day = |t: usize| {
        let a = vix.iter().find(|r| r.t == t);
        let b = vvix.iter().find(|r| r.t == t);
        let c = co.iter().find(|r| r.t == t);
        (a, b, c)
    };
    let flag = |f: Option<bool>| match f {
        Some(true) => "1".to_string(),
        Some(false) => "0".to_string(),
        None => String::new(),
    };
    let rows: Vec<Vec<String>> = (0..s.len())
        .map(|t| {
            let (a, b, c) = by_day(t);
            vec![
                s.dates[t].to_string(),
                opt(a.and_then(|r| r.z)),
                flag(a.map(|r| r.flagged)),
                opt(b.and_then(|r| r.z)),
                flag(b.map(|r| r.flagged)),
                opt(c.and_then(|r| r.z_cp)),
                flag(c.map(|r| r.flagged)),
                flag(Some(common.binary_search(&t).is_ok())),
            ]
        })
        .collect();
    w.csv(
        "jump_tests.csv",
        &[
            "date",
            "vix_z",
            "vix_jump",
            "vvix_z",
            "vvix_jump",
            "cojump_z",
            "cojump",
            "common_jump",
        ],
        rows,
    )?;
    w.json(
        "jump_counts.json",
        &JumpCounts {
            days: s.len(),
            window: j.window,
            alpha: j.alpha,
            vix_jumps: vix.iter().filter(|r| r.flagged).count(),
            vvix_jumps: vvix.iter().filter(|r| r.flagged).count(),
            cojumps: co.iter().filter(|r| r.flagged).count(),
            common_jumps: common.len(),
        },
    )
}

/// Everything later commands need from an estimation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateArtifact {
    pub config: RunConfig,
    pub dates: Vec<String>,
    pub vix: Vec<f64>,
    pub vvix: Vec<f64>,
    pub observations: Observations,
    pub chain: ChainOutput,
}

#[derive(Serialize)]
struct PosteriorReport<'a> {
    variant: String,
    config: &'a RunConfig,
    draws: usize,
    summaries: BTreeMap<String, PosteriorSummary>,
    acceptance: &'a BTreeMap<String, f64>,
    nonfinite_rejections: u64,
}

fn estimate(cfg: &RunConfig, s: &ObservedSeries, w: &mut ArtifactWriter) -> Result<()> {
    let data = s.observations()?;
    info!("estimating {} on {} days", cfg.variant, data.days());
    let chain = run_chain(&data, cfg.variant, &cfg.chain, &cfg.prior, None)?;

    let rows = chain
        .draws
        .iter()
        .map(|r| r.iter().map(|&x| num(x)).collect());
    let header: Vec<&str> = chain.columns.iter().map(String::as_str).collect();
    w.csv("draws.csv", &header, rows)?;

    let l = &chain.latent;
    let t = data.days();
    let latent_rows = (1..=t + 1).map(|i| {
        vec![
            s.dates[i].to_string(),
            i.to_string(),
            if i <= t {
                num(l.omega_mean[i])
            } else {
                String::new()
            },
            if i <= t {
                num(l.omega_sd[i])
            } else {
                String::new()
            },
            num(l.jump_prob[i]),
            num(l.jump_y_mean[i]),
            num(l.jump_omega_mean[i]),
        ]
    });
    w.csv(
        "latent.csv",
        &[
            "date",
            "day",
            "omega_mean",
            "omega_sd",
            "jump_prob",
            "jump_y_mean",
            "jump_omega_mean",
        ],
        latent_rows,
    )?;

    w.json(
        "posterior.json",
        &PosteriorReport {
            variant: cfg.variant.to_string(),
            config: cfg,
            draws: chain.draws.len(),
            summaries: chain.summaries().into_iter().collect(),
            acceptance: &chain.acceptance,
            nonfinite_rejections: chain.nonfinite_rejections,
        },
    )?;
    w.json(
        CHAIN_FILE,
        &EstimateArtifact {
            config: cfg.clone(),
            dates: dates_as_strings(&s.dates),
            vix: s.vix.clone(),
            vvix: s.vvix.clone(),
            observations: data,
            chain,
        },
    )
}

pub fn load_estimate(dir: &Path) -> Result<EstimateArtifact> {
    let path = dir.join(CHAIN_FILE);
    if !path.exists() {
        return Err(Error::Dependency(format!(
            "{} not found; run `estimate` with this output directory first",
            path.display()
        )));
    }
    let file = std::fs::File::open(&path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    variant: String,
    days: usize,
    params: &'a Params,
    tau: f64,
    delta: f64,
    jump_days: usize,
    floored_steps: usize,
    clamped_steps: usize,
}

/// Writes a series of `T + 2` rows (days `0..=T+1`) that `ingest_csv`
/// reads back exactly, together with the latent truth.
fn simulate(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<()> {
    let sim = &cfg.simulation;
    let params = sim.params.unwrap_or_else(Params::svjj_s_reference);
    let mut sc = SimulationConfig::new(sim.days + 1, sim.seed);
    sc.delta = cfg.chain.delta;
    sc.omega_floor = cfg.chain.omega_floor;
    let path = simulate_observed(cfg.variant, &params, &sc, cfg.chain.tau)?;
    let rows = sim.days + 2;
    let dates = business_days(
        NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date"),
        rows,
    );
    let body = (0..rows).map(|i| {
        vec![
            dates[i].to_string(),
            num(path.y[i].exp()),
            num(100.0 * path.vvix_sq[i].max(0.0).sqrt()),
            num(path.y[i]),
            num(path.vvix_sq[i]),
            num(path.omega[i]),
            path.n[i].to_string(),
            num(path.j_y[i]),
            num(path.j_omega[i]),
            num(path.eps_y[i]),
            num(path.eps_omega[i]),
        ]
    });
    w.csv(
        "simulated.csv",
        &[
            "date",
            "vix",
            "vvix",
            "y",
            "vvix_sq",
            "omega",
            "n",
            "j_y",
            "j_omega",
            "eps_y",
            "eps_omega",
        ],
        body,
    )?;
    w.json(
        "simulation.json",
        &SimulationReport {
            variant: cfg.variant.to_string(),
            days: sim.days,
            params: &params,
            tau: cfg.chain.tau,
            delta: cfg.chain.delta,
            jump_days: path.n[..rows].iter().map(|&n| n as usize).sum(),
            floored_steps: path.floored_steps,
            clamped_steps: path.clamped_steps,
        },
    )
}

#[derive(Serialize)]
struct ResidualSummary {
    eps_y: SummaryStats,
    eps_omega: SummaryStats,
}

#[derive(Serialize)]
struct DiagnosticsReport {
    variant: String,
    vix: SummaryStats,
    vvix: SummaryStats,
    proxy_correlation: Option<f64>,
    /// Residuals at the posterior means.
    plug_in_residuals: ResidualSummary,
    /// Residuals pooled over the stored posterior draws.
    draw_residuals: Option<ResidualSummary>,
}

fn residual_summary(r: &ResidualSeries) -> Result<ResidualSummary> {
    Ok(ResidualSummary {
        eps_y: summary_stats(&r.eps_y)?,
        eps_omega: summary_stats(&r.eps_omega)?,
    })
}

fn qq_rows(points: &[QqPoint]) -> impl Iterator<Item = Vec<String>> + '_ {
    points
        .iter()
        .map(|p| vec![num(p.theoretical), num(p.sample)])
}

fn diagnose(est: &EstimateArtifact, w: &mut ArtifactWriter) -> Result<()> {
    let data = &est.observations;
    let chain = &est.chain;
    let t = data.days();
    let plug = posterior_residuals(data, chain);
    let draws = snapshot_residuals(data, chain);

    let rows = (2..=t + 1).map(|i| {
        vec![
            est.dates[i].clone(),
            i.to_string(),
            num(plug.eps_y[i - 2]),
            if i <= t {
                num(plug.eps_omega[i - 2])
            } else {
                String::new()
            },
        ]
    });
    w.csv(
        "residuals.csv",
        &["date", "day", "eps_y", "eps_omega"],
        rows,
    )?;
    w.csv(
        "qq_eps_y.csv",
        &["theoretical", "sample"],
        qq_rows(&qq_points(&plug.eps_y)?),
    )?;
    w.csv(
        "qq_eps_omega.csv",
        &["theoretical", "sample"],
        qq_rows(&qq_points(&plug.eps_omega)?),
    )?;

    let profile = posterior_jump_profile(chain)?;
    let rows = profile.day.iter().enumerate().map(|(k, &i)| {
        vec![
            est.dates[i].clone(),
            i.to_string(),
            num(profile.probability[k]),
            num(profile.jump_y[k]),
            num(profile.jump_omega[k]),
        ]
    });
    w.csv(
        "jump_profile.csv",
        &["date", "day", "probability", "jump_y", "jump_omega"],
        rows,
    )?;

    let report = DiagnosticsReport {
        variant: chain.variant.to_string(),
        vix: summary_stats(&est.vix)?,
        vvix: summary_stats(&est.vvix)?,
        proxy_correlation: proxy_correlation(&chain.latent.omega_mean[1..=t], &est.vvix[1..=t])
            .ok(),
        plug_in_residuals: residual_summary(&plug)?,
        draw_residuals: if draws.eps_y.len() >= 4 {
            Some(residual_summary(&draws)?)
        } else {
            None
        },
    };
    w.json("diagnostics.json", &report)
}

#[derive(Serialize)]
struct PValueReport {
    variant: String,
    simulations: usize,
    seed: u64,
    posterior_draws: bool,
    statistics: Vec<PValueRow>,
}

#[derive(Serialize)]
struct PValueRow {
    statistic: String,
    data: f64,
    p_value: f64,
}

fn predictive(cfg: &RunConfig, est: &EstimateArtifact, w: &mut ArtifactWriter) -> Result<()> {
    let sim = &cfg.simulation;
    let model = PredictiveModel::from_chain(&est.chain, &est.observations, sim.posterior_draws);
    let table = pvalue_study(&model, &est.observations.y, sim.predictive_paths, sim.seed)?;
    let variant = est.chain.variant.to_string();
    let rows = table.rows();
    w.csv(
        "pvalues.csv",
        &["statistic", "data", &variant],
        rows.iter()
            .map(|(n, d, p)| vec![n.to_string(), num(*d), num(*p)]),
    )?;
    w.json(
        "pvalues.json",
        &PValueReport {
            variant,
            simulations: table.simulations,
            seed: table.seed,
            posterior_draws: sim.posterior_draws,
            statistics: rows
                .into_iter()
                .map(|(n, d, p)| PValueRow {
                    statistic: n.to_string(),
                    data: d,
                    p_value: p,
                })
                .collect(),
        },
    )
}
