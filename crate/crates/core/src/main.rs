use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use vixsv::model::ModelVariant;
use vixsv::pipeline::{run_command, Command, RunConfig};
use vixsv::Error;

#[derive(Parser)]
#[command(
    name = "vixsv",
    version,
    about = "Jump-diffusion models of VIX with VVIX as a volatility proxy"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input CSV with date, vix, vvix columns.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// SV, SVJ_C, SVJJ_C or SVJJ_S.
    #[arg(long, global = true)]
    variant: Option<ModelVariant>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Rolling jump and co-jump tests on VIX and VVIX.
    TestJumps,
    /// Run the MCMC estimator.
    Estimate,
    /// Simulate a VIX/VVIX series.
    Simulate,
    /// Residuals, Q-Q data and jump profile of a finished estimation.
    Diagnose,
    /// Posterior-predictive p-values of a finished estimation.
    PvalueStudy,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::TestJumps => Command::TestJumps,
            Cmd::Estimate => Command::Estimate,
            Cmd::Simulate => Command::Simulate,
            Cmd::Diagnose => Command::Diagnose,
            Cmd::PvalueStudy => Command::PvalueStudy,
        }
    }
}

fn build_config(cli: &Cli) -> vixsv::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(v) = cli.variant {
        cfg.variant = v;
    }
    if cli.input.is_some() {
        cfg.paths.input = cli.input.clone();
    }
    if cli.output_dir.is_some() {
        cfg.paths.output_dir = cli.output_dir.clone();
    }
    if cfg.paths.output_dir.is_none() {
        cfg.paths.output_dir = Some(PathBuf::from("output"));
    }
    Ok(cfg)
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::Invariant(_) => "invariant",
        Error::Divergent { .. } => "divergent",
        Error::Input { .. } => "input",
        Error::Dependency(_) => "dependency",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Json(_) => "json",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let command: Command = cli.command.into();
    let result = build_config(&cli).and_then(|cfg| run_command(command, &cfg));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code: u8 = if e.is_user_error() { 1 } else { 2 };
            let mut record = json!({
                "command": command.name(),
                "kind": kind(&e),
                "message": e.to_string(),
                "exit_code": code,
            });
            match &e {
                Error::Input { row, .. } => record["row"] = json!(row),
                Error::Divergent { sweep, .. } => record["sweep"] = json!(sweep),
                _ => {}
            }
            eprintln!("{}", json!({ "error": record }));
            ExitCode::from(code)
        }
    }
}
