//! `mixagg`: run aggregation experiments and the rate certification suite.

mod config;
mod run;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mixagg_core::verify::{run_verification_suite, Scope};

use crate::config::ExperimentConfig;

/// Exit code for configuration and usage errors.
const EXIT_CONFIG: u8 = 2;
/// Exit code for failures while running a game or a check.
const EXIT_RUNTIME: u8 = 1;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "mixagg", version, about = "Online aggregation of probabilistic forecasts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play the game described by a JSON config and write its trace and reports.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify each aggregation rule against its rate on random instances.
    Verify {
        /// Comma-separated loss kinds, or `all`.
        #[arg(long, default_value = "all")]
        scope: String,
        /// Random instances per row (a tenth of that for Monte Carlo losses).
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for `verification.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(config: PathBuf, out: Option<PathBuf>) -> Result<bool, CliError> {
    let mut loaded = ExperimentConfig::load(&config)?;
    if let Some(seed) = run::seed_override()? {
        loaded.config.game.seed = seed;
    }
    let out = out.unwrap_or_else(|| loaded.config.output.clone());
    let s = run::run_experiment(&loaded, &out)?;
    println!(
        "{} {:?}: N={} T={} eta={} R_T={:.6} bound={:.6} bound_satisfied={} chain={}",
        s.loss,
        s.mode,
        s.n_experts,
        s.horizon,
        s.eta,
        s.regret,
        s.bound,
        s.bound_satisfied,
        if s.regret_chain_pass { "pass" } else { "FAIL" }
    );
    println!("artifacts written to {}", out.display());
    Ok(s.regret_chain_pass)
}

fn verify(scope: &str, trials: usize, seed: u64, out: Option<PathBuf>) -> Result<bool, CliError> {
    let scope = Scope::parse(scope).map_err(|e| CliError::Config(e.to_string()))?;
    let report = run_verification_suite(&scope, trials, seed).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "{:<14} {:<11} {:<31} {:>10} {:>7} {:>12} {:>10}  result",
        "loss", "mode", "rule", "eta", "trials", "worst slack", "ms"
    );
    for r in &report.rows {
        println!(
            "{:<14} {:<11} {:<31} {:>10.6} {:>7} {:>+12.3e} {:>10.1}  {}",
            r.loss,
            format!("{:?}", r.mode).to_lowercase(),
            r.rule,
            r.eta,
            r.trials,
            r.worst_slack,
            r.runtime_ms,
            if r.pass { "pass" } else { "FAIL" }
        );
        if let Some(e) = &r.first_error {
            println!("    {e}");
        }
    }
    if let Some(dir) = out {
        let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", dir.display()));
        fs::create_dir_all(&dir).map_err(io)?;
        fs::write(dir.join("verification.json"), run::to_pretty(&report)).map_err(io)?;
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => run(config, out),
        Command::Verify {
            scope,
            trials,
            seed,
            out,
        } => verify(&scope, trials, seed, out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_RUNTIME),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                CliError::Config(_) => EXIT_CONFIG,
                CliError::Runtime(_) => EXIT_RUNTIME,
            })
        }
    }
}
