//! `mixagg run`: play one configured game and write its artifacts.

use std::fs;
use std::path::Path;

use mixagg_core::aa::{aa_try_run, verify_regret_chain, RegretChainReport};
use mixagg_core::synthetic::Scenario;
use mixagg_core::types::GameTrace;
use serde::{Deserialize, Serialize};

use crate::config::{Format, LoadedConfig};
use crate::CliError;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub loss: String,
    pub mode: mixagg_core::losses::Mode,
    pub eta: f64,
    pub n_experts: usize,
    pub horizon: usize,
    pub seed: u64,
    #[serde(rename = "R_T")]
    pub regret: f64,
    /// `ln(1 / min_n w_1^n) / eta`, which is `ln N / eta` for uniform initial weights.
    pub bound: f64,
    pub bound_satisfied: bool,
    #[serde(rename = "H_T")]
    pub learner_loss: f64,
    #[serde(rename = "L_T")]
    pub expert_losses: Vec<f64>,
    pub best_expert: usize,
    pub regret_chain_pass: bool,
}

/// Seed override from `MIXAGG_SEED`, if set.
pub fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var("MIXAGG_SEED") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("MIXAGG_SEED: {e}"))),
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| CliError::Config(format!("MIXAGG_SEED={v}: {e}"))),
    }
}

/// Plays the game; returns the trace without touching the filesystem.
pub fn play(loaded: &LoadedConfig) -> Result<GameTrace, CliError> {
    let game = &loaded.config.game;
    let scenario =
        Scenario::new(game, loaded.config.expert_pool.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let result = match &loaded.outcomes {
        None => aa_try_run(game, scenario.experts(), scenario.outcomes()),
        Some(outcomes) => aa_try_run(game, scenario.experts(), outcomes.iter().cloned().map(Ok)),
    };
    result.map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn summarize(loaded: &LoadedConfig, trace: &GameTrace, chain: &RegretChainReport) -> Summary {
    let game = &loaded.config.game;
    let expert_losses = trace.expert_cumulative();
    let best_expert = expert_losses
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (n, &l)| if l < acc.1 { (n, l) } else { acc })
        .0;
    let regret = trace.regret();
    Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        loss: game.loss.name().to_string(),
        mode: game.mode,
        eta: trace.eta,
        n_experts: game.n_experts,
        horizon: game.horizon,
        seed: game.seed,
        regret,
        bound: chain.bound,
        bound_satisfied: regret <= chain.bound + mixagg_core::aa::CHAIN_TOLERANCE,
        learner_loss: trace.learner_cumulative(),
        expert_losses,
        best_expert,
        regret_chain_pass: chain.pass,
    }
}

/// Runs the experiment and writes `trace.csv`/`trace.json` (per `formats`),
/// `summary.json` and `regret_chain.json` into `out`.
pub fn run_experiment(loaded: &LoadedConfig, out: &Path) -> Result<Summary, CliError> {
    let trace = play(loaded)?;
    let chain = verify_regret_chain(&trace, trace.eta).map_err(|e| CliError::Runtime(e.to_string()))?;
    let summary = summarize(loaded, &trace, &chain);
    let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", out.display()));
    let core = |e: mixagg_core::Error| CliError::Runtime(e.to_string());
    fs::create_dir_all(out).map_err(io)?;
    for format in &loaded.config.formats {
        match format {
            Format::Csv => fs::write(out.join("trace.csv"), trace.to_csv_string().map_err(core)?).map_err(io)?,
            Format::Json => fs::write(out.join("trace.json"), trace.to_json().map_err(core)?).map_err(io)?,
        }
    }
    fs::write(out.join("summary.json"), to_pretty(&summary)).map_err(io)?;
    fs::write(out.join("regret_chain.json"), to_pretty(&chain)).map_err(io)?;
    Ok(summary)
}

pub fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialise");
    s.push('\n');
    s
}
