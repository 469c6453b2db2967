use std::io::Write;

use serde::{Deserialize, Serialize};

use super::weights::WeightVector;
use crate::error::{Error, Result};

/// Version tag written into serialised traces.
pub const TRACE_SCHEMA_VERSION: u32 = 1;
/// Allowed excess of the learner loss over the mixloss in a single round.
pub const ROUND_TOLERANCE: f64 = 1e-9;

/// One round of the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub expert_losses: Vec<f64>,
    pub learner_loss: f64,
    pub mixloss: f64,
    pub weights_before: WeightVector,
}

/// Per-round record of a game: expert losses `l_t^n`, learner loss `h_t`,
/// mixloss `m_t` and the weights used to aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTrace {
    pub schema_version: u32,
    pub eta: f64,
    pub n_experts: usize,
    pub rounds: Vec<RoundRecord>,
}

impl GameTrace {
    pub fn new(eta: f64, n_experts: usize) -> Self {
        Self {
            schema_version: TRACE_SCHEMA_VERSION,
            eta,
            n_experts,
            rounds: Vec::new(),
        }
    }

    pub fn push(&mut self, round: RoundRecord) -> Result<()> {
        if round.expert_losses.len() != self.n_experts || round.weights_before.len() != self.n_experts {
            return Err(Error::Size(format!(
                "round has {} losses and {} weights for {} experts",
                round.expert_losses.len(),
                round.weights_before.len(),
                self.n_experts
            )));
        }
        self.rounds.push(round);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Cumulative learner loss `H_T`.
    pub fn learner_cumulative(&self) -> f64 {
        self.rounds.iter().map(|r| r.learner_loss).sum()
    }

    /// Cumulative mixloss `sum_t m_t`.
    pub fn mixloss_cumulative(&self) -> f64 {
        self.rounds.iter().map(|r| r.mixloss).sum()
    }

    /// Cumulative losses `L_T^n` of every expert.
    pub fn expert_cumulative(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_experts];
        for r in &self.rounds {
            for (a, l) in acc.iter_mut().zip(&r.expert_losses) {
                *a += l;
            }
        }
        acc
    }

    pub fn best_expert_cumulative(&self) -> f64 {
        self.expert_cumulative().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Regret `H_T - min_n L_T^n`.
    pub fn regret(&self) -> f64 {
        self.learner_cumulative() - self.best_expert_cumulative()
    }

    /// The guarantee `ln N / eta`.
    pub fn regret_bound(&self) -> f64 {
        (self.n_experts as f64).ln() / self.eta
    }

    /// Index of the first round with `h_t > m_t + tol`, if any.
    pub fn first_round_violation(&self) -> Option<usize> {
        self.rounds
            .iter()
            .position(|r| r.learner_loss > r.mixloss + ROUND_TOLERANCE)
    }

    /// Writes one row per round: `t, h_t, m_t, l_t^1..N, w_t^1..N` (rounds numbered from 1).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "h_t".into(), "m_t".into()];
        header.extend((1..=self.n_experts).map(|n| format!("l_t^{n}")));
        header.extend((1..=self.n_experts).map(|n| format!("w_t^{n}")));
        w.write_record(&header)?;
        for (t, r) in self.rounds.iter().enumerate() {
            let mut row = vec![(t + 1).to_string(), fmt(r.learner_loss), fmt(r.mixloss)];
            row.extend(r.expert_losses.iter().map(|&v| fmt(v)));
            row.extend(r.weights_before.iter().map(fmt));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let trace: GameTrace = serde_json::from_str(s)?;
        if trace.schema_version != TRACE_SCHEMA_VERSION {
            return Err(Error::Configuration(format!(
                "unsupported trace schema version {}",
                trace.schema_version
            )));
        }
        Ok(trace)
    }
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}
