//! The Aggregating Algorithm: weights, mixloss and the game loop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{LossSpec, Mode, PreparedLoss};
use crate::math::{pairwise_sum, weighted_logsumexp};
use crate::types::{Distribution, GameTrace, RoundRecord, WeightVector};

/// Tolerance of [`verify_regret_chain`].
pub const CHAIN_TOLERANCE: f64 = 1e-8;

fn check_losses(w: &WeightVector, losses: &[f64], eta: f64) -> Result<()> {
    if w.len() != losses.len() {
        return Err(Error::Size(format!("{} losses for {} weights", losses.len(), w.len())));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("eta = {eta} must be positive")));
    }
    if let Some((n, l)) = losses.iter().enumerate().find(|(_, l)| !l.is_finite()) {
        return Err(Error::Domain(format!("loss of expert {n} is {l}")));
    }
    Ok(())
}

/// `w_n <- w_n exp(-eta l_n)`, normalised, computed on log-weights.
pub fn aa_update_weights(w: &WeightVector, losses: &[f64], eta: f64) -> Result<WeightVector> {
    check_losses(w, losses, eta)?;
    let lw: Vec<f64> = w.log_weights().iter().zip(losses).map(|(lw, l)| lw - eta * l).collect();
    WeightVector::from_log_weights(&lw)
}

/// `m = -(1/eta) log sum_n w_n exp(-eta l_n)`.
pub fn mixloss(w: &WeightVector, losses: &[f64], eta: f64) -> Result<f64> {
    check_losses(w, losses, eta)?;
    let scaled: Vec<f64> = losses.iter().map(|l| -eta * l).collect();
    Ok(-weighted_logsumexp(w.as_slice(), &scaled) / eta)
}

/// Parameters of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub loss: LossSpec,
    pub mode: Mode,
    pub n_experts: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Initial weights; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Configuration("horizon must be at least 1".into()));
        }
        if self.n_experts == 0 {
            return Err(Error::Configuration("n_experts must be at least 1".into()));
        }
        self.loss.eta_for(self.mode)?;
        self.prior_weights()?;
        Ok(())
    }

    /// The learning rate selected by `mode`.
    pub fn eta(&self) -> Result<f64> {
        self.loss.eta_for(self.mode)
    }

    pub fn prior_weights(&self) -> Result<WeightVector> {
        match &self.prior {
            None => WeightVector::uniform(self.n_experts),
            Some(p) if p.len() != self.n_experts => Err(Error::Configuration(format!(
                "prior has {} entries for {} experts",
                p.len(),
                self.n_experts
            ))),
            Some(p) => WeightVector::new(p.clone()),
        }
    }
}

/// Learner state: the prepared loss and the current log-weights.
#[derive(Debug, Clone)]
pub struct Learner {
    loss: PreparedLoss,
    mode: Mode,
    eta: f64,
    log_w: Vec<f64>,
}

impl Learner {
    pub fn new(config: &GameConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            loss: PreparedLoss::new(config.loss.clone(), config.seed)?,
            mode: config.mode,
            eta: config.eta()?,
            log_w: config.prior_weights()?.log_weights(),
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn loss(&self) -> &PreparedLoss {
        &self.loss
    }

    pub fn weights(&self) -> Result<WeightVector> {
        WeightVector::from_log_weights(&self.log_w)
    }

    /// Plays one round and returns its record; `round` is 1-based and only used in errors.
    pub fn play(&mut self, round: usize, forecasts: &[Distribution], outcome: &Distribution) -> Result<RoundRecord> {
        if forecasts.len() != self.log_w.len() {
            return Err(Error::Size(format!(
                "round {round}: {} forecasts for {} experts",
                forecasts.len(),
                self.log_w.len()
            )));
        }
        let w = self.weights()?;
        let learner = self.loss.aggregate(self.mode, forecasts, &w)?;
        let loss = &self.loss;
        let evaluated: Vec<Result<f64>> = forecasts.par_iter().map(|f| loss.evaluate(f, outcome)).collect();
        let mut expert_losses = Vec::with_capacity(forecasts.len());
        for (n, r) in evaluated.into_iter().enumerate() {
            expert_losses.push(r.map_err(|e| Error::LossEvaluation {
                round,
                expert: Some(n),
                source: Box::new(e),
            })?);
        }
        let learner_loss = loss.evaluate(&learner, outcome).map_err(|e| Error::LossEvaluation {
            round,
            expert: None,
            source: Box::new(e),
        })?;
        let m = mixloss(&w, &expert_losses, self.eta)?;
        for (lw, l) in self.log_w.iter_mut().zip(&expert_losses) {
            *lw -= self.eta * l;
        }
        let top = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for lw in &mut self.log_w {
            *lw -= top;
        }
        Ok(RoundRecord {
            expert_losses,
            learner_loss,
            mixloss: m,
            weights_before: w,
        })
    }
}

/// Runs `config.horizon` rounds, pulling one forecast vector and one outcome per round.
pub fn aa_run<E, O>(config: &GameConfig, experts: E, outcomes: O) -> Result<GameTrace>
where
    E: IntoIterator<Item = Vec<Distribution>>,
    O: IntoIterator<Item = Distribution>,
{
    aa_try_run(config, experts.into_iter().map(Ok), outcomes.into_iter().map(Ok))
}

/// [`aa_run`] over fallible streams; the first stream error aborts the game.
pub fn aa_try_run<E, O>(config: &GameConfig, experts: E, outcomes: O) -> Result<GameTrace>
where
    E: IntoIterator<Item = Result<Vec<Distribution>>>,
    O: IntoIterator<Item = Result<Distribution>>,
{
    let mut learner = Learner::new(config)?;
    let mut experts = experts.into_iter();
    let mut outcomes = outcomes.into_iter();
    let mut trace = GameTrace::new(learner.eta(), config.n_experts);
    for round in 1..=config.horizon {
        let forecasts = experts.next().ok_or(Error::StreamExhausted {
            stream: "expert",
            round,
        })??;
        let outcome = outcomes.next().ok_or(Error::StreamExhausted {
            stream: "outcome",
            round,
        })??;
        trace.push(learner.play(round, &forecasts, &outcome)?)?;
    }
    Ok(trace)
}

/// A failed check at a given round (1-based; the final round for the regret bound).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFailure {
    pub check: String,
    pub round: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretChainReport {
    pub rounds: usize,
    pub eta: f64,
    pub learner_below_mixloss: bool,
    pub telescoping: bool,
    pub regret_bound_holds: bool,
    pub learner_cumulative: f64,
    pub mixloss_cumulative: f64,
    pub best_expert_cumulative: f64,
    pub regret: f64,
    pub bound: f64,
    pub failures: Vec<ChainFailure>,
    pub pass: bool,
}

/// Re-derives the regret guarantee from a trace.
///
/// Checks `h_t <= m_t` per round, `sum_{s<=t} m_s = M_t` with
/// `M_t = -(1/eta) log sum_n w_1^n exp(-eta L_t^n)`, and
/// `H_T <= ln(1 / min_n w_1^n) / eta + min_n L_T^n` (`ln N / eta` for uniform
/// initial weights), each to [`CHAIN_TOLERANCE`].
pub fn verify_regret_chain(trace: &GameTrace, eta: f64) -> Result<RegretChainReport> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("eta = {eta} must be positive")));
    }
    let n = trace.n_experts;
    let prior = match trace.rounds.first() {
        Some(r) => r.weights_before.clone(),
        None => WeightVector::uniform(n.max(1))?,
    };
    let mut failures = Vec::new();
    let mut cum_l = vec![0.0; n];
    let mut mix_terms = Vec::with_capacity(trace.len());
    for (i, r) in trace.rounds.iter().enumerate() {
        let t = i + 1;
        if r.learner_loss > r.mixloss + CHAIN_TOLERANCE {
            failures.push(ChainFailure {
                check: "learner_below_mixloss".into(),
                round: t,
                lhs: r.learner_loss,
                rhs: r.mixloss,
            });
        }
        for (a, l) in cum_l.iter_mut().zip(&r.expert_losses) {
            *a += l;
        }
        mix_terms.push(r.mixloss);
        let sum_m = pairwise_sum(&mix_terms);
        let m_t = mixloss(&prior, &cum_l, eta)?;
        if (sum_m - m_t).abs() > CHAIN_TOLERANCE * m_t.abs().max(1.0) {
            failures.push(ChainFailure {
                check: "telescoping".into(),
                round: t,
                lhs: sum_m,
                rhs: m_t,
            });
        }
    }
    let learner: Vec<f64> = trace.rounds.iter().map(|r| r.learner_loss).collect();
    let h = pairwise_sum(&learner);
    let best = cum_l.iter().copied().fold(f64::INFINITY, f64::min);
    let best = if best.is_finite() { best } else { 0.0 };
    let min_w = prior.iter().fold(f64::INFINITY, f64::min);
    let bound = -min_w.ln() / eta;
    if h > bound + best + CHAIN_TOLERANCE {
        failures.push(ChainFailure {
            check: "regret_bound".into(),
            round: trace.len(),
            lhs: h,
            rhs: bound + best,
        });
    }
    let has = |c: &str| failures.iter().any(|f| f.check == c);
    let (a, b, c) = (!has("learner_below_mixloss"), !has("telescoping"), !has("regret_bound"));
    Ok(RegretChainReport {
        rounds: trace.len(),
        eta,
        learner_below_mixloss: a,
        telescoping: b,
        regret_bound_holds: c,
        learner_cumulative: h,
        mixloss_cumulative: pairwise_sum(&mix_terms),
        best_expert_cumulative: best,
        regret: h - best,
        bound,
        pass: a && b && c,
        failures,
    })
}
