//! Aggregate statistics over a set of episode records.

use std::collections::BTreeMap;

use cave_agent::UsageRecord;
use cave_core::{Real, Status};
use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::EpisodeRecord;

/// Prices per 1000 tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPrice<N> {
    pub prompt_per_1k: N,
    pub completion_per_1k: N,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTable<N> {
    #[serde(default = "BTreeMap::new")]
    pub models: BTreeMap<String, ModelPrice<N>>,
    /// Used for models without their own entry.
    #[serde(default)]
    pub default: Option<ModelPrice<N>>,
}

impl<N> Default for PriceTable<N> {
    fn default() -> Self {
        Self { models: BTreeMap::new(), default: None }
    }
}

impl<N: Copy> PriceTable<N> {
    pub fn with_model(mut self, model: impl Into<String>, price: ModelPrice<N>) -> Self {
        self.models.insert(model.into(), price);
        self
    }

    pub fn price(&self, model: &str) -> Option<ModelPrice<N>> {
        self.models.get(model).copied().or(self.default)
    }
}

/// `prompt · price_in + completion · price_out`, with prices per 1000 tokens.
///
/// ```
/// use cave_agent::UsageRecord;
/// use cave_harness::{call_cost, ModelPrice};
///
/// let usage = UsageRecord::new(1000, 500, 0.0);
/// let price = ModelPrice { prompt_per_1k: 1.0, completion_per_1k: 2.0 };
/// assert_eq!(call_cost(&usage, &price), 2.0);
/// ```
pub fn call_cost<N: Num + FromPrimitive + Copy>(usage: &UsageRecord, price: &ModelPrice<N>) -> N {
    let count = |n: u64| N::from_u64(n).expect("token count representable");
    (count(usage.prompt_tokens) * price.prompt_per_1k + count(usage.completion_tokens) * price.completion_per_1k)
        / count(1000)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cannot summarize an empty record set")]
    Empty,
}

/// Outcome statistics over completed (non protocol-failure) runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeStats<S> {
    pub avg_reward: S,
    /// Sample (n − 1) standard deviation; zero for a single run.
    pub reward_std: S,
    pub avg_steps: S,
    pub min_steps: u32,
    pub max_steps: u32,
    /// Mean of score / steps over runs with at least one step.
    pub avg_reward_per_step: Option<S>,
    pub success_rate: S,
    pub kill_rate: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary<S> {
    pub runs: usize,
    pub completed_runs: usize,
    pub protocol_failures: usize,
    /// `None` when every run ended in a protocol failure.
    pub outcomes: Option<OutcomeStats<S>>,
    /// Rounds in which the agent was asked for a decision, over all runs.
    pub decision_rounds: usize,
    pub model_calls: usize,
    pub total_prompt_tokens: u64,
    pub total_completion_tokens: u64,
    pub total_tokens: u64,
    pub total_latency_secs: S,
    pub avg_prompt_tokens: S,
    pub avg_completion_tokens: S,
    pub avg_total_tokens: S,
    pub avg_latency_per_step: S,
    /// `None` when a model in the records has no price.
    pub total_cost: Option<S>,
    pub avg_cost_per_step: Option<S>,
    /// Completion tokens per second of generation latency.
    pub tps: Option<S>,
}

fn mean<S: Real>(values: &[S]) -> S {
    values.iter().fold(S::zero(), |a, &b| a + b) / S::of_count(values.len() as u64)
}

fn sample_std<S: Real>(values: &[S]) -> S {
    if values.len() < 2 {
        return S::zero();
    }
    let m = mean(values);
    let ss = values.iter().fold(S::zero(), |a, &v| a + (v - m) * (v - m));
    (ss / S::of_count(values.len() as u64 - 1)).sqrt()
}

fn percent<S: Real>(hits: usize, of: usize) -> S {
    S::of(100.0) * S::of_count(hits as u64) / S::of_count(of as u64)
}

pub fn summarize<S: Real>(records: &[EpisodeRecord], prices: &PriceTable<S>) -> Result<MetricsSummary<S>, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let completed: Vec<&EpisodeRecord> = records.iter().filter(|r| r.status != Status::ProtocolFailure).collect();
    let outcomes = (!completed.is_empty()).then(|| {
        let scores: Vec<S> = completed.iter().map(|r| S::of(r.score as f64)).collect();
        let steps: Vec<S> = completed.iter().map(|r| S::of_count(r.steps as u64)).collect();
        let per_step: Vec<S> = completed
            .iter()
            .filter(|r| r.steps > 0)
            .map(|r| S::of(r.score as f64) / S::of_count(r.steps as u64))
            .collect();
        OutcomeStats {
            avg_reward: mean(&scores),
            reward_std: sample_std(&scores),
            avg_steps: mean(&steps),
            min_steps: completed.iter().map(|r| r.steps).min().unwrap_or(0),
            max_steps: completed.iter().map(|r| r.steps).max().unwrap_or(0),
            avg_reward_per_step: (!per_step.is_empty()).then(|| mean(&per_step)),
            success_rate: percent(completed.iter().filter(|r| r.success).count(), completed.len()),
            kill_rate: percent(completed.iter().filter(|r| r.wumpus_killed).count(), completed.len()),
        }
    });

    let mut usage = UsageRecord::default();
    let mut latency = S::zero();
    let mut cost = Some(S::zero());
    let mut model_calls = 0;
    for exchange in records.iter().flat_map(|r| &r.rounds).flat_map(|round| &round.exchanges) {
        model_calls += 1;
        let Some(u) = exchange.usage else { continue };
        usage = usage + u;
        latency = latency + S::of(u.latency_secs);
        cost = match (cost, prices.price(&exchange.model)) {
            (Some(total), Some(price)) => Some(total + call_cost(&u, &price)),
            _ => None,
        };
    }
    let decision_rounds: usize = records.iter().map(|r| r.rounds.len()).sum();
    let runs = S::of_count(records.len() as u64);
    let rounds = S::of_count(decision_rounds as u64);
    let per_round = |x: S| if decision_rounds == 0 { S::zero() } else { x / rounds };

    Ok(MetricsSummary {
        runs: records.len(),
        completed_runs: completed.len(),
        protocol_failures: records.len() - completed.len(),
        outcomes,
        decision_rounds,
        model_calls,
        total_prompt_tokens: usage.prompt_tokens,
        total_completion_tokens: usage.completion_tokens,
        total_tokens: usage.total_tokens,
        total_latency_secs: latency,
        avg_prompt_tokens: S::of_count(usage.prompt_tokens) / runs,
        avg_completion_tokens: S::of_count(usage.completion_tokens) / runs,
        avg_total_tokens: S::of_count(usage.total_tokens) / runs,
        avg_latency_per_step: per_round(latency),
        total_cost: cost,
        avg_cost_per_step: cost.map(per_round),
        tps: (latency > S::zero()).then(|| S::of_count(usage.completion_tokens) / latency),
    })
}

impl<S: Real> MetricsSummary<S> {
    /// Human-readable multi-line report.
    pub fn report(&self) -> String {
        let mut out = format!(
            "runs: {} (completed {}, protocol failures {})\n",
            self.runs, self.completed_runs, self.protocol_failures
        );
        match &self.outcomes {
            Some(o) => {
                out += &format!("avg reward: {:.2} ± {:.2}\n", o.avg_reward, o.reward_std);
                out += &format!("avg steps: {:.2} (range {}-{})\n", o.avg_steps, o.min_steps, o.max_steps);
                match o.avg_reward_per_step {
                    Some(v) => out += &format!("avg reward per step: {v:.2}\n"),
                    None => out += "avg reward per step: n/a\n",
                }
                out += &format!("success rate: {:.1}%\n", o.success_rate);
                out += &format!("wumpus kill rate: {:.1}%\n", o.kill_rate);
            }
            None => out += "no completed runs\n",
        }
        out += &format!("avg latency per step: {:.3} s\n", self.avg_latency_per_step);
        out += &format!(
            "avg tokens per run: prompt {:.1}, completion {:.1}, total {:.1}\n",
            self.avg_prompt_tokens, self.avg_completion_tokens, self.avg_total_tokens
        );
        match self.avg_cost_per_step {
            Some(c) => out += &format!("avg cost per step: {c:.6}\n"),
            None => out += "avg cost per step: n/a (missing price)\n",
        }
        match self.tps {
            Some(t) => out += &format!("TPS: {t:.2}\n"),
            None => out += "TPS: n/a\n",
        }
        out
    }
}
