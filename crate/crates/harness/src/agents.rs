//! Non-LLM agents used by tests and baselines, and the agent factory.

use std::sync::Arc;

use cave_agent::{
    Agent, AgentFailure, ChatClient, Decision, FailureKind, LlmAgent, Mode, RoundContext,
};
use cave_agent::planner_critic::{ArbitrationConfig, PlannerCriticAgent};
use cave_core::{Action, OracleAgent, Real, WorldConfig};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Prompting mechanism of an LLM agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Cot,
    Cos,
    #[value(name = "planner-critic", alias = "planner_critic")]
    PlannerCritic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Oracle,
    Llm,
    Scripted,
    Random,
}

/// Fixed behaviours for the scripted agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptPolicy {
    /// Always the first frontier room in (y, x) order.
    FirstFrontier,
    /// Like `FirstFrontier` but never enters `avoid` while another room is open.
    FirstFrontierAvoiding(Vec<cave_core::Cell>),
    /// Replays the given actions, then exits.
    Sequence(Vec<Action>),
}

/// Deterministic agent following a [`ScriptPolicy`].
#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    policy: ScriptPolicy,
    cursor: usize,
}

impl ScriptedAgent {
    pub fn new(policy: ScriptPolicy) -> Self {
        Self { policy, cursor: 0 }
    }
}

fn moves(legal: &[Action]) -> impl Iterator<Item = &Action> {
    legal.iter().filter(|a| matches!(a, Action::Move(_)))
}

impl Agent for ScriptedAgent {
    fn decide(&mut self, ctx: &RoundContext<'_>) -> Result<Decision, AgentFailure> {
        let action = match &self.policy {
            ScriptPolicy::FirstFrontier => moves(ctx.legal_actions).next().copied().unwrap_or(Action::Exit),
            ScriptPolicy::FirstFrontierAvoiding(avoid) => {
                let preferred = moves(ctx.legal_actions)
                    .find(|a| !matches!(a, Action::Move(c) if avoid.contains(c)));
                preferred
                    .or_else(|| moves(ctx.legal_actions).next())
                    .copied()
                    .unwrap_or(Action::Exit)
            }
            ScriptPolicy::Sequence(actions) => {
                let next = actions.get(self.cursor).copied().unwrap_or(Action::Exit);
                self.cursor += 1;
                next
            }
        };
        Ok(Decision::direct(action))
    }
}

/// Picks uniformly among the legal actions from a seeded ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Agent for RandomAgent {
    fn decide(&mut self, ctx: &RoundContext<'_>) -> Result<Decision, AgentFailure> {
        if ctx.legal_actions.is_empty() {
            return Err(AgentFailure {
                kind: FailureKind::Internal,
                reason: "no legal action".into(),
                exchanges: Vec::new(),
            });
        }
        let pick = (self.rng.next_u64() % ctx.legal_actions.len() as u64) as usize;
        Ok(Decision::direct(ctx.legal_actions[pick]))
    }
}

/// Chat clients and settings shared by every LLM episode of a run.
#[derive(Clone)]
pub struct LlmSpec {
    pub mechanism: Mechanism,
    pub planner: Arc<dyn ChatClient>,
    /// Defaults to the planner's client when absent.
    pub critic: Option<Arc<dyn ChatClient>>,
    pub threshold: f64,
    pub parse_retries: u32,
}

impl LlmSpec {
    pub fn new(mechanism: Mechanism, client: Arc<dyn ChatClient>) -> Self {
        Self {
            mechanism,
            planner: client,
            critic: None,
            threshold: cave_agent::planner_critic::DEFAULT_THRESHOLD,
            parse_retries: cave_agent::DEFAULT_PARSE_RETRIES,
        }
    }

    pub fn critic_client(&self) -> Arc<dyn ChatClient> {
        self.critic.clone().unwrap_or_else(|| self.planner.clone())
    }
}

/// Everything needed to build a fresh agent for each episode.
#[derive(Clone)]
pub enum AgentSpec {
    Oracle,
    Scripted(ScriptPolicy),
    /// The per-episode stream is seeded with `seed ^ world seed`.
    Random { seed: u64 },
    Llm(LlmSpec),
}

impl AgentSpec {
    pub fn kind(&self) -> AgentKind {
        match self {
            AgentSpec::Oracle => AgentKind::Oracle,
            AgentSpec::Scripted(_) => AgentKind::Scripted,
            AgentSpec::Random { .. } => AgentKind::Random,
            AgentSpec::Llm(_) => AgentKind::Llm,
        }
    }

    pub fn mechanism(&self) -> Option<Mechanism> {
        match self {
            AgentSpec::Llm(spec) => Some(spec.mechanism),
            _ => None,
        }
    }

    /// `(planner model, critic model)`; the critic is only named for planner-critic runs.
    pub fn models(&self) -> (Option<String>, Option<String>) {
        match self {
            AgentSpec::Llm(spec) => {
                let planner = Some(spec.planner.model().to_string());
                let critic = (spec.mechanism == Mechanism::PlannerCritic)
                    .then(|| spec.critic_client().model().to_string());
                (planner, critic)
            }
            _ => (None, None),
        }
    }

    pub fn build(&self, config: &WorldConfig) -> Result<Box<dyn Agent>, HarnessError> {
        Ok(match self {
            AgentSpec::Oracle => Box::new(
                OracleAgent::new(config.grid_size, config.num_pits, config.num_wumpus)
                    .map_err(|e| HarnessError::Agent(e.to_string()))?,
            ),
            AgentSpec::Scripted(policy) => Box::new(ScriptedAgent::new(policy.clone())),
            AgentSpec::Random { seed } => Box::new(RandomAgent::new(seed ^ config.seed)),
            AgentSpec::Llm(spec) => build_llm(spec)?,
        })
    }
}

fn build_llm(spec: &LlmSpec) -> Result<Box<dyn Agent>, HarnessError> {
    Ok(match spec.mechanism {
        Mechanism::Cot => Box::new(LlmAgent::new(spec.planner.clone(), Mode::Cot).with_parse_retries(spec.parse_retries)),
        Mechanism::Cos => Box::new(LlmAgent::new(spec.planner.clone(), Mode::Cos).with_parse_retries(spec.parse_retries)),
        Mechanism::PlannerCritic => {
            let cfg = ArbitrationConfig::new(<f64 as Real>::of(spec.threshold))
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            Box::new(
                PlannerCriticAgent::<f64>::new(spec.planner.clone(), spec.critic_client(), cfg)
                    .with_parse_retries(spec.parse_retries),
            )
        }
    })
}
