//! Episode runner and the per-episode log record.

use cave_agent::{Agent, CosTurn, Exchange, Provenance, RoundContext, UsageRecord, VerdictNote};
use cave_core::{
    apply_action, build_observation, generate_world, legal_actions, Action, ArrowReport, Layout,
    Observation, Percept, Status, WorldConfig, WorldState,
};
use serde::{Deserialize, Serialize};

use crate::agents::{AgentKind, AgentSpec, Mechanism};
use crate::HarnessError;

/// Version of the episode log line format.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundEntry {
    pub round: u32,
    pub observation: Observation,
    pub exchanges: Vec<Exchange>,
    pub turn: Option<CosTurn>,
    pub verdict: Option<VerdictNote>,
    /// Absent when the round ended the episode without an executable action.
    pub action: Option<Action>,
    pub provenance: Option<Provenance>,
    pub reward_delta: i64,
    pub percept: Option<Percept>,
    /// Sum over this round's model calls.
    pub usage: UsageRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub schema: u32,
    pub config: WorldConfig,
    pub seed: u64,
    /// Initial hidden layout; regenerated from the seed on replay unless
    /// `custom_layout` is set.
    pub layout: Layout,
    pub custom_layout: bool,
    pub agent: AgentKind,
    pub mechanism: Option<Mechanism>,
    pub planner_model: Option<String>,
    pub critic_model: Option<String>,
    pub rounds: Vec<RoundEntry>,
    pub status: Status,
    pub score: i64,
    /// Executed moves and shots; exits are not counted.
    pub steps: u32,
    pub arrow_report: Option<ArrowReport>,
    pub success: bool,
    pub wumpus_killed: bool,
    pub error: Option<String>,
}

impl EpisodeRecord {
    pub fn executed_actions(&self) -> impl Iterator<Item = Action> + '_ {
        self.rounds.iter().filter_map(|r| r.action)
    }

    pub fn reward_ledger(&self) -> Vec<i64> {
        self.rounds.iter().filter(|r| r.action.is_some()).map(|r| r.reward_delta).collect()
    }

    pub fn total_usage(&self) -> UsageRecord {
        self.rounds.iter().map(|r| r.usage).sum()
    }

    pub fn model_calls(&self) -> usize {
        self.rounds.iter().map(|r| r.exchanges.len()).sum()
    }

    /// `(success, wumpus_killed)` recomputed from status and arrow report.
    pub fn derived_flags(&self) -> (bool, bool) {
        (self.status == Status::Success, self.arrow_report.is_some_and(|r| r.scream))
    }

    /// Canonical JSON of every field that a deterministic agent fixes,
    /// i.e. the record with wall-clock latencies zeroed.
    pub fn core_json(&self) -> String {
        let mut core = self.clone();
        for round in &mut core.rounds {
            round.usage.latency_secs = 0.0;
            for exchange in &mut round.exchanges {
                if let Some(u) = exchange.usage.as_mut() {
                    u.latency_secs = 0.0;
                }
            }
        }
        serde_json::to_string(&core).expect("record serializes")
    }
}

/// Runs one episode on a world generated from `config`.
pub fn run_episode(config: &WorldConfig, spec: &AgentSpec) -> Result<EpisodeRecord, HarnessError> {
    let world = generate_world(config)?;
    let mut agent = spec.build(config)?;
    Ok(drive(world, false, agent.as_mut(), spec))
}

/// Runs one episode on an explicit layout.
pub fn run_episode_on_layout(
    config: &WorldConfig,
    layout: &Layout,
    spec: &AgentSpec,
) -> Result<EpisodeRecord, HarnessError> {
    let world = WorldState::with_layout(*config, layout)?;
    let mut agent = spec.build(config)?;
    Ok(drive(world, true, agent.as_mut(), spec))
}

/// Observe → decide → act until the episode ends. Agent failures and
/// rejected actions end the episode as a protocol failure.
pub fn drive(world: WorldState, custom_layout: bool, agent: &mut dyn Agent, spec: &AgentSpec) -> EpisodeRecord {
    let layout = world.layout().expect("fresh world holds its gold");
    let config = world.config;
    let mut state = world;
    let mut rounds = Vec::new();
    let mut error = None;

    while state.status == Status::Running {
        let round = rounds.len() as u32 + 1;
        let observation = build_observation(&state);
        let legal = legal_actions(&state);
        let ctx = RoundContext { round, grid_size: config.grid_size, observation: &observation, legal_actions: &legal };
        let mut entry = RoundEntry {
            round,
            observation: observation.clone(),
            exchanges: Vec::new(),
            turn: None,
            verdict: None,
            action: None,
            provenance: None,
            reward_delta: 0,
            percept: None,
            usage: UsageRecord::default(),
        };
        match agent.decide(&ctx) {
            Ok(decision) => {
                entry.exchanges = decision.exchanges;
                entry.turn = decision.turn;
                entry.verdict = decision.verdict;
                match apply_action(&state, decision.action) {
                    Ok(t) => {
                        entry.action = Some(decision.action);
                        entry.provenance = Some(decision.provenance);
                        entry.reward_delta = t.reward_delta;
                        entry.percept = Some(t.percept);
                        state = t.new_state;
                    }
                    Err(e) => {
                        tracing::warn!(seed = config.seed, round, error = %e, "agent chose a rejected action");
                        error = Some(e.to_string());
                        state.mark_protocol_failure();
                    }
                }
            }
            Err(failure) => {
                tracing::warn!(seed = config.seed, round, kind = ?failure.kind, reason = %failure.reason, "agent failed");
                entry.exchanges = failure.exchanges;
                error = Some(format!("{:?}: {}", failure.kind, failure.reason));
                state.mark_protocol_failure();
            }
        }
        entry.usage = entry.exchanges.iter().filter_map(|x| x.usage).sum();
        rounds.push(entry);
    }

    let steps = rounds
        .iter()
        .filter(|r| matches!(r.action, Some(Action::Move(_) | Action::Shoot(_))))
        .count() as u32;
    let (planner_model, critic_model) = spec.models();
    let mut record = EpisodeRecord {
        schema: SCHEMA_VERSION,
        config,
        seed: config.seed,
        layout,
        custom_layout,
        agent: spec.kind(),
        mechanism: spec.mechanism(),
        planner_model,
        critic_model,
        rounds,
        status: state.status,
        score: state.score,
        steps,
        arrow_report: state.arrow_report,
        success: false,
        wumpus_killed: false,
        error,
    };
    (record.success, record.wumpus_killed) = record.derived_flags();
    record
}
