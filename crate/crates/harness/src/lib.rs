//! Episode runner, trial matrix, metrics, episode logs, replay and a mock
//! chat endpoint for the cave environment.
//!
//! ```
//! use cave_harness::{run_trials, AgentSpec, TrialMatrix};
//!
//! let matrix = TrialMatrix::standard_default(7).with_trials_per_condition(2);
//! let records = run_trials(&matrix, &AgentSpec::Oracle, 2).unwrap();
//! assert_eq!(records.len(), 12);
//! assert!(records.iter().all(|r| !r.status.is_death()));
//! ```

pub mod agents;
pub mod config;
pub mod episode;
pub mod log;
pub mod metrics;
pub mod mock;
pub mod replay;
pub mod trials;

use thiserror::Error;

pub use agents::{AgentKind, AgentSpec, LlmSpec, Mechanism, RandomAgent, ScriptPolicy, ScriptedAgent};
pub use config::RunConfig;
pub use episode::{run_episode, run_episode_on_layout, EpisodeRecord, RoundEntry, SCHEMA_VERSION};
pub use log::{append_records, load_records, parse_log, write_records, LogError};
pub use metrics::{call_cost, MetricsError, ModelPrice};
pub use mock::{MockReply, MockServer, MockUsage};
pub use replay::{persist_and_replay, render_frames, verify_replay, ReplayError, Replayed};
pub use trials::{run_trials, Condition, TrialMatrix, STANDARD_CONDITIONS};

pub type MetricsSummary = metrics::MetricsSummary<f64>;
pub type OutcomeStats = metrics::OutcomeStats<f64>;
pub type PriceTable = metrics::PriceTable<f64>;

pub fn summarize(records: &[EpisodeRecord], prices: &PriceTable) -> Result<MetricsSummary, MetricsError> {
    metrics::summarize(records, prices)
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("agent: {0}")]
    Agent(String),
    #[error(transparent)]
    Env(#[from] cave_core::EnvError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
