//! Language-model agents for the cave environment.
//!
//! * [`LlmAgent`] in [`Mode::Cot`] asks for reasoning and an action.
//! * [`LlmAgent`] in [`Mode::Cos`] additionally asks for a JSON guess of the
//!   hazard rooms and feeds that guess back with the next observation.
//! * [`PlannerCriticAgent`] wraps a CoS planner with a critic that scores each
//!   proposal; below the threshold the critic's alternative runs instead.

pub mod agent;
pub mod chat;
pub mod planner_critic;
pub mod prompt;
pub mod turn;

pub use agent::{
    Agent, AgentFailure, CallRole, Decision, Exchange, FailureKind, LlmAgent, Provenance, RoundContext,
    VerdictNote, DEFAULT_PARSE_RETRIES,
};
pub use chat::{
    ChatClient, ChatError, ChatMessage, Completion, EndpointConfig, HttpChatClient, RetryPolicy, Role,
    UsageRecord, API_KEY_ENV,
};
pub use planner_critic::{arbitrate, parse_verdict, Arbitrated, ArbitrationError, VerdictError};
pub use prompt::{build_prompt, default_system_prompt, Mode};
pub use turn::{parse_cos_response, parse_cot_response, CosTurn, Guess, TurnError};

pub type CriticVerdict = planner_critic::CriticVerdict<f64>;
pub type ArbitrationConfig = planner_critic::ArbitrationConfig<f64>;
pub type PlannerCriticAgent = planner_critic::PlannerCriticAgent<f64>;
