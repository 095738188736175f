//! Planner-Critic arbitration: the planner proposes through the Chain of
//! Speculation pipeline, a critic scores the proposal in `[0, 1]`, and a
//! threshold decides which action runs.

use std::sync::{Arc, LazyLock};

use cave_core::{parse_action, Action, Observation, Real};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{
    Agent, AgentFailure, CallRole, Decision, Exchange, FailureKind, LlmAgent, Provenance, RoundContext,
    VerdictNote, DEFAULT_PARSE_RETRIES,
};
use crate::chat::{ChatClient, ChatMessage};
use crate::prompt::{Mode, OBSERVATION_LABEL};
use crate::turn::{json_block, sections, CosTurn};

pub const DEFAULT_THRESHOLD: f64 = 0.7;

pub const CRITIC_SYSTEM_PROMPT: &str = "\
You review moves proposed for an explorer in a Wumpus cave. Rooms are written (x,y) with \
(1,1) at the bottom-left. A breeze means a pit is orthogonally adjacent; a stench means \
the living Wumpus is adjacent. Entering a pit or the Wumpus's room is fatal. The start \
room and its two neighbours are always safe.

Judge whether the proposed action is safe and sensible given the observation. Reply in \
exactly this format:
Confidence: <a number between 0 and 1 that the proposed action is a good choice>
Alternative: <a better action, or none>
Rationale: <one or two sentences>

Write actions exactly as: move to position (x,y), <shootup>, <shootdown>, <shootleft>, \
<shootright> or <exit>. When your confidence is low you must give an alternative.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticVerdict<S> {
    pub confidence: S,
    pub alternative: Option<Action>,
    pub rationale: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArbitrationError {
    #[error("threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("confidence {confidence} is below the threshold but the critic offered no alternative")]
    MissingAlternative { confidence: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArbitrationConfig<S> {
    /// The planner's action runs when the critic's confidence is at least this.
    pub threshold: S,
}

impl<S: Real> ArbitrationConfig<S> {
    pub fn new(threshold: S) -> Result<Self, ArbitrationError> {
        if threshold >= S::zero() && threshold <= S::one() {
            Ok(Self { threshold })
        } else {
            Err(ArbitrationError::InvalidThreshold(threshold.to_f64().unwrap_or(f64::NAN)))
        }
    }
}

impl<S: Real> Default for ArbitrationConfig<S> {
    fn default() -> Self {
        Self { threshold: S::of(DEFAULT_THRESHOLD) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arbitrated {
    pub action: Action,
    pub provenance: Provenance,
}

/// Confidence at or above the threshold keeps the planner's action;
/// anything lower hands the round to the critic's alternative.
pub fn arbitrate<S: Real>(
    proposal: Action,
    verdict: &CriticVerdict<S>,
    cfg: &ArbitrationConfig<S>,
) -> Result<Arbitrated, ArbitrationError> {
    if verdict.confidence >= cfg.threshold {
        return Ok(Arbitrated { action: proposal, provenance: Provenance::Planner });
    }
    verdict
        .alternative
        .map(|action| Arbitrated { action, provenance: Provenance::Critic })
        .ok_or(ArbitrationError::MissingAlternative {
            confidence: verdict.confidence.to_f64().unwrap_or(f64::NAN),
        })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerdictError {
    #[error("no confidence score in critic reply")]
    MissingConfidence,
    #[error("confidence {0} outside [0, 1]")]
    OutOfRange(String),
    #[error("low confidence without a usable alternative")]
    MissingAlternative,
    #[error("alternative {0} is not legal")]
    IllegalAlternative(Action),
}

static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)").expect("number pattern compiles"));

#[derive(Deserialize)]
struct JsonVerdict {
    confidence: f64,
    #[serde(default)]
    alternative: Option<String>,
    #[serde(default)]
    rationale: Option<String>,
}

/// Reads a critic reply in the labeled format, or as a JSON object with
/// `confidence`, `alternative` and `rationale` keys.
pub fn parse_verdict<S: Real>(text: &str) -> Result<CriticVerdict<S>, VerdictError> {
    let parts = sections(text);
    let (confidence, alternative_text, rationale) = match parts.get("confidence") {
        Some(body) => {
            let value = NUMBER.find(body).ok_or(VerdictError::MissingConfidence)?;
            let value: f64 = value.as_str().parse().map_err(|_| VerdictError::MissingConfidence)?;
            (value, parts.get("alternative").cloned(), parts.get("rationale").cloned().unwrap_or_default())
        }
        None => {
            let block = json_block(text).ok_or(VerdictError::MissingConfidence)?;
            let v: JsonVerdict = serde_json::from_str(block).map_err(|_| VerdictError::MissingConfidence)?;
            (v.confidence, v.alternative, v.rationale.unwrap_or_default())
        }
    };
    if !(0.0..=1.0).contains(&confidence) {
        return Err(VerdictError::OutOfRange(confidence.to_string()));
    }
    Ok(CriticVerdict {
        confidence: S::of(confidence),
        alternative: alternative_text.and_then(|t| parse_action(&t).ok()),
        rationale,
    })
}

/// A verdict is usable when a below-threshold score comes with a legal
/// alternative.
pub fn validate_verdict<S: Real>(
    verdict: &CriticVerdict<S>,
    cfg: &ArbitrationConfig<S>,
    legal: &[Action],
) -> Result<(), VerdictError> {
    if verdict.confidence >= cfg.threshold {
        return Ok(());
    }
    match verdict.alternative {
        None => Err(VerdictError::MissingAlternative),
        Some(a) if !legal.contains(&a) => Err(VerdictError::IllegalAlternative(a)),
        Some(_) => Ok(()),
    }
}

pub fn critic_prompt(obs: &Observation, proposal: Action, system_prompt: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(system_prompt),
        ChatMessage::user(format!("{OBSERVATION_LABEL}\n{}\n\nProposed action: {proposal}", obs.to_json())),
    ]
}

/// Outcome of one critique, including whether it fell back to non-intervention.
#[derive(Debug, Clone, PartialEq)]
pub struct Critique<S> {
    pub verdict: CriticVerdict<S>,
    pub parse_failure: bool,
    pub exchanges: Vec<Exchange>,
}

pub struct PlannerCriticAgent<S> {
    planner: LlmAgent,
    critic: Arc<dyn ChatClient>,
    critic_system_prompt: String,
    config: ArbitrationConfig<S>,
    max_parse_retries: u32,
}

impl<S: Real> PlannerCriticAgent<S> {
    /// Planner and critic may share one client; the prompts differ.
    pub fn new(planner: Arc<dyn ChatClient>, critic: Arc<dyn ChatClient>, config: ArbitrationConfig<S>) -> Self {
        Self {
            planner: LlmAgent::new(planner, Mode::Cos).with_role(CallRole::Planner),
            critic,
            critic_system_prompt: CRITIC_SYSTEM_PROMPT.to_string(),
            config,
            max_parse_retries: DEFAULT_PARSE_RETRIES,
        }
    }

    pub fn with_parse_retries(mut self, retries: u32) -> Self {
        self.planner = self.planner.with_parse_retries(retries);
        self.max_parse_retries = retries;
        self
    }

    pub fn with_critic_prompt(mut self, prompt: impl Into<String>) -> Self {
        self.critic_system_prompt = prompt.into();
        self
    }

    pub fn config(&self) -> &ArbitrationConfig<S> {
        &self.config
    }

    /// One Chain of Speculation round against the planner model.
    pub fn plan(&mut self, ctx: &RoundContext<'_>) -> Result<(CosTurn, Vec<Exchange>), AgentFailure> {
        self.planner.run_round(ctx)
    }

    /// Scores `proposal`. Replies that stay unusable after the retry bound
    /// become a confidence of 1 (no intervention) flagged as a parse failure.
    pub fn critique(&self, ctx: &RoundContext<'_>, proposal: Action) -> Result<Critique<S>, AgentFailure> {
        let mut messages = critic_prompt(ctx.observation, proposal, &self.critic_system_prompt);
        let mut exchanges = Vec::new();
        for attempt in 0..=self.max_parse_retries {
            let completion = match self.critic.complete(&messages) {
                Ok(c) => c,
                Err(e) => {
                    exchanges.push(Exchange {
                        role: CallRole::Critic,
                        model: self.critic.model().to_string(),
                        messages: messages.clone(),
                        response: None,
                        usage: None,
                        error: Some(e.to_string()),
                    });
                    return Err(AgentFailure { kind: FailureKind::Transport, reason: e.to_string(), exchanges });
                }
            };
            let parsed = parse_verdict::<S>(&completion.content)
                .and_then(|v| validate_verdict(&v, &self.config, ctx.legal_actions).map(|()| v));
            exchanges.push(Exchange {
                role: CallRole::Critic,
                model: self.critic.model().to_string(),
                messages: messages.clone(),
                response: Some(completion.content.clone()),
                usage: Some(completion.usage),
                error: parsed.as_ref().err().map(ToString::to_string),
            });
            match parsed {
                Ok(verdict) => return Ok(Critique { verdict, parse_failure: false, exchanges }),
                Err(e) if attempt < self.max_parse_retries => {
                    messages.push(ChatMessage::assistant(completion.content));
                    messages.push(ChatMessage::user(format!(
                        "Your review could not be used ({e}). Reply again with the lines \
                         Confidence:, Alternative: and Rationale:."
                    )));
                }
                Err(e) => {
                    tracing::warn!(error = %e, "critic reply unusable, keeping the planner's action");
                }
            }
        }
        Ok(Critique {
            verdict: CriticVerdict {
                confidence: S::one(),
                alternative: None,
                rationale: "critic reply could not be parsed".into(),
            },
            parse_failure: true,
            exchanges,
        })
    }
}

impl<S: Real> Agent for PlannerCriticAgent<S> {
    fn decide(&mut self, ctx: &RoundContext<'_>) -> Result<Decision, AgentFailure> {
        let (turn, mut exchanges) = self.plan(ctx)?;
        let critique = match self.critique(ctx, turn.action) {
            Ok(c) => c,
            Err(mut failure) => {
                exchanges.append(&mut failure.exchanges);
                failure.exchanges = exchanges;
                return Err(failure);
            }
        };
        exchanges.extend(critique.exchanges);
        let chosen = arbitrate(turn.action, &critique.verdict, &self.config).map_err(|e| AgentFailure {
            kind: FailureKind::Internal,
            reason: e.to_string(),
            exchanges: exchanges.clone(),
        })?;
        let to_f64 = |s: S| s.to_f64().unwrap_or(f64::NAN);
        Ok(Decision {
            action: chosen.action,
            provenance: chosen.provenance,
            verdict: Some(VerdictNote {
                proposal: turn.action,
                confidence: to_f64(critique.verdict.confidence),
                alternative: critique.verdict.alternative,
                rationale: critique.verdict.rationale,
                threshold: to_f64(self.config.threshold),
                parse_failure: critique.parse_failure,
            }),
            exchanges,
            turn: Some(turn),
        })
    }
}
