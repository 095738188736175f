//! The decision interface driven by the episode runner, and the single-model
//! LLM agent (CoT or Chain of Speculation).

use std::sync::Arc;

use cave_core::{Action, Observation, OracleAgent};
use serde::{Deserialize, Serialize};

use crate::chat::{ChatClient, ChatMessage, UsageRecord};
use crate::prompt::{build_prompt, default_system_prompt, Mode};
use crate::turn::{parse_cos_response, parse_cot_response, CosTurn, TurnError};

pub const DEFAULT_PARSE_RETRIES: u32 = 3;

/// What an agent sees each round.
#[derive(Debug, Clone, Copy)]
pub struct RoundContext<'a> {
    pub round: u32,
    pub grid_size: u32,
    pub observation: &'a Observation,
    pub legal_actions: &'a [Action],
}

/// Who chose the executed action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Agent,
    Planner,
    Critic,
}

/// Which prompt a model call served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallRole {
    Actor,
    Planner,
    Critic,
}

/// One model invocation: the messages sent and what came back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub role: CallRole,
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub response: Option<String>,
    pub usage: Option<UsageRecord>,
    pub error: Option<String>,
}

/// Summary of the critic's verdict for the round log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictNote {
    pub proposal: Action,
    pub confidence: f64,
    pub alternative: Option<Action>,
    pub rationale: String,
    pub threshold: f64,
    pub parse_failure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    pub provenance: Provenance,
    pub exchanges: Vec<Exchange>,
    pub turn: Option<CosTurn>,
    pub verdict: Option<VerdictNote>,
}

impl Decision {
    pub fn direct(action: Action) -> Self {
        Self { action, provenance: Provenance::Agent, exchanges: Vec::new(), turn: None, verdict: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// Replies stayed unusable after every allowed retry.
    Parse,
    /// The endpoint could not be reached or answered with garbage.
    Transport,
    /// The agent's own machinery failed.
    Internal,
}

/// A round that produced no action. Ends the episode as a protocol failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind:?} failure: {reason}")]
pub struct AgentFailure {
    pub kind: FailureKind,
    pub reason: String,
    pub exchanges: Vec<Exchange>,
}

pub trait Agent: Send {
    fn decide(&mut self, ctx: &RoundContext<'_>) -> Result<Decision, AgentFailure>;
}

impl Agent for OracleAgent {
    fn decide(&mut self, ctx: &RoundContext<'_>) -> Result<Decision, AgentFailure> {
        OracleAgent::decide(self, ctx.observation)
            .map(Decision::direct)
            .map_err(|e| AgentFailure { kind: FailureKind::Internal, reason: e.to_string(), exchanges: Vec::new() })
    }
}

fn correction(error: &TurnError, mode: Mode) -> String {
    let format = match mode {
        Mode::Cot => "Analysis: ...\nAction: ...",
        Mode::Cos => "Analysis: ...\nGuess: {\"wumpus\": [...], \"pits\": [...]}\nAction: ...",
    };
    format!(
        "Your reply could not be used ({error}). Answer again using exactly this format:\n{format}\n\
         The action must be one of: move to position (x,y) for an unexplored room adjacent to \
         an explored one, <shootup>, <shootdown>, <shootleft>, <shootright>, <exit>."
    )
}

/// Single-model agent. In CoS mode the most recent guess block is carried
/// into every following prompt.
pub struct LlmAgent {
    client: Arc<dyn ChatClient>,
    mode: Mode,
    role: CallRole,
    system_prompt: String,
    max_parse_retries: u32,
    prev_guess: Option<String>,
}

impl LlmAgent {
    pub fn new(client: Arc<dyn ChatClient>, mode: Mode) -> Self {
        Self {
            client,
            mode,
            role: CallRole::Actor,
            system_prompt: default_system_prompt(mode),
            max_parse_retries: DEFAULT_PARSE_RETRIES,
            prev_guess: None,
        }
    }

    pub fn with_system_prompt(mut self, prompt: impl Into<String>) -> Self {
        self.system_prompt = prompt.into();
        self
    }

    pub fn with_parse_retries(mut self, retries: u32) -> Self {
        self.max_parse_retries = retries;
        self
    }

    pub(crate) fn with_role(mut self, role: CallRole) -> Self {
        self.role = role;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn previous_guess(&self) -> Option<&str> {
        self.prev_guess.as_deref()
    }

    /// Runs one prompt/parse round, retrying unusable replies up to the
    /// configured bound with a format reminder appended to the conversation.
    pub fn run_round(&mut self, ctx: &RoundContext<'_>) -> Result<(CosTurn, Vec<Exchange>), AgentFailure> {
        let mut messages = build_prompt(self.mode, ctx.observation, self.prev_guess.as_deref(), &self.system_prompt);
        let mut exchanges = Vec::new();
        for attempt in 0..=self.max_parse_retries {
            let completion = match self.client.complete(&messages) {
                Ok(c) => c,
                Err(e) => {
                    exchanges.push(self.exchange(&messages, None, None, Some(e.to_string())));
                    return Err(AgentFailure { kind: FailureKind::Transport, reason: e.to_string(), exchanges });
                }
            };
            let parsed = match self.mode {
                Mode::Cot => parse_cot_response(&completion.content),
                Mode::Cos => parse_cos_response(&completion.content),
            }
            .and_then(|mut turn| {
                if !ctx.legal_actions.contains(&turn.action) {
                    return Err(TurnError::IllegalAction(turn.action));
                }
                if !turn.guess.within(ctx.grid_size) {
                    turn.guess_malformed = true;
                }
                Ok(turn)
            });
            let error = parsed.as_ref().err().map(ToString::to_string);
            exchanges.push(self.exchange(&messages, Some(completion.content.clone()), Some(completion.usage), error));
            match parsed {
                Ok(turn) => {
                    if self.mode == Mode::Cos {
                        if let Some(text) = &turn.guess_text {
                            self.prev_guess = Some(text.clone());
                        }
                    }
                    return Ok((turn, exchanges));
                }
                Err(e) if attempt == self.max_parse_retries => {
                    return Err(AgentFailure {
                        kind: FailureKind::Parse,
                        reason: format!("{} unusable replies, last: {e}", attempt + 1),
                        exchanges,
                    });
                }
                Err(e) => {
                    tracing::debug!(attempt, error = %e, "unusable reply, asking again");
                    messages.push(ChatMessage::assistant(completion.content));
                    messages.push(ChatMessage::user(correction(&e, self.mode)));
                }
            }
        }
        unreachable!("retry loop returns on its final attempt")
    }

    fn exchange(
        &self,
        messages: &[ChatMessage],
        response: Option<String>,
        usage: Option<UsageRecord>,
        error: Option<String>,
    ) -> Exchange {
        Exchange {
            role: self.role,
            model: self.client.model().to_string(),
            messages: messages.to_vec(),
            response,
            usage,
            error,
        }
    }
}

impl Agent for LlmAgent {
    fn decide(&mut self, ctx: &RoundContext<'_>) -> Result<Decision, AgentFailure> {
        let (turn, exchanges) = self.run_round(ctx)?;
        Ok(Decision {
            action: turn.action,
            provenance: Provenance::Agent,
            exchanges,
            turn: Some(turn),
            verdict: None,
        })
    }
}


#[cfg(test)]
mod tests {
    use super::testing::Scripted;
    use super::*;
    use cave_core::{build_observation, legal_actions, Cell, Layout, WorldConfig, WorldState};

    fn state() -> WorldState {
        let layout = Layout { pits: Default::default(), wumpus: Some(Cell::new(2, 2)), gold: Cell::new(3, 3) };
        WorldState::with_layout(WorldConfig::new(3, 0, 1, 0), &layout).unwrap()
    }

    fn decide(agent: &mut LlmAgent, s: &WorldState, round: u32) -> Result<Decision, AgentFailure> {
        let obs = build_observation(s);
        let legal = legal_actions(s);
        agent.decide(&RoundContext { round, grid_size: 3, observation: &obs, legal_actions: &legal })
    }

    #[test]
    fn retries_then_succeeds() {
        let client = Arc::new(Scripted::new(&["gibberish", "Analysis: ok\nAction: move to position (2,1)"]));
        let mut agent = LlmAgent::new(client.clone(), Mode::Cos);
        let d = decide(&mut agent, &state(), 1).unwrap();
        assert_eq!(d.action, Action::Move(Cell::new(2, 1)));
        assert_eq!(d.exchanges.len(), 2);
        assert!(d.exchanges[0].error.is_some());
        let seen = client.seen.lock().unwrap();
        assert_eq!(seen[1].len(), 4, "retry carries the bad reply and a reminder");
    }

    #[test]
    fn gives_up_after_k_retries() {
        let client = Arc::new(Scripted::new(&["a", "b", "c", "d", "e"]));
        let mut agent = LlmAgent::new(client.clone(), Mode::Cos).with_parse_retries(3);
        let err = decide(&mut agent, &state(), 1).unwrap_err();
        assert_eq!(err.kind, FailureKind::Parse);
        assert_eq!(err.exchanges.len(), 4);
        assert_eq!(client.replies.lock().unwrap().len(), 1);
    }

    #[test]
    fn illegal_action_counts_as_unusable() {
        let client = Arc::new(Scripted::new(&["Action: move to position (3,3)", "Action: <exit>"]));
        let mut agent = LlmAgent::new(client, Mode::Cos);
        let d = decide(&mut agent, &state(), 1).unwrap();
        assert_eq!(d.action, Action::Exit);
        assert!(d.exchanges[0].error.as_deref().unwrap().contains("not legal"));
    }

    #[test]
    fn guess_flows_into_next_prompt() {
        let client = Arc::new(Scripted::new(&[
            "Analysis: a\nGuess: {\"wumpus\": [[2,2]]}\nAction: move to position (2,1)",
            "Analysis: b\nAction: move to position (1,2)",
            "Analysis: c\nAction: <exit>",
        ]));
        let mut agent = LlmAgent::new(client.clone(), Mode::Cos);
        let s = state();
        decide(&mut agent, &s, 1).unwrap();
        decide(&mut agent, &s, 2).unwrap();
        decide(&mut agent, &s, 3).unwrap();
        let seen = client.seen.lock().unwrap();
        assert!(!seen[0][1].content.contains("Previous guess"));
        assert!(seen[1][1].content.contains("{\"wumpus\": [[2,2]]}"));
        // a round without a guess keeps the last one in play
        assert!(seen[2][1].content.contains("{\"wumpus\": [[2,2]]}"));
    }

    #[test]
    fn out_of_grid_guess_is_flagged() {
        let client = Arc::new(Scripted::new(&["Guess: {\"pits\": [[9,9]]}\nAction: <exit>"]));
        let mut agent = LlmAgent::new(client, Mode::Cos);
        let d = decide(&mut agent, &state(), 1).unwrap();
        assert!(d.turn.unwrap().guess_malformed);
    }

    #[test]
    fn oracle_through_the_trait() {
        let s = state();
        let mut oracle = OracleAgent::new(3, 0, 1).unwrap();
        let obs = build_observation(&s);
        let legal = legal_actions(&s);
        let d = Agent::decide(&mut oracle, &RoundContext { round: 1, grid_size: 3, observation: &obs, legal_actions: &legal }).unwrap();
        assert_eq!(d.action, Action::Move(Cell::new(2, 1)));
        assert_eq!(d.provenance, Provenance::Agent);
    }
}
