use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use cave_agent::planner_critic::{arbitrate, ArbitrationConfig, CriticVerdict, PlannerCriticAgent};
use cave_agent::{
    Agent, CallRole, ChatClient, ChatError, ChatMessage, Completion, FailureKind, Provenance, RoundContext,
    UsageRecord,
};
use cave_core::{build_observation, legal_actions, Action, Cell, Direction, Layout, WorldConfig, WorldState};
use proptest::prelude::*;

/// Replies from a fixed queue and records every prompt.
struct Queue {
    model: String,
    replies: Mutex<VecDeque<String>>,
    seen: Mutex<Vec<Vec<ChatMessage>>>,
}

impl Queue {
    fn new(model: &str, replies: &[&str]) -> Arc<Self> {
        Arc::new(Self {
            model: model.into(),
            replies: Mutex::new(replies.iter().map(|s| s.to_string()).collect()),
            seen: Mutex::default(),
        })
    }
}

impl ChatClient for Queue {
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, ChatError> {
        self.seen.lock().unwrap().push(messages.to_vec());
        let content = self
            .replies
            .lock()
            .unwrap()
            .pop_front()
            .ok_or(ChatError::Rejected { status: 410, body: "exhausted".into() })?;
        Ok(Completion { content, usage: UsageRecord::new(10, 5, 0.0) })
    }
}

fn world() -> WorldState {
    let layout = Layout { pits: [Cell::new(3, 1)].into(), wumpus: None, gold: Cell::new(3, 3) };
    WorldState::with_layout(WorldConfig::new(3, 1, 0, 0), &layout).unwrap()
}

const PLAN: &str = "Analysis: (2,1) looks open.\nGuess: {\"wumpus\": [], \"pits\": []}\nAction: move to position (2,1)";

fn decide(planner: Arc<Queue>, critic: Arc<Queue>) -> Result<cave_agent::Decision, cave_agent::AgentFailure> {
    let state = world();
    let obs = build_observation(&state);
    let legal = legal_actions(&state);
    let ctx = RoundContext { round: 1, grid_size: 3, observation: &obs, legal_actions: &legal };
    let mut agent = PlannerCriticAgent::<f64>::new(planner, critic, ArbitrationConfig::default());
    agent.decide(&ctx)
}

#[test]
fn two_calls_per_round_and_low_confidence_swaps() {
    let planner = Queue::new("planner", &[PLAN]);
    let critic = Queue::new("critic", &["Confidence: 0.2\nAlternative: move to position (1,2)\nRationale: breeze risk."]);
    let d = decide(planner.clone(), critic.clone()).unwrap();
    assert_eq!(d.action, Action::Move(Cell::new(1, 2)));
    assert_eq!(d.provenance, Provenance::Critic);
    let roles: Vec<CallRole> = d.exchanges.iter().map(|x| x.role).collect();
    assert_eq!(roles, vec![CallRole::Planner, CallRole::Critic]);
    let critic_prompt = &critic.seen.lock().unwrap()[0];
    assert!(critic_prompt.last().unwrap().content.ends_with("Proposed action: move to position (2,1)"));
    let note = d.verdict.unwrap();
    assert_eq!(note.confidence, 0.2);
    assert!(!note.parse_failure);
}

#[test]
fn confident_critic_keeps_plan() {
    let d = decide(Queue::new("p", &[PLAN]), Queue::new("c", &["Confidence: 0.95\nAlternative: none\nRationale: fine."]))
        .unwrap();
    assert_eq!((d.action, d.provenance), (Action::Move(Cell::new(2, 1)), Provenance::Planner));
}

#[test]
fn unparseable_critic_is_no_intervention() {
    let junk = ["no idea"; 4];
    let d = decide(Queue::new("p", &[PLAN]), Queue::new("c", &junk)).unwrap();
    assert_eq!(d.provenance, Provenance::Planner);
    assert!(d.verdict.as_ref().unwrap().parse_failure);
    assert_eq!(d.verdict.unwrap().confidence, 1.0);
    assert_eq!(d.exchanges.len(), 1 + 4);
}

#[test]
fn critic_transport_failure_fails_the_round() {
    let err = decide(Queue::new("p", &[PLAN]), Queue::new("c", &[])).unwrap_err();
    assert_eq!(err.kind, FailureKind::Transport);
    assert_eq!(err.exchanges.len(), 2);
}

proptest! {
    #[test]
    fn critic_wins_exactly_below_threshold(confidence in 0.0f64..=1.0, threshold in 0.0f64..=1.0) {
        let plan = Action::Move(Cell::new(2, 1));
        let alt = Action::Shoot(Direction::Up);
        let cfg = ArbitrationConfig::new(threshold).unwrap();
        let verdict = CriticVerdict { confidence, alternative: Some(alt), rationale: String::new() };
        let out = arbitrate(plan, &verdict, &cfg).unwrap();
        prop_assert_eq!(out.provenance == Provenance::Critic, confidence < threshold);
        prop_assert_eq!(out.action, if confidence < threshold { alt } else { plan });
    }
}
