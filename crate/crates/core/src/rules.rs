//! Transition function, legality, percepts and reward accounting.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::{shoot_trajectory, Cell, Direction};
use crate::world::{ArrowReport, EnvError, Status, WorldState};

/// An agent decision. Movement names a frontier room directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Move(Cell),
    Shoot(Direction),
    Exit,
}

impl fmt::Display for Action {
    /// Canonical text form, accepted back by [`crate::parse_action`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Move(c) => write!(f, "move to position {c}"),
            Action::Shoot(d) => write!(f, "<shoot{d}>"),
            Action::Exit => f.write_str("<exit>"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Percept {
    pub breeze: bool,
    pub stench: bool,
    pub glitter: bool,
    /// Only set on the transition in which the wumpus dies.
    pub scream: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionResult {
    pub new_state: WorldState,
    pub reward_delta: i64,
    pub percept: Percept,
    pub terminal: bool,
}

pub fn percepts_at(state: &WorldState, cell: Cell) -> Percept {
    let n = state.config.grid_size;
    let neighbors = cell.neighbors(n);
    Percept {
        breeze: neighbors.iter().any(|c| state.pit_cells.contains(c)),
        stench: state.wumpus_alive
            && state.wumpus_cell.is_some_and(|w| neighbors.contains(&w)),
        glitter: state.gold_cell == Some(cell),
        scream: false,
    }
}

/// Unexplored rooms adjacent to any explored room, in (y, x) order.
pub fn frontier(state: &WorldState) -> Vec<Cell> {
    let n = state.config.grid_size;
    let explored: BTreeSet<Cell> = state.explored.iter().copied().collect();
    explored
        .iter()
        .flat_map(|c| c.neighbors(n))
        .filter(|c| !explored.contains(c))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Frontier moves, then shots (if the arrow is unspent), then exit.
/// Empty once the episode is over.
pub fn legal_actions(state: &WorldState) -> Vec<Action> {
    if state.status.is_terminal() {
        return Vec::new();
    }
    let mut actions: Vec<Action> = frontier(state).into_iter().map(Action::Move).collect();
    if state.arrow_available {
        actions.extend(Direction::ALL.map(Action::Shoot));
    }
    actions.push(Action::Exit);
    actions
}

fn check_legal(state: &WorldState, action: Action) -> Result<(), EnvError> {
    let reject = |reason: &str| {
        Err(EnvError::IllegalAction {
            action,
            reason: reason.to_string(),
        })
    };
    if state.status.is_terminal() {
        return reject("episode already finished");
    }
    match action {
        Action::Move(target) => {
            if !target.in_grid(state.config.grid_size) {
                return reject("target outside the grid");
            }
            if state.is_explored(target) {
                return reject("target already explored");
            }
            if !state.explored.iter().any(|c| c.is_adjacent(target)) {
                return reject("target not adjacent to any explored room");
            }
        }
        Action::Shoot(_) if !state.arrow_available => return reject("arrow already spent"),
        Action::Shoot(_) | Action::Exit => {}
    }
    Ok(())
}

/// Applies one action. Illegal actions are rejected and leave `state` as is.
///
/// On entry to a room, a pit is checked first, then a live wumpus, then gold.
/// Every action counts toward the step limit.
pub fn apply_action(state: &WorldState, action: Action) -> Result<TransitionResult, EnvError> {
    check_legal(state, action)?;
    let rewards = state.config.rewards;
    let mut next = state.clone();
    let mut delta = 0;
    let percept;

    match action {
        Action::Move(target) => {
            delta += rewards.move_penalty;
            let entered = percepts_at(&next, target);
            next.agent_cell = target;
            next.explored.push(target);
            next.sensed.push(entered);
            percept = entered;
            if next.pit_cells.contains(&target) {
                delta += rewards.pit_death;
                next.status = Status::DeathPit;
            } else if next.wumpus_alive && next.wumpus_cell == Some(target) {
                delta += rewards.wumpus_death;
                next.status = Status::DeathWumpus;
            } else if next.gold_cell == Some(target) {
                delta += rewards.gold_bonus;
                next.gold_cell = None;
                next.status = Status::Success;
            }
        }
        Action::Shoot(direction) => {
            next.arrow_available = false;
            let n = next.config.grid_size;
            let hit = next.wumpus_alive
                && next
                    .wumpus_cell
                    .is_some_and(|w| shoot_trajectory(next.agent_cell, direction, n).contains(&w));
            if hit {
                next.wumpus_alive = false;
                delta += rewards.kill_bonus;
            }
            next.arrow_report = Some(ArrowReport { direction, scream: hit });
            percept = Percept {
                scream: hit,
                ..percepts_at(&next, next.agent_cell)
            };
        }
        Action::Exit => {
            next.status = Status::Exited;
            percept = percepts_at(&next, next.agent_cell);
        }
    }

    next.steps_taken += 1;
    next.score += delta;
    if next.status == Status::Running && next.steps_taken >= next.config.step_limit {
        next.status = Status::Timeout;
    }
    let terminal = next.status.is_terminal();
    Ok(TransitionResult {
        new_state: next,
        reward_delta: delta,
        percept,
        terminal,
    })
}

pub fn episode_score(ledger: &[i64], base: i64) -> i64 {
    base + ledger.iter().sum::<i64>()
}
