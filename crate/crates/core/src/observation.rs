//! The aggregated observation handed to agents, and extraction of an
//! [`Action`] from free-form agent replies.
//!
//! Action grammar (case-insensitive, last occurrence wins):
//!
//! * `move to position (x,y)`: any form of the verb *move* followed within
//!   a short span by a coordinate pair in parentheses or brackets.
//! * `<shootup>`, `<shootdown>`, `<shootleft>`, `<shootright>`, `<exit>`.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, Direction};
use crate::rules::{frontier, Action};
use crate::world::WorldState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestions {
    #[serde(rename = "unexplored adjacent rooms")]
    pub frontier_cells: Vec<Cell>,
    #[serde(rename = "possible shooting directions")]
    pub shoot_options: Vec<Direction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrowStatus {
    #[serde(rename = "arrow fired")]
    pub fired: bool,
    #[serde(rename = "direction")]
    pub direction: Option<Direction>,
    #[serde(rename = "scream heard")]
    pub scream_heard: bool,
}

/// Everything the agent has sensed so far. Serialized with the environment's
/// eight natural-language keys, which is the form placed in prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    #[serde(rename = "number of Wumpus")]
    pub num_wumpus: u32,
    #[serde(rename = "number of pit")]
    pub num_pits: u32,
    #[serde(rename = "Current Position")]
    pub current_position: Cell,
    #[serde(rename = "No breeze or stench is detected in these locations")]
    pub quiet_locations: Vec<Cell>,
    #[serde(rename = "A breeze is detected in the following locations")]
    pub breeze_locations: Vec<Cell>,
    #[serde(rename = "A stench is detected in the following locations")]
    pub stench_locations: Vec<Cell>,
    #[serde(
        rename = "When you have confirmed that the corresponding locations are safe, prioritize exploring these areas"
    )]
    pub suggestions: Suggestions,
    #[serde(rename = "The situation with the arrows")]
    pub arrow_status: ArrowStatus,
}

impl Observation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("observation serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn visited(&self) -> BTreeSet<Cell> {
        self.quiet_locations
            .iter()
            .chain(&self.breeze_locations)
            .chain(&self.stench_locations)
            .copied()
            .collect()
    }
}

/// Builds the observation from the percepts sensed on entry to each explored
/// room. Stench recorded before the wumpus died stays in the history.
pub fn build_observation(state: &WorldState) -> Observation {
    let mut quiet = BTreeSet::new();
    let mut breeze = BTreeSet::new();
    let mut stench = BTreeSet::new();
    for (&cell, percept) in state.explored.iter().zip(&state.sensed) {
        if percept.breeze {
            breeze.insert(cell);
        }
        if percept.stench {
            stench.insert(cell);
        }
        if !percept.breeze && !percept.stench {
            quiet.insert(cell);
        }
    }
    let report = state.arrow_report;
    Observation {
        num_wumpus: state.config.num_wumpus,
        num_pits: state.config.num_pits,
        current_position: state.agent_cell,
        quiet_locations: quiet.into_iter().collect(),
        breeze_locations: breeze.into_iter().collect(),
        stench_locations: stench.into_iter().collect(),
        suggestions: frontier_suggestions(state),
        arrow_status: ArrowStatus {
            fired: report.is_some(),
            direction: report.map(|r| r.direction),
            scream_heard: report.is_some_and(|r| r.scream),
        },
    }
}

pub fn frontier_suggestions(state: &WorldState) -> Suggestions {
    Suggestions {
        frontier_cells: frontier(state),
        shoot_options: if state.arrow_available {
            Direction::ALL.to_vec()
        } else {
            Vec::new()
        },
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no recognizable action in reply")]
    NoAction,
}

static ACTION_PATTERN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?ix)
        \bmov(?:e|es|ed|ing)\b [^()\[\]<>\n]{0,40}? [(\[] \s*(\d{1,4})\s*,\s*(\d{1,4})\s* [)\]]
        | < \s* (shoot\s*up|shoot\s*down|shoot\s*left|shoot\s*right|exit) \s* >",
    )
    .expect("action pattern compiles")
});

/// Extracts the last recognizable action from `text`.
pub fn parse_action(text: &str) -> Result<Action, ParseError> {
    let caps = ACTION_PATTERN.captures_iter(text).last().ok_or(ParseError::NoAction)?;
    if let (Some(x), Some(y)) = (caps.get(1), caps.get(2)) {
        let x = x.as_str().parse().map_err(|_| ParseError::NoAction)?;
        let y = y.as_str().parse().map_err(|_| ParseError::NoAction)?;
        return Ok(Action::Move(Cell::new(x, y)));
    }
    let token: String = caps[3]
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_ascii_lowercase();
    Ok(match token.as_str() {
        "shootup" => Action::Shoot(Direction::Up),
        "shootdown" => Action::Shoot(Direction::Down),
        "shootleft" => Action::Shoot(Direction::Left),
        "shootright" => Action::Shoot(Direction::Right),
        _ => Action::Exit,
    })
}
