//! World configuration, hidden state and seeded layout generation.

use std::collections::BTreeSet;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{all_cells, Cell, Direction};
use crate::rules::{Action, Percept};

pub const DEFAULT_STEP_LIMIT: u32 = 50;
pub const MAX_PITS: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot place {requested} hazards: only {eligible} rooms outside the start zone")]
    PlacementInfeasible { requested: u32, eligible: u32 },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("illegal action {action}: {reason}")]
    IllegalAction { action: Action, reason: String },
}

/// Score bookkeeping constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConstants {
    pub base: i64,
    pub move_penalty: i64,
    pub gold_bonus: i64,
    pub pit_death: i64,
    pub wumpus_death: i64,
    pub kill_bonus: i64,
}

impl Default for RewardConstants {
    fn default() -> Self {
        Self {
            base: 50,
            move_penalty: -1,
            gold_bonus: 50,
            pit_death: -20,
            wumpus_death: -30,
            kill_bonus: 20,
        }
    }
}

/// Parameters of one cave. Exactly one gold piece is always placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldConfig {
    pub grid_size: u32,
    pub num_pits: u32,
    pub num_wumpus: u32,
    #[serde(default = "default_step_limit")]
    pub step_limit: u32,
    #[serde(default)]
    pub rewards: RewardConstants,
    pub seed: u64,
}

fn default_step_limit() -> u32 {
    DEFAULT_STEP_LIMIT
}

impl WorldConfig {
    pub fn new(grid_size: u32, num_pits: u32, num_wumpus: u32, seed: u64) -> Self {
        Self {
            grid_size,
            num_pits,
            num_wumpus,
            step_limit: DEFAULT_STEP_LIMIT,
            rewards: RewardConstants::default(),
            seed,
        }
    }

    pub fn with_step_limit(mut self, step_limit: u32) -> Self {
        self.step_limit = step_limit;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.grid_size < 2 {
            return Err(EnvError::InvalidConfig(format!(
                "grid size must be at least 2, got {}",
                self.grid_size
            )));
        }
        if self.num_pits > MAX_PITS {
            return Err(EnvError::InvalidConfig(format!(
                "at most {MAX_PITS} pits, got {}",
                self.num_pits
            )));
        }
        if self.num_wumpus > 1 {
            return Err(EnvError::InvalidConfig(format!(
                "at most one wumpus, got {}",
                self.num_wumpus
            )));
        }
        if self.step_limit == 0 {
            return Err(EnvError::InvalidConfig("step limit must be at least 1".into()));
        }
        let eligible = self.hazard_eligible_cells().len() as u32;
        let requested = self.num_pits + self.num_wumpus;
        if requested > eligible {
            return Err(EnvError::PlacementInfeasible { requested, eligible });
        }
        Ok(())
    }

    /// Rooms outside the guaranteed-safe start zone, in (y, x) order.
    pub fn hazard_eligible_cells(&self) -> Vec<Cell> {
        all_cells(self.grid_size).filter(|c| !c.is_start_zone()).collect()
    }
}

/// Positions of the hidden objects of one cave.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub pits: BTreeSet<Cell>,
    pub wumpus: Option<Cell>,
    pub gold: Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Success,
    DeathPit,
    DeathWumpus,
    Exited,
    Timeout,
    ProtocolFailure,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Running
    }

    pub fn is_death(self) -> bool {
        matches!(self, Status::DeathPit | Status::DeathWumpus)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Success => "success",
            Status::DeathPit => "death_pit",
            Status::DeathWumpus => "death_wumpus",
            Status::Exited => "exited",
            Status::Timeout => "timeout",
            Status::ProtocolFailure => "protocol_failure",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArrowReport {
    pub direction: Direction,
    pub scream: bool,
}

/// Full hidden state of a running or finished episode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    pub config: WorldConfig,
    pub pit_cells: BTreeSet<Cell>,
    pub wumpus_cell: Option<Cell>,
    pub wumpus_alive: bool,
    /// Cleared once the gold is collected.
    pub gold_cell: Option<Cell>,
    pub agent_cell: Cell,
    /// Visited rooms in visit order.
    pub explored: Vec<Cell>,
    /// Percept sensed on entering each room of `explored`, index-aligned.
    pub sensed: Vec<Percept>,
    pub arrow_available: bool,
    pub arrow_report: Option<ArrowReport>,
    pub steps_taken: u32,
    pub score: i64,
    pub status: Status,
}

impl WorldState {
    /// Starts an episode on an explicit layout, checking every placement rule.
    pub fn with_layout(config: WorldConfig, layout: &Layout) -> Result<Self, EnvError> {
        config.validate()?;
        let n = config.grid_size;
        let bad = |msg: String| Err(EnvError::InvalidLayout(msg));
        if layout.pits.len() as u32 != config.num_pits {
            return bad(format!("expected {} pits, got {}", config.num_pits, layout.pits.len()));
        }
        if layout.wumpus.is_some() as u32 != config.num_wumpus {
            return bad(format!("expected {} wumpus", config.num_wumpus));
        }
        for &pit in &layout.pits {
            if !pit.in_grid(n) || pit.is_start_zone() {
                return bad(format!("pit at {pit} is outside the grid or in the start zone"));
            }
        }
        if let Some(w) = layout.wumpus {
            if !w.in_grid(n) || w.is_start_zone() || layout.pits.contains(&w) {
                return bad(format!("wumpus at {w} overlaps the start zone, a pit or the wall"));
            }
        }
        let gold = layout.gold;
        if !gold.in_grid(n) || gold == Cell::START || layout.pits.contains(&gold) {
            return bad(format!("gold at {gold} overlaps the start room, a pit or the wall"));
        }

        let mut state = WorldState {
            config,
            pit_cells: layout.pits.clone(),
            wumpus_cell: layout.wumpus,
            wumpus_alive: layout.wumpus.is_some(),
            gold_cell: Some(gold),
            agent_cell: Cell::START,
            explored: vec![Cell::START],
            sensed: Vec::new(),
            arrow_available: true,
            arrow_report: None,
            steps_taken: 0,
            score: config.rewards.base,
            status: Status::Running,
        };
        state.sensed.push(crate::rules::percepts_at(&state, Cell::START));
        Ok(state)
    }

    pub fn layout(&self) -> Option<Layout> {
        Some(Layout {
            pits: self.pit_cells.clone(),
            wumpus: self.wumpus_cell,
            gold: self.gold_cell?,
        })
    }

    pub fn is_explored(&self, cell: Cell) -> bool {
        self.explored.contains(&cell)
    }

    pub fn sensed_at(&self, cell: Cell) -> Option<Percept> {
        self.explored
            .iter()
            .position(|&c| c == cell)
            .map(|i| self.sensed[i])
    }

    /// Ends the episode from outside the game rules (unusable agent output).
    pub fn mark_protocol_failure(&mut self) {
        if self.status == Status::Running {
            self.status = Status::ProtocolFailure;
        }
    }
}

/// Places hazards and gold with a seeded ChaCha8 stream.
///
/// The stream is `ChaCha8Rng::seed_from_u64(config.seed)`. Each placement
/// draws one `u64` and takes it modulo the number of remaining candidates,
/// where candidates are listed in (y, x) order. Draw order: pits one at a
/// time, then the wumpus, then the gold. Hazard candidates exclude the start
/// zone and rooms already taken; gold candidates exclude `(1,1)` and pits.
pub fn generate_world(config: &WorldConfig) -> Result<WorldState, EnvError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draw = |candidates: &[Cell]| candidates[(rng.next_u64() % candidates.len() as u64) as usize];

    let mut hazard_pool = config.hazard_eligible_cells();
    let mut pits = BTreeSet::new();
    for _ in 0..config.num_pits {
        let pit = draw(&hazard_pool);
        hazard_pool.retain(|&c| c != pit);
        pits.insert(pit);
    }
    let wumpus = (config.num_wumpus == 1).then(|| draw(&hazard_pool));
    let gold_pool: Vec<Cell> = all_cells(config.grid_size)
        .filter(|c| *c != Cell::START && !pits.contains(c))
        .collect();
    let gold = draw(&gold_pool);

    WorldState::with_layout(*config, &Layout { pits, wumpus, gold })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_zone_stays_clear_on_3x3() {
        for seed in 0..200 {
            let w = generate_world(&WorldConfig::new(3, 0, 1, seed)).unwrap();
            let wumpus = w.wumpus_cell.unwrap();
            assert!(!wumpus.is_start_zone(), "seed {seed}");
            assert_ne!(w.gold_cell, Some(Cell::START));
        }
        let w = generate_world(&WorldConfig::new(3, 0, 1, 42)).unwrap();
        assert!(![Cell::new(1, 1), Cell::new(1, 2), Cell::new(2, 1)].contains(&w.wumpus_cell.unwrap()));
    }

    #[test]
    fn three_distinct_pits_on_4x4() {
        let w = generate_world(&WorldConfig::new(4, 3, 1, 7)).unwrap();
        assert_eq!(w.pit_cells.len(), 3);
        assert!(w.pit_cells.iter().all(|p| !p.is_start_zone()));
        assert!(!w.pit_cells.contains(&w.wumpus_cell.unwrap()));
        assert!(!w.pit_cells.contains(&w.gold_cell.unwrap()));
    }

    #[test]
    fn same_seed_same_world() {
        let cfg = WorldConfig::new(4, 3, 1, 7);
        assert_eq!(generate_world(&cfg).unwrap(), generate_world(&cfg).unwrap());
        let other = generate_world(&cfg.with_seed(8)).unwrap();
        assert_eq!(other.config.seed, 8);
    }

    #[test]
    fn initial_state_fields() {
        let w = generate_world(&WorldConfig::new(3, 1, 0, 3)).unwrap();
        assert_eq!(w.agent_cell, Cell::START);
        assert_eq!(w.explored, vec![Cell::START]);
        assert!(w.arrow_available);
        assert_eq!(w.score, 50);
        assert_eq!(w.status, Status::Running);
        assert!(w.wumpus_cell.is_none());
        assert!(!w.wumpus_alive);
    }

    #[test]
    fn infeasible_and_invalid_configs() {
        assert!(matches!(
            generate_world(&WorldConfig::new(2, 1, 1, 0)),
            Err(EnvError::PlacementInfeasible { requested: 2, eligible: 1 })
        ));
        assert!(generate_world(&WorldConfig::new(2, 1, 0, 0)).is_ok());
        assert!(matches!(generate_world(&WorldConfig::new(1, 0, 0, 0)), Err(EnvError::InvalidConfig(_))));
        assert!(matches!(generate_world(&WorldConfig::new(4, 4, 0, 0)), Err(EnvError::InvalidConfig(_))));
        assert!(matches!(generate_world(&WorldConfig::new(4, 0, 2, 0)), Err(EnvError::InvalidConfig(_))));
        assert!(generate_world(&WorldConfig::new(4, 0, 0, 0).with_step_limit(0)).is_err());
    }

    #[test]
    fn layout_rules_enforced() {
        let cfg = WorldConfig::new(3, 1, 1, 0);
        let ok = Layout { pits: [Cell::new(3, 1)].into(), wumpus: Some(Cell::new(2, 2)), gold: Cell::new(2, 2) };
        assert!(WorldState::with_layout(cfg, &ok).is_ok(), "gold may share the wumpus room");
        let pit_in_zone = Layout { pits: [Cell::new(2, 1)].into(), ..ok.clone() };
        assert!(WorldState::with_layout(cfg, &pit_in_zone).is_err());
        let wumpus_on_pit = Layout { wumpus: Some(Cell::new(3, 1)), ..ok.clone() };
        assert!(WorldState::with_layout(cfg, &wumpus_on_pit).is_err());
        let gold_on_pit = Layout { gold: Cell::new(3, 1), ..ok.clone() };
        assert!(WorldState::with_layout(cfg, &gold_on_pit).is_err());
        let gold_at_start = Layout { gold: Cell::START, ..ok };
        assert!(WorldState::with_layout(cfg, &gold_at_start).is_err());
    }
}
