//! Propositional oracle agent.
//!
//! Hazard knowledge is derived by exact model enumeration: every placement of
//! the known number of pits and wumpus outside the start zone is checked
//! against the recorded percepts, and a room is safe only when no consistent
//! placement puts a live hazard there. The policy never gambles; when no
//! provably safe frontier room exists it shoots a localized wumpus or exits.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{all_cells, shoot_trajectory, Cell, Direction};
use crate::observation::Observation;
use crate::rules::{Action, Percept};
use crate::world::WorldState;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KbError {
    #[error("no hazard layout is consistent with the recorded percepts (last update at {0})")]
    Inconsistent(Cell),
    #[error("knowledge base supports grids up to 8x8, got {0}x{0}")]
    GridTooLarge(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    Impossible,
    Possible,
    Certain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerceptRecord {
    pub percept: Percept,
    /// Whether the wumpus was still alive when this percept was sensed.
    pub wumpus_alive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub from: Cell,
    pub direction: Direction,
    pub scream: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub grid_size: u32,
    pub num_pits: u32,
    pub num_wumpus: u32,
    pub records: BTreeMap<Cell, PerceptRecord>,
    pub shot: Option<ShotRecord>,
    pub pit_candidates: BTreeMap<Cell, CandidateStatus>,
    pub wumpus_candidates: BTreeMap<Cell, CandidateStatus>,
    pub safe_cells: BTreeSet<Cell>,
    pub wumpus_known_dead: bool,
    /// Number of hazard layouts consistent with everything recorded.
    pub consistent_layouts: usize,
}

impl KnowledgeBase {
    /// Knowledge before any percept: only the start zone is known to be safe.
    pub fn new(grid_size: u32, num_pits: u32, num_wumpus: u32) -> Result<Self, KbError> {
        if grid_size * grid_size > 64 {
            return Err(KbError::GridTooLarge(grid_size));
        }
        let mut kb = KnowledgeBase {
            grid_size,
            num_pits,
            num_wumpus,
            records: BTreeMap::new(),
            shot: None,
            pit_candidates: BTreeMap::new(),
            wumpus_candidates: BTreeMap::new(),
            safe_cells: BTreeSet::new(),
            wumpus_known_dead: false,
            consistent_layouts: 0,
        };
        kb.recompute(Cell::START)?;
        Ok(kb)
    }

    pub fn for_world(world: &WorldState) -> Result<Self, KbError> {
        let cfg = &world.config;
        Self::new(cfg.grid_size, cfg.num_pits, cfg.num_wumpus)
    }

    /// Records the outcome of the single arrow.
    pub fn record_shot(&self, from: Cell, direction: Direction, scream: bool) -> Result<Self, KbError> {
        let mut kb = self.clone();
        kb.shot = Some(ShotRecord { from, direction, scream });
        kb.wumpus_known_dead |= scream;
        kb.recompute(from)?;
        Ok(kb)
    }

    fn cell_bit(&self, cell: Cell) -> u64 {
        1u64 << ((cell.y - 1) * self.grid_size + (cell.x - 1))
    }

    fn mask_of(&self, cells: impl IntoIterator<Item = Cell>) -> u64 {
        cells.into_iter().fold(0, |m, c| m | self.cell_bit(c))
    }

    fn recompute(&mut self, at: Cell) -> Result<(), KbError> {
        let n = self.grid_size;
        assert!(n * n <= 64, "knowledge base supports grids up to 8x8");
        let eligible: Vec<Cell> = all_cells(n).filter(|c| !c.is_start_zone()).collect();

        // Each record becomes (room bit, neighbourhood mask, breeze, stench, wumpus alive).
        let checks: Vec<(u64, u64, bool, bool, bool)> = self
            .records
            .iter()
            .map(|(&cell, r)| {
                let near = self.mask_of(cell.neighbors(n));
                (self.cell_bit(cell), near, r.percept.breeze, r.percept.stench, r.wumpus_alive)
            })
            .collect();
        let shot = self
            .shot
            .map(|s| (self.mask_of(shoot_trajectory(s.from, s.direction, n)), s.scream));

        let consistent = |pits: u64, wumpus: u64| {
            checks.iter().all(|&(bit, near, breeze, stench, alive)| {
                pits & bit == 0
                    && !(alive && wumpus & bit != 0)
                    && breeze == (pits & near != 0)
                    && stench == (alive && wumpus & near != 0)
            }) && shot.is_none_or(|(path, scream)| scream == (wumpus & path != 0))
        };

        let mut pit_hits: BTreeMap<Cell, usize> = BTreeMap::new();
        let mut wumpus_hits: BTreeMap<Cell, usize> = BTreeMap::new();
        let mut total = 0usize;
        for pits in eligible.iter().copied().combinations(self.num_pits as usize) {
            let pit_mask = self.mask_of(pits.iter().copied());
            let mut tally = |wumpus: Option<Cell>| {
                let wumpus_mask = wumpus.map_or(0, |w| self.cell_bit(w));
                if consistent(pit_mask, wumpus_mask) {
                    total += 1;
                    for &p in &pits {
                        *pit_hits.entry(p).or_default() += 1;
                    }
                    if let Some(w) = wumpus {
                        *wumpus_hits.entry(w).or_default() += 1;
                    }
                }
            };
            if self.num_wumpus == 0 {
                tally(None);
            } else {
                for &w in eligible.iter().filter(|c| !pits.contains(c)) {
                    tally(Some(w));
                }
            }
        }
        if total == 0 {
            return Err(KbError::Inconsistent(at));
        }

        let status = |hits: Option<&usize>| match hits.copied().unwrap_or(0) {
            0 => CandidateStatus::Impossible,
            h if h == total => CandidateStatus::Certain,
            _ => CandidateStatus::Possible,
        };
        self.consistent_layouts = total;
        self.pit_candidates.clear();
        self.wumpus_candidates.clear();
        self.safe_cells.clear();
        for cell in all_cells(n) {
            let pit = status(pit_hits.get(&cell));
            let wumpus = status(wumpus_hits.get(&cell));
            self.pit_candidates.insert(cell, pit);
            self.wumpus_candidates.insert(cell, wumpus);
            if pit == CandidateStatus::Impossible
                && (wumpus == CandidateStatus::Impossible || self.wumpus_known_dead)
            {
                self.safe_cells.insert(cell);
            }
        }
        Ok(())
    }
}

/// Adds the percept sensed in `cell` and re-derives every candidate status.
/// A percept carrying a scream marks the wumpus dead.
pub fn update_kb(kb: &KnowledgeBase, cell: Cell, percept: Percept) -> Result<KnowledgeBase, KbError> {
    let mut next = kb.clone();
    next.wumpus_known_dead |= percept.scream;
    let alive = !next.wumpus_known_dead;
    next.records.entry(cell).or_insert(PerceptRecord {
        percept: Percept { scream: false, glitter: false, ..percept },
        wumpus_alive: alive,
    });
    next.recompute(cell)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CellClassification {
    pub safe: BTreeSet<Cell>,
    pub fatal: BTreeSet<Cell>,
    pub unknown: BTreeSet<Cell>,
}

pub fn classify_cells(kb: &KnowledgeBase) -> CellClassification {
    let mut out = CellClassification::default();
    for cell in all_cells(kb.grid_size) {
        let pit = kb.pit_candidates[&cell];
        let wumpus = kb.wumpus_candidates[&cell];
        if kb.safe_cells.contains(&cell) {
            out.safe.insert(cell);
        } else if pit == CandidateStatus::Certain
            || (wumpus == CandidateStatus::Certain && !kb.wumpus_known_dead)
        {
            out.fatal.insert(cell);
        } else {
            out.unknown.insert(cell);
        }
    }
    out
}

/// Fixed priority policy: first provably safe frontier room in (y, x) order;
/// otherwise shoot a localized live wumpus in line with the agent; otherwise
/// exit. Gold needs no rule since it is collected on entry.
pub fn oracle_policy(kb: &KnowledgeBase, obs: &Observation) -> Action {
    let mut frontier = obs.suggestions.frontier_cells.clone();
    frontier.sort();
    if let Some(&target) = frontier.iter().find(|c| kb.safe_cells.contains(c)) {
        return Action::Move(target);
    }
    let arrow_ready = !obs.arrow_status.fired && !obs.suggestions.shoot_options.is_empty();
    if arrow_ready && !kb.wumpus_known_dead {
        let located = kb
            .wumpus_candidates
            .iter()
            .find(|(_, s)| **s == CandidateStatus::Certain)
            .map(|(c, _)| *c);
        if let Some(wumpus) = located {
            let here = obs.current_position;
            if let Some(d) = Direction::ALL
                .into_iter()
                .find(|d| shoot_trajectory(here, *d, kb.grid_size).contains(&wumpus))
            {
                return Action::Shoot(d);
            }
        }
    }
    Action::Exit
}

/// Oracle agent driven purely by observations: new rooms in the observation
/// are fed to the knowledge base, as is the arrow outcome once reported.
#[derive(Debug, Clone)]
pub struct OracleAgent {
    kb: KnowledgeBase,
}

impl OracleAgent {
    pub fn new(grid_size: u32, num_pits: u32, num_wumpus: u32) -> Result<Self, KbError> {
        Ok(Self { kb: KnowledgeBase::new(grid_size, num_pits, num_wumpus)? })
    }

    pub fn knowledge(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn decide(&mut self, obs: &Observation) -> Result<Action, KbError> {
        let breeze: BTreeSet<Cell> = obs.breeze_locations.iter().copied().collect();
        let stench: BTreeSet<Cell> = obs.stench_locations.iter().copied().collect();
        for cell in obs.visited() {
            if !self.kb.records.contains_key(&cell) {
                let percept = Percept {
                    breeze: breeze.contains(&cell),
                    stench: stench.contains(&cell),
                    ..Percept::default()
                };
                self.kb = update_kb(&self.kb, cell, percept)?;
            }
        }
        if let (true, None, Some(direction)) =
            (obs.arrow_status.fired, self.kb.shot, obs.arrow_status.direction)
        {
            self.kb = self
                .kb
                .record_shot(obs.current_position, direction, obs.arrow_status.scream_heard)?;
        }
        Ok(oracle_policy(&self.kb, obs))
    }
}

/// Whether the gold can be reached alive with full knowledge of the layout:
/// flood fill from the start over rooms free of pits and the live wumpus,
/// then, if the wumpus lies in line with some reached room, flood fill again
/// with the wumpus removed. The step limit is not considered.
pub fn full_info_solvable(world: &WorldState) -> bool {
    let Some(gold) = world.gold_cell else {
        return world.status == crate::world::Status::Success;
    };
    let n = world.config.grid_size;
    let flood = |blocked: &dyn Fn(Cell) -> bool| {
        let mut seen = BTreeSet::from([Cell::START]);
        let mut queue = VecDeque::from([Cell::START]);
        while let Some(cell) = queue.pop_front() {
            for next in cell.neighbors(n) {
                if !blocked(next) && seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        seen
    };
    let pit = |c: Cell| world.pit_cells.contains(&c);
    let live_wumpus = if world.wumpus_alive { world.wumpus_cell } else { None };

    let reach = flood(&|c| pit(c) || live_wumpus == Some(c));
    if reach.contains(&gold) {
        return true;
    }
    let Some(wumpus) = live_wumpus.filter(|_| world.arrow_available) else {
        return false;
    };
    let shootable = reach
        .iter()
        .any(|&c| Direction::ALL.iter().any(|&d| shoot_trajectory(c, d, n).contains(&wumpus)));
    shootable && flood(&pit).contains(&gold)
}
