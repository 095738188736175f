//! Trial matrices and the parallel batch runner.

use std::collections::BTreeSet;

use cave_agent::{Agent, AgentFailure, Decision, FailureKind, RoundContext};
use cave_core::{generate_world, WorldConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::AgentSpec;
use crate::episode::{drive, EpisodeRecord};
use crate::HarnessError;

/// `(grid size, pits, wumpus)` for the six standard conditions.
pub const STANDARD_CONDITIONS: [(u32, u32, u32); 6] = [(3, 0, 1), (3, 1, 0), (3, 1, 1), (4, 1, 1), (4, 2, 1), (4, 3, 1)];

pub const DEFAULT_TRIALS_PER_CONDITION: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub grid_size: u32,
    pub num_pits: u32,
    pub num_wumpus: u32,
    pub seeds: Vec<u64>,
}

impl Condition {
    pub fn label(&self) -> String {
        format!("{n}x{n} pits={} wumpus={}", self.num_pits, self.num_wumpus, n = self.grid_size)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialMatrix {
    pub conditions: Vec<Condition>,
    pub step_limit: u32,
}

impl TrialMatrix {
    /// The six standard conditions with 25 trials each.
    ///
    /// Condition `i`, trial `j` uses seed `base_seed + 25 i + j`.
    pub fn standard_default(base_seed: u64) -> Self {
        Self::standard(base_seed, DEFAULT_TRIALS_PER_CONDITION)
    }

    pub fn standard(base_seed: u64, trials: usize) -> Self {
        let conditions = STANDARD_CONDITIONS
            .iter()
            .enumerate()
            .map(|(i, &(grid_size, num_pits, num_wumpus))| Condition {
                grid_size,
                num_pits,
                num_wumpus,
                seeds: (0..trials as u64).map(|j| base_seed.wrapping_add(i as u64 * trials as u64 + j)).collect(),
            })
            .collect();
        Self { conditions, step_limit: cave_core::WorldConfig::new(3, 0, 0, 0).step_limit }
    }

    /// Keeps the first `trials` seeds of each condition, or extends the
    /// standard seed scheme when more are asked for.
    pub fn with_trials_per_condition(self, trials: usize) -> Self {
        let base = self.conditions.first().and_then(|c| c.seeds.first().copied()).unwrap_or(0);
        let mut m = Self::standard(base, trials);
        m.step_limit = self.step_limit;
        m
    }

    pub fn with_step_limit(mut self, step_limit: u32) -> Self {
        self.step_limit = step_limit;
        self
    }

    pub fn len(&self) -> usize {
        self.conditions.iter().map(|c| c.seeds.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.is_empty() {
            return Err(HarnessError::Config("trial matrix has no episodes".into()));
        }
        for c in &self.conditions {
            let distinct: BTreeSet<_> = c.seeds.iter().collect();
            if distinct.len() != c.seeds.len() {
                return Err(HarnessError::Config(format!("{}: duplicate seeds", c.label())));
            }
            WorldConfig::new(c.grid_size, c.num_pits, c.num_wumpus, 0)
                .with_step_limit(self.step_limit)
                .validate()?;
        }
        Ok(())
    }

    /// One world configuration per episode, in matrix order.
    pub fn configs(&self) -> Vec<WorldConfig> {
        self.conditions
            .iter()
            .flat_map(|c| {
                c.seeds.iter().map(move |&seed| {
                    WorldConfig::new(c.grid_size, c.num_pits, c.num_wumpus, seed).with_step_limit(self.step_limit)
                })
            })
            .collect()
    }
}

/// Agent stand-in for an episode whose agent could not be built.
struct Unbuildable(String);

impl Agent for Unbuildable {
    fn decide(&mut self, _: &RoundContext<'_>) -> Result<Decision, AgentFailure> {
        Err(AgentFailure { kind: FailureKind::Internal, reason: self.0.clone(), exchanges: Vec::new() })
    }
}

/// Runs every episode of `matrix` on a pool of `parallelism` workers.
///
/// Records come back in matrix order. A failing episode is recorded as a
/// protocol failure and does not stop the batch.
pub fn run_trials(
    matrix: &TrialMatrix,
    spec: &AgentSpec,
    parallelism: usize,
) -> Result<Vec<EpisodeRecord>, HarnessError> {
    matrix.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let configs = matrix.configs();
    pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| {
                let world = generate_world(cfg)?;
                let mut agent = spec.build(cfg).unwrap_or_else(|e| Box::new(Unbuildable(e.to_string())));
                Ok(drive(world, false, agent.as_mut(), spec))
            })
            .collect()
    })
}
