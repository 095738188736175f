//! Cave environment: a deterministic, seeded Wumpus World with
//! coordinate-addressed movement, an aggregated eight-field observation, and
//! a propositional oracle agent that only ever enters provably safe rooms.
//!
//! ```
//! use cave_core::{generate_world, apply_action, legal_actions, WorldConfig};
//!
//! let world = generate_world(&WorldConfig::new(4, 2, 1, 7)).unwrap();
//! let first = legal_actions(&world)[0];
//! let step = apply_action(&world, first).unwrap();
//! assert_eq!(step.new_state.steps_taken, 1);
//! ```

pub mod grid;
pub mod observation;
pub mod oracle;
pub mod rules;
pub mod scalar;
pub mod world;

pub use grid::{shoot_trajectory, Cell, Direction};
pub use observation::{
    build_observation, frontier_suggestions, parse_action, ArrowStatus, Observation, ParseError,
    Suggestions,
};
pub use oracle::{
    classify_cells, full_info_solvable, oracle_policy, update_kb, CandidateStatus,
    CellClassification, KbError, KnowledgeBase, OracleAgent,
};
pub use rules::{
    apply_action, episode_score, frontier, legal_actions, percepts_at, Action, Percept,
    TransitionResult,
};
pub use scalar::Real;
pub use world::{
    generate_world, ArrowReport, EnvError, Layout, RewardConstants, Status, WorldConfig,
    WorldState,
};
