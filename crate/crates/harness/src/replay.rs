//! Re-simulation of logged episodes and ASCII replay frames.

use std::path::Path;

use cave_core::{
    apply_action, build_observation, generate_world, Action, Cell, Layout, Status, WorldState,
};
use thiserror::Error;

use crate::episode::EpisodeRecord;
use crate::log::{append_records, load_records};
use crate::HarnessError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplayError {
    #[error("record seed {record} differs from its world config seed {config}")]
    SeedMismatch { record: u64, config: u64 },
    #[error("seed {seed} does not regenerate the recorded layout")]
    LayoutMismatch { seed: u64 },
    #[error("recorded world is invalid: {0}")]
    InvalidWorld(String),
    #[error("round {round}: {message}")]
    Diverged { round: u32, message: String },
    #[error("final {field} differs: recorded {recorded}, replayed {replayed}")]
    Final { field: &'static str, recorded: String, replayed: String },
    #[error("reloaded record differs from the one written")]
    RoundTrip,
}

fn diverged(round: u32, message: impl Into<String>) -> ReplayError {
    ReplayError::Diverged { round, message: message.into() }
}

fn check<T: PartialEq + std::fmt::Debug>(field: &'static str, recorded: T, replayed: T) -> Result<(), ReplayError> {
    if recorded == replayed {
        Ok(())
    } else {
        Err(ReplayError::Final { field, recorded: format!("{recorded:?}"), replayed: format!("{replayed:?}") })
    }
}

/// Re-simulates `record` from its seed (or stored custom layout) and its
/// executed actions.
///
/// Returns the initial state followed by the state after each round.
pub fn verify_replay(record: &EpisodeRecord) -> Result<Vec<WorldState>, ReplayError> {
    if record.seed != record.config.seed {
        return Err(ReplayError::SeedMismatch { record: record.seed, config: record.config.seed });
    }
    let mut state = if record.custom_layout {
        WorldState::with_layout(record.config, &record.layout).map_err(|e| ReplayError::InvalidWorld(e.to_string()))?
    } else {
        let world = generate_world(&record.config).map_err(|e| ReplayError::InvalidWorld(e.to_string()))?;
        if world.layout().as_ref() != Some(&record.layout) {
            return Err(ReplayError::LayoutMismatch { seed: record.seed });
        }
        world
    };

    let mut states = vec![state.clone()];
    for (i, entry) in record.rounds.iter().enumerate() {
        let round = entry.round;
        if state.status.is_terminal() {
            return Err(diverged(round, "round logged after the episode ended"));
        }
        if build_observation(&state) != entry.observation {
            return Err(diverged(round, "observation differs"));
        }
        match entry.action {
            Some(action) => {
                let t = apply_action(&state, action).map_err(|e| diverged(round, e.to_string()))?;
                if t.reward_delta != entry.reward_delta {
                    return Err(diverged(
                        round,
                        format!("reward {} recorded, {} replayed", entry.reward_delta, t.reward_delta),
                    ));
                }
                if entry.percept != Some(t.percept) {
                    return Err(diverged(round, "percept differs"));
                }
                state = t.new_state;
            }
            None => {
                if i + 1 != record.rounds.len() {
                    return Err(diverged(round, "round without an action before the last round"));
                }
                state.mark_protocol_failure();
            }
        }
        states.push(state.clone());
    }

    check("status", record.status, state.status)?;
    check("score", record.score, state.score)?;
    check("arrow report", record.arrow_report, state.arrow_report)?;
    let steps = record.executed_actions().filter(|a| !matches!(a, Action::Exit)).count() as u32;
    check("steps", record.steps, steps)?;
    check("flags", (record.success, record.wumpus_killed), record.derived_flags())?;
    Ok(states)
}

fn cell_glyph(state: &WorldState, layout: &Layout, cell: Cell) -> String {
    let mut g = String::new();
    if state.agent_cell == cell {
        g.push('A');
    }
    if layout.pits.contains(&cell) {
        g.push('P');
    }
    if layout.wumpus == Some(cell) {
        g.push(if state.wumpus_alive { 'W' } else { 'x' });
    }
    if layout.gold == cell {
        g.push(if state.gold_cell == Some(cell) { 'G' } else { '$' });
    }
    if g.is_empty() {
        g.push(if state.is_explored(cell) { '.' } else { '?' });
    } else if !state.is_explored(cell) {
        g = g.to_lowercase();
    }
    g
}

/// One ASCII board per state, hazards revealed.
///
/// Legend: `A` agent, `P` pit, `W` live wumpus, `x` dead wumpus, `G` gold in
/// place, `$` gold collected, `.` explored, `?` unexplored. Letters are
/// lowercase in rooms the agent never entered.
pub fn render_frame(state: &WorldState, layout: &Layout, caption: &str) -> String {
    let n = state.config.grid_size;
    let width = 4;
    let mut out = format!("{caption}\n");
    let rule = format!("+{}\n", format!("{}+", "-".repeat(width)).repeat(n as usize));
    for y in (1..=n).rev() {
        out += &rule;
        out.push('|');
        for x in 1..=n {
            out += &format!("{:^width$}|", cell_glyph(state, layout, Cell::new(x, y)));
        }
        out += &format!(" {y}\n");
    }
    out += &rule;
    out += &(1..=n).map(|x| format!("{x:^width$} ", width = width + 1)).collect::<String>();
    out.push('\n');
    out
}

/// The initial frame plus one frame per round.
pub fn render_frames(record: &EpisodeRecord) -> Result<Vec<String>, ReplayError> {
    let states = verify_replay(record)?;
    let mut frames = vec![render_frame(&states[0], &record.layout, &format!("start | score {}", states[0].score))];
    for (entry, state) in record.rounds.iter().zip(&states[1..]) {
        let action = entry.action.map_or_else(|| "no action".to_string(), |a| a.to_string());
        let caption = format!(
            "round {}: {} | reward {:+} | score {} | {}",
            entry.round,
            action,
            entry.reward_delta,
            state.score,
            state.status.as_str()
        );
        frames.push(render_frame(state, &record.layout, &caption));
    }
    Ok(frames)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replayed {
    pub record: EpisodeRecord,
    pub frames: Vec<String>,
    pub final_status: Status,
}

/// Appends `record` to the log at `path`, reloads it, checks it round-trips
/// and re-simulates, then renders the frames.
pub fn persist_and_replay(record: &EpisodeRecord, path: impl AsRef<Path>) -> Result<Replayed, HarnessError> {
    append_records(&path, std::slice::from_ref(record))?;
    let reloaded = load_records(&path)?.pop().ok_or(ReplayError::RoundTrip)?;
    if &reloaded != record {
        return Err(ReplayError::RoundTrip.into());
    }
    let frames = render_frames(&reloaded)?;
    let final_status = reloaded.status;
    Ok(Replayed { record: reloaded, frames, final_status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentSpec, ScriptPolicy};
    use crate::episode::{run_episode, run_episode_on_layout};
    use cave_core::{Direction, WorldConfig};

    fn c(x: u32, y: u32) -> Cell {
        Cell::new(x, y)
    }

    fn success_record() -> EpisodeRecord {
        let cfg = WorldConfig::new(3, 0, 1, 0);
        let layout = Layout { pits: Default::default(), wumpus: Some(c(3, 1)), gold: c(3, 2) };
        let spec = AgentSpec::Scripted(ScriptPolicy::Sequence(vec![
            Action::Shoot(Direction::Right),
            Action::Move(c(2, 1)),
            Action::Move(c(2, 2)),
            Action::Move(c(3, 2)),
        ]));
        run_episode_on_layout(&cfg, &layout, &spec).unwrap()
    }

    #[test]
    fn oracle_records_replay() {
        for seed in 0..40 {
            let r = run_episode(&WorldConfig::new(4, 2, 1, seed), &AgentSpec::Oracle).unwrap();
            let states = verify_replay(&r).unwrap();
            assert_eq!(states.len(), r.rounds.len() + 1);
            assert_eq!(states.last().unwrap().score, r.score);
        }
    }

    #[test]
    fn success_final_frame_shows_collected_gold() {
        let r = success_record();
        assert_eq!(r.status, Status::Success);
        let frames = render_frames(&r).unwrap();
        assert_eq!(frames.len(), r.rounds.len() + 1);
        let last = frames.last().unwrap();
        assert!(last.contains("A$"), "{last}");
        assert!(last.contains('x'), "{last}");
        assert!(frames[0].contains(" g "), "{}", frames[0]);
    }

    #[test]
    fn tampered_seed_detected() {
        let mut r = run_episode(&WorldConfig::new(4, 1, 1, 5), &AgentSpec::Oracle).unwrap();
        r.seed = 6;
        assert!(matches!(verify_replay(&r), Err(ReplayError::SeedMismatch { .. })));
        r.config.seed = 6;
        assert_eq!(verify_replay(&r), Err(ReplayError::LayoutMismatch { seed: 6 }));
    }

    #[test]
    fn tampered_score_detected() {
        let mut r = success_record();
        r.score += 1;
        assert!(matches!(verify_replay(&r), Err(ReplayError::Final { field: "score", .. })));
        let mut r = success_record();
        r.rounds[1].reward_delta = 0;
        assert!(matches!(verify_replay(&r), Err(ReplayError::Diverged { round: 2, .. })));
    }

    #[test]
    fn persist_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.ndjson");
        let r = success_record();
        let out = persist_and_replay(&r, &path).unwrap();
        assert_eq!(out.record, r);
        assert_eq!(out.final_status, Status::Success);
    }
}
