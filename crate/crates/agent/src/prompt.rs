//! Prompt assembly for the plain chain-of-thought and Chain of Speculation
//! modes.

use cave_core::Observation;
use serde::{Deserialize, Serialize};

use crate::chat::ChatMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cot,
    Cos,
}

pub const OBSERVATION_LABEL: &str = "Observation:";
pub const PREVIOUS_GUESS_LABEL: &str = "Previous guess:";

const RULES: &str = "\
You control an explorer in a cave laid out as an n x n grid of rooms. Rooms are \
written (x,y); (1,1) is the bottom-left room where you start, x grows to the right \
and y grows upward. The cave hides a Wumpus and some bottomless pits; their counts \
are given in the observation. The start room and its two neighbours are always safe.

Percepts: a breeze means a pit is in an orthogonally adjacent room; a stench means \
the living Wumpus is in an adjacent room. Entering a pit or the Wumpus's room is fatal. \
You never see hazards directly; deduce them from where breezes and stenches were and \
were not felt.

Goal: find the gold. Entering the gold's room collects it and ends the game.

Actions (choose exactly one per turn):
- move to position (x,y): go to an unexplored room adjacent to any explored room.
- <shootup>, <shootdown>, <shootleft>, <shootright>: fire your single arrow in a \
straight line from your current room; it kills the Wumpus if it is anywhere along the \
line, and you will hear a scream.
- <exit>: leave the cave and end the game, e.g. when the gold cannot be reached safely.

Scoring: you start with 50 points; each move costs 1; the gold is worth 50; killing \
the Wumpus is worth 20; dying in a pit costs 20 and being eaten costs 30.";

pub fn default_system_prompt(mode: Mode) -> String {
    match mode {
        Mode::Cot => format!(
            "{RULES}\n\nThink step by step, then answer in this format:\n\
             Analysis: <your reasoning about the observation>\n\
             Action: <one action, written exactly as listed above>"
        ),
        Mode::Cos => format!(
            "{RULES}\n\nAnswer in exactly three labeled sections:\n\
             Analysis: <your reasoning about the observation and your previous guess>\n\
             Guess: <a JSON object with your current belief about hazard rooms, e.g. \
             {{\"wumpus\": [[2,2]], \"pits\": [[3,1]]}}>\n\
             Action: <one action, written exactly as listed above>\n\
             Your previous guess, when there is one, is shown after the observation. \
             Revise it whenever new percepts contradict it."
        ),
    }
}

/// `[system, user]` pair. The user message is the serialized observation,
/// followed in CoS mode by the previous round's guess text, verbatim.
pub fn build_prompt(
    mode: Mode,
    obs: &Observation,
    prev_guess: Option<&str>,
    system_prompt: &str,
) -> Vec<ChatMessage> {
    let mut user = format!("{OBSERVATION_LABEL}\n{}", obs.to_json());
    if let (Mode::Cos, Some(guess)) = (mode, prev_guess) {
        user.push_str(&format!("\n\n{PREVIOUS_GUESS_LABEL}\n{guess}"));
    }
    vec![ChatMessage::system(system_prompt), ChatMessage::user(user)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use cave_core::{build_observation, generate_world, WorldConfig};

    fn obs() -> Observation {
        build_observation(&generate_world(&WorldConfig::new(3, 0, 1, 1)).unwrap())
    }

    #[test]
    fn first_cos_round_is_observation_only() {
        let msgs = build_prompt(Mode::Cos, &obs(), None, "sys");
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0], ChatMessage::system("sys"));
        assert_eq!(msgs[1].content, format!("Observation:\n{}", obs().to_json()));
    }

    #[test]
    fn guess_is_appended_verbatim() {
        let guess = r#"{"wumpus": [(2,2)]}"#;
        let msgs = build_prompt(Mode::Cos, &obs(), Some(guess), "sys");
        assert!(msgs[1].content.contains(guess));
        assert!(msgs[1].content.ends_with(&format!("{PREVIOUS_GUESS_LABEL}\n{guess}")));
    }

    #[test]
    fn cot_never_carries_a_guess() {
        let msgs = build_prompt(Mode::Cot, &obs(), Some("{\"wumpus\": []}"), "sys");
        assert!(!msgs[1].content.contains(PREVIOUS_GUESS_LABEL));
    }

    #[test]
    fn system_prompts_name_the_sections() {
        let cos = default_system_prompt(Mode::Cos);
        for label in ["Analysis:", "Guess:", "Action:", "<shootright>", "move to position (x,y)"] {
            assert!(cos.contains(label), "{label}");
        }
        assert!(!default_system_prompt(Mode::Cot).contains("Guess:"));
    }
}
