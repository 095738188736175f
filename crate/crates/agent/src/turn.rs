//! Parsing of structured replies: labeled sections, the JSON guess block,
//! and the final action.

use std::collections::HashMap;
use std::sync::LazyLock;

use cave_core::{parse_action, Action, Cell, ParseError};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hypothesis about hazard rooms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guess {
    #[serde(default, alias = "Wumpus")]
    pub wumpus: Vec<Cell>,
    #[serde(default, alias = "pit", alias = "Pits", alias = "Pit")]
    pub pits: Vec<Cell>,
}

impl Guess {
    pub fn within(&self, n: u32) -> bool {
        self.wumpus.iter().chain(&self.pits).all(|c| c.in_grid(n))
    }
}

/// One parsed reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosTurn {
    pub analysis: String,
    pub guess: Guess,
    /// The guess block exactly as written by the model; this is what is
    /// carried into the next prompt.
    pub guess_text: Option<String>,
    pub guess_malformed: bool,
    pub action: Action,
    pub action_text: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TurnError {
    #[error("reply has no Action section")]
    MissingAction,
    #[error("Action section holds no recognizable action: {0:?}")]
    UnparseableAction(String),
    #[error("action {0} is not legal in this position")]
    IllegalAction(Action),
}

static HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?im)^[ \t]*(?:#{1,6}[ \t]*)?(?:\*\*)?[ \t]*(analysis|guess|action|confidence|alternative|rationale)[ \t]*(?:\*\*)?[ \t]*(?::(?:\*\*)?|$)",
    )
    .expect("header pattern compiles")
});

/// Splits a reply into labeled sections (lower-cased label → body). A label
/// that appears twice keeps its last body.
pub fn sections(text: &str) -> HashMap<String, String> {
    let headers: Vec<_> = HEADER.captures_iter(text).collect();
    let mut out = HashMap::new();
    for (i, caps) in headers.iter().enumerate() {
        let whole = caps.get(0).expect("match");
        let end = headers.get(i + 1).map_or(text.len(), |next| next.get(0).expect("match").start());
        let body = text[whole.end()..end].trim().to_string();
        out.insert(caps[1].to_ascii_lowercase(), body);
    }
    out
}

/// First balanced `{...}` block in `text`.
pub fn json_block(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in text[start..].char_indices() {
        match ch {
            _ if escaped => escaped = false,
            '\\' if in_string => escaped = true,
            '"' => in_string = !in_string,
            '{' if !in_string => depth += 1,
            '}' if !in_string => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Parses a guess object, accepting `(x,y)` tuples as well as `[x,y]` pairs.
pub fn parse_guess(block: &str) -> Option<Guess> {
    serde_json::from_str(block)
        .ok()
        .or_else(|| serde_json::from_str(&block.replace('(', "[").replace(')', "]")).ok())
}

/// Parses an Analysis / Guess / Action reply. A missing or unreadable guess
/// only sets `guess_malformed`; a missing or unreadable action is an error.
pub fn parse_cos_response(text: &str) -> Result<CosTurn, TurnError> {
    let parts = sections(text);
    let action_text = parts.get("action").ok_or(TurnError::MissingAction)?.clone();
    let action = parse_action(&action_text)
        .map_err(|ParseError::NoAction| TurnError::UnparseableAction(action_text.clone()))?;
    let guess_text = parts.get("guess").and_then(|g| json_block(g)).map(str::to_string);
    let parsed = guess_text.as_deref().and_then(parse_guess);
    Ok(CosTurn {
        analysis: parts.get("analysis").cloned().unwrap_or_default(),
        guess_malformed: parsed.is_none(),
        guess: parsed.unwrap_or_default(),
        guess_text,
        action,
        action_text,
    })
}

/// Parses a plain chain-of-thought reply: the last action anywhere wins.
pub fn parse_cot_response(text: &str) -> Result<CosTurn, TurnError> {
    let parts = sections(text);
    let action = parse_action(text).map_err(|_| TurnError::UnparseableAction(text.to_string()))?;
    Ok(CosTurn {
        analysis: parts.get("analysis").cloned().unwrap_or_default(),
        guess: Guess::default(),
        guess_text: None,
        guess_malformed: false,
        action,
        action_text: parts.get("action").cloned().unwrap_or_default(),
    })
}
