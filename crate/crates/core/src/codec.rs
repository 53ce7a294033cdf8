//! Target-string codecs for answer sets, booleans and dialogue states.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{ANSWER_JOIN, BOOLEAN_FALSE, BOOLEAN_TRUE, STATE_PAIR_JOIN};
use crate::knowledge::{DialogueState, Ontology};

/// Joins answers with `", "`. Answers that themselves contain `", "` do not
/// survive a round trip through [`parse_answers`].
pub fn serialize_answers<S: AsRef<str>>(answers: &[S]) -> Result<String> {
    if answers.is_empty() {
        return Err(Error::EmptyAnswers);
    }
    if let Some(i) = answers.iter().position(|a| a.as_ref().is_empty()) {
        return Err(Error::EmptyAnswer(i));
    }
    Ok(answers
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(ANSWER_JOIN))
}

pub fn parse_answers(text: &str) -> Vec<String> {
    if text.is_empty() {
        return Vec::new();
    }
    text.split(ANSWER_JOIN).map(str::to_string).collect()
}

pub fn serialize_boolean(value: bool) -> &'static str {
    if value {
        BOOLEAN_TRUE
    } else {
        BOOLEAN_FALSE
    }
}

/// `Some(true)` for "entailed", `Some(false)` for "refuted", `None` otherwise.
pub fn parse_boolean(text: &str) -> Option<bool> {
    match text {
        BOOLEAN_TRUE => Some(true),
        BOOLEAN_FALSE => Some(false),
        _ => None,
    }
}

/// Slot name as it appears in target strings: `hotel-book day` -> `hotel book day`.
pub fn render_slot_name(slot: &str) -> String {
    slot.replace('-', " ")
}

pub const UNSET_VALUE: &str = "none";

/// Renders every ontology slot, in ontology order, as `"{slot} {value}"`.
pub fn serialize_dialogue_state(ontology: &Ontology, state: &DialogueState) -> Result<String> {
    if let Some((slot, _)) = state.pairs.iter().find(|(s, _)| !ontology.contains_slot(s)) {
        return Err(Error::UnknownSlot(slot.clone()));
    }
    let segments: Vec<String> = ontology
        .slots
        .iter()
        .map(|slot| {
            let value = state.get(&slot.name).unwrap_or(UNSET_VALUE);
            format!("{} {}", render_slot_name(&slot.name), value)
        })
        .collect();
    Ok(segments.join(STATE_PAIR_JOIN))
}

/// A parsed dialogue state plus the segments that matched no slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParsedState {
    pub state: DialogueState,
    pub residue: Vec<String>,
}

/// Inverse of [`serialize_dialogue_state`].
///
/// Each `", "`-separated segment is matched against the rendered slot names
/// by longest prefix; the rest of the segment is the value. Slots not
/// mentioned stay `"none"`. Unmatched or repeated segments go to `residue`.
pub fn parse_dialogue_state(ontology: &Ontology, text: &str) -> ParsedState {
    let rendered: Vec<String> = ontology.slots.iter().map(|s| render_slot_name(&s.name)).collect();
    let mut values: Vec<Option<String>> = vec![None; ontology.slots.len()];
    let mut residue = Vec::new();

    if !text.trim().is_empty() {
        for segment in text.split(STATE_PAIR_JOIN) {
            let best = rendered
                .iter()
                .enumerate()
                .filter_map(|(i, name)| {
                    let rest = segment.strip_prefix(name.as_str())?;
                    if rest.is_empty() {
                        Some((i, name.len(), ""))
                    } else {
                        rest.strip_prefix(' ').map(|v| (i, name.len(), v))
                    }
                })
                .max_by_key(|&(i, len, _)| (len, std::cmp::Reverse(i)));
            match best {
                Some((i, _, value)) if values[i].is_none() => values[i] = Some(value.to_string()),
                _ => residue.push(segment.to_string()),
            }
        }
    }

    let pairs = ontology
        .slots
        .iter()
        .zip(values)
        .map(|(slot, v)| (slot.name.clone(), v.unwrap_or_else(|| UNSET_VALUE.to_string())))
        .collect();
    ParsedState {
        state: DialogueState::new(pairs),
        residue,
    }
}
