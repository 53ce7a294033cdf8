//! Checker for TOP-style bracketed intent/slot trees such as
//! `[IN:CREATE_CALL [SL:CONTACT Nicholas ] ]`.
//!
//! Every bracket opens with an `IN:` or `SL:` label with an uppercase name.
//! Intents may contain words, slots and nested intents; slots may contain
//! words and nested intents but not slots. The root must be an intent.

use super::{report, SyntaxError, ValidityErrorKind, ValidityReport};
use crate::knowledge::FormalLanguage;

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Word(&'a str),
}

fn lex<'a>(text: &'a str) -> Vec<(Tok<'a>, usize)> {
    let mut out = Vec::new();
    let mut word_start: Option<(usize, usize)> = None;
    let flush = |out: &mut Vec<(Tok<'a>, usize)>, start: Option<(usize, usize)>, end: usize| {
        if let Some((byte, pos)) = start {
            out.push((Tok::Word(&text[byte..end]), pos));
        }
    };
    for (pos, (byte, ch)) in text.char_indices().enumerate() {
        match ch {
            '[' | ']' => {
                flush(&mut out, word_start.take(), byte);
                out.push((if ch == '[' { Tok::Open } else { Tok::Close }, pos));
            }
            c if c.is_whitespace() => flush(&mut out, word_start.take(), byte),
            _ => {
                if word_start.is_none() {
                    word_start = Some((byte, pos));
                }
            }
        }
    }
    flush(&mut out, word_start, text.len());
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeKind {
    Intent,
    Slot,
}

fn label(word: &str) -> Option<NodeKind> {
    let (kind, name) = if let Some(n) = word.strip_prefix("IN:") {
        (NodeKind::Intent, n)
    } else {
        let n = word.strip_prefix("SL:")?;
        (NodeKind::Slot, n)
    };
    let mut chars = name.chars();
    let first_ok = chars.next().is_some_and(|c| c.is_ascii_uppercase());
    let rest_ok = chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_');
    (first_ok && rest_ok).then_some(kind)
}

fn node(tokens: &[(Tok<'_>, usize)], i: &mut usize) -> Result<NodeKind, SyntaxError> {
    let open_pos = tokens[*i].1;
    *i += 1;
    let kind = match tokens.get(*i) {
        Some((Tok::Word(w), pos)) => {
            label(w).ok_or_else(|| SyntaxError::grammar(*pos, format!("invalid node label `{w}`")))?
        }
        Some((_, pos)) => return Err(SyntaxError::grammar(*pos, "expected node label")),
        None => return Err(SyntaxError::grammar(open_pos, "expected node label")),
    };
    *i += 1;
    loop {
        match &tokens[*i] {
            (Tok::Close, _) => {
                *i += 1;
                return Ok(kind);
            }
            (Tok::Word(_), _) => *i += 1,
            (Tok::Open, pos) => {
                let pos = *pos;
                let child = node(tokens, i)?;
                if kind == NodeKind::Slot && child == NodeKind::Slot {
                    return Err(SyntaxError::grammar(pos, "slot nested directly inside a slot"));
                }
            }
        }
    }
}

fn check(text: &str) -> Result<(), SyntaxError> {
    let tokens = lex(text);
    if tokens.is_empty() {
        return Err(SyntaxError::new(ValidityErrorKind::EmptyInput, 0, "empty input"));
    }
    let mut open = Vec::new();
    for (tok, pos) in &tokens {
        match tok {
            Tok::Open => open.push(*pos),
            Tok::Close => {
                if open.pop().is_none() {
                    return Err(SyntaxError::new(
                        ValidityErrorKind::UnbalancedDelimiter,
                        *pos,
                        "unmatched `]`",
                    ));
                }
            }
            Tok::Word(_) => {}
        }
    }
    if let Some(pos) = open.pop() {
        return Err(SyntaxError::new(
            ValidityErrorKind::UnbalancedDelimiter,
            pos,
            "unclosed `[`",
        ));
    }

    if tokens[0].0 != Tok::Open {
        return Err(SyntaxError::grammar(tokens[0].1, "expected `[`"));
    }
    let mut i = 0;
    if node(&tokens, &mut i)? != NodeKind::Intent {
        return Err(SyntaxError::grammar(0, "root node must be an intent"));
    }
    if let Some((_, pos)) = tokens.get(i) {
        return Err(SyntaxError::grammar(*pos, "trailing content after root node"));
    }
    Ok(())
}

pub fn check_top_validity(text: &str) -> ValidityReport {
    report(FormalLanguage::Top, check(text))
}
