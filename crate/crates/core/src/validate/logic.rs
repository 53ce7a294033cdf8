//! Checker for brace-delimited logical forms:
//! `eq { count { filter_eq { all_rows ; col ; 2006 } } ; 3 } = true`.

use super::{report, SyntaxError, ValidityErrorKind, ValidityReport};
use crate::knowledge::FormalLanguage;

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Semi,
    Eq,
    Word(&'a str),
}

fn lex<'a>(text: &'a str) -> Vec<(Tok<'a>, usize)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let push_word = |out: &mut Vec<(Tok<'a>, usize)>, start: Option<(usize, usize)>, end: usize| {
        if let Some((b, p)) = start {
            out.push((Tok::Word(&text[b..end]), p));
        }
    };
    for (pos, (byte, ch)) in text.char_indices().enumerate() {
        let punct = match ch {
            '{' => Some(Tok::Open),
            '}' => Some(Tok::Close),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(p) = punct {
            push_word(&mut out, start.take(), byte);
            out.push((p, pos));
        } else if ch.is_whitespace() {
            push_word(&mut out, start.take(), byte);
        } else if start.is_none() {
            start = Some((byte, pos));
        }
    }
    push_word(&mut out, start, text.len());
    out
}

fn is_function_name(w: &str) -> bool {
    let mut chars = w.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Parser<'t, 'a> {
    tokens: &'t [(Tok<'a>, usize)],
    i: usize,
    end: usize,
}

impl Parser<'_, '_> {
    fn pos(&self) -> usize {
        self.tokens.get(self.i).map_or(self.end, |t| t.1)
    }

    fn tok(&self, n: usize) -> Option<&Tok<'_>> {
        self.tokens.get(self.i + n).map(|t| &t.0)
    }

    fn form(&mut self) -> Result<(), SyntaxError> {
        match self.tok(0) {
            Some(Tok::Word(w)) if is_function_name(w) && self.tok(1) == Some(&Tok::Open) => {
                self.i += 2;
            }
            _ => return Err(SyntaxError::grammar(self.pos(), "expected `function {`")),
        }
        loop {
            self.arg()?;
            match self.tok(0) {
                Some(Tok::Semi) => self.i += 1,
                Some(Tok::Close) => {
                    self.i += 1;
                    return Ok(());
                }
                _ => return Err(SyntaxError::grammar(self.pos(), "expected `;` or `}`")),
            }
        }
    }

    fn arg(&mut self) -> Result<(), SyntaxError> {
        if matches!(self.tok(0), Some(Tok::Word(_))) && self.tok(1) == Some(&Tok::Open) {
            return self.form();
        }
        let start = self.i;
        while matches!(self.tok(0), Some(Tok::Word(_))) {
            self.i += 1;
        }
        if self.i == start {
            return Err(SyntaxError::grammar(self.pos(), "empty argument"));
        }
        Ok(())
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
            Tok::Close
                if open.pop().is_none() => {
                    return Err(SyntaxError::new(
                        ValidityErrorKind::UnbalancedDelimiter,
                        *pos,
                        "unmatched `}`",
                    ));
                }
            _ => {}
        }
    }
    if let Some(pos) = open.pop() {
        return Err(SyntaxError::new(
            ValidityErrorKind::UnbalancedDelimiter,
            pos,
            "unclosed `{`",
        ));
    }
    let mut p = Parser {
        tokens: &tokens,
        i: 0,
        end: text.chars().count(),
    };
    p.form()?;
    if p.tok(0) == Some(&Tok::Eq) {
        p.i += 1;
        match p.tok(0) {
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case("true") || w.eq_ignore_ascii_case("false") => {
                p.i += 1
            }
            _ => return Err(SyntaxError::grammar(p.pos(), "expected `true` or `false`")),
        }
    }
    if p.i < tokens.len() {
        return Err(SyntaxError::grammar(p.pos(), "trailing content"));
    }
    Ok(())
}

pub fn check_logic_validity(text: &str) -> ValidityReport {
    report(FormalLanguage::Logic, check(text))
}
