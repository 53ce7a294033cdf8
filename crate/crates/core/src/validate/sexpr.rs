//! Shape check for KB-query s-expressions: balanced parentheses, non-empty
//! lists headed by a bare symbol, exactly one top-level form. Operator
//! arity and schema grounding are not checked.

use super::{report, SyntaxError, ValidityErrorKind, ValidityReport};
use crate::knowledge::FormalLanguage;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom,
}

fn lex(text: &str) -> Vec<(Tok, usize)> {
    let mut out = Vec::new();
    let mut in_atom = false;
    for (pos, ch) in text.chars().enumerate() {
        match ch {
            '(' => {
                out.push((Tok::Open, pos));
                in_atom = false;
            }
            ')' => {
                out.push((Tok::Close, pos));
                in_atom = false;
            }
            c if c.is_whitespace() => in_atom = false,
            _ => {
                if !in_atom {
                    out.push((Tok::Atom, pos));
                    in_atom = true;
                }
            }
        }
    }
    out
}

fn check(text: &str) -> Result<(), SyntaxError> {
    let tokens = lex(text);
    if tokens.is_empty() {
        return Err(SyntaxError::new(ValidityErrorKind::EmptyInput, 0, "empty input"));
    }

    let mut open = Vec::new();
    for &(tok, pos) in &tokens {
        match tok {
            Tok::Open => open.push(pos),
            Tok::Close if open.pop().is_none() => {
                return Err(SyntaxError::new(
                    ValidityErrorKind::UnbalancedDelimiter,
                    pos,
                    "unmatched `)`",
                ))
            }
            _ => {}
        }
    }
    if let Some(pos) = open.pop() {
        return Err(SyntaxError::new(
            ValidityErrorKind::UnbalancedDelimiter,
            pos,
            "unclosed `(`",
        ));
    }

    // Balanced from here on: every Open has a matching Close.
    let mut i = 0;
    datum(&tokens, &mut i)?;
    if let Some(&(_, pos)) = tokens.get(i) {
        return Err(SyntaxError::grammar(pos, "more than one top-level expression"));
    }
    Ok(())
}

fn datum(tokens: &[(Tok, usize)], i: &mut usize) -> Result<(), SyntaxError> {
    let (tok, pos) = tokens[*i];
    *i += 1;
    match tok {
        Tok::Atom => Ok(()),
        Tok::Close => Err(SyntaxError::grammar(pos, "unexpected `)`")),
        Tok::Open => {
            match tokens[*i] {
                (Tok::Close, _) => return Err(SyntaxError::grammar(pos, "empty list")),
                (Tok::Open, p) => {
                    return Err(SyntaxError::grammar(p, "list head must be a symbol"))
                }
                (Tok::Atom, _) => *i += 1,
            }
            while tokens[*i].0 != Tok::Close {
                datum(tokens, i)?;
            }
            *i += 1;
            Ok(())
        }
    }
}

pub fn check_sexpr_validity(text: &str) -> ValidityReport {
    report(FormalLanguage::Sexpr, check(text))
}
