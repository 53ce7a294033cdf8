//! Well-formedness checks for formal outputs and the error taxonomy built
//! on them: a wrong prediction is either invalid (does not parse) or valid
//! but wrong.

mod logic;
mod sexpr;
mod sql;
mod top;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge::FormalLanguage;

pub use logic::check_logic_validity;
pub use sexpr::check_sexpr_validity;
pub use sql::check_sql_validity;
pub use top::check_top_validity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValidityErrorKind {
    LexError,
    UnbalancedDelimiter,
    GrammarViolation,
    EmptyInput,
}

/// Outcome of a validity check. `position` is a character offset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub language: FormalLanguage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<ValidityErrorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ValidityReport {
    pub(crate) fn ok(language: FormalLanguage) -> Self {
        ValidityReport {
            valid: true,
            language,
            error_kind: None,
            position: None,
            message: None,
        }
    }

    pub(crate) fn fail(
        language: FormalLanguage,
        kind: ValidityErrorKind,
        position: usize,
        message: impl Into<String>,
    ) -> Self {
        ValidityReport {
            valid: false,
            language,
            error_kind: Some(kind),
            position: Some(position),
            message: Some(message.into()),
        }
    }
}

/// A located syntax error used internally by the checkers.
#[derive(Debug, Clone)]
pub(crate) struct SyntaxError {
    pub kind: ValidityErrorKind,
    pub position: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(kind: ValidityErrorKind, position: usize, message: impl Into<String>) -> Self {
        SyntaxError {
            kind,
            position,
            message: message.into(),
        }
    }

    pub fn grammar(position: usize, message: impl Into<String>) -> Self {
        Self::new(ValidityErrorKind::GrammarViolation, position, message)
    }

    pub fn into_report(self, language: FormalLanguage) -> ValidityReport {
        ValidityReport::fail(language, self.kind, self.position, self.message)
    }
}

pub(crate) fn report(
    language: FormalLanguage,
    result: std::result::Result<(), SyntaxError>,
) -> ValidityReport {
    match result {
        Ok(()) => ValidityReport::ok(language),
        Err(e) => e.into_report(language),
    }
}

pub fn check_validity(text: &str, language: FormalLanguage) -> ValidityReport {
    match language {
        FormalLanguage::Sql => check_sql_validity(text),
        FormalLanguage::Sexpr => check_sexpr_validity(text),
        FormalLanguage::Top => check_top_validity(text),
        FormalLanguage::Logic => check_logic_validity(text),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorClass {
    Correct,
    InvalidOutput,
    ValidButWrong,
}

/// Places a prediction in the error taxonomy. The gold must itself be valid.
pub fn classify_error<F>(
    prediction: &str,
    gold: &str,
    language: FormalLanguage,
    comparator: F,
) -> Result<ErrorClass>
where
    F: Fn(&str, &str) -> bool,
{
    let gold_report = check_validity(gold, language);
    if !gold_report.valid {
        return Err(Error::InvalidGold {
            language: language.to_string(),
            detail: gold_report.message.unwrap_or_default(),
        });
    }
    if comparator(prediction, gold) {
        return Ok(ErrorClass::Correct);
    }
    if check_validity(prediction, language).valid {
        Ok(ErrorClass::ValidButWrong)
    } else {
        Ok(ErrorClass::InvalidOutput)
    }
}

/// Byte offset to character offset.
pub(crate) fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte.min(text.len())].chars().count()
}
