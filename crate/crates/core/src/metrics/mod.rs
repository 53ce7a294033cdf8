//! Evaluation measures and corpus-level reports.

mod blec;
mod bleu;
mod report;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::codec::parse_answers;
use crate::error::{Error, Result};
use crate::knowledge::{DialogueState, OutputKind};

pub use blec::{blec, extract_keywords, Keyword};
pub use bleu::{corpus_bleu, tokenize_13a, BleuStats};
pub use report::{
    evaluate_corpus, Aggregates, EvalConfig, EvalReport, Prediction, RecordScore, TaxonomyCounts,
};

/// String normalization applied before comparison. Each flag is independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationConfig {
    #[serde(default = "yes")]
    pub trim: bool,
    #[serde(default = "yes")]
    pub collapse_internal_whitespace: bool,
    #[serde(default)]
    pub lowercase: bool,
}

fn yes() -> bool {
    true
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            trim: true,
            collapse_internal_whitespace: true,
            lowercase: false,
        }
    }
}

impl NormalizationConfig {
    /// Lowercasing is on for answer sets, booleans and dialogue states and
    /// off for formal and free-text outputs.
    pub fn for_kind(kind: OutputKind) -> Self {
        let lowercase = matches!(
            kind,
            OutputKind::AnswerSet | OutputKind::Boolean | OutputKind::DialogueState
        );
        NormalizationConfig {
            lowercase,
            ..Self::default()
        }
    }

    pub fn apply(&self, text: &str) -> String {
        let mut s = if self.trim { text.trim() } else { text }.to_string();
        if self.collapse_internal_whitespace {
            let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ");
            s = if self.trim {
                collapsed
            } else {
                // keep any leading/trailing run as a single space
                let lead = if s.starts_with(char::is_whitespace) { " " } else { "" };
                let trail = if s.ends_with(char::is_whitespace) && !collapsed.is_empty() {
                    " "
                } else {
                    ""
                };
                format!("{lead}{collapsed}{trail}")
            };
        }
        if self.lowercase {
            s = s.to_lowercase();
        }
        s
    }
}

pub fn exact_match(pred: &str, gold: &str, norm: &NormalizationConfig) -> bool {
    norm.apply(pred) == norm.apply(gold)
}

fn normalized_sorted(text: &str, norm: &NormalizationConfig) -> Vec<String> {
    let mut items: Vec<String> = parse_answers(&norm.apply(text))
        .iter()
        .map(|a| norm.apply(a))
        .collect();
    items.sort();
    items
}

/// Order-insensitive multiset equality of the parsed answer lists.
pub fn set_match(pred: &str, gold: &str, norm: &NormalizationConfig) -> bool {
    normalized_sorted(pred, norm) == normalized_sorted(gold, norm)
}

/// True iff both states cover the same slots and every value matches.
pub fn joint_accuracy(
    pred: &DialogueState,
    gold: &DialogueState,
    norm: &NormalizationConfig,
) -> Result<bool> {
    let pred_slots: HashSet<&str> = pred.pairs.iter().map(|(s, _)| s.as_str()).collect();
    let gold_slots: HashSet<&str> = gold.pairs.iter().map(|(s, _)| s.as_str()).collect();
    if pred_slots != gold_slots || pred.pairs.len() != gold.pairs.len() {
        let mut diff: Vec<&str> = pred_slots.symmetric_difference(&gold_slots).copied().collect();
        diff.sort_unstable();
        return Err(Error::OntologyMismatch(if diff.is_empty() {
            "repeated slots".to_string()
        } else {
            diff.join(", ")
        }));
    }
    Ok(gold.pairs.iter().all(|(slot, gv)| {
        pred.get(slot)
            .is_some_and(|pv| exact_match(pv, gv, norm))
    }))
}

/// True/false positive and false negative counts of one comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct F1Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl F1Counts {
    fn ratio(num: usize, den: usize, empty: f64) -> f64 {
        if den == 0 {
            empty
        } else {
            num as f64 / den as f64
        }
    }

    fn both_empty(&self) -> bool {
        self.tp + self.fp + self.fn_ == 0
    }

    pub fn precision(&self) -> f64 {
        Self::ratio(self.tp, self.tp + self.fp, if self.both_empty() { 1.0 } else { 0.0 })
    }

    pub fn recall(&self) -> f64 {
        Self::ratio(self.tp, self.tp + self.fn_, if self.both_empty() { 1.0 } else { 0.0 })
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Multiset overlap between predicted and gold items after normalization.
pub fn set_f1<S: AsRef<str>>(pred: &[S], gold: &[S], norm: &NormalizationConfig) -> F1Counts {
    let mut remaining: Vec<String> = gold.iter().map(|g| norm.apply(g.as_ref())).collect();
    let mut tp = 0;
    for p in pred {
        let p = norm.apply(p.as_ref());
        if let Some(i) = remaining.iter().position(|g| *g == p) {
            remaining.swap_remove(i);
            tp += 1;
        }
    }
    F1Counts {
        tp,
        fp: pred.len() - tp,
        fn_: remaining.len(),
    }
}

/// Pools counts across records; the micro F1 is computed from the pooled
/// counts, not by averaging per-record scores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MicroF1(F1Counts);

impl MicroF1 {
    pub fn add(&mut self, c: F1Counts) {
        self.0.tp += c.tp;
        self.0.fp += c.fp;
        self.0.fn_ += c.fn_;
    }

    pub fn counts(&self) -> F1Counts {
        self.0
    }
}
