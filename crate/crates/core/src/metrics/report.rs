//! Corpus evaluation: per-record scores, aggregates and error taxonomy.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{
    blec, exact_match, joint_accuracy, set_f1, set_match, BleuStats, F1Counts, MicroF1,
    NormalizationConfig,
};
use crate::codec::{parse_answers, parse_boolean, parse_dialogue_state};
use crate::error::{Error, Result};
use crate::knowledge::{request_language, FormalLanguage, OutputKind, Record, StructuredKnowledge};
use crate::validate::{classify_error, ErrorClass};

/// A model output keyed by record id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub prediction: String,
}

impl Prediction {
    pub fn new(id: impl Into<String>, prediction: impl Into<String>) -> Self {
        Prediction {
            id: id.into(),
            prediction: prediction.into(),
        }
    }
}

/// Normalization overrides. Tasks without an entry use the default of their
/// output kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(default)]
    pub normalization: BTreeMap<String, NormalizationConfig>,
}

impl EvalConfig {
    pub fn normalization_for(&self, record: &Record) -> NormalizationConfig {
        self.normalization
            .get(&record.task)
            .copied()
            .unwrap_or_else(|| NormalizationConfig::for_kind(record.output_kind))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub id: String,
    pub task: String,
    pub output_kind: OutputKind,
    pub scores: BTreeMap<String, f64>,
    pub error_class: ErrorClass,
}

/// Counts of the three taxonomy classes; they always sum to the corpus size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyCounts {
    pub correct: usize,
    pub invalid_output: usize,
    pub valid_but_wrong: usize,
}

impl TaxonomyCounts {
    fn add(&mut self, class: ErrorClass) {
        match class {
            ErrorClass::Correct => self.correct += 1,
            ErrorClass::InvalidOutput => self.invalid_output += 1,
            ErrorClass::ValidButWrong => self.valid_but_wrong += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.correct + self.invalid_output + self.valid_but_wrong
    }
}

/// Corpus-level figures. A figure is absent when no record contributes to it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_bleu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub micro_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blec: Option<f64>,
    pub taxonomy: TaxonomyCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<RecordScore>,
    pub aggregates: Aggregates,
    pub by_task: BTreeMap<String, Aggregates>,
}

struct Scored {
    score: RecordScore,
    bleu: Option<BleuStats>,
    f1: Option<F1Counts>,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn score_record(record: &Record, prediction: &str, cfg: &EvalConfig) -> Result<Scored> {
    let norm = cfg.normalization_for(record);
    let gold = record.target.as_str();
    let mut scores = BTreeMap::new();
    let mut bleu = None;
    let mut f1 = None;
    let class = match record.output_kind {
        OutputKind::Formal(lang) => {
            let em = exact_match(prediction, gold, &norm);
            scores.insert("exact_match".into(), flag(em));
            scores.insert("accuracy".into(), flag(em));
            classify_error(prediction, gold, lang, |p, g| exact_match(p, g, &norm))?
        }
        OutputKind::AnswerSet => {
            let ok = set_match(prediction, gold, &norm);
            let pred_items = parse_answers(&norm.apply(prediction));
            let gold_items = parse_answers(&norm.apply(gold));
            let counts = set_f1(&pred_items, &gold_items, &norm);
            scores.insert("set_match".into(), flag(ok));
            scores.insert("accuracy".into(), flag(ok));
            scores.insert("precision".into(), counts.precision());
            scores.insert("recall".into(), counts.recall());
            scores.insert("f1".into(), counts.f1());
            f1 = Some(counts);
            if ok {
                ErrorClass::Correct
            } else if pred_items.iter().all(|a| a.trim().is_empty()) {
                ErrorClass::InvalidOutput
            } else {
                ErrorClass::ValidButWrong
            }
        }
        OutputKind::Boolean => {
            let ok = exact_match(prediction, gold, &norm);
            scores.insert("accuracy".into(), flag(ok));
            if ok {
                ErrorClass::Correct
            } else if parse_boolean(&norm.apply(prediction)).is_none() {
                ErrorClass::InvalidOutput
            } else {
                ErrorClass::ValidButWrong
            }
        }
        OutputKind::DialogueState => {
            let Some(StructuredKnowledge::Ontology(ontology)) = &record.knowledge else {
                return Err(Error::InvalidRecord(format!(
                    "record `{}`: dialogue-state evaluation needs ontology knowledge",
                    record.id
                )));
            };
            let gold_state = parse_dialogue_state(ontology, gold);
            if !gold_state.residue.is_empty() {
                return Err(Error::InvalidRecord(format!(
                    "record `{}`: gold state has unparsable segments: {}",
                    record.id,
                    gold_state.residue.join(" | ")
                )));
            }
            let pred_state = parse_dialogue_state(ontology, prediction.trim());
            let ok = joint_accuracy(&pred_state.state, &gold_state.state, &norm)?;
            scores.insert("joint_accuracy".into(), flag(ok));
            scores.insert("accuracy".into(), flag(ok));
            if ok {
                ErrorClass::Correct
            } else if !pred_state.residue.is_empty() {
                ErrorClass::InvalidOutput
            } else {
                ErrorClass::ValidButWrong
            }
        }
        OutputKind::FreeText => {
            let em = exact_match(prediction, gold, &norm);
            scores.insert("exact_match".into(), flag(em));
            let mut stats = BleuStats::default();
            stats.add_sentence(prediction, gold);
            bleu = Some(stats);
            if let Some((text, language)) = blec_source(record) {
                scores.insert("blec".into(), flag(blec(text, language, prediction)?));
            }
            if em {
                ErrorClass::Correct
            } else if prediction.trim().is_empty() {
                ErrorClass::InvalidOutput
            } else {
                ErrorClass::ValidButWrong
            }
        }
    };
    Ok(Scored {
        score: RecordScore {
            id: record.id.clone(),
            task: record.task.clone(),
            output_kind: record.output_kind,
            scores,
            error_class: class,
        },
        bleu,
        f1,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn aggregate<'a>(items: impl Iterator<Item = &'a Scored> + Clone) -> Aggregates {
    let metric = |key: &'static str| {
        mean(items.clone().filter_map(move |s| s.score.scores.get(key).copied()))
    };
    let mut bleu: Option<BleuStats> = None;
    let mut micro: Option<MicroF1> = None;
    let mut taxonomy = TaxonomyCounts::default();
    let mut count = 0;
    for s in items.clone() {
        count += 1;
        taxonomy.add(s.score.error_class);
        if let Some(b) = &s.bleu {
            let acc = bleu.get_or_insert_with(BleuStats::default);
            for n in 0..4 {
                acc.correct[n] += b.correct[n];
                acc.total[n] += b.total[n];
            }
            acc.sys_len += b.sys_len;
            acc.ref_len += b.ref_len;
        }
        if let Some(c) = s.f1 {
            micro.get_or_insert_with(MicroF1::default).add(c);
        }
    }
    Aggregates {
        count,
        mean_accuracy: metric("accuracy"),
        corpus_bleu: bleu.map(|b| b.score()),
        micro_f1: micro.map(|m| m.counts().f1()),
        joint_accuracy: metric("joint_accuracy"),
        blec: metric("blec"),
        taxonomy,
    }
}

/// Scores every record against its prediction. Every record needs exactly
/// one prediction and every prediction must name a record.
pub fn evaluate_corpus(
    records: &[Record],
    predictions: &[Prediction],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut by_id: HashMap<&str, &str> = HashMap::new();
    for p in predictions {
        if by_id.insert(&p.id, &p.prediction).is_some() {
            return Err(Error::DuplicatePrediction(p.id.clone()));
        }
    }
    let mut seen = HashMap::new();
    for r in records {
        if seen.insert(r.id.as_str(), ()).is_some() {
            return Err(Error::InvalidRecord(format!("duplicate record id `{}`", r.id)));
        }
    }
    if let Some(p) = predictions.iter().find(|p| !seen.contains_key(p.id.as_str())) {
        return Err(Error::UnknownPrediction(p.id.clone()));
    }

    let scored = records
        .iter()
        .map(|r| {
            let pred = by_id
                .get(r.id.as_str())
                .ok_or_else(|| Error::MissingPrediction(r.id.clone()))?;
            score_record(r, pred, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let aggregates = aggregate(scored.iter());
    let mut tasks: Vec<&str> = scored.iter().map(|s| s.score.task.as_str()).collect();
    tasks.sort_unstable();
    tasks.dedup();
    let by_task = tasks
        .into_iter()
        .map(|t| {
            (
                t.to_string(),
                aggregate(scored.iter().filter(move |s| s.score.task == t)),
            )
        })
        .collect();
    Ok(EvalReport {
        records: scored.into_iter().map(|s| s.score).collect(),
        aggregates,
        by_task,
    })
}

/// The formal expression a free-text output has to describe: formal
/// knowledge if present, else the request of a formal-to-text task.
fn blec_source(record: &Record) -> Option<(&str, FormalLanguage)> {
    if let Some(StructuredKnowledge::Formal(expr)) = &record.knowledge {
        return Some((&expr.text, expr.language));
    }
    let language = request_language(&record.task)?;
    record.request.as_deref().map(|r| (r, language))
}
