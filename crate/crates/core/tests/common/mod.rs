#![allow(dead_code)]

use std::path::PathBuf;

use serde::Deserialize;
use skgkit::format::CONTEXT_JOIN;
use skgkit::knowledge::Record;
use skgkit::linearize::linearize_knowledge;

pub mod criteria;
pub mod strategies;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Structured {
    Exact { exact: String },
    Fragments { prefix: String, suffix: String },
}

#[derive(Debug, Deserialize)]
pub struct Expected {
    pub id: String,
    pub task: String,
    pub structured_input: Option<Structured>,
    pub request_input: Option<String>,
    pub context: Option<String>,
    pub output: String,
}

pub fn golden_records() -> Vec<Record> {
    std::fs::read_to_string(fixture("golden_records.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn golden_expected() -> Vec<Expected> {
    std::fs::read_to_string(fixture("golden_expected.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Every mismatch between a record and its expected rendering.
pub fn golden_mismatches(record: &Record, expected: &Expected) -> Vec<String> {
    let mut out = Vec::new();
    if record.id != expected.id || record.task != expected.task {
        out.push(format!("id/task {} {} vs {} {}", record.id, record.task, expected.id, expected.task));
    }
    let text = record.knowledge.as_ref().map(linearize_knowledge);
    match (&expected.structured_input, &text) {
        (None, None) => {}
        (Some(Structured::Exact { exact }), Some(t)) if exact == t => {}
        (Some(Structured::Fragments { prefix, suffix }), Some(t))
            if t.starts_with(prefix.as_str())
                && t.ends_with(suffix.as_str())
                && t.len() > prefix.len() + suffix.len() => {}
        (e, t) => out.push(format!("structured input: expected {e:?}, got {t:?}")),
    }
    if record.request != expected.request_input {
        out.push(format!(
            "request: expected {:?}, got {:?}",
            expected.request_input, record.request
        ));
    }
    let context = (!record.context.is_empty()).then(|| record.context.join(CONTEXT_JOIN));
    if context != expected.context {
        out.push(format!("context: expected {:?}, got {context:?}", expected.context));
    }
    if record.target != expected.output {
        out.push(format!("output: expected {:?}, got {:?}", expected.output, record.target));
    }
    out
}
