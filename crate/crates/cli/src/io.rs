//! Paths, JSONL parsing and sidecar files. `-` names stdin or stdout.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::error::usage;

pub fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    if is_stdio(path) {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| usage(format!("cannot read stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if is_stdio(path) {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes)?;
        out.flush()?;
        return Ok(());
    }
    std::fs::write(path, bytes).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

/// `<path><suffix>` next to a file output; `None` for stdout.
pub fn sidecar(path: &Path, suffix: &str) -> Option<PathBuf> {
    if is_stdio(path) {
        return None;
    }
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    Some(PathBuf::from(s))
}

/// One non-blank input line: its 1-based number and parsed JSON.
pub struct Line {
    pub number: usize,
    pub value: Result<Value, String>,
}

impl Line {
    pub fn id(&self) -> Option<String> {
        self.value
            .as_ref()
            .ok()
            .and_then(|v| v.get("id"))
            .and_then(Value::as_str)
            .map(str::to_string)
    }
}

pub fn parse_jsonl(text: &str) -> Vec<Line> {
    let raw: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    raw.par_iter()
        .map(|&(number, l)| Line {
            number,
            value: serde_json::from_str(l).map_err(|e| format!("malformed JSON: {e}")),
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> anyhow::Result<Vec<u8>> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// A per-record failure, one line of `errors.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub error: String,
}

impl ErrorEntry {
    pub fn at(line: &Line, error: impl ToString) -> Self {
        ErrorEntry {
            source: None,
            line: Some(line.number),
            id: line.id(),
            error: error.to_string(),
        }
    }

    pub fn global(error: impl ToString) -> Self {
        ErrorEntry {
            source: None,
            line: None,
            id: None,
            error: error.to_string(),
        }
    }

    pub fn with_source(mut self, source: &Path) -> Self {
        self.source = Some(source.display().to_string());
        self
    }
}

/// Writes collected errors to the explicit path, else next to the primary
/// output, else to stderr. Returns the number of errors.
pub fn report_errors(
    errors: &[ErrorEntry],
    explicit: Option<&Path>,
    output: &Path,
) -> anyhow::Result<usize> {
    let bytes = to_jsonl(errors)?;
    match explicit.map(Path::to_path_buf).or_else(|| sidecar(output, ".errors.jsonl")) {
        Some(path) if !is_stdio(&path) => write_bytes(&path, &bytes)?,
        _ => std::io::stderr().write_all(&bytes)?,
    }
    Ok(errors.len())
}
