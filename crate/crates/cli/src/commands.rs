//! Subcommand bodies. Each returns the number of failed records; usage
//! problems surface as errors.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use skgkit::corpus::{
    histogram_from_lengths, record_lengths, render_histogram_table, truncate_knowledge,
    ExternalCounts, LengthHistogram, TokenBudget,
};
use skgkit::fewshot::{
    build_prompt, select_random, select_similar, EmbeddingProvider, ExternalEmbeddings,
    PromptConfig,
};
use skgkit::format::{format_spec, FormatSpec, COMPONENT_JOIN};
use skgkit::knowledge::{request_language, validate_record, FormalLanguage, OutputKind, Record, StructuredKnowledge};
use skgkit::linearize::{assemble_input, record_input, LinearizationConfig};
use skgkit::metrics::{evaluate_corpus, EvalReport, Prediction};
use skgkit::mixture::{sample_schedule, temperature_weights, MixtureSpec};
use skgkit::validate::{check_validity, ValidityReport};
use skgkit::Error;

use crate::config::{Config, SelectionMode};
use crate::error::usage;
use crate::io::{parse_jsonl, read_text, report_errors, to_json, to_jsonl, write_bytes, ErrorEntry, Line};
use crate::manifest::RunManifest;

/// Destination of the primary output plus optional sidecar overrides.
pub struct Outputs<'a> {
    pub output: &'a Path,
    pub errors: Option<&'a Path>,
    pub manifest: Option<&'a Path>,
}

fn budget(cfg: &Config) -> anyhow::Result<TokenBudget> {
    TokenBudget::new(cfg.budget.max_tokens, cfg.budget.counter).map_err(|e| usage(e.to_string()))
}

fn linearization(cfg: &Config) -> LinearizationConfig {
    LinearizationConfig {
        ordering: cfg.linearization.ordering,
        reverse_knowledge: cfg.linearization.reverse_knowledge,
    }
}

fn parse_record(line: &Line) -> Result<Record, String> {
    let value = line.value.clone()?;
    let record: Record = serde_json::from_value(value).map_err(|e| e.to_string())?;
    let violations = validate_record(&record);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(format!("invalid record: {}", list.join("; ")));
    }
    Ok(record)
}

/// Parses every line as a record; failures become error entries.
fn parse_records(lines: &[Line]) -> (Vec<Record>, Vec<ErrorEntry>) {
    let parsed: Vec<Result<Record, ErrorEntry>> = lines
        .par_iter()
        .map(|l| parse_record(l).map_err(|e| ErrorEntry::at(l, e)))
        .collect();
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for p in parsed {
        match p {
            Ok(r) => records.push(r),
            Err(e) => errors.push(e),
        }
    }
    (records, errors)
}

/// Splits per-line results into outputs and errors, preserving input order.
fn split<T>(results: Vec<Result<T, ErrorEntry>>) -> (Vec<T>, Vec<ErrorEntry>) {
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => errors.push(e),
        }
    }
    (ok, errors)
}

fn finish_jsonl<T: Serialize>(
    command: &str,
    cfg: &Config,
    inputs: &[&Path],
    out: &Outputs,
    items: &[T],
    errors: &[ErrorEntry],
) -> anyhow::Result<usize> {
    write_bytes(out.output, &to_jsonl(items)?)?;
    RunManifest::new(command, cfg, inputs, &[out.output]).write_beside(out.output, out.manifest)?;
    report_errors(errors, out.errors, out.output)
}

#[derive(Debug, Serialize)]
struct Document<'a, T: Serialize> {
    manifest: &'a RunManifest,
    #[serde(flatten)]
    body: T,
}

fn finish_document<T: Serialize>(
    command: &str,
    cfg: &Config,
    inputs: &[&Path],
    out: &Outputs,
    body: T,
    errors: &[ErrorEntry],
) -> anyhow::Result<usize> {
    let manifest = RunManifest::new(command, cfg, inputs, &[out.output]);
    write_bytes(out.output, &to_json(&Document { manifest: &manifest, body })?)?;
    report_errors(errors, out.errors, out.output)
}

// ------------------------------------------------------------------ linearize

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Pair {
    pub id: String,
    pub input_text: String,
    pub target_text: String,
}

/// Tokens taken by request and context, plus the joiner before knowledge.
fn prefix_tokens(record: &Record, lin: &LinearizationConfig, budget: &TokenBudget) -> usize {
    match assemble_input(record.request.as_deref(), "", &record.context, lin) {
        Ok(text) => budget.count(&text) + budget.count(COMPONENT_JOIN),
        Err(_) => 0,
    }
}

pub fn linearize_record(
    mut record: Record,
    lin: &LinearizationConfig,
    truncate: Option<&TokenBudget>,
) -> skgkit::Result<Pair> {
    if let (Some(budget), Some(k)) = (truncate, &record.knowledge) {
        let prefix = prefix_tokens(&record, lin, budget);
        record.knowledge = Some(truncate_knowledge(k, prefix, budget)?);
    }
    let input_text = record_input(&record, lin)?;
    if let Some(budget) = truncate {
        let needed = budget.count(&input_text);
        if needed > budget.max_tokens {
            return Err(Error::BudgetExceeded {
                needed,
                available: budget.max_tokens,
            });
        }
    }
    Ok(Pair {
        id: record.id,
        input_text,
        target_text: record.target,
    })
}

pub fn linearize(cfg: &Config, input: &Path, out: &Outputs) -> anyhow::Result<usize> {
    let lin = linearization(cfg);
    let budget = budget(cfg)?;
    let truncate = cfg.linearization.truncate.then_some(&budget);
    let lines = parse_jsonl(&read_text(input)?);
    let results: Vec<Result<Pair, ErrorEntry>> = lines
        .par_iter()
        .map(|l| {
            let record = parse_record(l).map_err(|e| ErrorEntry::at(l, e))?;
            linearize_record(record, &lin, truncate).map_err(|e| ErrorEntry::at(l, e))
        })
        .collect();
    let (pairs, errors) = split(results);
    finish_jsonl("linearize", cfg, &[input], out, &pairs, &errors)
}

// ----------------------------------------------------------------------- eval

#[derive(Serialize)]
struct EvalBody<'a> {
    report: &'a EvalReport,
}

fn write_csv(path: &Path, report: &EvalReport) -> anyhow::Result<()> {
    let mut metrics: Vec<&str> = report
        .records
        .iter()
        .flat_map(|r| r.scores.keys().map(String::as_str))
        .collect();
    metrics.sort_unstable();
    metrics.dedup();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id", "task", "output_kind", "error_class"];
    header.extend(&metrics);
    w.write_record(&header)?;
    for r in &report.records {
        let class = serde_json::to_value(r.error_class)?;
        let mut row = vec![
            r.id.clone(),
            r.task.clone(),
            r.output_kind.to_string(),
            class.as_str().unwrap_or_default().to_string(),
        ];
        row.extend(
            metrics
                .iter()
                .map(|m| r.scores.get(*m).map(f64::to_string).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    write_bytes(path, &w.into_inner()?)
}

pub fn eval(
    cfg: &Config,
    records_path: &Path,
    predictions_path: &Path,
    csv_path: Option<&Path>,
    out: &Outputs,
) -> anyhow::Result<usize> {
    if crate::io::is_stdio(records_path) && crate::io::is_stdio(predictions_path) {
        return Err(usage("records and predictions cannot both be read from stdin"));
    }
    let (records, mut errors) = parse_records(&parse_jsonl(&read_text(records_path)?));
    for e in &mut errors {
        *e = e.clone().with_source(records_path);
    }
    let prediction_lines = parse_jsonl(&read_text(predictions_path)?);
    let parsed: Vec<Result<Prediction, ErrorEntry>> = prediction_lines
        .iter()
        .map(|l| {
            l.value
                .clone()
                .and_then(|v| serde_json::from_value(v).map_err(|e| e.to_string()))
                .map_err(|e| ErrorEntry::at(l, e).with_source(predictions_path))
        })
        .collect();
    let (predictions, prediction_errors) = split(parsed);
    errors.extend(prediction_errors);
    if !errors.is_empty() {
        return report_errors(&errors, out.errors, out.output);
    }
    let report = match evaluate_corpus(&records, &predictions, &cfg.eval) {
        Ok(r) => r,
        Err(e) => return report_errors(&[ErrorEntry::global(e)], out.errors, out.output),
    };
    if let Some(p) = csv_path {
        write_csv(p, &report)?;
    }
    finish_document(
        "eval",
        cfg,
        &[records_path, predictions_path],
        out,
        EvalBody { report: &report },
        &[],
    )
}

// ------------------------------------------------------------------- validate

#[derive(Debug, Serialize)]
pub struct ValidityLine {
    pub id: String,
    /// Which part of a record was checked: `target`, `knowledge` or
    /// `request`. Absent for bare `{id, language, text}` items.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<&'static str>,
    #[serde(flatten)]
    pub report: ValidityReport,
}

#[derive(serde::Deserialize)]
struct FormalItem {
    id: String,
    language: FormalLanguage,
    text: String,
}

/// Every formal string carried by a record; records without any are
/// skipped by `validate`.
pub fn formal_parts(record: &Record) -> Vec<(&'static str, &str, FormalLanguage)> {
    let mut out = Vec::new();
    if let OutputKind::Formal(lang) = record.output_kind {
        out.push(("target", record.target.as_str(), lang));
    }
    if let Some(StructuredKnowledge::Formal(f)) = &record.knowledge {
        out.push(("knowledge", f.text.as_str(), f.language));
    }
    if let (Some(lang), Some(req)) = (request_language(&record.task), record.request.as_deref()) {
        out.push(("request", req, lang));
    }
    out
}

fn validate_line(line: &Line) -> Result<Vec<ValidityLine>, String> {
    let value = line.value.clone()?;
    let is_item = matches!(&value, Value::Object(m) if m.contains_key("language") && m.contains_key("text") && !m.contains_key("task"));
    if is_item {
        let item: FormalItem = serde_json::from_value(value).map_err(|e| e.to_string())?;
        return Ok(vec![ValidityLine {
            report: check_validity(&item.text, item.language),
            id: item.id,
            field: None,
        }]);
    }
    let record = parse_record(line)?;
    Ok(formal_parts(&record)
        .into_iter()
        .map(|(field, text, lang)| ValidityLine {
            id: record.id.clone(),
            field: Some(field),
            report: check_validity(text, lang),
        })
        .collect())
}

pub fn validate(cfg: &Config, input: &Path, out: &Outputs) -> anyhow::Result<usize> {
    let lines = parse_jsonl(&read_text(input)?);
    let results: Vec<Result<Vec<ValidityLine>, ErrorEntry>> = lines
        .par_iter()
        .map(|l| validate_line(l).map_err(|e| ErrorEntry::at(l, e)))
        .collect();
    let (reports, errors) = split(results);
    let reports: Vec<ValidityLine> = reports.into_iter().flatten().collect();
    finish_jsonl("validate", cfg, &[input], out, &reports, &errors)
}

// ---------------------------------------------------------------------- stats

#[derive(Serialize)]
struct StatsBody {
    records: usize,
    overall: LengthHistogram,
    by_task: BTreeMap<String, LengthHistogram>,
}

pub fn stats(
    cfg: &Config,
    input: &Path,
    counts: Option<&Path>,
    table: Option<&Path>,
    out: &Outputs,
) -> anyhow::Result<usize> {
    let lin = linearization(cfg);
    let external = match counts {
        Some(p) => Some(
            ExternalCounts::from_jsonl(&read_text(p)?)
                .map_err(|e| usage(format!("{}: {e}", p.display())))?,
        ),
        None => None,
    };
    let (records, errors) = parse_records(&parse_jsonl(&read_text(input)?));
    let lengths: Vec<[usize; 4]> = records
        .par_iter()
        .map(|r| record_lengths(r, &lin, cfg.budget.counter, external.as_ref()))
        .collect();
    let mut grouped: BTreeMap<String, Vec<[usize; 4]>> = BTreeMap::new();
    for (r, l) in records.iter().zip(&lengths) {
        grouped.entry(r.task.clone()).or_default().push(*l);
    }
    let by_task: BTreeMap<String, LengthHistogram> = grouped
        .iter()
        .map(|(t, ls)| (t.clone(), histogram_from_lengths(ls)))
        .collect();
    let overall = histogram_from_lengths(&lengths);
    if let Some(p) = table {
        let mut rows: Vec<(String, LengthHistogram)> =
            by_task.iter().map(|(t, h)| (t.clone(), h.clone())).collect();
        rows.push(("all".to_string(), overall.clone()));
        write_bytes(p, render_histogram_table(&rows).as_bytes())?;
    }
    let mut inputs: Vec<&Path> = vec![input];
    inputs.extend(counts);
    finish_document(
        "stats",
        cfg,
        &inputs,
        out,
        StatsBody {
            records: records.len(),
            overall,
            by_task,
        },
        &errors,
    )
}

// -------------------------------------------------------------------- fewshot

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptLine {
    pub id: String,
    pub prompt: String,
}

fn prompt_for(
    train: &[Record],
    query: &Record,
    cfg: &Config,
    provider: &EmbeddingProvider,
    budget: &TokenBudget,
    prompt_cfg: &PromptConfig,
) -> skgkit::Result<PromptLine> {
    let pool: Cow<[Record]> = if train.iter().any(|t| t.id == query.id) {
        Cow::Owned(train.iter().filter(|t| t.id != query.id).cloned().collect())
    } else {
        Cow::Borrowed(train)
    };
    let k = cfg.fewshot.k.min(pool.len());
    let selected = match cfg.fewshot.mode {
        SelectionMode::Random => select_random(&pool, k, cfg.fewshot.seed)?,
        SelectionMode::Select => select_similar(&pool, query, k, provider)?,
    };
    let prompt = build_prompt(&selected, query, budget, prompt_cfg)?;
    Ok(PromptLine {
        id: query.id.clone(),
        prompt: prompt.text,
    })
}

pub fn fewshot(
    cfg: &Config,
    train_path: &Path,
    input: &Path,
    embeddings: Option<&Path>,
    out: &Outputs,
) -> anyhow::Result<usize> {
    if cfg.fewshot.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let budget = budget(cfg)?;
    let provider = match embeddings {
        Some(p) => {
            let e = ExternalEmbeddings::from_jsonl(&read_text(p)?)
                .map_err(|e| usage(format!("{}: {e}", p.display())))?;
            EmbeddingProvider::External(e)
        }
        None => EmbeddingProvider::Tfidf,
    };
    let prompt_cfg = PromptConfig {
        linearization: linearization(cfg),
        most_similar_last: cfg.fewshot.most_similar_last,
        template: cfg.fewshot.template.clone(),
    };
    let (train, train_errors) = parse_records(&parse_jsonl(&read_text(train_path)?));
    if !train_errors.is_empty() {
        let errors: Vec<ErrorEntry> = train_errors
            .into_iter()
            .map(|e| e.with_source(train_path))
            .collect();
        return report_errors(&errors, out.errors, out.output);
    }
    let lines = parse_jsonl(&read_text(input)?);
    let results: Vec<Result<PromptLine, ErrorEntry>> = lines
        .par_iter()
        .map(|l| {
            let query = parse_record(l).map_err(|e| ErrorEntry::at(l, e))?;
            prompt_for(&train, &query, cfg, &provider, &budget, &prompt_cfg)
                .map_err(|e| ErrorEntry::at(l, e))
        })
        .collect();
    let (prompts, errors) = split(results);
    let mut inputs: Vec<&Path> = vec![train_path, input];
    inputs.extend(embeddings);
    finish_jsonl("fewshot", cfg, &inputs, out, &prompts, &errors)
}

// ------------------------------------------------------------------------ mix

#[derive(Debug, Serialize)]
pub struct MixBody {
    pub sizes: Vec<u64>,
    pub temperature: f64,
    pub weights: Vec<f64>,
    pub steps: usize,
    pub seed: u64,
    pub counts: Vec<usize>,
    pub schedule: Vec<usize>,
}

pub fn mix_body(sizes: Vec<u64>, cfg: &Config) -> anyhow::Result<MixBody> {
    let spec = MixtureSpec::new(sizes, cfg.mix.temperature).map_err(|e| usage(e.to_string()))?;
    let weights = temperature_weights(&spec)?;
    let schedule = sample_schedule(&weights, cfg.mix.steps, cfg.mix.seed)?;
    let mut counts = vec![0; weights.len()];
    for &t in &schedule {
        counts[t] += 1;
    }
    Ok(MixBody {
        sizes: spec.sizes,
        temperature: spec.temperature,
        weights,
        steps: cfg.mix.steps,
        seed: cfg.mix.seed,
        counts,
        schedule,
    })
}

pub fn mix(cfg: &Config, sizes: Vec<u64>, out: &Outputs) -> anyhow::Result<usize> {
    let body = mix_body(sizes, cfg)?;
    finish_document("mix", cfg, &[], out, body, &[])
}

// ---------------------------------------------------------------- format-spec

#[derive(Serialize)]
struct FormatBody {
    toolkit_version: &'static str,
    #[serde(flatten)]
    spec: FormatSpec,
}

pub fn format_spec_cmd(cfg: &Config, out: &Outputs) -> anyhow::Result<usize> {
    let body = FormatBody {
        toolkit_version: crate::manifest::TOOLKIT_VERSION,
        spec: format_spec(),
    };
    let manifest = RunManifest::new("format-spec", cfg, &[], &[out.output]);
    write_bytes(out.output, &to_json(&Document { manifest: &manifest, body })?)?;
    Ok(0)
}
