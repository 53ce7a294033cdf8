//! Token budgeting, knowledge truncation and length statistics.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge::{Record, StructuredKnowledge, TableLayout};
use crate::linearize::{assemble_input, linearize_knowledge, record_knowledge_text, LinearizationConfig};

/// How text is turned into a token count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountStrategy {
    /// Maximal runs of word characters, plus every other non-space character.
    #[default]
    WordPunct,
    /// Whitespace-separated chunks.
    Whitespace,
}

impl FromStr for CountStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "word_punct" => Ok(CountStrategy::WordPunct),
            "whitespace" => Ok(CountStrategy::Whitespace),
            other => Err(format!("unknown count strategy `{other}` (expected word_punct or whitespace)")),
        }
    }
}

pub fn count_tokens(text: &str, strategy: CountStrategy) -> usize {
    match strategy {
        CountStrategy::Whitespace => text.split_whitespace().count(),
        CountStrategy::WordPunct => {
            let mut count = 0;
            let mut in_word = false;
            for c in text.chars() {
                if c.is_alphanumeric() || c == '_' {
                    if !in_word {
                        count += 1;
                        in_word = true;
                    }
                } else {
                    in_word = false;
                    if !c.is_whitespace() {
                        count += 1;
                    }
                }
            }
            count
        }
    }
}

pub const DEFAULT_MAX_TOKENS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub max_tokens: usize,
    #[serde(default)]
    pub counter: CountStrategy,
}

impl Default for TokenBudget {
    fn default() -> Self {
        TokenBudget {
            max_tokens: DEFAULT_MAX_TOKENS,
            counter: CountStrategy::default(),
        }
    }
}

impl TokenBudget {
    pub fn new(max_tokens: usize, counter: CountStrategy) -> Result<Self> {
        if max_tokens == 0 {
            return Err(Error::InvalidBudget("max_tokens must be at least 1".into()));
        }
        Ok(TokenBudget { max_tokens, counter })
    }

    pub fn count(&self, text: &str) -> usize {
        count_tokens(text, self.counter)
    }
}

/// Number of removable units: table rows followed by passages, highlighted
/// cells, triples or schema tables. Ontologies and formal expressions have none.
pub fn truncation_units(k: &StructuredKnowledge) -> usize {
    match k {
        StructuredKnowledge::Table(t) => match t.layout {
            TableLayout::Rows => t.rows.len() + t.passages.len(),
            TableLayout::HeaderOnly => t.passages.len(),
        },
        StructuredKnowledge::HighlightedTable(h) => h.highlighted.len(),
        StructuredKnowledge::Triples(ts) => ts.triples.len(),
        StructuredKnowledge::Schema(s) => s.tables.len(),
        StructuredKnowledge::Ontology(_) | StructuredKnowledge::Formal(_) => 0,
    }
}

/// Fewest units truncation may leave: one row, cell, triple or table if any existed.
pub(crate) fn minimum_units(k: &StructuredKnowledge) -> usize {
    match k {
        StructuredKnowledge::Table(t) => match t.layout {
            TableLayout::Rows => t.rows.len().min(1),
            TableLayout::HeaderOnly => 0,
        },
        StructuredKnowledge::Ontology(_) | StructuredKnowledge::Formal(_) => 0,
        other => truncation_units(other).min(1),
    }
}

/// Keeps the first `n` units in linearization order.
pub fn retain_units(k: &StructuredKnowledge, n: usize) -> StructuredKnowledge {
    let mut out = k.clone();
    match &mut out {
        StructuredKnowledge::Table(t) => match t.layout {
            TableLayout::Rows => {
                let rows = t.rows.len();
                t.rows.truncate(n);
                t.passages.truncate(n.saturating_sub(rows));
            }
            TableLayout::HeaderOnly => t.passages.truncate(n),
        },
        StructuredKnowledge::HighlightedTable(h) => h.highlighted.truncate(n),
        StructuredKnowledge::Triples(ts) => ts.triples.truncate(n),
        StructuredKnowledge::Schema(s) => {
            s.tables.truncate(n);
            let names: Vec<String> = s.tables.iter().map(|t| t.name.clone()).collect();
            s.primary_keys.retain(|pk| names.contains(&pk.table));
            s.foreign_keys
                .retain(|fk| names.contains(&fk.from.table) && names.contains(&fk.to.table));
        }
        StructuredKnowledge::Ontology(_) | StructuredKnowledge::Formal(_) => {}
    }
    out
}

/// Drops trailing units until `prefix_tokens` plus the linearized knowledge
/// fits the budget. Returns the input unchanged when it already fits.
pub fn truncate_knowledge(
    k: &StructuredKnowledge,
    prefix_tokens: usize,
    budget: &TokenBudget,
) -> Result<StructuredKnowledge> {
    let fits = |n: usize| {
        let needed = prefix_tokens + budget.count(&linearize_knowledge(&retain_units(k, n)));
        (needed <= budget.max_tokens, needed)
    };
    let total = truncation_units(k);
    if fits(total).0 {
        return Ok(k.clone());
    }
    let lo = minimum_units(k);
    let (core_fits, needed) = fits(lo);
    if !core_fits {
        return Err(Error::BudgetExceeded {
            needed,
            available: budget.max_tokens,
        });
    }
    // Token counts grow with the number of retained units, so the largest
    // fitting prefix can be found by bisection.
    let (mut lo, mut hi) = (lo, total);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid).0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(retain_units(k, lo))
}

/// Per-record token counts supplied from outside, e.g. by a subword tokenizer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamCounts {
    #[serde(default)]
    pub structured: Option<usize>,
    #[serde(default)]
    pub text: Option<usize>,
    #[serde(default)]
    pub combined: Option<usize>,
    #[serde(default)]
    pub output: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
struct CountLine {
    id: String,
    #[serde(default)]
    token_count: Option<usize>,
    #[serde(flatten)]
    streams: StreamCounts,
}

/// External count table keyed by record id. A bare `token_count` field is
/// taken as the combined input count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExternalCounts(pub HashMap<String, StreamCounts>);

impl ExternalCounts {
    pub fn from_jsonl(text: &str) -> std::result::Result<Self, String> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let l: CountLine =
                serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
            let mut streams = l.streams;
            if streams.combined.is_none() {
                streams.combined = l.token_count;
            }
            map.insert(l.id, streams);
        }
        Ok(ExternalCounts(map))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: usize,
    /// Exclusive upper bound; `None` means unbounded.
    pub upper: Option<usize>,
    pub count: usize,
    pub percentage: f64,
}

impl Bin {
    pub fn label(&self) -> String {
        match self.upper {
            Some(u) => format!("[{},{})", self.lower, u),
            None => format!("[{},inf)", self.lower),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamHistogram {
    pub total: usize,
    pub bins: Vec<Bin>,
}

impl StreamHistogram {
    fn new(edges: &[usize], values: &[usize]) -> Self {
        let mut bins: Vec<Bin> = edges
            .iter()
            .enumerate()
            .map(|(i, &lower)| Bin {
                lower,
                upper: edges.get(i + 1).copied(),
                count: 0,
                percentage: 0.0,
            })
            .collect();
        for &v in values {
            let i = edges.iter().rposition(|&e| v >= e).unwrap_or(0);
            bins[i].count += 1;
        }
        let total = values.len();
        if total > 0 {
            for b in &mut bins {
                b.percentage = 100.0 * b.count as f64 / total as f64;
            }
        }
        StreamHistogram { total, bins }
    }
}

pub const INPUT_BIN_EDGES: [usize; 3] = [0, 512, 1024];
pub const OUTPUT_BIN_EDGES: [usize; 3] = [0, 128, 256];

/// Binned token lengths per stream. Percentages of a non-empty stream sum to 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub structured: StreamHistogram,
    pub text: StreamHistogram,
    pub combined: StreamHistogram,
    pub output: StreamHistogram,
}

impl LengthHistogram {
    pub fn streams(&self) -> [(&'static str, &StreamHistogram); 4] {
        [
            ("structured", &self.structured),
            ("text", &self.text),
            ("combined", &self.combined),
            ("output", &self.output),
        ]
    }
}

/// Token counts of one record: knowledge, request plus context, full
/// assembled input, and target.
pub fn record_lengths(
    record: &Record,
    cfg: &LinearizationConfig,
    strategy: CountStrategy,
    external: Option<&ExternalCounts>,
) -> [usize; 4] {
    let ext = external
        .and_then(|e| e.0.get(&record.id))
        .copied()
        .unwrap_or_default();
    let knowledge = record_knowledge_text(record, cfg);
    let structured = ext
        .structured
        .unwrap_or_else(|| count_tokens(&knowledge, strategy));
    let text = ext.text.unwrap_or_else(|| {
        assemble_input(record.request.as_deref(), "", &record.context, cfg)
            .map(|t| count_tokens(&t, strategy))
            .unwrap_or(0)
    });
    let combined = ext.combined.unwrap_or_else(|| {
        assemble_input(record.request.as_deref(), &knowledge, &record.context, cfg)
            .map(|t| count_tokens(&t, strategy))
            .unwrap_or(0)
    });
    let output = ext
        .output
        .unwrap_or_else(|| count_tokens(&record.target, strategy));
    [structured, text, combined, output]
}

pub fn histogram_from_lengths(lengths: &[[usize; 4]]) -> LengthHistogram {
    let column = |i: usize| lengths.iter().map(|l| l[i]).collect::<Vec<_>>();
    LengthHistogram {
        structured: StreamHistogram::new(&INPUT_BIN_EDGES, &column(0)),
        text: StreamHistogram::new(&INPUT_BIN_EDGES, &column(1)),
        combined: StreamHistogram::new(&INPUT_BIN_EDGES, &column(2)),
        output: StreamHistogram::new(&OUTPUT_BIN_EDGES, &column(3)),
    }
}

pub fn length_histogram(
    records: &[Record],
    cfg: &LinearizationConfig,
    strategy: CountStrategy,
    external: Option<&ExternalCounts>,
) -> LengthHistogram {
    let lengths: Vec<[usize; 4]> = records
        .iter()
        .map(|r| record_lengths(r, cfg, strategy, external))
        .collect();
    histogram_from_lengths(&lengths)
}

/// Plain-text table with one row per group: percentages of the structured,
/// text and output streams, each split into its three bins.
pub fn render_histogram_table(rows: &[(String, LengthHistogram)]) -> String {
    let mut header = vec!["task".to_string()];
    let sections = [("structured", 0usize), ("text", 1), ("output", 3)];
    let mut lines: Vec<Vec<String>> = Vec::new();
    if let Some((_, first)) = rows.first() {
        let streams = first.streams();
        for (name, idx) in sections {
            for b in &streams[idx].1.bins {
                header.push(format!("{name} {}", b.label()));
            }
        }
    }
    for (task, h) in rows {
        let streams = h.streams();
        let mut line = vec![task.clone()];
        for (_, idx) in sections {
            for b in &streams[idx].1.bins {
                line.push(format!("{:.2}%", b.percentage));
            }
        }
        lines.push(line);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            lines
                .iter()
                .map(|l| l[i].len())
                .chain(std::iter::once(header[i].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for line in std::iter::once(&header).chain(lines.iter()) {
        let cells: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{c:<w$}", w = widths[i])
                } else {
                    format!("{c:>w$}", w = widths[i])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}
