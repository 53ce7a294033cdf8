//! Flattening of structured knowledge into text, and assembly of the full
//! model input from request, knowledge and context.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::*;
use crate::knowledge::{
    DatabaseSchema, HighlightedTable, Ontology, OntologyNotation, Record, StructuredKnowledge,
    Table, TableLayout, TripleNotation, TripleSet,
};

/// Order of request (r), structured knowledge (s) and context (c).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OrderingPolicy {
    #[default]
    #[serde(rename = "rs_c")]
    RsC,
    #[serde(rename = "sr")]
    Sr,
    /// Request, context, knowledge. Renders identically to `RsC`.
    #[serde(rename = "rcs")]
    Rcs,
}

impl fmt::Display for OrderingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderingPolicy::RsC => "rs_c",
            OrderingPolicy::Sr => "sr",
            OrderingPolicy::Rcs => "rcs",
        })
    }
}

impl FromStr for OrderingPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['(', ')'], "_").trim_end_matches('_') {
            "rs_c" | "rsc" => Ok(OrderingPolicy::RsC),
            "sr" => Ok(OrderingPolicy::Sr),
            "rcs" => Ok(OrderingPolicy::Rcs),
            other => Err(format!("unknown ordering `{other}` (expected rs_c, sr or rcs)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinearizationConfig {
    #[serde(default)]
    pub ordering: OrderingPolicy,
    #[serde(default)]
    pub reverse_knowledge: bool,
}

pub fn linearize_table(table: &Table) -> String {
    let mut out = String::new();
    match table.layout {
        TableLayout::Rows => {
            let titles: Vec<&str> = [&table.page_title, &table.section_title, &table.caption]
                .into_iter()
                .flatten()
                .map(String::as_str)
                .collect();
            if !titles.is_empty() {
                out.push_str(&titles.join(COLUMN_JOIN));
                out.push(' ');
            }
            out.push_str(TABLE_HEADER_PREFIX);
            out.push_str(&table.header.join(COLUMN_JOIN));
            for (i, row) in table.rows.iter().enumerate() {
                out.push_str(&ROW_PREFIX.replace("{k}", &(i + 1).to_string()));
                out.push_str(&row.join(COLUMN_JOIN));
            }
            // An empty final cell would otherwise leave a dangling space.
            out.truncate(out.trim_end().len());
        }
        TableLayout::HeaderOnly => {
            if let Some(caption) = &table.caption {
                out.push_str("Caption: ");
                out.push_str(caption);
                out.push_str(COLUMN_JOIN);
            }
            out.push_str(&table.header.join(", "));
        }
    }
    if !table.passages.is_empty() {
        out.push_str("passages: ");
        for p in &table.passages {
            out.push_str(&p.title);
            out.push_str(": ");
            out.push_str(&p.text);
            out.push_str(COLUMN_JOIN);
        }
    }
    out
}

/// Column headers of cell `(r, c)`: the table header followed by any cells
/// above it when `c` is itself a row-header column.
fn column_headers(ht: &HighlightedTable, r: usize, c: usize) -> Vec<&str> {
    let mut heads = vec![ht.table.header[c].as_str()];
    if ht.row_header_columns.contains(&c) {
        heads.extend(ht.table.rows[..r].iter().map(|row| row[c].as_str()));
    }
    heads
}

fn row_headers(ht: &HighlightedTable, r: usize, c: usize) -> Vec<&str> {
    ht.row_header_columns
        .iter()
        .filter(|&&h| h != c)
        .map(|&h| ht.table.rows[r][h].as_str())
        .collect()
}

pub fn linearize_highlighted_table(ht: &HighlightedTable) -> String {
    let mut out = format!(
        "<page_title> {} </page_title> <section_title> {} </section_title> <table> ",
        ht.page_title, ht.section_title
    );
    for &(r, c) in &ht.highlighted {
        out.push_str("<cell> ");
        out.push_str(&ht.table.rows[r][c]);
        out.push(' ');
        for h in column_headers(ht, r, c) {
            out.push_str("<col_header> ");
            out.push_str(h);
            out.push_str(" </col_header> ");
        }
        for h in row_headers(ht, r, c) {
            out.push_str("<row_header> ");
            out.push_str(h);
            out.push_str(" </row_header> ");
        }
        out.push_str("</cell> ");
    }
    out.push_str("</table>");
    out
}

pub fn linearize_triples(ts: &TripleSet) -> String {
    let mut parts: Vec<String> = ts
        .entities
        .iter()
        .map(|e| format!("{}: {}", e.mention, e.id))
        .collect();
    if !ts.relations.is_empty() {
        parts.push(ts.relations.join(" "));
    }
    let internal = match ts.notation {
        TripleNotation::Colon => TRIPLE_INTERNAL,
        TripleNotation::Space => " ",
    };
    parts.extend(
        ts.triples
            .iter()
            .map(|t| [t.subject.as_str(), &t.relation, &t.object].join(internal)),
    );
    parts.join(TRIPLE_JOIN)
}

pub fn linearize_schema(schema: &DatabaseSchema) -> String {
    let mut out = format!("| {}", schema.db_id);
    for t in &schema.tables {
        out.push_str(SCHEMA_TABLE_JOIN);
        out.push_str(&t.name);
        out.push_str(" : ");
        let cols: Vec<String> = t
            .columns
            .iter()
            .map(|c| match t.column_values.get(c) {
                Some(vals) if !vals.is_empty() => {
                    format!("{c} ( {} )", vals.join(SCHEMA_COLUMN_JOIN))
                }
                _ => c.clone(),
            })
            .collect();
        out.push_str(&cols.join(SCHEMA_COLUMN_JOIN));
    }
    out
}

pub fn linearize_ontology(ontology: &Ontology) -> String {
    let slots = ontology
        .slots
        .iter()
        .map(|s| format!("{}: {}", s.name, s.values.join(ONTOLOGY_VALUE_JOIN)));
    match ontology.notation {
        OntologyNotation::Dialogue => slots.map(|s| s + ONTOLOGY_SLOT_JOIN).collect(),
        OntologyNotation::Intent => slots.collect::<Vec<_>>().join(INTENT_SLOT_JOIN),
    }
}

pub fn linearize_knowledge(k: &StructuredKnowledge) -> String {
    match k {
        StructuredKnowledge::Table(t) => linearize_table(t),
        StructuredKnowledge::HighlightedTable(h) => linearize_highlighted_table(h),
        StructuredKnowledge::Triples(ts) => linearize_triples(ts),
        StructuredKnowledge::Schema(s) => linearize_schema(s),
        StructuredKnowledge::Ontology(o) => linearize_ontology(o),
        StructuredKnowledge::Formal(f) => f.text.clone(),
    }
}

fn reverse_table(t: &Table) -> Table {
    let mut out = t.clone();
    out.header.reverse();
    for row in &mut out.rows {
        row.reverse();
    }
    out
}

/// Reverses the ordering of the structured knowledge.
///
/// Tables reverse their columns; schemas, triple sets and ontologies
/// reverse their unit lists (and each inner list). Formal expressions are
/// returned unchanged. The operation is an involution.
pub fn reverse_knowledge(k: &StructuredKnowledge) -> StructuredKnowledge {
    match k {
        StructuredKnowledge::Table(t) => StructuredKnowledge::Table(reverse_table(t)),
        StructuredKnowledge::HighlightedTable(h) => {
            let width = h.table.header.len();
            let flip = |c: usize| width.saturating_sub(1).saturating_sub(c);
            StructuredKnowledge::HighlightedTable(HighlightedTable {
                table: reverse_table(&h.table),
                highlighted: h.highlighted.iter().map(|&(r, c)| (r, flip(c))).collect(),
                page_title: h.page_title.clone(),
                section_title: h.section_title.clone(),
                row_header_columns: h.row_header_columns.iter().map(|&c| flip(c)).collect(),
            })
        }
        StructuredKnowledge::Triples(ts) => {
            let mut out = ts.clone();
            out.triples.reverse();
            StructuredKnowledge::Triples(out)
        }
        StructuredKnowledge::Schema(s) => {
            let mut out = s.clone();
            out.tables.reverse();
            for t in &mut out.tables {
                t.columns.reverse();
            }
            StructuredKnowledge::Schema(out)
        }
        StructuredKnowledge::Ontology(o) => {
            let mut out = o.clone();
            out.slots.reverse();
            for s in &mut out.slots {
                s.values.reverse();
            }
            StructuredKnowledge::Ontology(out)
        }
        StructuredKnowledge::Formal(f) => StructuredKnowledge::Formal(f.clone()),
    }
}

/// Joins request, context and knowledge text in the configured order.
/// Empty components are skipped along with their separator.
pub fn assemble_input(
    request: Option<&str>,
    knowledge_text: &str,
    context: &[String],
    cfg: &LinearizationConfig,
) -> Result<String> {
    let request = request.unwrap_or("");
    let context = context.join(CONTEXT_JOIN);
    let parts = match cfg.ordering {
        OrderingPolicy::RsC | OrderingPolicy::Rcs => [request, context.as_str(), knowledge_text],
        OrderingPolicy::Sr => [knowledge_text, request, context.as_str()],
    };
    let present: Vec<&str> = parts.into_iter().filter(|p| !p.is_empty()).collect();
    if present.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(present.join(COMPONENT_JOIN))
}

/// Knowledge text of a record after optional reversal.
pub fn record_knowledge_text(record: &Record, cfg: &LinearizationConfig) -> String {
    match &record.knowledge {
        Some(k) if cfg.reverse_knowledge => linearize_knowledge(&reverse_knowledge(k)),
        Some(k) => linearize_knowledge(k),
        None => String::new(),
    }
}

/// Full model input for a record.
pub fn record_input(record: &Record, cfg: &LinearizationConfig) -> Result<String> {
    let knowledge = record_knowledge_text(record, cfg);
    assemble_input(record.request.as_deref(), &knowledge, &record.context, cfg)
}

/// `{name}` placeholders of a template, in order of appearance.
fn placeholders(template: &str) -> Vec<(usize, usize, &str)> {
    let mut out = Vec::new();
    let mut rest = 0;
    while let Some(open) = template[rest..].find('{').map(|i| rest + i) {
        match template[open + 1..].find(['{', '}']).map(|i| open + 1 + i) {
            Some(close) if template.as_bytes()[close] == b'}' => {
                out.push((open, close + 1, &template[open + 1..close]));
                rest = close + 1;
            }
            Some(next) => rest = next,
            None => break,
        }
    }
    out
}

/// Replaces each `{header}` placeholder with the row's cell under that header.
pub fn render_row_template(template: &str, table: &Table, row_index: usize) -> Result<String> {
    let row = table.rows.get(row_index).ok_or(Error::RowOutOfRange {
        index: row_index,
        rows: table.rows.len(),
    })?;
    let found = placeholders(template);
    let unresolved: Vec<String> = found
        .iter()
        .filter(|(_, _, name)| table.column_index(name).is_none())
        .map(|(_, _, name)| name.to_string())
        .collect();
    if !unresolved.is_empty() {
        return Err(Error::UnresolvedPlaceholders(unresolved));
    }
    let mut out = String::with_capacity(template.len());
    let mut last = 0;
    for (start, end, name) in found {
        out.push_str(&template[last..start]);
        let col = table.column_index(name).expect("checked above");
        out.push_str(&row[col]);
        last = end;
    }
    out.push_str(&template[last..]);
    Ok(out)
}

/// Natural-language description of a schema built from fixed sentence
/// templates: overview, one sentence per table, then primary and foreign keys.
pub fn render_schema_description(schema: &DatabaseSchema) -> String {
    let names: Vec<&str> = schema.tables.iter().map(|t| t.name.as_str()).collect();
    let mut sentences = vec![format!(
        "{} contains tables such as {}.",
        schema.db_id,
        names.join(", ")
    )];
    for t in &schema.tables {
        sentences.push(format!(
            "Table {} has column such as {}.",
            t.name,
            t.columns.join(", ")
        ));
    }
    for pk in &schema.primary_keys {
        sentences.push(format!("{} is the primary key.", pk.column));
    }
    for fk in &schema.foreign_keys {
        sentences.push(format!(
            "The {} of {} is the foreign key of {} of {}.",
            fk.from.column, fk.from.table, fk.to.column, fk.to.table
        ));
    }
    sentences.join(" ")
}
