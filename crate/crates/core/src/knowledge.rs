//! Canonical data model for structured knowledge and task records.
//!
//! Every value here is stored verbatim: cell strings, slot values and
//! requests are never trimmed or rewritten on the way in. Repairs (reversal,
//! truncation) are explicit operations that return new values.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec;
use crate::error::{Error, Result};

/// How table rows are rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableLayout {
    /// `col : h1 | h2 row 1 : a | b ...`
    #[default]
    Rows,
    /// `Caption: c | h1, h2, ...` with rows omitted.
    HeaderOnly,
}

impl TableLayout {
    fn is_default(&self) -> bool {
        *self == TableLayout::Rows
    }
}

/// A titled text passage attached to a table (HybridQA-style inputs).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    #[serde(default)]
    pub rows: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section_title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub passages: Vec<Passage>,
    #[serde(default, skip_serializing_if = "TableLayout::is_default")]
    pub layout: TableLayout,
}

impl Table {
    pub fn new(header: Vec<String>, rows: Vec<Vec<String>>) -> Self {
        Table {
            header,
            rows,
            page_title: None,
            section_title: None,
            caption: None,
            passages: Vec::new(),
            layout: TableLayout::Rows,
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn violations(&self, path: &str, out: &mut Vec<Violation>) {
        if self.header.is_empty() {
            out.push(Violation::new(format!("{path}.header"), "header is empty"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                out.push(Violation::new(
                    format!("{path}.rows[{i}]"),
                    format!(
                        "row {i} has {} cells, header has {}",
                        row.len(),
                        self.header.len()
                    ),
                ));
            }
        }
    }
}

fn default_row_header_columns() -> Vec<usize> {
    vec![0]
}

/// A table with a set of highlighted cells (ToTTo-style inputs).
///
/// `row_header_columns` lists the columns whose cells act as row headers;
/// their values are attached to every highlighted cell of the same row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightedTable {
    pub table: Table,
    #[serde(default)]
    pub highlighted: Vec<(usize, usize)>,
    pub page_title: String,
    pub section_title: String,
    #[serde(default = "default_row_header_columns")]
    pub row_header_columns: Vec<usize>,
}

impl HighlightedTable {
    fn violations(&self, path: &str, out: &mut Vec<Violation>) {
        self.table.violations(&format!("{path}.table"), out);
        let rows = self.table.rows.len();
        let cols = self.table.header.len();
        let mut seen = HashSet::new();
        for (i, &(r, c)) in self.highlighted.iter().enumerate() {
            if r >= rows || c >= cols {
                out.push(Violation::new(
                    format!("{path}.highlighted[{i}]"),
                    format!("cell ({r}, {c}) is out of bounds for a {rows}x{cols} table"),
                ));
            }
            if !seen.insert((r, c)) {
                out.push(Violation::new(
                    format!("{path}.highlighted[{i}]"),
                    format!("cell ({r}, {c}) is highlighted twice"),
                ));
            }
        }
        for (i, &c) in self.row_header_columns.iter().enumerate() {
            if c >= cols {
                out.push(Violation::new(
                    format!("{path}.row_header_columns[{i}]"),
                    format!("column {c} is out of bounds for {cols} columns"),
                ));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Triple {
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Triple {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }
}

/// An entity mention resolved to a knowledge-base identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityLink {
    pub mention: String,
    pub id: String,
}

/// How the three fields of a triple are separated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleNotation {
    /// `sub : rel : obj`
    #[default]
    Colon,
    /// `sub rel obj`, as used by Freebase subgraphs.
    Space,
}

impl TripleNotation {
    fn is_default(&self) -> bool {
        *self == TripleNotation::Colon
    }
}

/// An ordered list of relation triples, optionally preceded by entity links
/// and a candidate relation vocabulary. KG subgraphs use the same shape.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TripleSet {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entities: Vec<EntityLink>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<String>,
    #[serde(default)]
    pub triples: Vec<Triple>,
    #[serde(default, skip_serializing_if = "TripleNotation::is_default")]
    pub notation: TripleNotation,
}

impl TripleSet {
    pub fn new(triples: Vec<Triple>) -> Self {
        TripleSet {
            triples,
            ..TripleSet::default()
        }
    }

    fn violations(&self, path: &str, out: &mut Vec<Violation>) {
        for (i, t) in self.triples.iter().enumerate() {
            for (field, value) in [
                ("subject", &t.subject),
                ("relation", &t.relation),
                ("object", &t.object),
            ] {
                if value.trim().is_empty() {
                    out.push(Violation::new(
                        format!("{path}.triples[{i}].{field}"),
                        format!("triple {i} has an empty {field}"),
                    ));
                }
            }
        }
        for (i, e) in self.entities.iter().enumerate() {
            if e.mention.trim().is_empty() || e.id.trim().is_empty() {
                out.push(Violation::new(
                    format!("{path}.entities[{i}]"),
                    "entity link has an empty mention or id",
                ));
            }
        }
        if self.entities.is_empty() && self.relations.is_empty() && self.triples.is_empty() {
            out.push(Violation::new(path.to_string(), "triple set is empty"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef {
            table: table.into(),
            column: column.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub from: ColumnRef,
    pub to: ColumnRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaTable {
    pub name: String,
    pub columns: Vec<String>,
    /// Example values keyed by column name; rendered as `col ( v1 , v2 )`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub column_values: BTreeMap<String, Vec<String>>,
}

impl SchemaTable {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        SchemaTable {
            name: name.into(),
            columns,
            column_values: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseSchema {
    pub db_id: String,
    pub tables: Vec<SchemaTable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub primary_keys: Vec<ColumnRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub foreign_keys: Vec<ForeignKey>,
}

impl DatabaseSchema {
    fn has_column(&self, r: &ColumnRef) -> bool {
        self.tables
            .iter()
            .any(|t| t.name == r.table && t.columns.contains(&r.column))
    }

    fn violations(&self, path: &str, out: &mut Vec<Violation>) {
        let mut names = HashSet::new();
        for (i, t) in self.tables.iter().enumerate() {
            if !names.insert(t.name.as_str()) {
                out.push(Violation::new(
                    format!("{path}.tables[{i}]"),
                    format!("duplicate table name `{}`", t.name),
                ));
            }
            let mut cols = HashSet::new();
            for (j, c) in t.columns.iter().enumerate() {
                if !cols.insert(c.as_str()) {
                    out.push(Violation::new(
                        format!("{path}.tables[{i}].columns[{j}]"),
                        format!("duplicate column `{c}` in table `{}`", t.name),
                    ));
                }
            }
            for col in t.column_values.keys() {
                if !t.columns.contains(col) {
                    out.push(Violation::new(
                        format!("{path}.tables[{i}].column_values"),
                        format!("values given for unknown column `{col}`"),
                    ));
                }
            }
        }
        for (i, pk) in self.primary_keys.iter().enumerate() {
            if !self.has_column(pk) {
                out.push(Violation::new(
                    format!("{path}.primary_keys[{i}]"),
                    format!("primary key `{}.{}` does not exist", pk.table, pk.column),
                ));
            }
        }
        for (i, fk) in self.foreign_keys.iter().enumerate() {
            for r in [&fk.from, &fk.to] {
                if !self.has_column(r) {
                    out.push(Violation::new(
                        format!("{path}.foreign_keys[{i}]"),
                        format!("foreign key references missing `{}.{}`", r.table, r.column),
                    ));
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub name: String,
    pub values: Vec<String>,
}

impl Slot {
    pub fn new(name: impl Into<String>, values: Vec<String>) -> Self {
        Slot {
            name: name.into(),
            values,
        }
    }
}

/// How ontology slots are joined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OntologyNotation {
    /// `slot: v1, v2; slot: v1; ` with a trailing separator.
    #[default]
    Dialogue,
    /// `slot: v1, v2 | slot: v1`, used for intent/slot inventories.
    Intent,
}

impl OntologyNotation {
    fn is_default(&self) -> bool {
        *self == OntologyNotation::Dialogue
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    pub slots: Vec<Slot>,
    #[serde(default, skip_serializing_if = "OntologyNotation::is_default")]
    pub notation: OntologyNotation,
}

impl Ontology {
    pub fn new(slots: Vec<Slot>) -> Self {
        Ontology {
            slots,
            notation: OntologyNotation::Dialogue,
        }
    }

    pub fn slot_names(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|s| s.name.as_str())
    }

    pub fn contains_slot(&self, name: &str) -> bool {
        self.slots.iter().any(|s| s.name == name)
    }

    fn violations(&self, path: &str, out: &mut Vec<Violation>) {
        let mut names = HashSet::new();
        for (i, s) in self.slots.iter().enumerate() {
            if !names.insert(s.name.as_str()) {
                out.push(Violation::new(
                    format!("{path}.slots[{i}]"),
                    format!("duplicate slot `{}`", s.name),
                ));
            }
            if s.values.is_empty() && self.notation == OntologyNotation::Dialogue {
                out.push(Violation::new(
                    format!("{path}.slots[{i}]"),
                    format!("slot `{}` has no values", s.name),
                ));
            }
        }
    }
}

/// Slot/value pairs of a dialogue turn. Unset slots carry `"none"`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DialogueState {
    pub pairs: Vec<(String, String)>,
}

impl DialogueState {
    pub fn new(pairs: Vec<(String, String)>) -> Self {
        DialogueState { pairs }
    }

    pub fn get(&self, slot: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(s, _)| s == slot)
            .map(|(_, v)| v.as_str())
    }
}

/// Formal languages understood by the validity checkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormalLanguage {
    Sql,
    Sexpr,
    Top,
    /// Logic2Text-style `fn { arg ; arg }` logical forms.
    Logic,
}

impl FormalLanguage {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormalLanguage::Sql => "sql",
            FormalLanguage::Sexpr => "sexpr",
            FormalLanguage::Top => "top",
            FormalLanguage::Logic => "logic",
        }
    }
}

impl fmt::Display for FormalLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormalLanguage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sql" => Ok(FormalLanguage::Sql),
            "sexpr" | "s-expression" | "s_expression" => Ok(FormalLanguage::Sexpr),
            "top" => Ok(FormalLanguage::Top),
            "logic" => Ok(FormalLanguage::Logic),
            other => Err(format!("unknown formal language `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalExpression {
    pub language: FormalLanguage,
    pub text: String,
}

/// The six knowledge shapes, discriminated by `kind` on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructuredKnowledge {
    Table(Table),
    HighlightedTable(HighlightedTable),
    Triples(TripleSet),
    Schema(DatabaseSchema),
    Ontology(Ontology),
    Formal(FormalExpression),
}

impl StructuredKnowledge {
    pub fn kind(&self) -> &'static str {
        match self {
            StructuredKnowledge::Table(_) => "table",
            StructuredKnowledge::HighlightedTable(_) => "highlighted_table",
            StructuredKnowledge::Triples(_) => "triples",
            StructuredKnowledge::Schema(_) => "schema",
            StructuredKnowledge::Ontology(_) => "ontology",
            StructuredKnowledge::Formal(_) => "formal",
        }
    }

    /// Type-invariant violations of this value, with paths rooted at `knowledge`.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let path = "knowledge";
        match self {
            StructuredKnowledge::Table(t) => t.violations(path, &mut out),
            StructuredKnowledge::HighlightedTable(h) => h.violations(path, &mut out),
            StructuredKnowledge::Triples(ts) => ts.violations(path, &mut out),
            StructuredKnowledge::Schema(s) => s.violations(path, &mut out),
            StructuredKnowledge::Ontology(o) => o.violations(path, &mut out),
            StructuredKnowledge::Formal(f) => {
                if f.text.trim().is_empty() {
                    out.push(Violation::new(
                        format!("{path}.text"),
                        "formal expression is empty",
                    ));
                }
            }
        }
        out
    }
}

/// Shape of a record's gold output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum OutputKind {
    FreeText,
    Formal(FormalLanguage),
    AnswerSet,
    Boolean,
    DialogueState,
}

impl OutputKind {
    /// The output kind conventionally paired with a known task tag.
    pub fn for_task(task: &str) -> Option<OutputKind> {
        let kind = match task.to_ascii_lowercase().as_str() {
            "spider" | "sparc" | "cosql" => OutputKind::Formal(FormalLanguage::Sql),
            "grailqa" | "webqsp" => OutputKind::Formal(FormalLanguage::Sexpr),
            "mtop" => OutputKind::Formal(FormalLanguage::Top),
            "compwebq" | "wikitq" | "wikisql" | "hybridqa" | "mmqa" | "multimodalqa" | "sqa" => {
                OutputKind::AnswerSet
            }
            "tabfact" | "feverous" => OutputKind::Boolean,
            "multiwoz" => OutputKind::DialogueState,
            "fetaqa" | "dart" | "totto" | "kvret" | "sql2text" | "logic2text" => {
                OutputKind::FreeText
            }
            _ => return None,
        };
        Some(kind)
    }
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputKind::FreeText => f.write_str("free_text"),
            OutputKind::Formal(lang) => write!(f, "formal:{lang}"),
            OutputKind::AnswerSet => f.write_str("answer_set"),
            OutputKind::Boolean => f.write_str("boolean"),
            OutputKind::DialogueState => f.write_str("dialogue_state"),
        }
    }
}

impl FromStr for OutputKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "free_text" => Ok(OutputKind::FreeText),
            "answer_set" => Ok(OutputKind::AnswerSet),
            "boolean" => Ok(OutputKind::Boolean),
            "dialogue_state" => Ok(OutputKind::DialogueState),
            other => match other.strip_prefix("formal:") {
                Some(lang) => lang.parse().map(OutputKind::Formal),
                None => Err(format!("unknown output kind `{other}`")),
            },
        }
    }
}

impl TryFrom<String> for OutputKind {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<OutputKind> for String {
    fn from(k: OutputKind) -> String {
        k.to_string()
    }
}

/// Language of the request for tasks whose request is itself a formal
/// expression to be described in text.
pub fn request_language(task: &str) -> Option<FormalLanguage> {
    match task.to_ascii_lowercase().as_str() {
        "sql2text" => Some(FormalLanguage::Sql),
        "logic2text" => Some(FormalLanguage::Logic),
        _ => None,
    }
}

/// One task instance.
///
/// `context` holds prior turns most-recent-first. `target` is always the
/// serialized gold string; structured targets on the wire are serialized
/// through [`codec`] when the record is read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RecordWire")]
pub struct Record {
    pub id: String,
    pub task: String,
    pub request: Option<String>,
    #[serde(default)]
    pub context: Vec<String>,
    pub knowledge: Option<StructuredKnowledge>,
    pub target: String,
    pub output_kind: OutputKind,
}

/// Wire form of a record: `target` may be a plain string or a structured
/// value (answer list, boolean, slot/value pairs).
#[derive(Debug, Clone, Deserialize)]
struct RecordWire {
    id: String,
    task: String,
    #[serde(default)]
    request: Option<String>,
    #[serde(default)]
    context: Vec<String>,
    #[serde(default)]
    knowledge: Option<StructuredKnowledge>,
    target: serde_json::Value,
    output_kind: OutputKind,
}

impl TryFrom<RecordWire> for Record {
    type Error = Error;

    fn try_from(w: RecordWire) -> Result<Record> {
        let target = serialize_target(&w.target, w.output_kind, w.knowledge.as_ref())
            .map_err(|e| Error::InvalidRecord(format!("record `{}`: {e}", w.id)))?;
        Ok(Record {
            id: w.id,
            task: w.task,
            request: w.request,
            context: w.context,
            knowledge: w.knowledge,
            target,
            output_kind: w.output_kind,
        })
    }
}

fn serialize_target(
    value: &serde_json::Value,
    kind: OutputKind,
    knowledge: Option<&StructuredKnowledge>,
) -> std::result::Result<String, String> {
    use serde_json::Value;
    match (value, kind) {
        (Value::String(s), _) => Ok(s.clone()),
        (Value::Bool(b), OutputKind::Boolean) => Ok(codec::serialize_boolean(*b).to_string()),
        (Value::Array(items), OutputKind::AnswerSet) => {
            let answers = items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    other => Ok(other.to_string()),
                })
                .collect::<std::result::Result<Vec<_>, String>>()?;
            codec::serialize_answers(&answers).map_err(|e| e.to_string())
        }
        (Value::Array(_), OutputKind::DialogueState) => {
            let state: DialogueState = serde_json::from_value(serde_json::json!({ "pairs": value }))
                .map_err(|e| format!("dialogue state target: {e}"))?;
            match knowledge {
                Some(StructuredKnowledge::Ontology(o)) => {
                    codec::serialize_dialogue_state(o, &state).map_err(|e| e.to_string())
                }
                _ => Err("structured dialogue-state target needs ontology knowledge".into()),
            }
        }
        (other, kind) => Err(format!("target {other} cannot be read as {kind}")),
    }
}

/// A single type-invariant violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks every type invariant of `record`. An empty list means valid.
pub fn validate_record(record: &Record) -> Vec<Violation> {
    let mut out = Vec::new();
    if record.id.is_empty() {
        out.push(Violation::new("id", "id is empty"));
    }
    let request_absent = record.request.as_deref().unwrap_or("").is_empty();
    if request_absent && record.knowledge.is_none() {
        out.push(Violation::new(
            "request",
            "request and knowledge are both absent",
        ));
    }
    if let Some(k) = &record.knowledge {
        out.extend(k.violations());
    }
    if let Some(expected) = OutputKind::for_task(&record.task) {
        if expected != record.output_kind {
            out.push(Violation::new(
                "output_kind",
                format!(
                    "task `{}` expects output kind {expected}, found {}",
                    record.task, record.output_kind
                ),
            ));
        }
    }
    if record.output_kind == OutputKind::DialogueState
        && !matches!(record.knowledge, Some(StructuredKnowledge::Ontology(_)))
    {
        out.push(Violation::new(
            "knowledge",
            "dialogue-state records need ontology knowledge",
        ));
    }
    out
}

/// Cells and slot values that contain separator tokens. These are stored
/// verbatim and reported as warnings; they do not invalidate a record.
pub fn separator_collisions(record: &Record) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |path: String, text: &str, seps: &[&str]| {
        for sep in seps {
            if text.contains(sep) {
                out.push(Violation::new(
                    path.clone(),
                    format!("value {text:?} contains separator {sep:?}"),
                ));
            }
        }
    };
    let table_seps = [" | ", " row ", "col : "];
    match &record.knowledge {
        Some(StructuredKnowledge::Table(t)) => {
            for (i, h) in t.header.iter().enumerate() {
                check(format!("knowledge.header[{i}]"), h, &table_seps);
            }
            for (i, row) in t.rows.iter().enumerate() {
                for (j, cell) in row.iter().enumerate() {
                    check(format!("knowledge.rows[{i}][{j}]"), cell, &table_seps);
                }
            }
        }
        Some(StructuredKnowledge::Triples(ts)) => {
            for (i, t) in ts.triples.iter().enumerate() {
                for part in [&t.subject, &t.relation, &t.object] {
                    check(format!("knowledge.triples[{i}]"), part, &[" | "]);
                }
            }
        }
        Some(StructuredKnowledge::Ontology(o)) => {
            for (i, s) in o.slots.iter().enumerate() {
                for v in &s.values {
                    check(format!("knowledge.slots[{i}]"), v, &["; ", ", "]);
                }
            }
        }
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn spider_record() -> Record {
        let schema = DatabaseSchema {
            db_id: "concert_singer".into(),
            tables: vec![
                SchemaTable::new("stadium", strings(&["stadium_id", "location", "name"])),
                SchemaTable::new("singer", strings(&["singer_id", "name"])),
            ],
            primary_keys: vec![ColumnRef::new("singer", "singer_id")],
            foreign_keys: vec![],
        };
        Record {
            id: "spider-0".into(),
            task: "spider".into(),
            request: Some("How many singers do we have?".into()),
            context: vec![],
            knowledge: Some(StructuredKnowledge::Schema(schema)),
            target: "select count(*) from singer".into(),
            output_kind: OutputKind::Formal(FormalLanguage::Sql),
        }
    }

    #[test]
    fn well_formed_spider_record_has_no_violations() {
        assert!(validate_record(&spider_record()).is_empty());
    }

    #[test]
    fn short_row_is_reported_with_its_index() {
        let mut r = spider_record();
        r.task = "wikitq".into();
        r.output_kind = OutputKind::AnswerSet;
        r.knowledge = Some(StructuredKnowledge::Table(Table::new(
            strings(&["a", "b", "c"]),
            vec![strings(&["1", "2", "3"]), strings(&["x", "y"])],
        )));
        let v = validate_record(&r);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].path.contains("rows[1]"));
        assert!(v[0].message.contains("row 1"));
    }

    #[test]
    fn out_of_bounds_highlight_is_reported() {
        let mut r = spider_record();
        r.task = "totto".into();
        r.output_kind = OutputKind::FreeText;
        r.knowledge = Some(StructuredKnowledge::HighlightedTable(HighlightedTable {
            table: Table::new(
                strings(&["a", "b"]),
                vec![strings(&["1", "2"]), strings(&["3", "4"])],
            ),
            highlighted: vec![(99, 0)],
            page_title: "p".into(),
            section_title: "s".into(),
            row_header_columns: vec![0],
        }));
        let v = validate_record(&r);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].message.contains("out of bounds"));
    }

    #[test]
    fn request_and_knowledge_both_absent() {
        let mut r = spider_record();
        r.request = None;
        r.knowledge = None;
        let v = validate_record(&r);
        assert!(v.iter().any(|v| v.message.contains("both absent")));
    }

    #[test]
    fn task_kind_mismatch() {
        let mut r = spider_record();
        r.output_kind = OutputKind::Boolean;
        assert!(validate_record(&r)
            .iter()
            .any(|v| v.path == "output_kind"));
    }

    #[test]
    fn schema_key_must_reference_existing_column() {
        let mut r = spider_record();
        if let Some(StructuredKnowledge::Schema(s)) = &mut r.knowledge {
            s.foreign_keys.push(ForeignKey {
                from: ColumnRef::new("singer", "stadium_id"),
                to: ColumnRef::new("stadium", "stadium_id"),
            });
        }
        let v = validate_record(&r);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].message.contains("singer.stadium_id"));
    }

    #[test]
    fn validation_is_pure() {
        let r = spider_record();
        assert_eq!(validate_record(&r), validate_record(&r));
    }

    #[test]
    fn output_kind_wire_names() {
        for s in [
            "free_text",
            "formal:sql",
            "formal:sexpr",
            "formal:top",
            "answer_set",
            "boolean",
            "dialogue_state",
        ] {
            let k: OutputKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("formal:cobol".parse::<OutputKind>().is_err());
    }

    #[test]
    fn record_reads_structured_targets() {
        let line = r#"{"id":"t1","task":"tabfact","request":"x","context":[],
            "knowledge":{"kind":"table","header":["a"],"rows":[["1"]]},
            "target":true,"output_kind":"boolean"}"#;
        let r: Record = serde_json::from_str(line).unwrap();
        assert_eq!(r.target, "entailed");

        let line = r#"{"id":"q1","task":"wikitq","request":"x",
            "knowledge":{"kind":"table","header":["a"]},
            "target":["a","b"],"output_kind":"answer_set"}"#;
        let r: Record = serde_json::from_str(line).unwrap();
        assert_eq!(r.target, "a, b");
        assert!(r.context.is_empty());
    }

    #[test]
    fn separator_collisions_are_warnings() {
        let mut r = spider_record();
        r.task = "sqa".into();
        r.output_kind = OutputKind::AnswerSet;
        r.knowledge = Some(StructuredKnowledge::Table(Table::new(
            strings(&["sunk by"]),
            vec![strings(&["\"hms oribi |  hms snowflake\""])],
        )));
        assert!(validate_record(&r).is_empty());
        assert_eq!(separator_collisions(&r).len(), 1);
    }
}
