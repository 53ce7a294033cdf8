//! Separator constants and grammar version identifiers.
//!
//! These strings define the canonical text format. Changing any of them
//! changes every linearized corpus, so they are versioned together.

use std::collections::BTreeMap;

use serde::Serialize;

/// Version of the separator set below.
pub const SEPARATORS_VERSION: &str = "sep-1";
/// Version of the SQL dialect accepted by the SQL validity checker.
pub const SQL_GRAMMAR_VERSION: &str = "sql-select-1";
/// Version of the s-expression shape checker.
pub const SEXPR_GRAMMAR_VERSION: &str = "sexpr-1";
/// Version of the TOP bracket checker.
pub const TOP_GRAMMAR_VERSION: &str = "top-1";
/// Version of the logical-form checker.
pub const LOGIC_GRAMMAR_VERSION: &str = "logic-1";
/// Version of the BLEC keyword extractor.
pub const BLEC_RULES_VERSION: &str = "blec-1";
/// Version of the knowledge truncation rules.
pub const TRUNCATION_RULES_VERSION: &str = "trunc-1";
/// Seeded generator used for random example selection and mixture schedules.
pub const RNG_ALGORITHM: &str = "chacha8-1";
/// Documentation of [`RNG_ALGORITHM`].
pub const RNG_DESCRIPTION: &str = "ChaCha8 stream seeded from a u64 via rand_chacha 0.3 seed_from_u64; \
permutations are Fisher-Yates from the last index down with bounds drawn by rejection from next_u64; \
uniform floats are (next_u64 >> 11) * 2^-53";

pub const COLUMN_JOIN: &str = " | ";
pub const TABLE_HEADER_PREFIX: &str = "col : ";
/// Row prefix; `{k}` is the 1-based row number.
pub const ROW_PREFIX: &str = " row {k} : ";
pub const TRIPLE_INTERNAL: &str = " : ";
pub const TRIPLE_JOIN: &str = " | ";
pub const ONTOLOGY_SLOT_JOIN: &str = "; ";
pub const ONTOLOGY_VALUE_JOIN: &str = ", ";
pub const INTENT_SLOT_JOIN: &str = " | ";
pub const CONTEXT_JOIN: &str = " | ";
pub const COMPONENT_JOIN: &str = "; ";
pub const SCHEMA_TABLE_JOIN: &str = " | ";
pub const SCHEMA_COLUMN_JOIN: &str = " , ";
pub const ANSWER_JOIN: &str = ", ";
pub const STATE_PAIR_JOIN: &str = ", ";
pub const BOOLEAN_TRUE: &str = "entailed";
pub const BOOLEAN_FALSE: &str = "refuted";
pub const PROMPT_EXAMPLE_JOIN: &str = "\n\n";
pub const PROMPT_TARGET_JOIN: &str = "\n";

/// Machine-readable description of the text format.
#[derive(Debug, Clone, Serialize)]
pub struct FormatSpec {
    pub separators_version: &'static str,
    pub grammars: BTreeMap<&'static str, &'static str>,
    pub separators: BTreeMap<&'static str, &'static str>,
    pub rng: BTreeMap<&'static str, &'static str>,
}

pub fn format_spec() -> FormatSpec {
    FormatSpec {
        separators_version: SEPARATORS_VERSION,
        grammars: BTreeMap::from([
            ("sql", SQL_GRAMMAR_VERSION),
            ("sexpr", SEXPR_GRAMMAR_VERSION),
            ("top", TOP_GRAMMAR_VERSION),
            ("logic", LOGIC_GRAMMAR_VERSION),
            ("blec", BLEC_RULES_VERSION),
            ("truncation", TRUNCATION_RULES_VERSION),
        ]),
        separators: BTreeMap::from([
            ("column_join", COLUMN_JOIN),
            ("table_header_prefix", TABLE_HEADER_PREFIX),
            ("row_prefix", ROW_PREFIX),
            ("triple_internal", TRIPLE_INTERNAL),
            ("triple_join", TRIPLE_JOIN),
            ("ontology_slot_join", ONTOLOGY_SLOT_JOIN),
            ("ontology_value_join", ONTOLOGY_VALUE_JOIN),
            ("intent_slot_join", INTENT_SLOT_JOIN),
            ("context_join", CONTEXT_JOIN),
            ("component_join", COMPONENT_JOIN),
            ("schema_table_join", SCHEMA_TABLE_JOIN),
            ("schema_column_join", SCHEMA_COLUMN_JOIN),
            ("answer_join", ANSWER_JOIN),
            ("state_pair_join", STATE_PAIR_JOIN),
            ("boolean_true", BOOLEAN_TRUE),
            ("boolean_false", BOOLEAN_FALSE),
            ("prompt_example_join", PROMPT_EXAMPLE_JOIN),
            ("prompt_target_join", PROMPT_TARGET_JOIN),
        ]),
        rng: BTreeMap::from([
            ("algorithm", RNG_ALGORITHM),
            ("description", RNG_DESCRIPTION),
        ]),
    }
}
