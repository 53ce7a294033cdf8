//! Random knowledge generators and independent oracles.

use proptest::prelude::*;
use skgkit::knowledge::{
    ColumnRef, DatabaseSchema, DialogueState, EntityLink, FormalExpression, FormalLanguage,
    ForeignKey, HighlightedTable, Ontology, OntologyNotation, Passage, Record, SchemaTable, Slot,
    StructuredKnowledge, Table, TableLayout, Triple, TripleNotation, TripleSet,
};
use skgkit::knowledge::OutputKind;

pub fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,7}"
}

pub fn cell() -> impl Strategy<Value = String> {
    "[a-z0-9]{1,6}( [a-z0-9]{1,6}){0,2}"
}

pub fn table_with(min_rows: usize, max_rows: usize) -> impl Strategy<Value = Table> {
    (1usize..5).prop_flat_map(move |width| {
        (
            prop::collection::vec(cell(), width),
            prop::collection::vec(prop::collection::vec(cell(), width), min_rows..=max_rows),
            prop::option::of(cell()),
            prop::option::of(cell()),
            prop::collection::vec((cell(), cell()), 0..3),
        )
            .prop_map(|(header, rows, page_title, section_title, passages)| {
                let mut t = Table::new(header, rows);
                t.page_title = page_title;
                t.section_title = section_title;
                t.passages = passages
                    .into_iter()
                    .map(|(title, text)| Passage { title, text })
                    .collect();
                t
            })
    })
}

pub fn table() -> impl Strategy<Value = Table> {
    table_with(0, 8)
}

pub fn header_only_table() -> impl Strategy<Value = Table> {
    (table(), cell()).prop_map(|(mut t, caption)| {
        t.layout = TableLayout::HeaderOnly;
        t.caption = Some(caption);
        t
    })
}

pub fn highlighted_table() -> impl Strategy<Value = HighlightedTable> {
    table_with(1, 6).prop_flat_map(|t| {
        let rows = t.rows.len();
        let width = t.header.len();
        (
            Just(t),
            prop::collection::vec((0..rows, 0..width), 1..6),
            cell(),
            cell(),
        )
            .prop_map(|(table, mut highlighted, page_title, section_title)| {
                highlighted.sort_unstable();
                highlighted.dedup();
                HighlightedTable {
                    table,
                    highlighted,
                    page_title,
                    section_title,
                    row_header_columns: vec![0],
                }
            })
    })
}

pub fn triple_set() -> impl Strategy<Value = TripleSet> {
    (
        prop::collection::vec((cell(), word(), cell()), 1..10),
        prop::bool::ANY,
        prop::collection::vec((cell(), "m\\.[0-9a-z]{3,6}"), 0..2),
    )
        .prop_map(|(triples, space, entities)| {
            let mut ts = TripleSet::new(
                triples
                    .into_iter()
                    .map(|(s, r, o)| Triple::new(s, r, o))
                    .collect(),
            );
            if space {
                ts.notation = TripleNotation::Space;
            }
            ts.entities = entities
                .into_iter()
                .map(|(mention, id)| EntityLink { mention, id })
                .collect();
            ts
        })
}

pub fn schema() -> impl Strategy<Value = DatabaseSchema> {
    (word(), prop::collection::vec(prop::collection::vec(word(), 1..5), 1..6), prop::bool::ANY).prop_map(
        |(db_id, tables, with_keys)| {
            let tables: Vec<SchemaTable> = tables
                .into_iter()
                .enumerate()
                .map(|(i, cols)| {
                    let cols = cols.into_iter().enumerate().map(|(j, c)| format!("{c}{j}")).collect();
                    SchemaTable::new(format!("t{i}"), cols)
                })
                .collect();
            let mut s = DatabaseSchema {
                db_id,
                tables,
                primary_keys: vec![],
                foreign_keys: vec![],
            };
            if with_keys {
                let last = s.tables.len() - 1;
                s.primary_keys = vec![ColumnRef::new("t0", s.tables[0].columns[0].clone())];
                s.foreign_keys = vec![ForeignKey {
                    from: ColumnRef::new(format!("t{last}"), s.tables[last].columns[0].clone()),
                    to: ColumnRef::new("t0", s.tables[0].columns[0].clone()),
                }];
            }
            s
        },
    )
}

/// Slot names that render to distinct, space-free-prefix names.
pub fn ontology() -> impl Strategy<Value = Ontology> {
    (
        prop::collection::vec(prop::collection::vec(cell(), 1..5), 1..7),
        prop::bool::ANY,
    )
        .prop_map(|(slots, intent)| {
            let mut o = Ontology::new(
                slots
                    .into_iter()
                    .enumerate()
                    .map(|(i, mut values)| {
                        values.sort();
                        values.dedup();
                        Slot::new(format!("d{i}-slot{i}"), values)
                    })
                    .collect(),
            );
            if intent {
                o.notation = OntologyNotation::Intent;
            }
            o
        })
}

pub fn knowledge() -> impl Strategy<Value = StructuredKnowledge> {
    prop_oneof![
        table().prop_map(StructuredKnowledge::Table),
        header_only_table().prop_map(StructuredKnowledge::Table),
        highlighted_table().prop_map(StructuredKnowledge::HighlightedTable),
        triple_set().prop_map(StructuredKnowledge::Triples),
        schema().prop_map(StructuredKnowledge::Schema),
        ontology().prop_map(StructuredKnowledge::Ontology),
        "select [a-z]{1,5} from [a-z]{1,5}".prop_map(|text| StructuredKnowledge::Formal(
            FormalExpression {
                language: FormalLanguage::Sql,
                text
            }
        )),
    ]
}

/// Knowledge kinds that truncation can shrink.
pub fn truncatable() -> impl Strategy<Value = StructuredKnowledge> {
    prop_oneof![
        table_with(1, 12).prop_map(StructuredKnowledge::Table),
        header_only_table().prop_map(StructuredKnowledge::Table),
        highlighted_table().prop_map(StructuredKnowledge::HighlightedTable),
        triple_set().prop_map(StructuredKnowledge::Triples),
        schema().prop_map(StructuredKnowledge::Schema),
    ]
}

/// Every atomic string of a knowledge value, sorted.
pub fn cell_multiset(k: &StructuredKnowledge) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let table = |t: &Table, out: &mut Vec<String>| {
        out.extend(t.header.iter().cloned());
        out.extend(t.rows.iter().flatten().cloned());
        for p in &t.passages {
            out.push(p.title.clone());
            out.push(p.text.clone());
        }
    };
    match k {
        StructuredKnowledge::Table(t) => table(t, &mut out),
        StructuredKnowledge::HighlightedTable(h) => {
            table(&h.table, &mut out);
            for &(r, c) in &h.highlighted {
                out.push(format!("highlight:{}", h.table.rows[r][c]));
            }
        }
        StructuredKnowledge::Triples(ts) => {
            for t in &ts.triples {
                out.extend([t.subject.clone(), t.relation.clone(), t.object.clone()]);
            }
        }
        StructuredKnowledge::Schema(s) => {
            for t in &s.tables {
                out.push(t.name.clone());
                out.extend(t.columns.iter().cloned());
            }
        }
        StructuredKnowledge::Ontology(o) => {
            for s in &o.slots {
                out.push(s.name.clone());
                out.extend(s.values.iter().cloned());
            }
        }
        StructuredKnowledge::Formal(f) => out.push(f.text.clone()),
    }
    out.sort();
    out
}

/// Comma-free, non-empty answers.
pub fn answers() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[A-Za-z0-9 .'()-]{0,12}[A-Za-z0-9.'()-]", 1..6)
}

/// An ontology with a complete state drawn over it.
pub fn ontology_and_state() -> impl Strategy<Value = (Ontology, DialogueState)> {
    ontology().prop_flat_map(|o| {
        let choices: Vec<BoxedStrategy<String>> = o
            .slots
            .iter()
            .map(|s| {
                let mut vals = s.values.clone();
                vals.push("none".into());
                prop::sample::select(vals).boxed()
            })
            .collect();
        (Just(o), choices).prop_map(|(o, values)| {
            let pairs = o
                .slots
                .iter()
                .map(|s| s.name.clone())
                .zip(values)
                .collect();
            (o, DialogueState::new(pairs))
        })
    })
}

pub fn table_record(id: String, request: String, table: Table, target: String) -> Record {
    Record {
        id,
        task: "wikitq".into(),
        request: Some(request),
        context: vec![],
        knowledge: Some(StructuredKnowledge::Table(table)),
        target,
        output_kind: OutputKind::AnswerSet,
    }
}

/// Lowercase word sentences; 13a tokenization splits them on spaces only.
pub fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "the", "cat"]), 0..12)
        .prop_map(|ws| ws.join(" "))
}

pub fn corpus() -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec((sentence(), sentence()), 1..8)
}

/// Corpus BLEU-4 from first principles on space-tokenized text: clipped
/// n-gram matches by exhaustive scan, exponential smoothing for zero
/// matches, corpus brevity penalty.
pub fn bleu_oracle(pairs: &[(String, String)]) -> f64 {
    let mut correct = [0usize; 4];
    let mut total = [0usize; 4];
    let (mut sys, mut refl) = (0usize, 0usize);
    for (h, r) in pairs {
        let h: Vec<&str> = h.split_whitespace().collect();
        let r: Vec<&str> = r.split_whitespace().collect();
        sys += h.len();
        refl += r.len();
        for n in 1..=4 {
            if h.len() < n {
                continue;
            }
            let hg: Vec<&[&str]> = h.windows(n).collect();
            let rg: Vec<&[&str]> = if r.len() >= n { r.windows(n).collect() } else { vec![] };
            total[n - 1] += hg.len();
            let mut distinct: Vec<&[&str]> = Vec::new();
            for g in &hg {
                if !distinct.contains(g) {
                    distinct.push(g);
                }
            }
            for g in distinct {
                let ch = hg.iter().filter(|x| **x == g).count();
                let cr = rg.iter().filter(|x| **x == g).count();
                correct[n - 1] += ch.min(cr);
            }
        }
    }
    if total.contains(&0) {
        return 0.0;
    }
    let mut k = 1.0;
    let mut product = 1.0f64;
    for n in 0..4 {
        let p = if correct[n] == 0 {
            k *= 2.0;
            1.0 / (k * total[n] as f64)
        } else {
            correct[n] as f64 / total[n] as f64
        };
        product *= p;
    }
    let bp = if sys >= refl {
        1.0
    } else if sys == 0 {
        0.0
    } else {
        (1.0 - refl as f64 / sys as f64).exp()
    };
    100.0 * bp * product.powf(0.25)
}

/// Indices sorted by descending cosine, ties to the lower index, by
/// repeated selection of the best remaining candidate.
pub fn exhaustive_ranking(train: &[Vec<f64>], query: &[f64]) -> Vec<usize> {
    let cos = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    };
    let scores: Vec<f64> = train.iter().map(|v| cos(v, query)).collect();
    let mut left: Vec<usize> = (0..train.len()).collect();
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            if scores[left[i]] > scores[left[best]] {
                best = i;
            }
        }
        out.push(left.remove(best));
    }
    out
}

/// Dense TF-IDF vectors over the training vocabulary: raw counts times
/// `ln((1 + N) / (1 + df)) + 1`; query words outside the vocabulary vanish.
pub fn dense_tfidf(train: &[String], query: &str) -> (Vec<Vec<f64>>, Vec<f64>) {
    let terms = |s: &str| -> Vec<String> {
        s.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    };
    let docs: Vec<Vec<String>> = train.iter().map(|d| terms(d)).collect();
    let mut vocab: Vec<String> = docs.iter().flatten().cloned().collect();
    vocab.sort();
    vocab.dedup();
    let n = docs.len() as f64;
    let idf: Vec<f64> = vocab
        .iter()
        .map(|w| {
            let df = docs.iter().filter(|d| d.contains(w)).count() as f64;
            ((1.0 + n) / (1.0 + df)).ln() + 1.0
        })
        .collect();
    let vec_of = |toks: &[String]| -> Vec<f64> {
        vocab
            .iter()
            .zip(&idf)
            .map(|(w, i)| toks.iter().filter(|t| *t == w).count() as f64 * i)
            .collect()
    };
    (docs.iter().map(|d| vec_of(d)).collect(), vec_of(&terms(query)))
}
