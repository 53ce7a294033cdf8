//! The nine acceptance criteria. Each returns a one-line summary on
//! success and a description of the first failure otherwise.

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use skgkit::codec::{
    parse_answers, parse_boolean, parse_dialogue_state, serialize_answers, serialize_boolean,
    serialize_dialogue_state,
};
use skgkit::corpus::{
    count_tokens, length_histogram, retain_units, truncate_knowledge, truncation_units,
    CountStrategy, TokenBudget,
};
use skgkit::fewshot::{
    build_prompt, embedding_text, select_similar, EmbeddingProvider, ExternalEmbeddings,
    PromptConfig,
};
use skgkit::knowledge::{
    FormalLanguage, OutputKind, Record, StructuredKnowledge, Table, TableLayout, Triple, TripleSet,
};
use skgkit::linearize::{linearize_knowledge, record_input, reverse_knowledge, LinearizationConfig};
use skgkit::metrics::corpus_bleu;
use skgkit::mixture::{sample_schedule, temperature_weights, MixtureSpec};
use skgkit::validate::{classify_error, ErrorClass};

use super::strategies::*;
use super::{golden_expected, golden_mismatches, golden_records};

pub type Outcome = Result<String, String>;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

// 1 -------------------------------------------------------------------------

pub fn fixture_fidelity() -> Outcome {
    let records = golden_records();
    let expected = golden_expected();
    if records.len() != 21 || expected.len() != 21 {
        return Err(format!("expected 21 fixtures, found {}/{}", records.len(), expected.len()));
    }
    let mut ok = 0;
    let mut failures = Vec::new();
    for (r, e) in records.iter().zip(&expected) {
        let m = golden_mismatches(r, e);
        if m.is_empty() {
            ok += 1;
        } else {
            failures.push(format!("{}: {}", r.id, m.join("; ")));
        }
    }
    if failures.is_empty() {
        Ok(format!("{ok}/21 worked examples bit-exact"))
    } else {
        Err(format!("{ok}/21 bit-exact; {}", failures.join(" / ")))
    }
}

// 2 -------------------------------------------------------------------------

/// Gold expressions from the worked examples.
pub const GOLDS: [(&str, FormalLanguage); 8] = [
    ("select count(*) from singer", FormalLanguage::Sql),
    ("(AND government.government_agency (JOIN organization.organization.founders (JOIN (R organization.organization.founders) m.06dr9)))", FormalLanguage::Sexpr),
    ("(JOIN (R government.government_position_held.office_holder) (AND (JOIN government.government_position_held.time_macro 2015^^http://www.w3.org/2001/XMLSchema#date) (AND (JOIN government.government_position_held.office_position_or_title m.0j5_3sz) (JOIN (R government.governmental_jurisdiction.governing_officials) m.06mkj))))", FormalLanguage::Sexpr),
    ("[IN:CREATE_CALL [SL:CONTACT Nicholas ] [SL:CONTACT Natasha ] ]", FormalLanguage::Top),
    ("select country from airlines where airline = \"JetBlue Airways\"", FormalLanguage::Sql),
    ("select t1.model from model_list as t1 join car_makers as t2 on t1.maker = t2.id group by t2.id order by count ( * ) desc limit 1", FormalLanguage::Sql),
    ("SELECT Fname FROM FACULTY WHERE Rank  =  \"Professor\" ORDER BY Fname", FormalLanguage::Sql),
    ("eq { count { filter_eq { all_rows ; expected year of completion ; 2006 } } ; 3 } = true", FormalLanguage::Logic),
];

/// (gold index, prediction) pairs that parse but differ from the gold.
pub fn mutated_valid() -> Vec<(usize, String)> {
    let sub = |g: usize, from: &str, to: &str| {
        let text = GOLDS[g].0.replacen(from, to, 1);
        assert_ne!(text, GOLDS[g].0);
        (g, text)
    };
    vec![
        sub(0, "singer", "concert"),
        sub(0, "singer", "stadium"),
        sub(0, "count(*)", "name"),
        sub(0, "singer", "singer where age > 20"),
        sub(1, "government.government_agency", "government.government_office"),
        sub(1, "m.06dr9", "m.0abc1"),
        sub(1, "(JOIN (R organization.organization.founders) m.06dr9)", "m.06dr9"),
        sub(2, "2015", "2016"),
        sub(2, "m.0j5_3sz", "m.0j5_3sv"),
        sub(3, " [SL:CONTACT Natasha ]", ""),
        sub(3, "Nicholas", "Natasha"),
        sub(3, "IN:CREATE_CALL", "IN:GET_CALL"),
        sub(4, "JetBlue Airways", "Delta"),
        sub(4, "select country", "select airline"),
        sub(5, "desc", "asc"),
        sub(5, "limit 1", "limit 3"),
        sub(6, "ORDER BY Fname", "ORDER BY Lname"),
        sub(6, "Professor", "AsstProf"),
        sub(7, "; 3 }", "; 4 }"),
        sub(7, "2006", "2007"),
        sub(7, "filter_eq", "filter_greater"),
    ]
}

/// (gold index, prediction) pairs that do not parse.
pub fn mangled() -> Vec<(usize, String)> {
    let g = |i: usize| GOLDS[i].0;
    vec![
        (0, "select count(* from singer".into()),
        (0, "select count(*) from".into()),
        (0, "from singer select".into()),
        (0, "select count(*) from singer where".into()),
        (1, g(1)[..g(1).len() - 1].to_string()),
        (1, "(AND government.government_agency (JOIN".into()),
        (1, ")(".into()),
        (2, g(2)[1..].to_string()),
        (2, format!("{})", g(2))),
        (3, g(3)[..g(3).len() - 2].to_string()),
        (3, "IN:CREATE_CALL Nicholas ]".into()),
        (3, format!("{} ]", g(3))),
        (4, "select country from airlines where airline = \"JetBlue Airways".into()),
        (4, "select country airlines where".into()),
        (5, g(5).replace("( * )", "( *")),
        (5, "select from".into()),
        (6, "SELECT Fname FROM FACULTY WHERE Rank  =".into()),
        (6, "SELECT FROM FACULTY".into()),
        (7, g(7).replace("; 3 }", "; 3")),
        (7, "eq { count } } ; 3 } = true".into()),
        (7, String::new()),
    ]
}

pub fn validity_partition() -> Outcome {
    let exact = |a: &str, b: &str| a == b;
    let classify = |gold: usize, pred: &str| {
        let (text, lang) = GOLDS[gold];
        classify_error(pred, text, lang, exact).map_err(|e| e.to_string())
    };
    let mut counts = [0usize; 3];
    let mut tally = |c: ErrorClass| match c {
        ErrorClass::Correct => counts[0] += 1,
        ErrorClass::InvalidOutput => counts[1] += 1,
        ErrorClass::ValidButWrong => counts[2] += 1,
    };
    for (i, (gold, _)) in GOLDS.iter().enumerate() {
        let c = classify(i, gold)?;
        if c != ErrorClass::Correct {
            return Err(format!("gold {i} classified as {c:?}"));
        }
        tally(c);
    }
    for (i, pred) in mutated_valid() {
        let c = classify(i, &pred)?;
        if c != ErrorClass::ValidButWrong {
            return Err(format!("mutated `{pred}` classified as {c:?}"));
        }
        tally(c);
    }
    for (i, pred) in mangled() {
        let c = classify(i, &pred)?;
        if c != ErrorClass::InvalidOutput {
            return Err(format!("mangled `{pred}` classified as {c:?}"));
        }
        tally(c);
    }
    let total: usize = counts.iter().sum();
    if total != 50 {
        return Err(format!("partition covers {total} items, expected 50"));
    }
    Ok(format!(
        "50 items: {} correct + {} invalid + {} valid-but-wrong, no gold flagged invalid",
        counts[0], counts[1], counts[2]
    ))
}

// 3 -------------------------------------------------------------------------

pub fn codec_round_trips() -> Outcome {
    run(1000, answers(), |a| {
        let text = serialize_answers(&a).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(parse_answers(&text), a);
        Ok(())
    })?;
    run(1000, any::<bool>(), |b| {
        prop_assert_eq!(parse_boolean(serialize_boolean(b)), Some(b));
        Ok(())
    })?;
    run(1000, ontology_and_state(), |(o, state)| {
        let text = serialize_dialogue_state(&o, &state).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let parsed = parse_dialogue_state(&o, &text);
        prop_assert!(parsed.residue.is_empty());
        prop_assert_eq!(parsed.state, state);
        Ok(())
    })?;
    Ok("1000 cases each for answers, booleans and dialogue states".into())
}

// 4 -------------------------------------------------------------------------

pub fn reversal_involution() -> Outcome {
    run(1000, knowledge(), |k| {
        let r = reverse_knowledge(&k);
        prop_assert_eq!(reverse_knowledge(&r), k.clone());
        prop_assert_eq!(cell_multiset(&r), cell_multiset(&k));
        Ok(())
    })?;
    Ok("1000 knowledge values: reverse is an involution preserving cells".into())
}

// 5 -------------------------------------------------------------------------

pub fn temperature_mixing() -> Outcome {
    let w1 = temperature_weights(&MixtureSpec::new(vec![7000, 1000], 1.0).unwrap()).unwrap();
    if w1 != [0.875, 0.125] {
        return Err(format!("T=1 weights {w1:?}"));
    }
    let w2 = temperature_weights(&MixtureSpec::new(vec![7000, 1000], 2.0).unwrap()).unwrap();
    let (a, b) = (7000f64.sqrt(), 1000f64.sqrt());
    let oracle = [a / (a + b), b / (a + b)];
    let err2 = w2.iter().zip(oracle).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if err2 > 1e-9 {
        return Err(format!("T=2 weights {w2:?} vs oracle {oracle:?}"));
    }
    let steps = 100_000;
    let schedule = sample_schedule(&w2, steps, 2022).map_err(|e| e.to_string())?;
    let freq0 = schedule.iter().filter(|&&t| t == 0).count() as f64 / steps as f64;
    let dev = (freq0 - w2[0]).abs();
    if dev > 0.01 {
        return Err(format!("empirical {freq0} vs analytic {}", w2[0]));
    }
    Ok(format!(
        "T=1 exact [0.875, 0.125]; T=2 within {err2:.1e} of sqrt oracle; 100k-step deviation {dev:.4}"
    ))
}

// 6 -------------------------------------------------------------------------

pub fn bleu_sanity() -> Outcome {
    let refs: Vec<String> = golden_records()
        .into_iter()
        .filter(|r| r.output_kind == OutputKind::FreeText)
        .map(|r| r.target)
        .collect();
    let perfect = corpus_bleu(&refs, &refs).map_err(|e| e.to_string())?;
    if perfect != 100.0 {
        return Err(format!("identical corpus scored {perfect}"));
    }
    let worst = std::cell::Cell::new(0.0f64);
    run(20, corpus(), |pairs| {
        let (h, r): (Vec<String>, Vec<String>) = pairs.iter().cloned().unzip();
        let got = corpus_bleu(&h, &r).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let want = bleu_oracle(&pairs);
        worst.set(worst.get().max((got - want).abs()));
        prop_assert!((got - want).abs() < 1e-6, "bleu {} vs oracle {}", got, want);
        Ok(())
    })?;
    Ok(format!(
        "identical corpus = 100.0 exactly; 20 random corpora within {:.1e} of brute-force oracle",
        worst.get()
    ))
}

// 7 -------------------------------------------------------------------------

fn min_units(k: &StructuredKnowledge) -> usize {
    match k {
        StructuredKnowledge::Table(t) if t.layout == TableLayout::HeaderOnly => 0,
        other => truncation_units(other).min(1),
    }
}

/// Largest unit count whose linearization fits, by scanning every count.
pub fn brute_force_units(k: &StructuredKnowledge, prefix: usize, budget: &TokenBudget) -> Option<usize> {
    (min_units(k)..=truncation_units(k))
        .rev()
        .find(|&n| prefix + budget.count(&linearize_knowledge(&retain_units(k, n))) <= budget.max_tokens)
}

fn header_text(k: &StructuredKnowledge) -> String {
    linearize_knowledge(&retain_units(k, 0))
}

pub fn truncation() -> Outcome {
    let case = (truncatable(), 0usize..20, 0.0f64..1.0, any::<bool>());
    run(500, case, |(k, prefix, frac, whitespace)| {
        let counter = if whitespace { CountStrategy::Whitespace } else { CountStrategy::WordPunct };
        let probe = TokenBudget::new(1, counter).unwrap();
        let full = prefix + probe.count(&linearize_knowledge(&k));
        let core = prefix + probe.count(&linearize_knowledge(&retain_units(&k, min_units(&k))));
        let max_tokens = core + ((full - core) as f64 * frac) as usize;
        let budget = TokenBudget::new(max_tokens.max(1), counter).unwrap();
        let out = truncate_knowledge(&k, prefix, &budget).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let text = linearize_knowledge(&out);
        prop_assert!(prefix + budget.count(&text) <= budget.max_tokens, "does not fit");
        if let (StructuredKnowledge::Table(a), StructuredKnowledge::Table(b)) = (&k, &out) {
            prop_assert_eq!(&a.header, &b.header);
            let header = header_text(&k);
            prop_assert!(text.starts_with(header.trim_end()), "header lost: {} vs {}", text, header);
        }
        let units = truncation_units(&out);
        prop_assert_eq!(Some(units), brute_force_units(&k, prefix, &budget));
        prop_assert_eq!(&out, &retain_units(&k, units));
        let again = truncate_knowledge(&out, prefix, &budget).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(again, out);
        Ok(())
    })?;
    Ok("500 cases: fits, header kept, unit count = brute-force maximum, idempotent".into())
}

// 8 -------------------------------------------------------------------------

fn pool() -> impl Strategy<Value = (Vec<Record>, Record)> {
    let rec = || (prop::collection::vec(word(), 1..6), table_with(1, 6), word());
    (prop::collection::vec(rec(), 2..10), rec()).prop_map(|(train, q)| {
        let mk = |i: usize, (req, t, target): (Vec<String>, Table, String)| {
            table_record(format!("r{i}"), req.join(" "), t, target)
        };
        let train = train.into_iter().enumerate().map(|(i, r)| mk(i, r)).collect();
        (train, mk(999, q))
    })
}

pub fn fewshot() -> Outcome {
    let cfg = PromptConfig::default();
    let lin = LinearizationConfig::default();
    run(200, (pool(), 1usize..5, 0usize..400), |((train, query), k, extra)| {
        let k = k.min(train.len());
        let probe = TokenBudget::default();
        let query_tokens = probe.count(&record_input(&query, &lin).unwrap());
        let budget = TokenBudget::new(query_tokens + 60 + extra, CountStrategy::WordPunct).unwrap();
        let selected = select_similar(&train, &query, k, &EmbeddingProvider::Tfidf)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let prompt = build_prompt(&selected, &query, &budget, &cfg)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(prompt.examples >= 1);
        prop_assert!(count_tokens(&prompt.text, CountStrategy::WordPunct) <= budget.max_tokens);
        Ok(())
    })?;
    let checked = std::cell::Cell::new(0);
    let vectors = prop::collection::vec(prop::collection::vec(-3i8..4, 4), 3..12);
    run(25, (vectors, prop::collection::vec(-3i8..4, 4), 1usize..6), |(vs, q, k)| {
        let train: Vec<Record> = vs
            .iter()
            .enumerate()
            .map(|(i, _)| table_record(format!("r{i}"), "q".into(), Table::new(vec!["a".into()], vec![]), "x".into()))
            .collect();
        let query = table_record("query".into(), "q".into(), Table::new(vec!["a".into()], vec![]), "x".into());
        let to_f = |v: &Vec<i8>| -> Vec<f64> {
            let mut out: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            if out.iter().all(|x| *x == 0.0) {
                out[0] = 1.0;
            }
            out
        };
        let mut map: std::collections::HashMap<String, Vec<f64>> =
            train.iter().zip(&vs).map(|(r, v)| (r.id.clone(), to_f(v))).collect();
        map.insert("query".into(), to_f(&q));
        let dense: Vec<Vec<f64>> = vs.iter().map(to_f).collect();
        let provider = EmbeddingProvider::External(ExternalEmbeddings::new(map).unwrap());
        let k = k.min(train.len());
        let got: Vec<&str> = select_similar(&train, &query, k, &provider)
            .unwrap()
            .iter()
            .map(|r| r.id.as_str())
            .collect();
        let want: Vec<String> = exhaustive_ranking(&dense, &to_f(&q))
            .into_iter()
            .take(k)
            .map(|i| format!("r{i}"))
            .collect();
        prop_assert_eq!(got, want);
        checked.set(checked.get() + 1);
        Ok(())
    })?;
    run(25, (pool(), 1usize..5), |((train, query), k)| {
        let k = k.min(train.len());
        let texts: Vec<String> = train.iter().map(embedding_text).collect();
        let (dense, q) = dense_tfidf(&texts, &embedding_text(&query));
        let got: Vec<String> = select_similar(&train, &query, k, &EmbeddingProvider::Tfidf)
            .unwrap()
            .iter()
            .map(|r| r.id.clone())
            .collect();
        let ranked = exhaustive_ranking(&dense, &q);
        let want: Vec<String> = ranked.into_iter().take(k).map(|i| train[i].id.clone()).collect();
        prop_assert_eq!(got, want);
        checked.set(checked.get() + 1);
        Ok(())
    })?;
    Ok(format!(
        "200 prompts fit with >=1 example; top-k = exhaustive cosine ranking on {} corpora",
        checked.get()
    ))
}

// 9 -------------------------------------------------------------------------

pub fn dart_like_corpus(n: usize, seed: u64) -> Vec<Record> {
    let mut runner = TestRunner::new_with_rng(
        Config::default(),
        TestRng::from_seed(RngAlgorithm::ChaCha, &seed_bytes(seed)),
    );
    let strategy = (
        prop::collection::vec(("[A-Z][a-z]{2,9}( [A-Z][a-z]{2,9}){0,2}", "[a-z_]{3,12}", "[A-Za-z0-9 ,]{1,24}"), 1..8),
        "[A-Z][a-z]{2,8}( [a-z]{2,8}){4,20}\\.",
    );
    (0..n)
        .map(|i| {
            let (triples, target) = strategy.new_tree(&mut runner).unwrap().current();
            Record {
                id: format!("dart-{i}"),
                task: "dart".into(),
                request: None,
                context: vec![],
                knowledge: Some(StructuredKnowledge::Triples(TripleSet::new(
                    triples.into_iter().map(|(s, r, o)| Triple::new(s, r, o)).collect(),
                ))),
                target,
                output_kind: OutputKind::FreeText,
            }
        })
        .collect()
}

fn seed_bytes(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    out[..8].copy_from_slice(&seed.to_le_bytes());
    out
}

pub fn histogram() -> Outcome {
    let records = dart_like_corpus(1000, 7);
    let h = length_histogram(&records, &LinearizationConfig::default(), CountStrategy::WordPunct, None);
    for (name, stream) in h.streams() {
        let sum: f64 = stream.bins.iter().map(|b| b.percentage).sum();
        if (sum - 100.0).abs() > 1e-9 {
            return Err(format!("{name} percentages sum to {sum}"));
        }
        let counted: usize = stream.bins.iter().map(|b| b.count).sum();
        if counted != records.len() {
            return Err(format!("{name} bins count {counted} records"));
        }
    }
    let first = &h.structured.bins[0];
    if first.lower != 0 || first.upper != Some(512) || first.percentage != 100.0 {
        return Err(format!("structured first bin {first:?}"));
    }
    Ok(format!(
        "{} DART-like records: 100% of structured inputs in [0,512); every stream sums to 100%",
        records.len()
    ))
}
