//! Few-shot example selection and prompt assembly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{minimum_units, retain_units, truncation_units, TokenBudget};
use crate::error::{Error, Result};
use crate::format::{PROMPT_EXAMPLE_JOIN, PROMPT_TARGET_JOIN};
use crate::knowledge::{Record, StructuredKnowledge};
use crate::linearize::{
    assemble_input, linearize_knowledge, reverse_knowledge, LinearizationConfig,
};
use crate::rng::permutation;

/// `k` distinct records in seeded random order. For a fixed seed the result
/// for `k` is a prefix of the result for `k + 1`.
pub fn select_random(train: &[Record], k: usize, seed: u64) -> Result<Vec<&Record>> {
    if k > train.len() {
        return Err(Error::NotEnoughItems {
            k,
            available: train.len(),
        });
    }
    Ok(permutation(train.len(), seed)
        .into_iter()
        .take(k)
        .map(|i| &train[i])
        .collect())
}

/// Pre-computed vectors keyed by record id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExternalEmbeddings {
    vectors: HashMap<String, Vec<f64>>,
    dim: usize,
}

#[derive(Deserialize)]
struct EmbeddingLine {
    id: String,
    vector: Vec<f64>,
}

impl ExternalEmbeddings {
    pub fn new(vectors: HashMap<String, Vec<f64>>) -> Result<Self> {
        let mut ids: Vec<&String> = vectors.keys().collect();
        ids.sort();
        let dim = ids.first().map_or(0, |id| vectors[*id].len());
        for id in ids {
            let got = vectors[id].len();
            if got != dim {
                return Err(Error::DimensionMismatch {
                    id: id.clone(),
                    expected: dim,
                    got,
                });
            }
        }
        Ok(ExternalEmbeddings { vectors, dim })
    }

    /// Reads `{"id": ..., "vector": [...]}` lines.
    pub fn from_jsonl(text: &str) -> std::result::Result<Self, String> {
        let mut vectors = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let l: EmbeddingLine =
                serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
            vectors.insert(l.id, l.vector);
        }
        Self::new(vectors).map_err(|e| e.to_string())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn get(&self, id: &str) -> Result<&[f64]> {
        let v = self
            .vectors
            .get(id)
            .ok_or_else(|| Error::MissingEmbedding(id.to_string()))?;
        if v.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroEmbedding(id.to_string()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum EmbeddingProvider {
    /// Bag-of-words TF-IDF fitted on the training texts.
    #[default]
    Tfidf,
    External(ExternalEmbeddings),
}

/// Text used to embed a record: its request, or the linearized knowledge
/// when there is no request.
pub fn embedding_text(record: &Record) -> String {
    match record.request.as_deref() {
        Some(r) if !r.trim().is_empty() => r.to_string(),
        _ => record
            .knowledge
            .as_ref()
            .map(linearize_knowledge)
            .unwrap_or_else(|| record.context.join(" ")),
    }
}

fn terms(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

type Sparse = HashMap<usize, f64>;

/// TF-IDF with raw term counts and smoothed idf `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone, Default)]
pub struct TfidfModel {
    vocab: HashMap<String, usize>,
    idf: Vec<f64>,
}

impl TfidfModel {
    pub fn fit<S: AsRef<str>>(docs: &[S]) -> Self {
        let mut vocab: HashMap<String, usize> = HashMap::new();
        let mut df: Vec<usize> = Vec::new();
        for d in docs {
            let mut seen: Vec<usize> = terms(d.as_ref())
                .into_iter()
                .map(|t| {
                    let next = vocab.len();
                    *vocab.entry(t).or_insert(next)
                })
                .collect();
            seen.sort_unstable();
            seen.dedup();
            for i in seen {
                if i >= df.len() {
                    df.resize(i + 1, 0);
                }
                df[i] += 1;
            }
        }
        let n = docs.len() as f64;
        let idf = df
            .iter()
            .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        TfidfModel { vocab, idf }
    }

    /// Terms outside the fitted vocabulary are ignored.
    pub fn transform(&self, doc: &str) -> HashMap<usize, f64> {
        let mut v: Sparse = HashMap::new();
        for t in terms(doc) {
            if let Some(&i) = self.vocab.get(&t) {
                *v.entry(i).or_insert(0.0) += 1.0;
            }
        }
        for (i, x) in v.iter_mut() {
            *x *= self.idf[*i];
        }
        v
    }
}

fn sparse_cosine(a: &Sparse, b: &Sparse) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter_map(|(i, x)| large.get(i).map(|y| x * y))
        .sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Cosine similarity of every training record to the query, in training order.
pub fn similarities(train: &[Record], query: &Record, provider: &EmbeddingProvider) -> Result<Vec<f64>> {
    match provider {
        EmbeddingProvider::Tfidf => {
            let docs: Vec<String> = train.iter().map(embedding_text).collect();
            let model = TfidfModel::fit(&docs);
            let q = model.transform(&embedding_text(query));
            Ok(docs
                .iter()
                .map(|d| sparse_cosine(&model.transform(d), &q))
                .collect())
        }
        EmbeddingProvider::External(e) => {
            let q = e.get(&query.id)?;
            train
                .iter()
                .map(|r| Ok(cosine(e.get(&r.id)?, q)))
                .collect()
        }
    }
}

/// Training indices ordered by descending similarity, ties by ascending index.
pub fn rank_by_similarity(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// The `k` training records most similar to the query, most similar first.
pub fn select_similar<'a>(
    train: &'a [Record],
    query: &Record,
    k: usize,
    provider: &EmbeddingProvider,
) -> Result<Vec<&'a Record>> {
    if k > train.len() {
        return Err(Error::NotEnoughItems {
            k,
            available: train.len(),
        });
    }
    let scores = similarities(train, query, provider)?;
    Ok(rank_by_similarity(&scores)
        .into_iter()
        .take(k)
        .map(|i| &train[i])
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptConfig {
    #[serde(default)]
    pub linearization: LinearizationConfig,
    /// Render the first selected example closest to the query.
    #[serde(default = "default_most_similar_last")]
    pub most_similar_last: bool,
    /// Optional input template with `{knowledge}`, `{request}` and `{context}`
    /// placeholders, used instead of the default assembly.
    #[serde(default)]
    pub template: Option<String>,
}

fn default_most_similar_last() -> bool {
    true
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            linearization: LinearizationConfig::default(),
            most_similar_last: true,
            template: None,
        }
    }
}

fn render_input(
    record: &Record,
    knowledge: Option<&StructuredKnowledge>,
    cfg: &PromptConfig,
) -> Result<String> {
    let lin = &cfg.linearization;
    let knowledge_text = match knowledge {
        Some(k) if lin.reverse_knowledge => linearize_knowledge(&reverse_knowledge(k)),
        Some(k) => linearize_knowledge(k),
        None => String::new(),
    };
    match &cfg.template {
        Some(t) => Ok(t
            .replace("{knowledge}", &knowledge_text)
            .replace("{request}", record.request.as_deref().unwrap_or(""))
            .replace("{context}", &record.context.join(crate::format::CONTEXT_JOIN))),
        None => assemble_input(record.request.as_deref(), &knowledge_text, &record.context, lin),
    }
}

fn render_example(
    record: &Record,
    knowledge: Option<&StructuredKnowledge>,
    cfg: &PromptConfig,
) -> Result<String> {
    Ok(format!(
        "{}{PROMPT_TARGET_JOIN}{}",
        render_input(record, knowledge, cfg)?,
        record.target
    ))
}

fn compose(examples: &[String], query: &str, cfg: &PromptConfig) -> String {
    let mut parts: Vec<&str> = examples.iter().map(String::as_str).collect();
    if cfg.most_similar_last {
        parts.reverse();
    }
    parts.push(query);
    parts.join(PROMPT_EXAMPLE_JOIN)
}

/// Number of examples kept by a prompt, with the prompt text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prompt {
    pub text: String,
    pub examples: usize,
    pub truncated: bool,
}

/// Builds a prompt from examples in selection order plus the query input.
///
/// Trailing examples (in selection order) are dropped until the prompt fits.
/// If a single example still overflows, its knowledge is truncated.
pub fn build_prompt(
    examples: &[&Record],
    query: &Record,
    budget: &TokenBudget,
    cfg: &PromptConfig,
) -> Result<Prompt> {
    if examples.is_empty() {
        return Err(Error::NoExamples);
    }
    let query_text = render_input(query, query.knowledge.as_ref(), cfg)?;
    let needed = budget.count(&query_text);
    if needed > budget.max_tokens {
        return Err(Error::QueryExceedsBudget {
            needed,
            budget: budget.max_tokens,
        });
    }
    let rendered = examples
        .iter()
        .map(|r| render_example(r, r.knowledge.as_ref(), cfg))
        .collect::<Result<Vec<_>>>()?;
    for n in (1..=rendered.len()).rev() {
        let text = compose(&rendered[..n], &query_text, cfg);
        if budget.count(&text) <= budget.max_tokens {
            return Ok(Prompt {
                text,
                examples: n,
                truncated: false,
            });
        }
    }

    let first = examples[0];
    let attempt = |k: Option<&StructuredKnowledge>| -> Result<(String, usize)> {
        let text = compose(&[render_example(first, k, cfg)?], &query_text, cfg);
        let n = budget.count(&text);
        Ok((text, n))
    };
    let Some(k) = first.knowledge.as_ref() else {
        let (_, needed) = attempt(None)?;
        return Err(Error::BudgetExceeded {
            needed,
            available: budget.max_tokens,
        });
    };
    let lo = minimum_units(k);
    let (text, needed) = attempt(Some(&retain_units(k, lo)))?;
    if needed > budget.max_tokens {
        return Err(Error::BudgetExceeded {
            needed,
            available: budget.max_tokens,
        });
    }
    let (mut lo, mut hi, mut best) = (lo, truncation_units(k), text);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let (text, n) = attempt(Some(&retain_units(k, mid)))?;
        if n <= budget.max_tokens {
            lo = mid;
            best = text;
        } else {
            hi = mid;
        }
    }
    Ok(Prompt {
        text: best,
        examples: 1,
        truncated: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CountStrategy;
    use crate::knowledge::{OutputKind, Table};

    fn record(id: &str, request: &str) -> Record {
        Record {
            id: id.into(),
            task: "t".into(),
            request: Some(request.into()),
            context: vec![],
            knowledge: None,
            target: format!("answer {id}"),
            output_kind: OutputKind::FreeText,
        }
    }

    fn corpus() -> Vec<Record> {
        vec![
            record("0", "red apple"),
            record("1", "green apple pie"),
            record("2", "blue sky"),
            record("3", "red red car"),
            record("4", "apple"),
        ]
    }

    #[test]
    fn random_selection() {
        let train: Vec<Record> = (0..100).map(|i| record(&i.to_string(), "x")).collect();
        let ids = |v: Vec<&Record>| v.iter().map(|r| r.id.clone()).collect::<Vec<_>>();
        let a = ids(select_random(&train, 5, 1).unwrap());
        assert_eq!(a, ids(select_random(&train, 5, 1).unwrap()));
        assert_ne!(a, ids(select_random(&train, 5, 2).unwrap()));
        assert_eq!(a[..4], ids(select_random(&train, 4, 1).unwrap())[..]);
        assert_eq!(select_random(&train, 100, 3).unwrap().len(), 100);
        assert!(matches!(
            select_random(&train, 101, 3),
            Err(Error::NotEnoughItems { .. })
        ));
    }

    #[test]
    fn tfidf_by_hand() {
        // N = 5; df(red) = 2, df(apple) = 3
        let model = TfidfModel::fit(&corpus().iter().map(embedding_text).collect::<Vec<_>>());
        let idf_red = (6.0f64 / 3.0).ln() + 1.0;
        let idf_apple = (6.0f64 / 4.0).ln() + 1.0;
        let q = model.transform("red apple");
        let r3 = model.transform("red red car");
        let idf_car = (6.0f64 / 2.0).ln() + 1.0;
        let expected = (idf_red * 2.0 * idf_red)
            / ((idf_red.powi(2) + idf_apple.powi(2)).sqrt()
                * ((2.0 * idf_red).powi(2) + idf_car.powi(2)).sqrt());
        assert!((sparse_cosine(&q, &r3) - expected).abs() < 1e-12);
    }

    #[test]
    fn similar_selection() {
        let train = corpus();
        let q = record("q", "red apple");
        let top = select_similar(&train, &q, 2, &EmbeddingProvider::Tfidf).unwrap();
        assert_eq!(top[0].id, "0");
        assert_eq!(top.len(), 2);
        let none = record("q", "zebra");
        let ids: Vec<&str> = select_similar(&train, &none, 3, &EmbeddingProvider::Tfidf)
            .unwrap()
            .iter()
            .map(|r| r.id.as_str())
            .collect();
        assert_eq!(ids, ["0", "1", "2"]);
    }

    #[test]
    fn external_embeddings() {
        let e = ExternalEmbeddings::from_jsonl(
            "{\"id\":\"0\",\"vector\":[1,0]}\n{\"id\":\"1\",\"vector\":[0,1]}\n{\"id\":\"q\",\"vector\":[0.1,1]}\n",
        )
        .unwrap();
        assert_eq!(e.dim(), 2);
        let train = vec![record("0", "a"), record("1", "b")];
        let p = EmbeddingProvider::External(e);
        let top = select_similar(&train, &record("q", "c"), 1, &p).unwrap();
        assert_eq!(top[0].id, "1");
        assert!(matches!(
            select_similar(&train, &record("zz", "c"), 1, &p),
            Err(Error::MissingEmbedding(_))
        ));
        let zero = ExternalEmbeddings::from_jsonl("{\"id\":\"0\",\"vector\":[0,0]}\n{\"id\":\"q\",\"vector\":[1,0]}").unwrap();
        assert!(matches!(
            select_similar(&train[..1], &record("q", "c"), 1, &EmbeddingProvider::External(zero)),
            Err(Error::ZeroEmbedding(_))
        ));
        assert!(ExternalEmbeddings::from_jsonl("{\"id\":\"0\",\"vector\":[1]}\n{\"id\":\"1\",\"vector\":[1,2]}").is_err());
    }

    fn budget(n: usize) -> TokenBudget {
        TokenBudget::new(n, CountStrategy::WordPunct).unwrap()
    }

    #[test]
    fn prompt_layout() {
        let train = corpus();
        let ex: Vec<&Record> = vec![&train[0], &train[1]];
        let q = record("q", "red apple");
        let p = build_prompt(&ex, &q, &budget(1000), &PromptConfig::default()).unwrap();
        assert_eq!(
            p.text,
            "green apple pie\nanswer 1\n\nred apple\nanswer 0\n\nred apple"
        );
        let cfg = PromptConfig {
            most_similar_last: false,
            template: Some("{knowledge} || {request}".into()),
            ..PromptConfig::default()
        };
        let p = build_prompt(&ex, &q, &budget(1000), &cfg).unwrap();
        assert_eq!(p.text, " || red apple\nanswer 0\n\n || green apple pie\nanswer 1\n\n || red apple");
    }

    #[test]
    fn prompt_budget() {
        let train = corpus();
        let ex: Vec<&Record> = train.iter().collect();
        let q = record("q", "red apple");
        // query 2 tokens, examples 4, 5, 4, 5, 3 tokens
        let p = build_prompt(&ex, &q, &budget(11), &PromptConfig::default()).unwrap();
        assert_eq!(p.examples, 2);
        assert!(build_prompt(&ex, &q, &budget(1), &PromptConfig::default()).is_err());
        assert!(matches!(
            build_prompt(&[], &q, &budget(10), &PromptConfig::default()),
            Err(Error::NoExamples)
        ));
    }

    #[test]
    fn single_example_is_truncated() {
        let mut ex = record("e", "q");
        ex.knowledge = Some(StructuredKnowledge::Table(Table::new(
            vec!["a".into()],
            (0..20).map(|i| vec![format!("v{i}")]).collect(),
        )));
        let q = record("q", "red apple");
        let p = build_prompt(&[&ex], &q, &budget(40), &PromptConfig::default()).unwrap();
        assert!(p.truncated);
        assert_eq!(p.examples, 1);
        assert!(budget(40).count(&p.text) <= 40);
        assert!(p.text.contains("row 1 : v0"));
    }
}
