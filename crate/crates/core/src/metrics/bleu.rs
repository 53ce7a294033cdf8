//! Corpus BLEU-4: lowercased, single reference, exponential smoothing of
//! zero n-gram matches, 13a tokenization, standard corpus brevity penalty.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use crate::error::{Error, Result};

const MAX_ORDER: usize = 4;

struct Rules {
    punct: Regex,
    period_comma_after_nondigit: Regex,
    period_comma_before_nondigit: Regex,
    dash_after_digit: Regex,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| Rules {
        // {-~, [-`, space-&, (-+, :-@, /
        punct: Regex::new(r"([\x7B-\x7E\x5B-\x60\x20-\x26\x28-\x2B\x3A-\x40/])").unwrap(),
        period_comma_after_nondigit: Regex::new(r"([^0-9])([\.,])").unwrap(),
        period_comma_before_nondigit: Regex::new(r"([\.,])([^0-9])").unwrap(),
        dash_after_digit: Regex::new(r"([0-9])(-)").unwrap(),
    })
}

/// mteval-v13a tokenization.
pub fn tokenize_13a(line: &str) -> Vec<String> {
    let mut line = line
        .replace("<skipped>", "")
        .replace("-\n", "")
        .replace('\n', " ");
    if line.contains('&') {
        line = line
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let r = rules();
    let line = format!(" {line} ");
    let line = r.punct.replace_all(&line, " ${1} ");
    let line = r.period_comma_after_nondigit.replace_all(&line, "${1} ${2} ");
    let line = r.period_comma_before_nondigit.replace_all(&line, " ${1} ${2}");
    let line = r.dash_after_digit.replace_all(&line, "${1} ${2} ");
    line.split_whitespace().map(str::to_string).collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sufficient statistics of corpus BLEU.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BleuStats {
    pub correct: [usize; MAX_ORDER],
    pub total: [usize; MAX_ORDER],
    pub sys_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn add_sentence(&mut self, hyp: &str, reference: &str) {
        let hyp = tokenize_13a(&hyp.to_lowercase());
        let reference = tokenize_13a(&reference.to_lowercase());
        self.sys_len += hyp.len();
        self.ref_len += reference.len();
        for n in 1..=MAX_ORDER {
            let h = ngram_counts(&hyp, n);
            let r = ngram_counts(&reference, n);
            self.total[n - 1] += hyp.len().saturating_sub(n - 1);
            self.correct[n - 1] += h
                .iter()
                .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
                .sum::<usize>();
        }
    }

    /// Score in [0, 100].
    pub fn score(&self) -> f64 {
        // Precisions are kept as fractions so a perfect corpus yields 100 exactly.
        let mut log_sum = 0.0;
        let mut smooth = 1.0;
        for n in 0..MAX_ORDER {
            if self.total[n] == 0 {
                return 0.0;
            }
            let p = if self.correct[n] == 0 {
                smooth *= 2.0;
                1.0 / (smooth * self.total[n] as f64)
            } else {
                self.correct[n] as f64 / self.total[n] as f64
            };
            log_sum += p.ln();
        }
        let bp = if self.sys_len < self.ref_len {
            if self.sys_len == 0 {
                0.0
            } else {
                (1.0 - self.ref_len as f64 / self.sys_len as f64).exp()
            }
        } else {
            1.0
        };
        100.0 * bp * (log_sum / MAX_ORDER as f64).exp()
    }
}

pub fn corpus_bleu<S: AsRef<str>>(predictions: &[S], references: &[S]) -> Result<f64> {
    if predictions.len() != references.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            references: references.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut stats = BleuStats::default();
    for (p, r) in predictions.iter().zip(references) {
        stats.add_sentence(p.as_ref(), r.as_ref());
    }
    Ok(stats.score())
}
