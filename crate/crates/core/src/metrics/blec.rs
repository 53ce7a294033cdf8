//! Keyword-coverage check between a formal expression and a generated
//! sentence. Every keyword extracted from the expression must be realized
//! in the sentence:
//!
//! * numeric literals, matched by value or by English number word up to twenty;
//! * quoted string literals, matched as case-insensitive substrings
//!   (`%` wildcards removed);
//! * for SQL, `order by ... limit 1` requires a superlative cue word and
//!   `count(` requires a counting cue phrase. `limit 1` itself is not a number.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge::FormalLanguage;
use crate::validate::check_validity;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Keyword {
    Number(String),
    Literal(String),
    Superlative,
    Count,
}

const NUMBER_WORDS: [&str; 21] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen", "twenty",
];

const SUPERLATIVE_CUES: &[&str] = &[
    "most", "least", "highest", "lowest", "largest", "smallest", "biggest", "greatest",
    "fewest", "maximum", "minimum", "max", "min", "best", "worst", "top", "first", "last",
    "longest", "shortest", "oldest", "youngest", "earliest", "latest", "newest", "cheapest",
    "heaviest", "lightest", "tallest", "fastest", "slowest", "richest", "poorest", "hottest",
    "coldest",
];

const COUNT_CUES: &[&str] = &["how many", "number of", "count", "total", "amount of"];

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_number(s: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^-?[0-9]+(\.[0-9]+)?$").unwrap())
        .is_match(s)
}

fn push_unique(out: &mut Vec<Keyword>, k: Keyword) {
    if !out.contains(&k) {
        out.push(k);
    }
}

fn sql_keywords(sql: &str) -> Vec<Keyword> {
    let chars: Vec<char> = sql.chars().collect();
    let mut out = Vec::new();
    let mut words: Vec<String> = Vec::new();
    let mut has_order_by = false;
    let mut has_limit_one = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\'' || c == '"' {
            let mut lit = String::new();
            i += 1;
            while i < chars.len() {
                if chars[i] == c {
                    if chars.get(i + 1) == Some(&c) {
                        lit.push(c);
                        i += 2;
                        continue;
                    }
                    break;
                }
                lit.push(chars[i]);
                i += 1;
            }
            i += 1;
            let lit = lit.replace('%', "");
            let lit = lit.trim();
            if !lit.is_empty() {
                if is_number(lit) {
                    push_unique(&mut out, Keyword::Number(lit.to_string()));
                } else {
                    push_unique(&mut out, Keyword::Literal(lit.to_string()));
                }
            }
            words.clear();
        } else if c.is_ascii_digit() && (i == 0 || !(is_ident_char(chars[i - 1]) || chars[i - 1] == '.')) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && is_ident_char(chars[i]) {
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                continue;
            }
            let num: String = chars[start..i].iter().collect();
            let num = num.trim_end_matches('.').to_string();
            if words.last().map(String::as_str) == Some("limit") && num == "1" {
                has_limit_one = true;
            } else {
                push_unique(&mut out, Keyword::Number(num.clone()));
            }
            words.push(num);
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (is_ident_char(chars[i]) || chars[i] == '.') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect::<String>().to_lowercase();
            if word == "by" && words.last().map(String::as_str) == Some("order") {
                has_order_by = true;
            }
            if word == "count" {
                let mut j = i;
                while j < chars.len() && chars[j].is_whitespace() {
                    j += 1;
                }
                if chars.get(j) == Some(&'(') {
                    push_unique(&mut out, Keyword::Count);
                }
            }
            words.push(word);
        } else {
            if !c.is_whitespace() {
                words.push(c.to_string());
            }
            i += 1;
        }
    }
    if has_order_by && has_limit_one {
        push_unique(&mut out, Keyword::Superlative);
    }
    out
}

fn generic_keywords(text: &str, separators: &[char]) -> Vec<Keyword> {
    let mut out = Vec::new();
    for tok in text.split(|c: char| c.is_whitespace() || separators.contains(&c)) {
        if is_number(tok) {
            push_unique(&mut out, Keyword::Number(tok.to_string()));
        }
    }
    out
}

/// Keywords a faithful description of `formal` has to mention.
pub fn extract_keywords(formal: &str, language: FormalLanguage) -> Vec<Keyword> {
    match language {
        FormalLanguage::Sql => sql_keywords(formal),
        FormalLanguage::Logic => generic_keywords(formal, &['{', '}', ';', '=']),
        FormalLanguage::Sexpr => generic_keywords(formal, &['(', ')']),
        FormalLanguage::Top => generic_keywords(formal, &['[', ']']),
    }
}

struct Sentence {
    lower: String,
    numbers: Vec<f64>,
    words: Vec<String>,
}

impl Sentence {
    fn new(text: &str) -> Self {
        static GROUPED: OnceLock<Regex> = OnceLock::new();
        static TOKEN: OnceLock<Regex> = OnceLock::new();
        let lower = text.to_lowercase();
        let ungrouped = GROUPED
            .get_or_init(|| Regex::new(r"([0-9]),([0-9]{3})").unwrap())
            .replace_all(&lower, "${1}${2}")
            .into_owned();
        let mut numbers = Vec::new();
        let mut words = Vec::new();
        for m in TOKEN
            .get_or_init(|| Regex::new(r"[0-9]+(?:\.[0-9]+)?|[a-z]+").unwrap())
            .find_iter(&ungrouped)
        {
            let s = m.as_str();
            if s.as_bytes()[0].is_ascii_digit() {
                if let Ok(v) = s.parse() {
                    numbers.push(v);
                }
            } else {
                words.push(s.to_string());
            }
        }
        Sentence {
            lower,
            numbers,
            words,
        }
    }

    fn has_word(&self, w: &str) -> bool {
        self.words.iter().any(|x| x == w)
    }

    fn covers(&self, k: &Keyword) -> bool {
        match k {
            Keyword::Number(n) => {
                let Ok(v) = n.parse::<f64>() else {
                    return self.lower.contains(n.as_str());
                };
                if self.numbers.contains(&v) {
                    return true;
                }
                v.fract() == 0.0
                    && (0.0..=20.0).contains(&v)
                    && self.has_word(NUMBER_WORDS[v as usize])
            }
            Keyword::Literal(s) => self.lower.contains(&s.to_lowercase()),
            Keyword::Superlative => SUPERLATIVE_CUES.iter().any(|c| self.has_word(c)),
            Keyword::Count => COUNT_CUES.iter().any(|c| {
                if c.contains(' ') {
                    self.lower.contains(c)
                } else {
                    self.words.iter().any(|w| w.starts_with(c))
                }
            }),
        }
    }
}

/// True iff every keyword of `formal` is realized in `sentence`. The formal
/// expression must be valid in its language.
pub fn blec(formal: &str, language: FormalLanguage, sentence: &str) -> Result<bool> {
    let report = check_validity(formal, language);
    if !report.valid {
        return Err(Error::InvalidGold {
            language: language.to_string(),
            detail: report.message.unwrap_or_default(),
        });
    }
    let s = Sentence::new(sentence);
    Ok(extract_keywords(formal, language).iter().all(|k| s.covers(k)))
}
