//! Run configuration: one TOML file plus command-line overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use skgkit::corpus::{CountStrategy, DEFAULT_MAX_TOKENS};
use skgkit::linearize::OrderingPolicy;
use skgkit::metrics::EvalConfig;
use skgkit::mixture::DEFAULT_TEMPERATURE;

use crate::error::usage;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub linearization: LinearizationSection,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default)]
    pub fewshot: FewshotSection,
    #[serde(default)]
    pub mix: MixSection,
    #[serde(default)]
    pub eval: EvalConfig,
    /// Worker threads; 0 uses every core. Never affects outputs.
    #[serde(default, skip_serializing)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearizationSection {
    #[serde(default)]
    pub ordering: OrderingPolicy,
    #[serde(default)]
    pub reverse_knowledge: bool,
    /// Truncate knowledge to the token budget before assembly.
    #[serde(default)]
    pub truncate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
    #[serde(default)]
    pub counter: CountStrategy,
}

fn default_max_tokens() -> usize {
    DEFAULT_MAX_TOKENS
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection {
            max_tokens: DEFAULT_MAX_TOKENS,
            counter: CountStrategy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Random,
    #[default]
    Select,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FewshotSection {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub mode: SelectionMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub most_similar_last: bool,
    #[serde(default)]
    pub template: Option<String>,
}

fn default_k() -> usize {
    4
}

fn yes() -> bool {
    true
}

impl Default for FewshotSection {
    fn default() -> Self {
        FewshotSection {
            k: default_k(),
            mode: SelectionMode::default(),
            seed: 0,
            most_similar_last: true,
            template: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixSection {
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

impl Default for MixSection {
    fn default() -> Self {
        MixSection {
            temperature: DEFAULT_TEMPERATURE,
            steps: 0,
            seed: 0,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
    }
}
