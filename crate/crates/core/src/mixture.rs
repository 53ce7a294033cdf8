//! Temperature-scaled multi-task mixing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded, uniform};

pub const DEFAULT_TEMPERATURE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub sizes: Vec<u64>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

impl MixtureSpec {
    pub fn new(sizes: Vec<u64>, temperature: f64) -> Result<Self> {
        let spec = MixtureSpec { sizes, temperature };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidMixture("at least one task is required".into()));
        }
        if let Some(i) = self.sizes.iter().position(|&n| n == 0) {
            return Err(Error::InvalidMixture(format!("task {i} has size 0")));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::InvalidMixture(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// `p_i = n_i^(1/T) / sum_j n_j^(1/T)`.
pub fn temperature_weights(spec: &MixtureSpec) -> Result<Vec<f64>> {
    spec.check()?;
    let exponent = 1.0 / spec.temperature;
    let scaled: Vec<f64> = spec
        .sizes
        .iter()
        .map(|&n| (n as f64).powf(exponent))
        .collect();
    let total: f64 = scaled.iter().sum();
    Ok(scaled.iter().map(|s| s / total).collect())
}

/// Task index for each training step, drawn independently from `weights`.
pub fn sample_schedule(weights: &[f64], steps: usize, seed: u64) -> Result<Vec<usize>> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights("no weights given".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidWeights(format!("weight {w} is not a probability")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
    }
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cumulative.push(acc);
    }
    let last = weights.iter().rposition(|&w| w > 0.0).expect("weights sum to 1");
    let mut rng = seeded(seed);
    Ok((0..steps)
        .map(|_| {
            let u = uniform(&mut rng);
            cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(last)
                .min(last)
        })
        .collect())
}
