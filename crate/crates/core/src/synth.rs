//! Synthetic data whose scores are the true conditional class probabilities.
//!
//! Each row draws a logit vector from `Normal(0, σ I)`, so each coordinate
//! has variance `σ`, picks a preliminary class uniformly,
//! adds that class's signal strength to its logit, and takes the softmax as
//! the score row. The label is then drawn from the score row itself.
//!
//! Row `i` uses its own random stream, so output does not depend on how rows
//! are scheduled.

use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{bail, Result};
use crate::rng::{self, Domain};
use crate::types::{LabeledDataset, ScoreMatrix, MAX_CLASSES};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub k_classes: usize,
    /// Per-class signal strength added to the preliminary class's logit.
    pub signal: Vec<f64>,
    /// Variance of each logit coordinate.
    pub sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Five classes, one easy and one hard: `s = (9, 1, 3, 3, 3)`, `σ = 3`.
    pub fn reference(n: usize, seed: u64) -> Self {
        SynthSpec { n, k_classes: 5, signal: alloc::vec![9.0, 1.0, 3.0, 3.0, 3.0], sigma: 3.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            bail!(Config, "n must be at least 1");
        }
        if self.k_classes < 2 || self.k_classes > MAX_CLASSES {
            bail!(Config, "K must lie in 2..={MAX_CLASSES}, got {}", self.k_classes);
        }
        if self.signal.len() != self.k_classes {
            bail!(Config, "{} signal strengths for K = {}", self.signal.len(), self.k_classes);
        }
        if self.signal.iter().any(|s| !s.is_finite()) {
            bail!(Config, "signal strengths must be finite");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            bail!(Config, "sigma must be positive, got {}", self.sigma);
        }
        Ok(())
    }
}

/// One generated row: scores, label, and the preliminary class.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRow {
    pub scores: Vec<f64>,
    pub label: usize,
    pub preliminary: usize,
}

pub fn generate_row(spec: &SynthSpec, i: usize) -> SynthRow {
    let k = spec.k_classes;
    let normal = Normal::new(0.0, libm::sqrt(spec.sigma)).expect("validated sigma");
    let mut rng = rng::stream(spec.seed, Domain::SynthRow, i as u64);
    let mut logits: Vec<f64> = (0..k).map(|_| normal.sample(&mut rng)).collect();
    let preliminary = rng.random_range(0..k);
    logits[preliminary] += spec.signal[preliminary];
    let scores = softmax(&logits);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut label = k - 1;
    for (c, &p) in scores.iter().enumerate() {
        acc += p;
        if u < acc {
            label = c;
            break;
        }
    }
    SynthRow { scores, label, preliminary }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn generate(spec: &SynthSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut values = Vec::with_capacity(spec.n * spec.k_classes);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let row = generate_row(spec, i);
        values.extend_from_slice(&row.scores);
        labels.push(row.label);
    }
    LabeledDataset::new(ScoreMatrix::new(spec.n, spec.k_classes, values)?, labels)
}
