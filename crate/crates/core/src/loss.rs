//! Penalized calibration losses.
//!
//! Every loss is `ambiguity + penalty`, where the penalty is a squared hinge
//! on the amount by which a risk exceeds its target:
//!
//! * class-specific: `A + Σ_k λ_k (r_k - r_k*)_+²`
//! * overall: `A + λ (r - r*)_+² + λ' (r - r*)²`
//! * label: `E|H| + Σ_k λ_k (α_k - α_k*)_+²` with `α_k` the mis-coverage rate
//!
//! Losses are computed from the integer [`Tally`] so that incremental scans
//! and from-scratch evaluations agree bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::eval::{EvalSummary, Tally};

pub const DEFAULT_LAMBDA: f64 = 1e4;

/// Ratio of `λ'` to `λ` used by risk-sweep experiments.
pub const SWEEP_LAMBDA_PRIME_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    ClassSpecific,
    Overall,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmbiguityKind {
    /// Fraction of rows whose set is not a singleton.
    Chance,
    /// Mean set size.
    Size,
}

/// Targets for the constrained quantity, tagged by what is being controlled.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskTargets {
    /// `r_k*` on the risk of certain predictions, per class.
    ClassSpecific(Vec<f64>),
    /// `r*` on the overall risk of certain predictions.
    Overall(f64),
    /// `α_k*` on the unconditional mis-coverage rate, per class.
    Miscoverage(Vec<f64>),
}

impl RiskTargets {
    pub fn kind(&self) -> LossKind {
        match self {
            RiskTargets::ClassSpecific(_) => LossKind::ClassSpecific,
            RiskTargets::Overall(_) => LossKind::Overall,
            RiskTargets::Miscoverage(_) => LossKind::Label,
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            RiskTargets::ClassSpecific(v) | RiskTargets::Miscoverage(v) => v,
            RiskTargets::Overall(v) => core::slice::from_ref(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyWeights {
    /// Per-class `λ_k`. The overall loss uses the first entry.
    pub lambda: Vec<f64>,
    /// Weight of the two-sided `(r - r*)²` term of the overall loss.
    pub lambda_prime: f64,
}

impl PenaltyWeights {
    pub fn uniform(k: usize, lambda: f64) -> Self {
        PenaltyWeights { lambda: vec![lambda; k], lambda_prime: 0.0 }
    }

    /// Adds the two-sided term at `1e-4 · λ`, as used by risk sweeps.
    pub fn with_sweep_term(mut self) -> Self {
        self.lambda_prime = self.lambda.first().copied().unwrap_or(0.0) * SWEEP_LAMBDA_PRIME_RATIO;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub kind: LossKind,
    pub targets: RiskTargets,
    pub weights: PenaltyWeights,
    pub ambiguity: AmbiguityKind,
}

impl LossConfig {
    /// Builds a config with the default ambiguity for `kind` (chance for the
    /// risk losses, size for label).
    pub fn new(kind: LossKind, targets: RiskTargets, weights: PenaltyWeights) -> Result<Self> {
        if targets.kind() != kind {
            bail!(Config, "loss kind {kind:?} does not match {:?} targets", targets.kind());
        }
        if let Some(v) = targets.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            bail!(Config, "target {v} outside [0, 1]");
        }
        if weights.lambda.is_empty() {
            bail!(Config, "at least one penalty weight is required");
        }
        if weights.lambda.iter().any(|l| !(*l >= 0.0) || !l.is_finite())
            || !(weights.lambda_prime >= 0.0)
            || !weights.lambda_prime.is_finite()
        {
            bail!(Config, "penalty weights must be finite and non-negative");
        }
        let ambiguity = match kind {
            LossKind::Label => AmbiguityKind::Size,
            _ => AmbiguityKind::Chance,
        };
        Ok(LossConfig { kind, targets, weights, ambiguity })
    }

    pub fn class_specific(targets: Vec<f64>, lambda: f64) -> Result<Self> {
        let k = targets.len();
        Self::new(LossKind::ClassSpecific, RiskTargets::ClassSpecific(targets), PenaltyWeights::uniform(k, lambda))
    }

    pub fn overall(target: f64, lambda: f64) -> Result<Self> {
        Self::new(LossKind::Overall, RiskTargets::Overall(target), PenaltyWeights::uniform(1, lambda))
    }

    pub fn label(alphas: Vec<f64>, lambda: f64) -> Result<Self> {
        let k = alphas.len();
        Self::new(LossKind::Label, RiskTargets::Miscoverage(alphas), PenaltyWeights::uniform(k, lambda))
    }

    pub fn with_ambiguity(mut self, ambiguity: AmbiguityKind) -> Self {
        self.ambiguity = ambiguity;
        self
    }

    pub fn with_lambda_prime(mut self, lambda_prime: f64) -> Self {
        self.weights.lambda_prime = lambda_prime;
        self
    }

    /// Checks that per-class vectors match `k` classes.
    pub fn check(&self, k: usize) -> Result<()> {
        if self.kind != LossKind::Overall {
            if self.targets.values().len() != k {
                bail!(Dimension, "{} targets for {k} classes", self.targets.values().len());
            }
            if self.weights.lambda.len() != k {
                bail!(Dimension, "{} penalty weights for {k} classes", self.weights.lambda.len());
            }
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn of_tally(&self, t: &Tally) -> f64 {
        let ambiguity = match self.ambiguity {
            AmbiguityKind::Chance => t.chance_ambiguity(),
            AmbiguityKind::Size => t.size_ambiguity(),
        };
        let lambda = &self.weights.lambda;
        match &self.targets {
            RiskTargets::ClassSpecific(r) => {
                let mut penalty = 0.0;
                for k in 0..r.len() {
                    penalty += lambda[k] * hinge_sq(t.risk(k) - r[k]);
                }
                ambiguity + penalty
            }
            RiskTargets::Overall(r) => {
                let gap = t.overall_risk() - r;
                ambiguity + lambda[0] * hinge_sq(gap) + self.weights.lambda_prime * gap * gap
            }
            RiskTargets::Miscoverage(a) => {
                let mut penalty = 0.0;
                for k in 0..a.len() {
                    penalty += lambda[k] * hinge_sq(t.miscoverage(k) - a[k]);
                }
                ambiguity + penalty
            }
        }
    }
}

#[inline]
fn hinge_sq(v: f64) -> f64 {
    if v > 0.0 {
        v * v
    } else {
        0.0
    }
}

/// Loss of an evaluated classifier.
pub fn loss(summary: &EvalSummary, config: &LossConfig) -> Result<f64> {
    config.check(summary.n_classes())?;
    Ok(config.of_tally(&summary.tally))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    fn summary(n_rows: usize, sure: Vec<usize>, err: Vec<usize>) -> EvalSummary {
        let k = sure.len();
        let certain: usize = sure.iter().sum();
        EvalSummary::from_tally(Tally {
            n_rows,
            class_rows: vec![n_rows / k; k],
            sure,
            err,
            missed: vec![0; k],
            total_size: certain + 2 * (n_rows - certain),
            n_empty: 0,
            n_multi: n_rows - certain,
        })
    }

    #[test]
    fn zero_when_unambiguous_and_on_target() {
        let s = summary(100, vec![50, 50], vec![5, 2]);
        let c = LossConfig::class_specific(vec![0.1, 0.1], 1e4).unwrap();
        assert_eq!(loss(&s, &c).unwrap(), 0.0);
    }

    #[test]
    fn class_specific_example() {
        // chance ambiguity 25/125 = 0.2, risk_0 = 12/100 = 0.12
        let s = summary(125, vec![100, 0], vec![12, 0]);
        let c = LossConfig::class_specific(vec![0.1, 0.1], 1e4).unwrap();
        assert!((loss(&s, &c).unwrap() - 4.2).abs() < 1e-9);
    }

    #[test]
    fn overall_example_with_two_sided_term() {
        // ambiguity 20/200, overall risk 9/180 = 0.05
        let s = summary(200, vec![90, 90], vec![5, 4]);
        let c = LossConfig::overall(0.1, 1e4).unwrap().with_lambda_prime(1.0);
        assert!((c.of_tally(&s.tally) - 0.1025).abs() < 1e-12);
    }

    #[test]
    fn mismatched_kind_is_config_error() {
        let e = LossConfig::new(LossKind::Label, RiskTargets::Overall(0.1), PenaltyWeights::uniform(2, 1.0));
        assert!(matches!(e, Err(Error::Config(_))));
        let c = LossConfig::class_specific(vec![0.1; 3], 1.0).unwrap();
        assert!(matches!(loss(&summary(10, vec![5, 5], vec![0, 0]), &c), Err(Error::Dimension(_))));
        assert!(matches!(LossConfig::class_specific(vec![1.5, 0.1], 1.0), Err(Error::Config(_))));
        assert!(matches!(LossConfig::class_specific(vec![0.1, 0.1], -1.0), Err(Error::Config(_))));
    }
}
