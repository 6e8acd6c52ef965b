//! Reference calibrators: confidence-threshold rejection on the maximum
//! score, per-class mis-coverage quantiles, and a single shared threshold
//! under the penalized loss.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::eval::{evaluate, evaluate_sets, EvalSummary, IncrementalTally};
use crate::loss::LossConfig;
use crate::search::CalibrationResult;
use crate::types::{argmax, ClassSet, LabeledDataset, ThresholdVector};

/// Maximum-score rejection rule selected on a validation set.
#[derive(Debug, Clone, PartialEq)]
pub struct SgrResult {
    /// Rows whose maximum score is strictly above this are accepted.
    pub confidence_threshold: f64,
    pub coverage: f64,
    /// Top-1 error among accepted validation rows.
    pub achieved_risk: f64,
    pub feasible: bool,
}

/// Picks the largest high-confidence prefix whose top-1 error is at most
/// `r_star`. Rows tied on confidence enter or leave the prefix together.
pub fn sgr_calibrate(data: &LabeledDataset, r_star: f64) -> Result<SgrResult> {
    if !(0.0..=1.0).contains(&r_star) {
        bail!(Config, "risk target {r_star} outside [0, 1]");
    }
    let scores = data.scores();
    let n = data.len();
    let mut rows: Vec<(f64, bool)> = (0..n)
        .map(|i| {
            let row = scores.row(i);
            let k = argmax(row);
            (row[k], k != data.labels()[i])
        })
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut best: Option<(usize, usize)> = None;
    let mut errors = 0;
    for p in 0..n {
        errors += rows[p].1 as usize;
        let block_end = p + 1 == n || rows[p + 1].0 < rows[p].0;
        if block_end && errors as f64 / (p + 1) as f64 <= r_star {
            best = Some((p + 1, errors));
        }
    }
    Ok(match best {
        None => SgrResult { confidence_threshold: f64::INFINITY, coverage: 0.0, achieved_risk: 0.0, feasible: false },
        Some((accepted, errors)) => {
            let threshold = if accepted == n {
                f64::NEG_INFINITY
            } else {
                let (a, b) = (rows[accepted - 1].0, rows[accepted].0);
                let mid = a / 2.0 + b / 2.0;
                if mid < a && mid >= b {
                    mid
                } else {
                    b
                }
            };
            SgrResult {
                confidence_threshold: threshold,
                coverage: accepted as f64 / n as f64,
                achieved_risk: errors as f64 / accepted as f64,
                feasible: true,
            }
        }
    })
}

/// Singleton argmax when the maximum score clears `threshold`, else every class.
pub fn sgr_predict_set(row: &[f64], threshold: f64) -> ClassSet {
    let k = argmax(row);
    if row[k] > threshold {
        ClassSet::singleton(k)
    } else {
        ClassSet::full(row.len())
    }
}

pub fn evaluate_sgr(data: &LabeledDataset, threshold: f64) -> Result<EvalSummary> {
    let sets: Vec<ClassSet> = data.scores().rows().map(|r| sgr_predict_set(r, threshold)).collect();
    evaluate_sets(data.labels(), &sets, data.n_classes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelResult {
    pub thresholds: ThresholdVector,
    /// Human-readable notes, one per class without calibration rows.
    pub warnings: Vec<String>,
}

/// Per-class quantile thresholds controlling the mis-coverage rate.
///
/// `t_k` is the largest observed class-k score `v` such that the fraction
/// of label-k rows scoring at most `v` is at most `alpha[k]`, or `-inf` if
/// no observed score qualifies. With strict membership the calibration-set
/// mis-coverage of class k is then at most `alpha[k]`, and `t_k` is the
/// largest observed score with that property.
pub fn label_calibrate(data: &LabeledDataset, alpha: &[f64]) -> Result<LabelResult> {
    let k = data.n_classes();
    if alpha.len() != k {
        bail!(Dimension, "{} coverage targets for {k} classes", alpha.len());
    }
    if let Some(a) = alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        bail!(Config, "mis-coverage target {a} outside [0, 1]");
    }
    let counts = data.class_counts();
    let mut thresholds = Vec::with_capacity(k);
    let mut warnings = Vec::new();
    for c in 0..k {
        if counts[c] == 0 {
            warnings.push(alloc::format!("class {c} has no calibration rows; it is always included"));
            thresholds.push(f64::NEG_INFINITY);
            continue;
        }
        let mut col: Vec<(f64, bool)> = data.scores().rows().zip(data.labels()).map(|(r, &y)| (r[c], y == c)).collect();
        col.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut t = f64::NEG_INFINITY;
        let mut below = 0usize;
        for p in 0..col.len() {
            below += col[p].1 as usize;
            let block_end = p + 1 == col.len() || col[p + 1].0 > col[p].0;
            if block_end {
                if below as f64 / counts[c] as f64 <= alpha[c] {
                    t = col[p].0;
                } else {
                    break;
                }
            }
        }
        thresholds.push(t);
    }
    Ok(LabelResult { thresholds: ThresholdVector::new(thresholds)?, warnings })
}

/// Best single threshold shared by all classes, found by scanning the
/// sorted union of all scores. Ties go to the smaller threshold.
pub fn scrib_minus_calibrate(data: &LabeledDataset, config: &LossConfig) -> Result<CalibrationResult> {
    let k = data.n_classes();
    config.check(k)?;
    let scores = data.scores();
    let mut events: Vec<(f64, u32, u8)> = Vec::with_capacity(data.len() * k);
    for i in 0..data.len() {
        for c in 0..k {
            events.push((scores.get(i, c), i as u32, c as u8));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut inc = IncrementalTally::new(data.labels(), alloc::vec![ClassSet::full(k); data.len()], k);
    let mut best = (f64::NEG_INFINITY, config.of_tally(&inc.tally));
    for p in 0..events.len() {
        let (v, i, c) = events[p];
        inc.remove(i as usize, c as usize);
        if p + 1 == events.len() || events[p + 1].0 > v {
            let l = config.of_tally(&inc.tally);
            if l < best.1 {
                best = (v, l);
            }
        }
    }
    let thresholds = ThresholdVector::uniform(k, best.0);
    let summary = evaluate(data, &thresholds)?;
    let loss = config.of_tally(&summary.tally);
    Ok(CalibrationResult {
        thresholds,
        loss,
        summary,
        restarts_used: 0,
        restart_losses: Vec::new(),
        seed: 0,
        neighborhood_sampled: false,
        neighborhood_improved: false,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ScoreMatrix;
    use alloc::vec;

    /// Rows with a given max confidence and correctness, K = 2.
    fn confident(rows: &[(f64, bool)]) -> LabeledDataset {
        let m: Vec<[f64; 2]> = rows.iter().map(|&(c, _)| [c, 1.0 - c]).collect();
        let labels = rows.iter().map(|&(_, ok)| if ok { 0 } else { 1 }).collect();
        LabeledDataset::new(ScoreMatrix::from_rows(&m).unwrap(), labels).unwrap()
    }

    #[test]
    fn sgr_four_prefixes() {
        let data = confident(&[(0.9, true), (0.8, true), (0.7, false), (0.6, true)]);
        let r = sgr_calibrate(&data, 0.2).unwrap();
        assert!(r.feasible);
        assert_eq!(r.coverage, 0.5);
        assert!(r.confidence_threshold > 0.7 && r.confidence_threshold < 0.8);
        assert_eq!(r.achieved_risk, 0.0);
    }

    #[test]
    fn sgr_full_acceptance_and_infeasible() {
        let data = confident(&[(0.9, true), (0.8, true), (0.7, false), (0.6, true)]);
        let r = sgr_calibrate(&data, 0.25).unwrap();
        assert_eq!((r.coverage, r.confidence_threshold), (1.0, f64::NEG_INFINITY));
        let data = confident(&[(0.9, false), (0.8, true), (0.7, true)]);
        let r = sgr_calibrate(&data, 0.2).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.coverage, 0.0);
        let s = evaluate_sgr(&data, r.confidence_threshold).unwrap();
        assert_eq!(s.chance_ambiguity, 1.0);
    }

    #[test]
    fn sgr_ties_move_as_a_block() {
        let data = confident(&[(0.9, true), (0.8, true), (0.8, false), (0.6, true)]);
        let r = sgr_calibrate(&data, 0.2).unwrap();
        assert_eq!(r.coverage, 0.25);
    }

    #[test]
    fn label_quantile_examples() {
        let rows = [[0.2, 0.8], [0.4, 0.6], [0.6, 0.4], [0.8, 0.2]];
        let data = LabeledDataset::new(ScoreMatrix::from_rows(&rows).unwrap(), vec![0; 4]).unwrap();
        let r = label_calibrate(&data, &[0.5, 0.5]).unwrap();
        assert_eq!(r.thresholds[0], 0.4);
        assert_eq!(evaluate(&data, &r.thresholds).unwrap().miscoverage[0], 0.5);
        assert_eq!(label_calibrate(&data, &[0.0, 0.5]).unwrap().thresholds[0], f64::NEG_INFINITY);
        assert_eq!(label_calibrate(&data, &[0.2, 0.5]).unwrap().thresholds[0], f64::NEG_INFINITY);
        // class 1 has no rows
        assert_eq!(r.thresholds[1], f64::NEG_INFINITY);
        assert_eq!(r.warnings.len(), 1);
    }
}
