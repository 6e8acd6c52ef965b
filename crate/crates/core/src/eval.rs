//! Set prediction and the risk / ambiguity statistics computed from it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::loss::RiskTargets;
use crate::types::{ClassSet, LabeledDataset, ScoreMatrix, ThresholdVector};

/// `{k : scores[k] > t[k]}`.
pub fn predict_set(scores: &[f64], t: &ThresholdVector) -> Result<ClassSet> {
    if scores.len() != t.len() {
        bail!(Dimension, "{} scores but {} thresholds", scores.len(), t.len());
    }
    Ok(membership(scores, t))
}

#[inline]
pub(crate) fn membership(scores: &[f64], t: &[f64]) -> ClassSet {
    let mut bits = 0u64;
    for (k, (&m, &tk)) in scores.iter().zip(t).enumerate() {
        bits |= ((m > tk) as u64) << k;
    }
    ClassSet::from_bits(bits)
}

pub fn predict_sets(scores: &ScoreMatrix, t: &ThresholdVector) -> Result<Vec<ClassSet>> {
    t.check_len(scores.n_classes())?;
    Ok(scores.rows().map(|row| membership(row, t)).collect())
}

/// Raw integer counters behind an [`EvalSummary`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub n_rows: usize,
    /// Rows carrying each label.
    pub class_rows: Vec<usize>,
    /// Rows with label k whose set is a singleton.
    pub sure: Vec<usize>,
    /// Rows with label k whose singleton set is not `{k}`.
    pub err: Vec<usize>,
    /// Rows with label k whose set does not contain k.
    pub missed: Vec<usize>,
    /// Sum of set sizes.
    pub total_size: usize,
    pub n_empty: usize,
    /// Rows with more than one label in the set.
    pub n_multi: usize,
}

impl Tally {
    fn zeroed(k: usize) -> Self {
        Tally {
            n_rows: 0,
            class_rows: vec![0; k],
            sure: vec![0; k],
            err: vec![0; k],
            missed: vec![0; k],
            total_size: 0,
            n_empty: 0,
            n_multi: 0,
        }
    }

    #[inline]
    fn add(&mut self, y: usize, set: ClassSet) {
        self.n_rows += 1;
        self.class_rows[y] += 1;
        self.total_size += set.len();
        if !set.contains(y) {
            self.missed[y] += 1;
        }
        match set.len() {
            0 => self.n_empty += 1,
            1 => {
                self.sure[y] += 1;
                if !set.contains(y) {
                    self.err[y] += 1;
                }
            }
            _ => self.n_multi += 1,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.sure.len()
    }

    pub fn n_certain(&self) -> usize {
        self.sure.iter().sum()
    }

    pub fn n_errors(&self) -> usize {
        self.err.iter().sum()
    }

    #[inline]
    pub fn risk(&self, k: usize) -> f64 {
        ratio(self.err[k], self.sure[k])
    }

    #[inline]
    pub fn miscoverage(&self, k: usize) -> f64 {
        ratio(self.missed[k], self.class_rows[k])
    }

    /// Fraction of rows whose set is not a singleton (empty sets included).
    #[inline]
    pub fn chance_ambiguity(&self) -> f64 {
        ratio(self.n_rows - self.n_certain(), self.n_rows)
    }

    /// Fraction of rows whose set has more than one member.
    pub fn multi_ambiguity(&self) -> f64 {
        ratio(self.n_multi, self.n_rows)
    }

    #[inline]
    pub fn size_ambiguity(&self) -> f64 {
        ratio(self.total_size, self.n_rows)
    }

    #[inline]
    pub fn overall_risk(&self) -> f64 {
        ratio(self.n_errors(), self.n_certain())
    }
}

/// `num / den`, or 0 when `den` is 0.
#[inline]
pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class and global statistics of a set classifier on a labeled dataset.
///
/// `risk[k]` is 0 when no row of class k receives a certain prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub tally: Tally,
    pub risk: Vec<f64>,
    pub miscoverage: Vec<f64>,
    pub chance_ambiguity: f64,
    pub multi_ambiguity: f64,
    pub size_ambiguity: f64,
    pub overall_risk: f64,
    pub n_certain: usize,
}

impl EvalSummary {
    pub fn from_tally(tally: Tally) -> Self {
        let k = tally.n_classes();
        EvalSummary {
            risk: (0..k).map(|c| tally.risk(c)).collect(),
            miscoverage: (0..k).map(|c| tally.miscoverage(c)).collect(),
            chance_ambiguity: tally.chance_ambiguity(),
            multi_ambiguity: tally.multi_ambiguity(),
            size_ambiguity: tally.size_ambiguity(),
            overall_risk: tally.overall_risk(),
            n_certain: tally.n_certain(),
            tally,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.risk.len()
    }

    pub fn sure(&self) -> &[usize] {
        &self.tally.sure
    }

    pub fn err(&self) -> &[usize] {
        &self.tally.err
    }
}

/// Evaluates the threshold classifier `t` on `data` in one pass.
pub fn evaluate(data: &LabeledDataset, t: &ThresholdVector) -> Result<EvalSummary> {
    if data.is_empty() {
        bail!(Dimension, "cannot evaluate on an empty dataset");
    }
    t.check_len(data.n_classes())?;
    let mut tally = Tally::zeroed(data.n_classes());
    for (row, &y) in data.scores().rows().zip(data.labels()) {
        tally.add(y, membership(row, t));
    }
    Ok(EvalSummary::from_tally(tally))
}

/// Evaluates arbitrary per-row sets against labels.
pub fn evaluate_sets(labels: &[usize], sets: &[ClassSet], n_classes: usize) -> Result<EvalSummary> {
    if labels.is_empty() {
        bail!(Dimension, "cannot evaluate on an empty dataset");
    }
    if labels.len() != sets.len() {
        bail!(Dimension, "{} labels for {} sets", labels.len(), sets.len());
    }
    let full = ClassSet::full(n_classes);
    let mut tally = Tally::zeroed(n_classes);
    for (&y, &s) in labels.iter().zip(sets) {
        if y >= n_classes || !s.is_subset(full) {
            bail!(Dimension, "label or set member outside 0..{n_classes}");
        }
        tally.add(y, s);
    }
    Ok(EvalSummary::from_tally(tally))
}

/// `max(0, risk_k - target_k)` per class.
pub fn excess_risk(summary: &EvalSummary, targets: &RiskTargets) -> Result<Vec<f64>> {
    let RiskTargets::ClassSpecific(r) = targets else {
        bail!(Config, "excess risk needs class-specific targets");
    };
    if r.len() != summary.n_classes() {
        bail!(Dimension, "{} targets for {} classes", r.len(), summary.n_classes());
    }
    Ok(summary.risk.iter().zip(r).map(|(&risk, &target)| (risk - target).max(0.0)).collect())
}

/// Tally that stays consistent while classes are removed from row sets one at
/// a time. Used by the incremental scans.
#[derive(Debug, Clone)]
pub(crate) struct IncrementalTally<'a> {
    labels: &'a [usize],
    pub sets: Vec<ClassSet>,
    pub tally: Tally,
}

impl<'a> IncrementalTally<'a> {
    pub fn new(labels: &'a [usize], sets: Vec<ClassSet>, n_classes: usize) -> Self {
        let mut tally = Tally::zeroed(n_classes);
        for (&y, &s) in labels.iter().zip(&sets) {
            tally.add(y, s);
        }
        IncrementalTally { labels, sets, tally }
    }

    /// Drops class `c` from row `i`'s set. No-op when it is not a member.
    #[inline]
    pub fn remove(&mut self, i: usize, c: usize) {
        let old = self.sets[i];
        if !old.contains(c) {
            return;
        }
        let y = self.labels[i];
        let mut new = old;
        new.remove(c);
        self.sets[i] = new;

        let t = &mut self.tally;
        t.total_size -= 1;
        if c == y {
            t.missed[y] += 1;
        }
        match old.len() {
            1 => {
                t.sure[y] -= 1;
                if c != y {
                    t.err[y] -= 1;
                }
                t.n_empty += 1;
            }
            2 => {
                t.n_multi -= 1;
                t.sure[y] += 1;
                if !new.contains(y) {
                    t.err[y] += 1;
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use alloc::vec;

    fn ds(rows: &[[f64; 2]], labels: &[usize]) -> LabeledDataset {
        LabeledDataset::new(ScoreMatrix::from_rows(rows).unwrap(), labels.to_vec()).unwrap()
    }

    #[test]
    fn figure_one_thresholds() {
        let t = ThresholdVector::new(vec![0.25, 0.2, 0.3]).unwrap();
        let s = predict_set(&[0.5, 0.3, 0.2], &t).unwrap();
        assert_eq!(s, [0usize, 1].into_iter().collect());
        let all = ThresholdVector::uniform(3, ThresholdVector::NEG_INF);
        assert_eq!(predict_set(&[0.5, 0.3, 0.2], &all).unwrap(), ClassSet::full(3));
        let none = ThresholdVector::uniform(3, ThresholdVector::POS_INF);
        assert!(predict_set(&[0.5, 0.3, 0.2], &none).unwrap().is_empty());
        assert!(matches!(predict_set(&[0.5, 0.5], &t), Err(Error::Dimension(_))));
    }

    #[test]
    fn membership_is_strict() {
        let t = ThresholdVector::new(vec![0.5, 0.5]).unwrap();
        assert!(predict_set(&[0.5, 0.6], &t).unwrap() == ClassSet::singleton(1));
    }

    #[test]
    fn three_row_count() {
        // sets {0}, {0,1}, {} with labels 0, 1, 0
        let data = ds(&[[0.9, 0.1], [0.9, 0.9], [0.1, 0.1]], &[0, 1, 0]);
        let t = ThresholdVector::new(vec![0.5, 0.5]).unwrap();
        let s = evaluate(&data, &t).unwrap();
        assert!((s.chance_ambiguity - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.size_ambiguity, 1.0);
        assert_eq!(s.sure()[0], 1);
        assert_eq!(s.err()[0], 0);
        assert_eq!(s.risk[0], 0.0);
        assert!((s.multi_ambiguity - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.tally.n_empty, 1);
        assert_eq!(s.miscoverage[0], 0.5);
    }

    #[test]
    fn all_wrong_singletons() {
        let data = ds(&[[0.1, 0.9], [0.2, 0.8]], &[0, 0]);
        let t = ThresholdVector::new(vec![0.5, 0.5]).unwrap();
        let s = evaluate(&data, &t).unwrap();
        assert_eq!(s.risk[0], 1.0);
        assert_eq!(s.chance_ambiguity, 0.0);
        assert_eq!(s.overall_risk, 1.0);
    }

    #[test]
    fn excess_risk_examples() {
        let mut s = evaluate(&ds(&[[0.9, 0.1]], &[0]), &ThresholdVector::uniform(2, 0.5)).unwrap();
        s.risk = vec![0.12, 0.08];
        let t = RiskTargets::ClassSpecific(vec![0.10, 0.10]);
        let e = excess_risk(&s, &t).unwrap();
        assert!((e[0] - 0.02).abs() < 1e-12 && e[1] == 0.0);
        s.risk = vec![0.10, 0.10];
        assert_eq!(excess_risk(&s, &t).unwrap(), vec![0.0, 0.0]);
        s.risk = vec![0.05, 0.15, 0.10];
        let e = excess_risk(&s, &RiskTargets::ClassSpecific(vec![0.1; 3])).unwrap();
        let mean = e.iter().sum::<f64>() / 3.0;
        assert!(e[0] == 0.0 && (e[1] - 0.05).abs() < 1e-12 && e[2] == 0.0);
        assert!((mean - 0.0167).abs() < 1e-4);
        assert!(matches!(excess_risk(&s, &RiskTargets::Overall(0.1)), Err(Error::Config(_))));
    }

    #[test]
    fn incremental_matches_fresh_tally() {
        let labels = [0usize, 1, 2, 1];
        let sets = vec![ClassSet::full(3); 4];
        let mut inc = IncrementalTally::new(&labels, sets, 3);
        for (i, c) in [(0, 1), (0, 2), (1, 1), (1, 0), (2, 2), (3, 0), (3, 2), (0, 0)] {
            inc.remove(i, c);
            let fresh = evaluate_sets(&labels, &inc.sets, 3).unwrap();
            assert_eq!(fresh.tally, inc.tally);
        }
    }
}
