//! Threshold-form set classifiers built on the true conditional probabilities
//! are not dominated by any other set-valued assignment: nothing with
//! componentwise no-larger mis-coverage has smaller expected size.
//!
//! Exact integer arithmetic on a six-point, two-class distribution, with all
//! 4^6 assignments enumerated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskset_core::eval::predict_set;
use riskset_core::ThresholdVector;

const Q: i64 = 1000;

/// `(miss_0, miss_1, size)` scaled by the common denominators.
fn profile(weights: &[i64], q0: &[i64], sets: &[u8]) -> (i64, i64, i64) {
    let mut out = (0, 0, 0);
    for x in 0..weights.len() {
        let s = sets[x];
        if s & 1 == 0 {
            out.0 += weights[x] * q0[x];
        }
        if s & 2 == 0 {
            out.1 += weights[x] * (Q - q0[x]);
        }
        out.2 += weights[x] * Q * (s.count_ones() as i64);
    }
    out
}

fn dominating_assignment(weights: &[i64], q0: &[i64], t: &ThresholdVector) -> Option<Vec<u8>> {
    let star: Vec<u8> = q0
        .iter()
        .map(|&q| {
            let p = [q as f64 / Q as f64, (Q - q) as f64 / Q as f64];
            predict_set(&p, t).unwrap().bits() as u8
        })
        .collect();
    let base = profile(weights, q0, &star);
    let m = weights.len();
    for code in 0..4usize.pow(m as u32) {
        let sets: Vec<u8> = (0..m).map(|x| (code >> (2 * x) & 3) as u8).collect();
        let p = profile(weights, q0, &sets);
        if p.0 <= base.0 && p.1 <= base.1 && p.2 < base.2 {
            return Some(sets);
        }
    }
    None
}

#[test]
fn threshold_form_is_not_dominated() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..20 {
        let weights: Vec<i64> = (0..6).map(|_| rng.random_range(1..10)).collect();
        let q0: Vec<i64> = (0..6).map(|_| rng.random_range(1..Q)).collect();
        let mut levels: Vec<f64> = q0.iter().flat_map(|&q| [q as f64 / Q as f64, (Q - q) as f64 / Q as f64]).collect();
        levels.push(f64::NEG_INFINITY);
        for &a in &levels {
            for &b in &levels {
                let t = ThresholdVector::new(vec![a, b]).unwrap();
                assert_eq!(dominating_assignment(&weights, &q0, &t), None, "w {weights:?} q {q0:?} t {t:?}");
            }
        }
    }
}

#[test]
fn enumeration_detects_dominated_classifiers() {
    // a non-threshold rule: cover class 0 on the least likely input only
    let weights = [1, 1, 1, 1, 1, 1];
    let q0 = [100, 200, 300, 400, 500, 900];
    let bad = [1u8, 2, 2, 2, 2, 2];
    let p = profile(&weights, &q0, &bad);
    let better = [2u8, 2, 2, 2, 2, 1];
    let b = profile(&weights, &q0, &better);
    assert!(b.0 < p.0 && b.1 < p.1 && b.2 == p.2);
    assert!(dominating_assignment(&weights, &q0, &ThresholdVector::new(vec![0.85, 0.15]).unwrap()).is_none());
}
