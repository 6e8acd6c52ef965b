mod common;

use proptest::prelude::*;
use riskset_core::baselines::{evaluate_sgr, label_calibrate, scrib_minus_calibrate, sgr_calibrate};
use riskset_core::exec::Sequential;
use riskset_core::loss::loss;
use riskset_core::{calibrate, evaluate, CalibrateOptions, LabeledDataset, ScoreMatrix, ThresholdVector};

/// Direct scan: every distinct score and -inf, full evaluation each time.
fn naive_shared_threshold(data: &LabeledDataset, config: &riskset_core::LossConfig) -> (f64, f64) {
    let mut cands: Vec<f64> = data.scores().values().to_vec();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    cands.insert(0, f64::NEG_INFINITY);
    let mut best = (f64::NAN, f64::INFINITY);
    for c in cands {
        let t = ThresholdVector::uniform(data.n_classes(), c);
        let l = loss(&evaluate(data, &t).unwrap(), config).unwrap();
        if l < best.1 {
            best = (c, l);
        }
    }
    best
}

#[test]
fn scrib_minus_equals_naive_scan() {
    for seed in 0..40u64 {
        let k = 2 + seed as usize % 4;
        let data =
            if seed % 2 == 0 { common::random_instance(seed, 60, k) } else { common::synth_instance(seed, 60, k) };
        for config in common::configs(seed, k) {
            let r = scrib_minus_calibrate(&data, &config).unwrap();
            assert_eq!((r.thresholds[0], r.loss), naive_shared_threshold(&data, &config), "seed {seed}");
        }
    }
}

#[test]
fn warm_started_calibration_is_no_worse_than_shared_threshold() {
    for seed in 0..10u64 {
        let data = common::synth_instance(seed, 300, 3);
        for config in common::configs(seed, 3) {
            let minus = scrib_minus_calibrate(&data, &config).unwrap();
            let o =
                CalibrateOptions { warm_starts: vec![minus.thresholds.clone()], ..CalibrateOptions::with_seed(seed) };
            let full = calibrate(&data, &config, &o, &Sequential).unwrap();
            assert!(minus.loss >= full.loss, "seed {seed}: {} < {}", minus.loss, full.loss);
        }
    }
}

#[test]
fn grid_optimum_is_no_worse_than_shared_threshold() {
    use riskset_core::oracle::{exhaustive_oracle, OracleMode};
    for seed in 0..30u64 {
        let data = common::synth_instance(seed, 12, 3);
        for config in common::configs(seed, 3) {
            let minus = scrib_minus_calibrate(&data, &config).unwrap();
            let t = minus.thresholds[0];
            let representable = (0..3).all(|c| data.scores().rows().any(|r| r[c] > t));
            if !representable {
                continue;
            }
            let (_, grid) = exhaustive_oracle(&data, &config, OracleMode::FullGrid).unwrap();
            assert!(grid <= minus.loss, "seed {seed}");
        }
    }
}

#[test]
fn shared_threshold_zero_on_separated_scores() {
    let rows = [[0.9, 0.1], [0.8, 0.3], [0.2, 0.7], [0.1, 0.95]];
    let data = LabeledDataset::new(ScoreMatrix::from_rows(&rows).unwrap(), vec![0, 0, 1, 1]).unwrap();
    let config = riskset_core::LossConfig::class_specific(vec![0.1, 0.1], 1e4).unwrap();
    let r = scrib_minus_calibrate(&data, &config).unwrap();
    assert_eq!(r.loss, 0.0);
    assert!(r.thresholds[0] >= 0.3 && r.thresholds[0] < 0.7);
}

#[test]
fn label_controls_calibration_miscoverage() {
    for seed in 0..20u64 {
        let data = common::synth_instance(seed, 250, 4);
        let alphas = [0.0, 0.05, 0.1, 0.3];
        let r = label_calibrate(&data, &alphas).unwrap();
        let s = evaluate(&data, &r.thresholds).unwrap();
        for c in 0..4 {
            assert!(s.miscoverage[c] <= alphas[c]);
            // raising to the next observed score would break the target
            let mut next: Vec<f64> = data.scores().rows().map(|row| row[c]).filter(|&v| v > r.thresholds[c]).collect();
            next.sort_by(f64::total_cmp);
            if let Some(&v) = next.first() {
                let mut t = r.thresholds.clone();
                t.set(c, v);
                assert!(evaluate(&data, &t).unwrap().miscoverage[c] > alphas[c]);
            }
        }
    }
}

#[test]
fn sgr_empirical_risk_and_set_semantics() {
    let data = common::synth_instance(5, 500, 3);
    let r = sgr_calibrate(&data, 0.1).unwrap();
    assert!(r.feasible && r.achieved_risk <= 0.1);
    let s = evaluate_sgr(&data, r.confidence_threshold).unwrap();
    assert!((1.0 - s.chance_ambiguity - r.coverage).abs() < 1e-12);
    assert!((s.overall_risk - r.achieved_risk).abs() < 1e-12);
    // rejected rows carry the full set, so no empty sets
    assert_eq!(s.tally.n_empty, 0);
}

proptest! {
    #[test]
    fn sgr_coverage_monotone_in_target(seed in 0u64..200, a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let data = common::random_instance(seed, 80, 3);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(sgr_calibrate(&data, lo).unwrap().coverage <= sgr_calibrate(&data, hi).unwrap().coverage);
    }

    #[test]
    fn sgr_rank_invariant(seed in 0u64..200, r in 0.0f64..0.5) {
        let data = common::synth_instance(seed, 120, 3);
        let f = |x: f64| (3.0 * x).exp() - 2.0;
        let mapped = ScoreMatrix::new(data.len(), 3, data.scores().values().iter().map(|&v| f(v)).collect()).unwrap();
        let other = LabeledDataset::new(mapped, data.labels().to_vec()).unwrap();
        let a = sgr_calibrate(&data, r).unwrap();
        let b = sgr_calibrate(&other, r).unwrap();
        prop_assert_eq!(a.coverage, b.coverage);
        let sa = evaluate_sgr(&data, a.confidence_threshold).unwrap();
        let sb = evaluate_sgr(&other, b.confidence_threshold).unwrap();
        prop_assert_eq!(sa.tally, sb.tally);
    }
}
