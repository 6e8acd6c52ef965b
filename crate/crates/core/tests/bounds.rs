use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskset_core::bounds::{epsilon_for_confidence, risk_tail_bound, TailBoundQuery};

fn bound(r: f64, epsilon: f64, n_k: u64) -> f64 {
    risk_tail_bound(TailBoundQuery { r, epsilon, n_k }).unwrap()
}

proptest! {
    #[test]
    fn bound_is_monotone(r in 0.01f64..0.9, e1 in 0.0f64..0.09, e2 in 0.0f64..0.09, n1 in 0u64..5000, n2 in 0u64..5000) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let n = n1.min(n2);
        prop_assert!(bound(r, hi, n) <= bound(r, lo, n));
        prop_assert!(bound(r, lo, n1.max(n2)) <= bound(r, lo, n));
        let b = bound(r, hi, n);
        prop_assert!((0.0..=1.0).contains(&b));
    }

    #[test]
    fn inverse_roundtrip(r in 0.01f64..0.5, n in 10u64..5000, delta in 0.001f64..0.5) {
        if let Some(e) = epsilon_for_confidence(r, n, delta).unwrap() {
            prop_assert!(bound(r, e, n) <= delta);
            if e > 1e-9 {
                prop_assert!(bound(r, e - 1e-9, n) > delta * (1.0 - 1e-6));
            }
        }
    }
}

#[test]
fn bound_covers_binomial_tails() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for &(r, n) in &[(0.1, 200u64), (0.05, 500), (0.3, 100)] {
        let trials = 4000;
        for &eps in &[0.02, 0.05, 0.1] {
            let mut hits = 0;
            for _ in 0..trials {
                let errs = (0..n).filter(|_| rng.random::<f64>() < r).count();
                if errs as f64 / n as f64 >= r + eps {
                    hits += 1;
                }
            }
            let freq = hits as f64 / trials as f64;
            let b = bound(r, eps, n);
            let slack = 3.0 * (b * (1.0 - b) / trials as f64).sqrt() + 1e-3;
            assert!(freq <= b + slack, "r {r} n {n} eps {eps}: {freq} > {b}");
        }
    }
}
