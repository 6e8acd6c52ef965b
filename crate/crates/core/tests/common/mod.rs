#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskset_core::{LabeledDataset, LossConfig, ScoreMatrix};

/// Random instance with scores on a coarse grid so that ties are common.
pub fn random_instance(seed: u64, n: usize, k: usize) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = rng.random_range(5..40) as f64;
    let values: Vec<f64> = (0..n * k).map(|_| (rng.random::<f64>() * levels).floor() / levels).collect();
    let labels = (0..n)
        .map(|i| {
            // biased towards the argmax so risks are not trivially 1/2
            let row = &values[i * k..(i + 1) * k];
            if rng.random::<f64>() < 0.6 {
                (0..k).max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a))).unwrap()
            } else {
                rng.random_range(0..k)
            }
        })
        .collect();
    LabeledDataset::new(ScoreMatrix::new(n, k, values).unwrap(), labels).unwrap()
}

/// Continuous-score instance from the synthetic generator with random signal.
pub fn synth_instance(seed: u64, n: usize, k: usize) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let signal = (0..k).map(|_| rng.random_range(0.0..6.0)).collect();
    riskset_core::synth::generate(&riskset_core::synth::SynthSpec {
        n,
        k_classes: k,
        signal,
        sigma: rng.random_range(0.5..3.0),
        seed,
    })
    .unwrap()
}

/// One config of each loss kind for `k` classes, parameterized by `seed`.
pub fn configs(seed: u64, k: usize) -> Vec<LossConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0f);
    let targets: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..0.4)).collect();
    let lambda = [0.0, 1.0, 100.0, 1e4][rng.random_range(0..4)];
    vec![
        LossConfig::class_specific(targets.clone(), lambda).unwrap(),
        LossConfig::overall(targets[0], lambda).unwrap().with_lambda_prime(lambda * 1e-4),
        LossConfig::label(targets, lambda).unwrap(),
    ]
}

/// Mis-coverage targets strictly between empirical grid points `j / n_k`, at
/// least `0.1 / n_k` away from both neighbours.
pub fn off_grid_alphas(seed: u64, data: &LabeledDataset) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa1fa);
    data.class_counts()
        .into_iter()
        .map(|n_k| {
            let n_k = n_k.max(1) as f64;
            let j = rng.random_range(0..((n_k * 0.5) as usize).max(1)) as f64;
            (j + rng.random_range(0.1..0.9)) / n_k
        })
        .collect()
}
