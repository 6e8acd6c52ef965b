//! Brute-force reference searches. They re-evaluate the loss from scratch at
//! every point and share nothing with the incremental scan except
//! [`evaluate`] and the loss formula, which makes them usable as test oracles.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::eval::evaluate;
use crate::loss::{loss, LossConfig};
use crate::types::{LabeledDataset, ThresholdVector};

/// Largest number of grid points [`exhaustive_oracle`] will enumerate.
pub const FULL_GRID_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, Copy)]
pub enum OracleMode<'a> {
    /// Minimize coordinate `class` with the others fixed at `thresholds`.
    PerCoordinate { thresholds: &'a ThresholdVector, class: usize },
    /// Enumerate every candidate tuple.
    FullGrid,
}

/// `-inf` followed by the distinct values among the `N - 1` smallest scores
/// of class `k`, ascending.
pub fn candidates(data: &LabeledDataset, k: usize) -> Vec<f64> {
    let mut col: Vec<f64> = data.scores().rows().map(|r| r[k]).collect();
    col.sort_by(f64::total_cmp);
    col.pop();
    col.dedup();
    let mut out = vec![f64::NEG_INFINITY];
    out.extend(col);
    out
}

/// Exact minimizer by enumeration. Ties go to the lexicographically
/// smallest candidate index tuple.
pub fn exhaustive_oracle(
    data: &LabeledDataset,
    config: &LossConfig,
    mode: OracleMode<'_>,
) -> Result<(ThresholdVector, f64)> {
    let k = data.n_classes();
    config.check(k)?;
    match mode {
        OracleMode::PerCoordinate { thresholds, class } => {
            thresholds.check_len(k)?;
            if class >= k {
                bail!(Dimension, "class {class} out of range for K = {k}");
            }
            let mut best: Option<(ThresholdVector, f64)> = None;
            for c in candidates(data, class) {
                let mut t = thresholds.clone();
                t.set(class, c);
                let l = loss(&evaluate(data, &t)?, config)?;
                if best.as_ref().is_none_or(|b| l < b.1) {
                    best = Some((t, l));
                }
            }
            Ok(best.expect("at least one candidate"))
        }
        OracleMode::FullGrid => {
            let grids: Vec<Vec<f64>> = (0..k).map(|c| candidates(data, c)).collect();
            let points = grids.iter().try_fold(1u128, |acc, g| acc.checked_mul(g.len() as u128));
            match points {
                Some(p) if p <= FULL_GRID_LIMIT => {}
                _ => bail!(Resource, "full grid exceeds {FULL_GRID_LIMIT} points"),
            }
            let mut idx = vec![0usize; k];
            let mut best: Option<(ThresholdVector, f64)> = None;
            loop {
                let t = ThresholdVector::new(idx.iter().zip(&grids).map(|(&i, g)| g[i]).collect())?;
                let l = loss(&evaluate(data, &t)?, config)?;
                if best.as_ref().is_none_or(|b| l < b.1) {
                    best = Some((t, l));
                }
                // odometer with the last coordinate moving fastest
                let mut c = k;
                loop {
                    if c == 0 {
                        return Ok(best.expect("non-empty grid"));
                    }
                    c -= 1;
                    idx[c] += 1;
                    if idx[c] < grids[c].len() {
                        break;
                    }
                    idx[c] = 0;
                }
            }
        }
    }
}
