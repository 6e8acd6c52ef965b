//! Threshold search: the single-coordinate scan, the coordinate-descent outer
//! loop, and the restart/neighborhood driver.
//!
//! Candidates for coordinate `d` are `-inf` followed by the distinct values
//! among the `N - 1` smallest entries of column `d`. The largest observed
//! value is never a candidate on its own since it would drop class `d` from
//! every row. Thresholding at a value excludes every row carrying exactly
//! that value, so equal scores are consumed as one block.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{bail, Result};
use crate::eval::{evaluate, membership, EvalSummary, IncrementalTally};
use crate::exec::Executor;
use crate::loss::LossConfig;
use crate::rng::{self, Domain};
use crate::types::{ClassSet, LabeledDataset, ThresholdVector};

/// Each score column sorted ascending, with the row each sorted entry came from.
#[derive(Debug, Clone)]
pub struct SortedColumns {
    n_rows: usize,
    values: Vec<Vec<f64>>,
    rows: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(data: &LabeledDataset) -> Self {
        let scores = data.scores();
        let n = scores.n_rows();
        let mut values = Vec::with_capacity(scores.n_classes());
        let mut rows = Vec::with_capacity(scores.n_classes());
        for k in 0..scores.n_classes() {
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.sort_by(|&a, &b| scores.get(a as usize, k).total_cmp(&scores.get(b as usize, k)));
            values.push(order.iter().map(|&i| scores.get(i as usize, k)).collect());
            rows.push(order);
        }
        SortedColumns { n_rows: n, values, rows }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_classes(&self) -> usize {
        self.values.len()
    }

    /// Sorted scores of class `k`.
    pub fn column(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// Row index of each entry of [`Self::column`].
    pub fn row_order(&self, k: usize) -> &[u32] {
        &self.rows[k]
    }

    /// 1-based position of the first entry of column `k` equal to or above
    /// `t`; 0 for `-inf`.
    pub fn position(&self, k: usize, t: f64) -> usize {
        if t == f64::NEG_INFINITY {
            return 0;
        }
        let col = &self.values[k];
        (col.partition_point(|&v| v < t) + 1).min(self.n_rows)
    }

    /// Value at 1-based position `j`.
    pub fn at(&self, k: usize, j: usize) -> f64 {
        self.values[k][j - 1]
    }
}

fn check_inputs(cols: &SortedColumns, data: &LabeledDataset, config: &LossConfig) -> Result<()> {
    if cols.n_rows() != data.len() || cols.n_classes() != data.n_classes() {
        bail!(Dimension, "sorted columns were not built from this dataset");
    }
    config.check(data.n_classes())
}

/// Scans coordinate `d` with `sets` holding each row's set with `d` included.
/// Calls `visit(candidate, loss)` for every candidate in ascending order.
fn scan_coordinate(
    cols: &SortedColumns,
    labels: &[usize],
    sets: Vec<ClassSet>,
    d: usize,
    config: &LossConfig,
    mut visit: impl FnMut(f64, f64),
) {
    let k = cols.n_classes();
    let n = cols.n_rows();
    let mut inc = IncrementalTally::new(labels, sets, k);
    visit(f64::NEG_INFINITY, config.of_tally(&inc.tally));

    let values = cols.column(d);
    let order = cols.row_order(d);
    let mut block_start = 0;
    for p in 0..n {
        inc.remove(order[p] as usize, d);
        let block_end = p + 1 == n || values[p + 1] > values[p];
        if block_end {
            if block_start + 1 < n {
                visit(values[p], config.of_tally(&inc.tally));
            }
            block_start = p + 1;
        }
    }
}

fn base_sets(data: &LabeledDataset, t: &[f64]) -> Vec<ClassSet> {
    data.scores().rows().map(|row| membership(row, t)).collect()
}

fn with_class(base: &[ClassSet], d: usize) -> Vec<ClassSet> {
    base.iter()
        .map(|&s| {
            let mut s = s;
            s.insert(d);
            s
        })
        .collect()
}

fn best_on_coordinate(
    cols: &SortedColumns,
    data: &LabeledDataset,
    base: &[ClassSet],
    d: usize,
    config: &LossConfig,
) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    scan_coordinate(cols, data.labels(), with_class(base, d), d, config, |cand, loss| {
        if loss < best.1 {
            best = (cand, loss);
        }
    });
    best
}

/// Best threshold for class `d` with every other coordinate of `t` fixed.
///
/// Runs in `O(KN)` using the presorted columns. Returns `(t_d, loss)`; ties
/// go to the smallest candidate.
pub fn quicksearch(
    cols: &SortedColumns,
    data: &LabeledDataset,
    t: &ThresholdVector,
    d: usize,
    config: &LossConfig,
) -> Result<(f64, f64)> {
    check_inputs(cols, data, config)?;
    t.check_len(data.n_classes())?;
    if d >= data.n_classes() {
        bail!(Dimension, "class {d} out of range for K = {}", data.n_classes());
    }
    Ok(best_on_coordinate(cols, data, &base_sets(data, t), d, config))
}

/// Every `(candidate, loss)` pair visited by [`quicksearch`], in scan order.
pub fn quicksearch_trace(
    cols: &SortedColumns,
    data: &LabeledDataset,
    t: &ThresholdVector,
    d: usize,
    config: &LossConfig,
) -> Result<Vec<(f64, f64)>> {
    check_inputs(cols, data, config)?;
    t.check_len(data.n_classes())?;
    if d >= data.n_classes() {
        bail!(Dimension, "class {d} out of range for K = {}", data.n_classes());
    }
    let mut trace = Vec::new();
    let base = base_sets(data, t);
    scan_coordinate(cols, data.labels(), with_class(&base, d), d, config, |c, l| trace.push((c, l)));
    Ok(trace)
}

pub const DEFAULT_MAX_OUTER_ITERS: usize = 100;

/// Outcome of one coordinate-descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct Descent {
    pub thresholds: ThresholdVector,
    pub loss: f64,
    /// Loss at the start followed by the loss after each accepted update.
    pub accepted: Vec<f64>,
    /// True when the run stopped at the iteration cap while still improving.
    pub hit_cap: bool,
}

fn descend(
    cols: &SortedColumns,
    data: &LabeledDataset,
    config: &LossConfig,
    init: ThresholdVector,
    max_outer_iters: usize,
) -> Descent {
    let mut t = init;
    let mut loss = config.of_tally(&evaluate(data, &t).expect("validated").tally);
    let mut accepted = alloc::vec![loss];
    let mut hit_cap = true;
    for _ in 0..max_outer_iters {
        let base = base_sets(data, &t);
        let mut best: Option<(usize, f64, f64)> = None;
        for d in 0..data.n_classes() {
            let (cand, l) = best_on_coordinate(cols, data, &base, d, config);
            if best.is_none_or(|b| l < b.2) {
                best = Some((d, cand, l));
            }
        }
        match best {
            Some((d, cand, l)) if l < loss => {
                t.set(d, cand);
                loss = l;
                accepted.push(l);
            }
            _ => {
                hit_cap = false;
                break;
            }
        }
    }
    Descent { thresholds: t, loss, accepted, hit_cap }
}

/// Coordinate descent from `init`: each outer iteration minimizes every
/// coordinate against the current thresholds and applies only the single
/// best update, stopping when nothing strictly improves.
pub fn coordinate_descent(
    data: &LabeledDataset,
    config: &LossConfig,
    init: ThresholdVector,
    max_outer_iters: usize,
) -> Result<Descent> {
    config.check(data.n_classes())?;
    init.check_len(data.n_classes())?;
    let cols = SortedColumns::new(data);
    Ok(descend(&cols, data, config, init, max_outer_iters))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateOptions {
    pub restarts: usize,
    pub neighborhood: bool,
    pub neighborhood_draws: usize,
    /// Half-width of the neighborhood window as a fraction of N.
    pub neighborhood_window: f64,
    /// Search on a uniform row subsample of this size.
    pub subsample: Option<usize>,
    pub seed: u64,
    pub max_outer_iters: usize,
    /// Extra descents started from these points after the random restarts.
    pub warm_starts: Vec<ThresholdVector>,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        CalibrateOptions {
            restarts: 10,
            neighborhood: true,
            neighborhood_draws: 1000,
            neighborhood_window: 0.1,
            subsample: None,
            seed: 0,
            max_outer_iters: DEFAULT_MAX_OUTER_ITERS,
            warm_starts: Vec::new(),
        }
    }
}

impl CalibrateOptions {
    pub fn with_seed(seed: u64) -> Self {
        CalibrateOptions { seed, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub thresholds: ThresholdVector,
    /// Loss of `thresholds` on the full calibration data.
    pub loss: f64,
    pub summary: EvalSummary,
    pub restarts_used: usize,
    /// Final loss of each restart (then each warm start) on the search data.
    pub restart_losses: Vec<f64>,
    pub seed: u64,
    pub neighborhood_sampled: bool,
    /// True when neighborhood sampling found a better point than the restarts.
    pub neighborhood_improved: bool,
    pub warnings: Vec<String>,
}

/// Draws one threshold vector around `center` (1-based column positions).
fn neighborhood_draw(cols: &SortedColumns, center: &[usize], half_width: usize, rng: &mut rng::Rng) -> ThresholdVector {
    let n = cols.n_rows();
    let t = center
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let (lo, hi) = neighborhood_bounds(j, half_width, n);
            cols.at(k, rng.random_range(lo..=hi))
        })
        .collect();
    ThresholdVector::new(t).expect("finite column values")
}

/// Inclusive 1-based window `[max(1, j - w), min(N - 1, j + w)]`, widened to
/// one position when it would be empty.
pub fn neighborhood_bounds(j: usize, half_width: usize, n: usize) -> (usize, usize) {
    let last = n - 1;
    let lo = j.saturating_sub(half_width).max(1).min(last);
    let hi = (j + half_width).min(last).max(lo);
    (lo, hi)
}

/// Full calibration: random restarts of coordinate descent, optional
/// neighborhood sampling around the best point, optional subsampling.
///
/// Deterministic for a given `options.seed`, whatever the executor.
pub fn calibrate<E: Executor>(
    data: &LabeledDataset,
    config: &LossConfig,
    options: &CalibrateOptions,
    exec: &E,
) -> Result<CalibrationResult> {
    let k = data.n_classes();
    config.check(k)?;
    if options.restarts == 0 {
        bail!(Config, "at least one restart is required");
    }
    let subset;
    let search = match options.subsample {
        Some(m) if m < k => bail!(Config, "subsample of {m} rows is smaller than K = {k}"),
        Some(m) if m > data.len() => bail!(Config, "subsample of {m} rows exceeds N = {}", data.len()),
        Some(m) => {
            let mut r = rng::stream(options.seed, Domain::Subsample, 0);
            let mut idx = rand::seq::index::sample(&mut r, data.len(), m).into_vec();
            idx.sort_unstable();
            subset = data.select(&idx)?;
            &subset
        }
        None => data,
    };
    let cols = SortedColumns::new(search);
    let n = search.len();

    for w in &options.warm_starts {
        w.check_len(k)?;
    }
    let runs = exec.map(options.restarts + options.warm_starts.len(), |r| {
        let init = match r.checked_sub(options.restarts) {
            Some(w) => options.warm_starts[w].clone(),
            None => {
                let mut rng = rng::stream(options.seed, Domain::Restart, r as u64);
                // position 0 is -inf, so the draw stays on the candidate grid
                let t: Vec<f64> = (0..k)
                    .map(|c| match rng.random_range(0..n) {
                        0 => f64::NEG_INFINITY,
                        j => cols.at(c, j),
                    })
                    .collect();
                ThresholdVector::new(t).expect("finite")
            }
        };
        descend(&cols, search, config, init, options.max_outer_iters)
    });
    let mut warnings = Vec::new();
    let capped = runs.iter().filter(|d| d.hit_cap).count();
    if capped > 0 {
        warnings.push(format!(
            "{capped} of {} descents stopped at the {}-iteration cap",
            runs.len(),
            options.max_outer_iters
        ));
    }
    let restart_losses: Vec<f64> = runs.iter().map(|d| d.loss).collect();
    let mut best = argmin(&restart_losses);
    let mut incumbent = runs.into_iter().nth(best).expect("non-empty");

    let mut neighborhood_improved = false;
    let sample = options.neighborhood && options.neighborhood_draws > 0 && n >= 2;
    if sample {
        let center: Vec<usize> = (0..k).map(|c| cols.position(c, incumbent.thresholds[c])).collect();
        let half_width = libm::floor(options.neighborhood_window * n as f64) as usize;
        let draws = exec.map(options.neighborhood_draws, |i| {
            let mut rng = rng::stream(options.seed, Domain::Neighborhood, i as u64);
            let t = neighborhood_draw(&cols, &center, half_width, &mut rng);
            let l = config.of_tally(&evaluate(search, &t).expect("validated").tally);
            (t, l)
        });
        let losses: Vec<f64> = draws.iter().map(|d| d.1).collect();
        best = argmin(&losses);
        if losses[best] < incumbent.loss {
            let start = draws.into_iter().nth(best).expect("non-empty").0;
            incumbent = descend(&cols, search, config, start, options.max_outer_iters);
            neighborhood_improved = true;
        }
    }

    let thresholds = incumbent.thresholds;
    let summary = evaluate(data, &thresholds)?;
    let loss = config.of_tally(&summary.tally);
    Ok(CalibrationResult {
        thresholds,
        loss,
        summary,
        restarts_used: options.restarts,
        restart_losses,
        seed: options.seed,
        neighborhood_sampled: sample,
        neighborhood_improved,
        warnings,
    })
}

/// Index of the smallest value, first one on ties.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}
