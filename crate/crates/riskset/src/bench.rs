//! Experiment harness: accuracy/ambiguity sweeps, the ambiguity correlation
//! study, and class-specific risk reports.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use riskset_core::baselines::{evaluate_sgr, label_calibrate, scrib_minus_calibrate, sgr_calibrate};
use riskset_core::bounds::{risk_tail_bound, TailBoundQuery};
use riskset_core::exec::Executor;
use riskset_core::loss::{PenaltyWeights, SWEEP_LAMBDA_PRIME_RATIO};
use riskset_core::rng::{self, Domain};
use riskset_core::{
    calibrate, evaluate, excess_risk, CalibrateOptions, Error, EvalSummary, LabeledDataset, LossConfig, LossKind,
    Result, RiskTargets, ThresholdVector,
};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMethod {
    /// Per-class thresholds under the overall-risk loss.
    Scrib,
    Sgr,
    /// One shared threshold under the overall-risk loss.
    ScribMinus,
}

impl SweepMethod {
    pub const ALL: [SweepMethod; 3] = [SweepMethod::Scrib, SweepMethod::Sgr, SweepMethod::ScribMinus];

    pub fn name(self) -> &'static str {
        match self {
            SweepMethod::Scrib => "scrib",
            SweepMethod::Sgr => "sgr",
            SweepMethod::ScribMinus => "scrib-minus",
        }
    }
}

impl fmt::Display for SweepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        SweepMethod::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown sweep method '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Chance ambiguity on the test set.
    pub ambiguity: f64,
    /// One minus the overall risk on the test set.
    pub accuracy: f64,
    /// Validation target that produced the point; `None` for anchors.
    pub target_used: Option<f64>,
}

/// How compared curves are given a common ambiguity span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorSpan {
    /// `[0, 1]`: from no rejection to full rejection.
    Unit,
    /// `[0, largest ambiguity reached by any compared curve]`.
    CommonMax,
}

impl FromStr for AnchorSpan {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "unit" => Ok(AnchorSpan::Unit),
            "common-max" => Ok(AnchorSpan::CommonMax),
            _ => Err(format!("unknown anchor span '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub stride: f64,
    pub lambda: f64,
    pub span: AnchorSpan,
    /// Restart and neighborhood settings; the seed is re-derived per target.
    pub calibrate: CalibrateOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            stride: 0.01,
            lambda: riskset_core::loss::DEFAULT_LAMBDA,
            span: AnchorSpan::Unit,
            calibrate: CalibrateOptions::default(),
        }
    }
}

/// Raw sweep output before anchoring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub method: SweepMethod,
    /// One point per target, in target order.
    pub points: Vec<CurvePoint>,
    /// Top-1 accuracy on the test set without rejection.
    pub base_accuracy: f64,
    /// Root mean square of `test overall risk - target` over the targets.
    pub rmse: f64,
}

/// Ambiguity span shared by every compared curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Anchors {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub method: SweepMethod,
    /// Sorted, deduplicated and anchored curve.
    pub curve: Vec<CurvePoint>,
    pub auc: f64,
    pub rmse: f64,
    pub base_accuracy: f64,
}

fn top1_accuracy(data: &LabeledDataset) -> f64 {
    let s = data.scores();
    let hits = (0..data.len()).filter(|&i| s.argmax(i) == data.labels()[i]).count();
    hits as f64 / data.len() as f64
}

/// `stride, 2 stride, ...` up to the no-rejection top-1 risk on `valid`.
pub fn sweep_targets(valid: &LabeledDataset, stride: f64) -> Result<Vec<f64>> {
    if !(stride > 0.0 && stride <= 0.5) {
        return Err(Error::Config(format!("stride {stride} outside (0, 0.5]")));
    }
    let no_reject = 1.0 - top1_accuracy(valid);
    Ok((1..).map(|j| j as f64 * stride).take_while(|&r| r <= no_reject + 1e-12).collect())
}

fn point(summary: &EvalSummary, target: f64) -> CurvePoint {
    CurvePoint { ambiguity: summary.chance_ambiguity, accuracy: 1.0 - summary.overall_risk, target_used: Some(target) }
}

fn overall_config(target: f64, lambda: f64) -> Result<LossConfig> {
    Ok(LossConfig::overall(target, lambda)?.with_lambda_prime(lambda * SWEEP_LAMBDA_PRIME_RATIO))
}

/// Calibrates `method` on `valid` for every sweep target and evaluates on `test`.
pub fn sweep_curve<E: Executor>(
    valid: &LabeledDataset,
    test: &LabeledDataset,
    method: SweepMethod,
    options: &SweepOptions,
    exec: &E,
) -> Result<SweepCurve> {
    if valid.n_classes() != test.n_classes() {
        return Err(Error::Dimension(format!(
            "validation K = {} but test K = {}",
            valid.n_classes(),
            test.n_classes()
        )));
    }
    let targets = sweep_targets(valid, options.stride)?;
    let points = exec.map(targets.len(), |j| -> Result<CurvePoint> {
        let r = targets[j];
        let summary = match method {
            SweepMethod::Sgr => evaluate_sgr(test, sgr_calibrate(valid, r)?.confidence_threshold)?,
            SweepMethod::Scrib => {
                let opts = CalibrateOptions {
                    seed: rng::derive_seed(options.calibrate.seed, Domain::Sweep, j as u64),
                    ..options.calibrate.clone()
                };
                let t = calibrate(valid, &overall_config(r, options.lambda)?, &opts, exec)?.thresholds;
                evaluate(test, &t)?
            }
            SweepMethod::ScribMinus => {
                let t = scrib_minus_calibrate(valid, &overall_config(r, options.lambda)?)?.thresholds;
                evaluate(test, &t)?
            }
        };
        Ok(point(&summary, r))
    });
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    let rmse = if points.is_empty() {
        0.0
    } else {
        let sq: f64 = points.iter().map(|p| (1.0 - p.accuracy - p.target_used.unwrap_or(0.0)).powi(2)).sum();
        (sq / points.len() as f64).sqrt()
    };
    Ok(SweepCurve { method, points, base_accuracy: top1_accuracy(test), rmse })
}

pub fn shared_anchors(curves: &[SweepCurve], span: AnchorSpan) -> Anchors {
    let high = match span {
        AnchorSpan::Unit => 1.0,
        AnchorSpan::CommonMax => curves.iter().flat_map(|c| &c.points).map(|p| p.ambiguity).fold(0.0, f64::max),
    };
    Anchors { low: 0.0, high }
}

/// Sorts by ambiguity, averages accuracy over equal ambiguities, adds the
/// anchors, and integrates with the trapezoid rule. The area is divided by
/// the span so that a constant curve scores its accuracy.
///
/// The low anchor carries `base_accuracy`; the high anchor repeats the
/// accuracy of the most ambiguous point.
pub fn anchored_auc(points: &[CurvePoint], base_accuracy: f64, anchors: Anchors) -> Result<(Vec<CurvePoint>, f64)> {
    let mut sorted: Vec<CurvePoint> =
        points.iter().copied().filter(|p| p.ambiguity >= anchors.low && p.ambiguity <= anchors.high).collect();
    sorted.sort_by(|a, b| a.ambiguity.total_cmp(&b.ambiguity).then(a.accuracy.total_cmp(&b.accuracy)));
    let last = match sorted.last() {
        Some(p) => p.accuracy,
        None => base_accuracy,
    };
    let mut all = Vec::with_capacity(sorted.len() + 2);
    all.push(CurvePoint { ambiguity: anchors.low, accuracy: base_accuracy, target_used: None });
    all.extend(sorted);
    all.push(CurvePoint { ambiguity: anchors.high, accuracy: last, target_used: None });

    let mut curve: Vec<CurvePoint> = Vec::with_capacity(all.len());
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        let mut sum = 0.0;
        while j < all.len() && all[j].ambiguity == all[i].ambiguity {
            sum += all[j].accuracy;
            j += 1;
        }
        let target_used = if j - i == 1 { all[i].target_used } else { None };
        curve.push(CurvePoint { ambiguity: all[i].ambiguity, accuracy: sum / (j - i) as f64, target_used });
        i = j;
    }
    if curve.len() < 2 {
        return Err(Error::Degenerate(format!("{} distinct curve point(s) after deduplication", curve.len())));
    }
    let area: f64 =
        curve.windows(2).map(|w| 0.5 * (w[0].accuracy + w[1].accuracy) * (w[1].ambiguity - w[0].ambiguity)).sum();
    Ok((curve, area / (anchors.high - anchors.low)))
}

/// Sweeps every method and scores all of them over one shared span.
pub fn compare_sweeps<E: Executor>(
    valid: &LabeledDataset,
    test: &LabeledDataset,
    methods: &[SweepMethod],
    options: &SweepOptions,
    exec: &E,
) -> Result<(Anchors, Vec<SweepOutcome>)> {
    let curves = methods.iter().map(|&m| sweep_curve(valid, test, m, options, exec)).collect::<Result<Vec<_>>>()?;
    let anchors = shared_anchors(&curves, options.span);
    let outcomes = curves
        .into_iter()
        .map(|c| {
            let (curve, auc) = anchored_auc(&c.points, c.base_accuracy, anchors)?;
            Ok(SweepOutcome { method: c.method, curve, auc, rmse: c.rmse, base_accuracy: c.base_accuracy })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((anchors, outcomes))
}

/// Single-method sweep. Without explicit anchors the span follows
/// `options.span` over this curve alone.
pub fn auc_sweep<E: Executor>(
    valid: &LabeledDataset,
    test: &LabeledDataset,
    method: SweepMethod,
    options: &SweepOptions,
    anchors: Option<Anchors>,
    exec: &E,
) -> Result<SweepOutcome> {
    let c = sweep_curve(valid, test, method, options, exec)?;
    let anchors = anchors.unwrap_or_else(|| shared_anchors(std::slice::from_ref(&c), options.span));
    let (curve, auc) = anchored_auc(&c.points, c.base_accuracy, anchors)?;
    Ok(SweepOutcome { method, curve, auc, rmse: c.rmse, base_accuracy: c.base_accuracy })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
    pub trials: usize,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Dimension(format!("need two equal series of length >= 2, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("a series has zero variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Correlation between chance and size ambiguity on `test` over the given
/// threshold vectors.
pub fn correlation_of<E: Executor>(
    test: &LabeledDataset,
    thresholds: &[ThresholdVector],
    exec: &E,
) -> Result<Correlation> {
    if thresholds.len() < 3 {
        return Err(Error::Config(format!("need at least 3 trials, got {}", thresholds.len())));
    }
    let pairs =
        exec.map(thresholds.len(), |i| evaluate(test, &thresholds[i]).map(|s| (s.chance_ambiguity, s.size_ambiguity)));
    let pairs = pairs.into_iter().collect::<Result<Vec<_>>>()?;
    let (chance, size): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(Correlation { pearson: pearson(&chance, &size)?, spearman: spearman(&chance, &size)?, trials: thresholds.len() })
}

/// Draws `trials` threshold vectors, each coordinate uniform over the
/// sorted validation scores of its class.
pub fn random_thresholds(valid: &LabeledDataset, trials: usize, seed: u64) -> Vec<ThresholdVector> {
    let k = valid.n_classes();
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let mut col: Vec<f64> = valid.scores().rows().map(|r| r[c]).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    (0..trials)
        .map(|i| {
            let mut r = rng::stream(seed, Domain::Trial, i as u64);
            let t = cols.iter().map(|col| col[r.random_range(0..col.len())]).collect();
            ThresholdVector::new(t).expect("finite scores")
        })
        .collect()
}

pub fn ambiguity_correlation<E: Executor>(
    valid: &LabeledDataset,
    test: &LabeledDataset,
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<Correlation> {
    if valid.n_classes() != test.n_classes() {
        return Err(Error::Dimension(format!(
            "validation K = {} but test K = {}",
            valid.n_classes(),
            test.n_classes()
        )));
    }
    correlation_of(test, &random_thresholds(valid, trials, seed), exec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportMethod {
    Sgr,
    Label,
    ScribMinus,
    Scrib,
}

impl ReportMethod {
    pub const ALL: [ReportMethod; 4] =
        [ReportMethod::Sgr, ReportMethod::Label, ReportMethod::ScribMinus, ReportMethod::Scrib];

    pub fn name(self) -> &'static str {
        match self {
            ReportMethod::Sgr => "sgr",
            ReportMethod::Label => "label",
            ReportMethod::ScribMinus => "scrib-minus",
            ReportMethod::Scrib => "scrib",
        }
    }
}

impl FromStr for ReportMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ReportMethod::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown report method '{s}'"))
    }
}

pub const REPORT_EPSILONS: [f64; 2] = [0.02, 0.05];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailBound {
    pub class: usize,
    pub epsilon: f64,
    /// Certain predictions of the class on the validation set.
    pub n_k: usize,
    /// `None` where the bound is undefined (target 0 or 1).
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: ReportMethod,
    /// Per-class thresholds; SGR repeats its confidence cut.
    #[serde(serialize_with = "crate::io::serialize_thresholds")]
    pub thresholds: Vec<f64>,
    pub risk: Vec<f64>,
    pub excess_risk: Vec<f64>,
    pub mean_excess_risk: f64,
    pub chance_ambiguity: f64,
    pub size_ambiguity: f64,
    pub overall_risk: f64,
    pub miscoverage: Vec<f64>,
    pub tail_bounds: Vec<TailBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub targets: Vec<f64>,
    pub lambda: f64,
    pub seed: u64,
    pub methods: Vec<MethodReport>,
}

/// Calibrates each method on `valid` against class-specific `targets` and
/// reports its behaviour on `test`.
///
/// SGR uses `max_k r_k*` as its overall target and LABEL uses the targets as
/// mis-coverage levels. Tail bounds assume the true risk equals the target.
pub fn risk_report<E: Executor>(
    valid: &LabeledDataset,
    test: &LabeledDataset,
    methods: &[ReportMethod],
    targets: &RiskTargets,
    lambda: f64,
    options: &CalibrateOptions,
    exec: &E,
) -> Result<RiskReport> {
    let RiskTargets::ClassSpecific(r) = targets else {
        return Err(Error::Config("risk reports need class-specific targets".into()));
    };
    let k = valid.n_classes();
    if test.n_classes() != k {
        return Err(Error::Dimension(format!("validation K = {k} but test K = {}", test.n_classes())));
    }
    let config = LossConfig::new(LossKind::ClassSpecific, targets.clone(), PenaltyWeights::uniform(k, lambda))?;
    config.check(k)?;
    let mut reports = Vec::with_capacity(methods.len());
    for &method in methods {
        let (thresholds, on_valid, on_test) = match method {
            ReportMethod::Sgr => {
                let cut = sgr_calibrate(valid, r.iter().copied().fold(0.0, f64::max))?.confidence_threshold;
                (vec![cut; k], evaluate_sgr(valid, cut)?, evaluate_sgr(test, cut)?)
            }
            ReportMethod::Label => {
                let t = label_calibrate(valid, r)?.thresholds;
                (t.to_vec(), evaluate(valid, &t)?, evaluate(test, &t)?)
            }
            ReportMethod::ScribMinus => {
                let t = scrib_minus_calibrate(valid, &config)?.thresholds;
                (t.to_vec(), evaluate(valid, &t)?, evaluate(test, &t)?)
            }
            ReportMethod::Scrib => {
                let t = calibrate(valid, &config, options, exec)?.thresholds;
                (t.to_vec(), evaluate(valid, &t)?, evaluate(test, &t)?)
            }
        };
        let excess = excess_risk(&on_test, targets)?;
        let mut tail_bounds = Vec::new();
        for c in 0..k {
            for &epsilon in &REPORT_EPSILONS {
                let n_k = on_valid.sure()[c];
                let bound = risk_tail_bound(TailBoundQuery { r: r[c], epsilon, n_k: n_k as u64 }).ok();
                tail_bounds.push(TailBound { class: c, epsilon, n_k, bound });
            }
        }
        reports.push(MethodReport {
            method,
            thresholds,
            mean_excess_risk: excess.iter().sum::<f64>() / k as f64,
            risk: on_test.risk.clone(),
            excess_risk: excess,
            chance_ambiguity: on_test.chance_ambiguity,
            size_ambiguity: on_test.size_ambiguity,
            overall_risk: on_test.overall_risk,
            miscoverage: on_test.miscoverage.clone(),
            tail_bounds,
        });
    }
    Ok(RiskReport { targets: r.clone(), lambda, seed: options.seed, methods: reports })
}
