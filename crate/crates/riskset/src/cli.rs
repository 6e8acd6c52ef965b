//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit status.
//!
//! Exit status is 0 on success, 1 for invalid input (bad flags, malformed
//! files, dimension mismatches) and 2 for I/O failures. Errors go to stderr
//! as one JSON line: `{"error":"<kind>","message":"..."}`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use riskset_core::baselines::{evaluate_sgr, label_calibrate, scrib_minus_calibrate, sgr_calibrate};
use riskset_core::bounds::{risk_tail_bound, TailBoundQuery};
use riskset_core::synth::{generate, SynthSpec};
use riskset_core::{
    calibrate, evaluate, evaluate_sets, CalibrateOptions, LabeledDataset, LossConfig, LossKind, RiskTargets,
    ThresholdVector,
};
use serde::Serialize;

use crate::bench::{self, AnchorSpan, ReportMethod, SweepMethod, SweepOptions};
use crate::exec::RayonExecutor;
use crate::io::{self, Diagnostics, IoError, LossKindName, Method, SummaryDoc, ThresholdFile, MEMBERSHIP};

const AFTER_HELP: &str = "Class labels are 0-indexed in every file: a K-class dataset uses labels 0..K-1 \
and score columns s0..s{K-1}.";

#[derive(Debug, Parser)]
#[command(name = "riskset", version, about = "Per-class threshold calibration for set-valued classifiers", after_help = AFTER_HELP)]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Scrib,
    ScribMinus,
    Label,
    Sgr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LossArg {
    Class,
    Overall,
    Label,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset whose scores are the true class probabilities.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Per-class signal strengths, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "9,1,3,3,3")]
        signal: Vec<f64>,
        /// Variance of each logit coordinate.
        #[arg(long, default_value_t = 3.0)]
        sigma: f64,
        #[arg(long, env = "RISKSET_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit thresholds on a labelled score file.
    Calibrate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Scrib)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = LossArg::Class)]
        loss: LossArg,
        /// Risk (or mis-coverage) targets, comma separated; one value applies to every class.
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<f64>,
        #[arg(long, default_value_t = riskset_core::loss::DEFAULT_LAMBDA)]
        lambda: f64,
        /// Weight of the two-sided term of the overall loss.
        #[arg(long, default_value_t = 0.0)]
        lambda_prime: f64,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, value_enum, default_value_t = Toggle::On)]
        neighborhood: Toggle,
        #[arg(long)]
        subsample: Option<usize>,
        #[arg(long, env = "RISKSET_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the predicted set of every row.
    Apply {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        thresholds: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print risks and ambiguities of stored thresholds on a dataset.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        thresholds: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Accuracy against ambiguity over a sweep of overall-risk targets.
    Sweep {
        #[arg(long)]
        valid: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "scrib,sgr,scrib-minus")]
        methods: Vec<SweepMethod>,
        #[arg(long, default_value_t = 0.01)]
        stride: f64,
        #[arg(long, default_value_t = riskset_core::loss::DEFAULT_LAMBDA)]
        lambda: f64,
        /// Common ambiguity span: unit ([0, 1]) or common-max.
        #[arg(long, default_value = "unit")]
        span: AnchorSpan,
        #[arg(long, env = "RISKSET_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write every curve point as CSV.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Correlation of chance and size ambiguity over random thresholds.
    Correlate {
        #[arg(long)]
        valid: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, env = "RISKSET_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Tail bound on the empirical risk exceeding the true risk by eps.
    Bound {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: u64,
    },
    /// Class-specific risk report for every baseline.
    Report {
        #[arg(long)]
        valid: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "sgr,label,scrib-minus,scrib")]
        methods: Vec<ReportMethod>,
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<f64>,
        #[arg(long, default_value_t = riskset_core::loss::DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long, env = "RISKSET_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn status(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Invalid(_) => "invalid",
            CliError::Io(_) => "io",
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<riskset_core::Error> for CliError {
    fn from(e: riskset_core::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Io(format!("stdout: {e}"))
}

/// Runs the CLI on `argv` (program name first), writing results to `out`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&msg).trim_start_matches("error: ").to_string();
            let e = CliError::Usage(first);
            let _ = writeln!(err, "{}", e.to_json_line());
            return e.status();
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json_line());
            e.status()
        }
    }
}

/// Runs the CLI against the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

fn expand(targets: &[f64], k: usize) -> Result<Vec<f64>, CliError> {
    match targets.len() {
        1 => Ok(vec![targets[0]; k]),
        n if n == k => Ok(targets.to_vec()),
        n => Err(CliError::Invalid(format!("{n} targets for K = {k}"))),
    }
}

fn loss_config(
    loss: LossArg,
    targets: &[f64],
    k: usize,
    lambda: f64,
    lambda_prime: f64,
) -> Result<LossConfig, CliError> {
    Ok(match loss {
        LossArg::Class => LossConfig::class_specific(expand(targets, k)?, lambda)?,
        LossArg::Label => LossConfig::label(expand(targets, k)?, lambda)?,
        LossArg::Overall => {
            if targets.len() != 1 {
                return Err(CliError::Invalid("the overall loss takes a single target".into()));
            }
            LossConfig::overall(targets[0], lambda)?
        }
    }
    .with_lambda_prime(lambda_prime))
}

fn loss_name(kind: LossKind) -> LossKindName {
    match kind {
        LossKind::ClassSpecific => LossKindName::Class,
        LossKind::Overall => LossKindName::Overall,
        LossKind::Label => LossKindName::Label,
    }
}

fn check_k(data: &LabeledDataset, file: &ThresholdFile) -> Result<(), CliError> {
    if data.n_classes() != file.k {
        return Err(CliError::Invalid(format!(
            "dataset has K = {} but thresholds have k = {}",
            data.n_classes(),
            file.k
        )));
    }
    Ok(())
}

fn summary_of(data: &LabeledDataset, file: &ThresholdFile) -> Result<riskset_core::EvalSummary, CliError> {
    Ok(match file.method {
        Method::Sgr => evaluate_sgr(data, file.thresholds[0])?,
        _ => evaluate(data, &ThresholdVector::new(file.thresholds.clone())?)?,
    })
}

fn write_json_stdout<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    writeln!(out, "{s}").map_err(stdout_err)
}

fn executor(threads: usize) -> Result<RayonExecutor, CliError> {
    RayonExecutor::new(threads).map_err(|e| CliError::Invalid(format!("thread pool: {e}")))
}

#[derive(Serialize)]
struct SweepDoc<'a> {
    stride: f64,
    lambda: f64,
    lambda_prime: f64,
    seed: u64,
    /// Both anchors are synthetic points added to every curve.
    anchors: bench::Anchors,
    span: AnchorSpan,
    anchor_rule: &'static str,
    methods: &'a [bench::SweepOutcome],
}

fn write_curves(outcomes: &[bench::SweepOutcome], path: &Path) -> Result<(), CliError> {
    let mut s = String::from("method,ambiguity,accuracy,target,anchor\n");
    for o in outcomes {
        for p in &o.curve {
            let target = p.target_used.map(io::format_f64).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                o.method,
                io::format_f64(p.ambiguity),
                io::format_f64(p.accuracy),
                target,
                p.target_used.is_none()
            ));
        }
    }
    std::fs::write(path, s).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { n, k, signal, sigma, seed, out: path } => {
            let data = generate(&SynthSpec { n, k_classes: k, signal, sigma, seed })?;
            io::write_dataset(&data, &path)?;
        }
        Command::Calibrate {
            data,
            method,
            loss,
            targets,
            lambda,
            lambda_prime,
            restarts,
            neighborhood,
            subsample,
            seed,
            out: path,
        } => {
            let data = io::read_dataset(&data)?;
            let k = data.n_classes();
            let file = match method {
                MethodArg::Sgr => {
                    let r = match targets.as_slice() {
                        [r] => *r,
                        _ => return Err(CliError::Invalid("sgr takes a single overall target".into())),
                    };
                    let fit = sgr_calibrate(&data, r)?;
                    let summary = evaluate_sgr(&data, fit.confidence_threshold)?;
                    let mut diagnostics = Diagnostics::from_summary(&summary, None);
                    if !fit.feasible {
                        diagnostics
                            .warnings
                            .push(format!("no accepted prefix reaches risk {r}; every row is rejected"));
                    }
                    ThresholdFile {
                        k,
                        method: Method::Sgr,
                        thresholds: vec![fit.confidence_threshold; k],
                        membership: MEMBERSHIP.into(),
                        loss_kind: LossKindName::Overall,
                        targets: vec![r],
                        lambda: Vec::new(),
                        seed: None,
                        diagnostics,
                    }
                }
                MethodArg::Label => {
                    let alpha = expand(&targets, k)?;
                    let fit = label_calibrate(&data, &alpha)?;
                    let summary = evaluate(&data, &fit.thresholds)?;
                    let mut diagnostics = Diagnostics::from_summary(&summary, None);
                    diagnostics.warnings = fit.warnings;
                    ThresholdFile {
                        k,
                        method: Method::Label,
                        thresholds: fit.thresholds.to_vec(),
                        membership: MEMBERSHIP.into(),
                        loss_kind: LossKindName::Label,
                        targets: alpha,
                        lambda: Vec::new(),
                        seed: None,
                        diagnostics,
                    }
                }
                MethodArg::Scrib | MethodArg::ScribMinus => {
                    let config = loss_config(loss, &targets, k, lambda, lambda_prime)?;
                    let result = if method == MethodArg::Scrib {
                        let options = CalibrateOptions {
                            restarts,
                            neighborhood: neighborhood == Toggle::On,
                            subsample,
                            seed,
                            ..CalibrateOptions::default()
                        };
                        calibrate(&data, &config, &options, &executor(cli.threads)?)?
                    } else {
                        scrib_minus_calibrate(&data, &config)?
                    };
                    let mut diagnostics = Diagnostics::from_summary(&result.summary, Some(result.loss));
                    diagnostics.restarts_used = result.restarts_used;
                    diagnostics.restart_losses = result.restart_losses;
                    diagnostics.neighborhood_sampled = result.neighborhood_sampled;
                    diagnostics.neighborhood_improved = result.neighborhood_improved;
                    diagnostics.warnings = result.warnings;
                    ThresholdFile {
                        k,
                        method: if method == MethodArg::Scrib { Method::Scrib } else { Method::ScribMinus },
                        thresholds: result.thresholds.to_vec(),
                        membership: MEMBERSHIP.into(),
                        loss_kind: loss_name(config.kind),
                        targets: config.targets.values().to_vec(),
                        lambda: config.weights.lambda.clone(),
                        seed: (method == MethodArg::Scrib).then_some(seed),
                        diagnostics,
                    }
                }
            };
            io::write_json(&file, &path)?;
        }
        Command::Apply { data, thresholds, out: path } => {
            let data = io::read_dataset(&data)?;
            let file = io::read_thresholds(&thresholds)?;
            check_k(&data, &file)?;
            let sets: Vec<_> = data.scores().rows().map(|r| file.predict(r)).collect();
            io::write_sets(&sets, &path)?;
        }
        Command::Evaluate { data, thresholds, format } => {
            let data = io::read_dataset(&data)?;
            let file = io::read_thresholds(&thresholds)?;
            check_k(&data, &file)?;
            let doc = SummaryDoc::from(&summary_of(&data, &file)?);
            match format {
                Format::Json => write_json_stdout(&doc, out)?,
                Format::Csv => io::write_summary_csv(&doc, out).map_err(stdout_err)?,
            }
        }
        Command::Sweep { valid, test, methods, stride, lambda, span, seed, out: path, curves } => {
            let valid = io::read_dataset(&valid)?;
            let test = io::read_dataset(&test)?;
            let options = SweepOptions { stride, lambda, span, calibrate: CalibrateOptions::with_seed(seed) };
            let (anchors, outcomes) =
                bench::compare_sweeps(&valid, &test, &methods, &options, &executor(cli.threads)?)?;
            let doc = SweepDoc {
                stride,
                lambda,
                lambda_prime: lambda * riskset_core::loss::SWEEP_LAMBDA_PRIME_RATIO,
                seed,
                anchors,
                span,
                anchor_rule: "synthetic endpoints: low = (0, no-rejection test accuracy), high = (span end, accuracy of the most ambiguous point)",
                methods: &outcomes,
            };
            io::write_json(&doc, &path)?;
            if let Some(c) = curves {
                write_curves(&outcomes, &c)?;
            }
        }
        Command::Correlate { valid, test, trials, seed } => {
            let valid = io::read_dataset(&valid)?;
            let test = io::read_dataset(&test)?;
            let c = bench::ambiguity_correlation(&valid, &test, trials, seed, &executor(cli.threads)?)?;
            write_json_stdout(&c, out)?;
        }
        Command::Bound { r, eps, n } => {
            let b = risk_tail_bound(TailBoundQuery { r, epsilon: eps, n_k: n })?;
            writeln!(out, "{b:?}").map_err(stdout_err)?;
        }
        Command::Report { valid, test, methods, targets, lambda, seed, out: path } => {
            let valid = io::read_dataset(&valid)?;
            let test = io::read_dataset(&test)?;
            let targets = RiskTargets::ClassSpecific(expand(&targets, valid.n_classes())?);
            let report = bench::risk_report(
                &valid,
                &test,
                &methods,
                &targets,
                lambda,
                &CalibrateOptions::with_seed(seed),
                &executor(cli.threads)?,
            )?;
            io::write_json(&report, &path)?;
        }
    }
    Ok(())
}

/// Counts from a predicted-set file, for consistency checks against thresholds.
pub fn evaluate_set_file(data: &LabeledDataset, sets: &Path) -> Result<riskset_core::EvalSummary, CliError> {
    let sets = io::read_sets(sets)?;
    if sets.len() != data.len() {
        return Err(CliError::Invalid(format!("{} sets for {} rows", sets.len(), data.len())));
    }
    Ok(evaluate_sets(data.labels(), &sets, data.n_classes())?)
}
