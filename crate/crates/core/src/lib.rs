//! Post-hoc threshold calibration for set-valued classifiers.
//!
//! Given the score matrix a fixed base classifier produces on a held-out
//! validation set, this crate searches one threshold per class so that the
//! resulting set classifier `H(x) = {k : m_k(x) > t_k}` keeps its
//! class-specific (or overall) risk on certain predictions near a target
//! while rejecting as little as possible.
//!
//! The crate is `no_std` and only needs `alloc`. Parallel execution of
//! restarts is abstracted by [`exec::Executor`]; the sequential executor
//! lives here and threaded ones can be supplied by the caller.
#![no_std]

extern crate alloc;

pub mod baselines;
pub mod bounds;
pub mod error;
pub mod eval;
pub mod exec;
pub mod loss;
pub mod oracle;
pub mod rng;
pub mod search;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use eval::{evaluate, evaluate_sets, excess_risk, predict_set, predict_sets, EvalSummary};
pub use loss::{AmbiguityKind, LossConfig, LossKind, PenaltyWeights, RiskTargets};
pub use search::{calibrate, coordinate_descent, quicksearch, CalibrateOptions, CalibrationResult};
pub use types::{ClassSet, LabeledDataset, ScoreMatrix, ThresholdVector, MAX_CLASSES};
