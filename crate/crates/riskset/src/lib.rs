//! File formats, command-line interface and experiment harness on top of
//! [`riskset_core`].

pub mod bench;
pub mod cli;
pub mod exec;
pub mod io;

pub use exec::RayonExecutor;
