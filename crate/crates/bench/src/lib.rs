//! Synthetic experiment harness for the adjquat solvers.

pub mod experiment;
pub mod io;
pub mod synth;

pub use experiment::{run_experiment, BenchError, ExperimentConfig, Report, Summary, Task, TrialRecord, TrialValues};
