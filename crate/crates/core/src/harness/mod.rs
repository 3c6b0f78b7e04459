//! Experiment orchestration: configuration, replication fan-out, estimators,
//! rate fits, bound dominance, quantile scaling, and the acceptance matrix.

pub mod acceptance;
pub mod config;
pub mod dominance;
pub mod exec;
pub mod experiment;
pub mod oracle;
pub mod quantile;
pub mod stats;

pub use config::{ConfigFile, ExperimentConfig};
pub use exec::Executor;
pub use experiment::{run_experiment, run_suite, ExperimentResult};
