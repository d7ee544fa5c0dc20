//! Experiment configuration, orchestration and CSV reporting.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, Params, DEFAULT_GATE, EXPERIMENTS};
pub use experiments::run_experiment;
pub use report::{read_csv, summary, write_csv, ResultRow, CSV_HEADER};
