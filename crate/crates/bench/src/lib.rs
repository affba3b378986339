//! Experiment runner: generate or load signed graphs, train SSSNET and the
//! spectral baselines over seeded repetitions, and write tables and plot series.

pub mod config;
pub mod dataset;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{DataSource, ExperimentConfig, FileSource, Method, ModelParams, Sweep, SweepAxis};
pub use dataset::{load_dataset, Dataset};
pub use error::{BenchError, Result};
pub use report::{emit_outputs, SummaryRow};
pub use runner::{graph_seed, run_experiment, MethodResult, RunOptions, RunOutcome, RunReport};
