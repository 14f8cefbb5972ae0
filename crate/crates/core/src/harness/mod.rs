//! Scenario files, Monte Carlo runs over network realizations and their
//! tabular output.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod output;

pub use compare::{paired_comparison, ComparisonRow, Metric, Verdict};
pub use config::{preset, ScenarioConfig, PRESETS};
pub use experiment::{run_experiment, run_experiment_with_workers, run_realization, RunReport};
pub use output::{emit_results, load_report};
