//! Seeded multi-run experiments, parameter sweeps, oracles and result files.
//!
//! Run `i` of an experiment is seeded with `base_seed + i`. Runs execute in
//! parallel and are aggregated in run order, so output bytes depend only on
//! the configuration and seed.

mod config;
pub mod oracle;
mod output;
mod runner;
mod sweep;

pub use config::{AgentSpec, ExperimentConfig};
pub use oracle::{exp_periodic_benefit, oracle_exp, oracle_per, PeriodicOptimum};
pub use output::{
    emit, rows_from_csv, rows_to_csv, EmittedFiles, CSV_FILE, CSV_HEADER, PLOT_FILES, SUMMARY_FILE,
};
pub use runner::{
    run_experiment, run_single, AgentReport, ExperimentResult, Row, RunOutcome, RunSummary,
    SeriesPoint, Spread, Summary, NON_OPTIMAL_THRESHOLD,
};
pub use sweep::{run_sweep, Axis, GridPoint, IndexEntry, SweepIndex, SweepSpec, INDEX_FILE};
