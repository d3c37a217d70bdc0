//! Experiment orchestration: config, sweeps, CSV tables and reports.

pub mod config;
pub mod csv_out;
pub mod report;
pub mod run;

pub use config::{parse_config, ExperimentConfig};
pub use csv_out::{read_csv, write_csv, Audit, MetricsRow};
pub use report::{build_report, compare_report, Report};
pub use run::{analyze_grid, run_experiment, GridPoint, RunOptions};
