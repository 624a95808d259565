//! Monte Carlo experiment runner, real-data analysis and reporting.

pub mod config;
pub mod realdata;
pub mod report;
pub mod runner;
pub mod selftest;

pub use config::{CellSpec, ExperimentConfig, GridSpec, Preset, ScenarioSpec, TestKind};
pub use realdata::{load_real_data, real_data_run, RealDataReport, RealDataRequest};
pub use report::{emit_csv, emit_report, parse_csv, ResultRow};
pub use runner::{run_cell, run_grid, CellResult, GridResult, ReplicateRecord, TestTally};
pub use selftest::{run_selftest, SelfTestCheck};
