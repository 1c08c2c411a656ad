//! Config-driven replication harness.
//!
//! An [`ExperimentConfig`] names a procedure, a data source (a simulation
//! scenario or a CSV file) and the tuning knobs. [`run_experiment`] derives
//! one seed per replication, runs the replications in parallel, orders the
//! results by replication index and aggregates every metric into a mean and
//! standard error. Reports serialize to JSON or CSV with 17 significant
//! digits.

mod config;
mod csv_io;
mod report;
mod runner;

pub use config::{
    parse_rule, BandwidthValue, ExperimentConfig, NoiseLaw, Procedure, ReportFormat, Scenario, ScoreKind, SplitKind,
};
pub use csv_io::{format_number, inject_outliers, load_csv, write_csv, write_csv_to, CsvSchema, LoadedTable};
pub use report::{aggregate, emit_report, Aggregate, ExperimentReport, ReplicationRow};
pub use runner::{cell_membership, cell_name, run_experiment, simulate, Experiment, Metrics};
