//! Experiment orchestration: configuration, seeding, parallel execution and
//! CSV/JSON reports.

pub mod cli;
pub mod config;
pub mod report;
pub mod run;
pub mod seed;

pub use cli::cli_main;
pub use config::{Algorithm, CheckConfig, ExperimentSpec, ModelConfig, OutputConfig, OutputFormat, StartConfig};
pub use report::{emit_chains_csv, emit_csv, emit_json, read_json_report, read_json_rows, write_csv, Report, CSV_HEADER};
pub use run::{
    initial_point, oracles, run_checks, run_experiment, run_experiment_with_workers, ChainRecord, ClosenessReport,
    Diagnostics, ExperimentOutput, Oracles, SummaryRow, UlaVarianceOracle, MOMENT_ORDERS,
};
pub use seed::{chain_seed, derive_seed, start_seed};
