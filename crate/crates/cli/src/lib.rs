//! Library side of the `cvqkd` command-line tool: run configuration,
//! sweep drivers, the Monte Carlo pipeline, and table writers. The binary
//! in `main.rs` is a thin argument-parsing layer over these.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod sweeps;

pub use config::Config;
pub use error::{CliError, Result};
pub use output::{Metadata, OutputFormat};
pub use pipeline::{run_pipeline, PipelineReport};
pub use sweeps::{
    max_distance, optimal_va, sweep_max_distance, sweep_optimal_va, sweep_rate_vs_distance,
    MaxDistanceRow, OptimalVa, OptimalVaRow, RateRow,
};
