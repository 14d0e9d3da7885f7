//! Experiment runner for `irs-assoc`: config files, policy × case × φ × ω
//! sweeps, and CSV/JSON trace emission.

pub mod config;
pub mod emit;
pub mod experiment;

pub use config::{parse_config, to_config_text, ConfigError};
pub use emit::{emit_trace, emit_traces, write_traces, CSV_HEADER};
pub use experiment::{
    run_experiment, run_sweep, CellSummary, ExperimentError, ExperimentSpec, OutputFormat, RunSummary, Sweep,
};
