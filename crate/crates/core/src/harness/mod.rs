//! Experiment configuration, execution, persistence, and emission.

pub mod cache;
pub mod config;
pub mod emit;
pub mod runner;

pub use config::{
    parse_config, parse_mp_eval_config, Experiment, ExperimentConfig, MpEvalConfig, OutputFormat,
    ReferenceLaw,
};
pub use emit::{emit, parse_report, write_report, EmittedReport, MetricRow};
pub use runner::{
    rate_fit, run_diagnose, run_normcheck, run_residual, run_sweep, run_to_rows, run_varcheck,
    RateFit, SweepResult, SweepRow,
};
