//! Batch front-end tying the analysis pipeline together: per-user reports,
//! design-decision sweeps, the data-sufficiency analysis, group
//! comparisons, synthetic-data generation, and trajectory dumps.

#![forbid(unsafe_code)]

pub mod compare;
pub mod config;
pub mod convergence;
pub mod pipeline;
pub mod report;
pub mod sweep;
pub mod synthspec;

pub use config::{CliError, RunConfig, SweepDimension};
pub use pipeline::{analyze_users, run_pipeline, PipelineReport, UserRow};
