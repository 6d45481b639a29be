//! Batch front-end for the `prognos-core` pipeline: TOML configuration,
//! CSV/JSON formats and the `synth`, `decompose`, `extract`, `predict` and
//! `evaluate` stages.
//!
//! Every stage is a plain function over a [`commands::RunContext`], so the
//! binary and the tests drive exactly the same code.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use commands::RunContext;
pub use config::PipelineConfig;
pub use error::CliError;
