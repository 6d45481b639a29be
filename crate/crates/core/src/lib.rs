//! Data-driven fuel-cell prognostics without `std`.
//!
//! The crate covers the whole numerical chain, from a dynamic stack-voltage
//! record to a remaining-useful-life estimate:
//!
//! * [`emd`] and [`hilbert`] implement the Hilbert-Huang transform,
//! * [`hi`] iterates the decomposition until the residual is slow enough to
//!   serve as a health indicator,
//! * [`abba`] turns the indicator into a symbol string and back,
//! * [`gru`] learns and extends the symbol string,
//! * [`rul`] and [`kde`] turn an ensemble of forecasts into one RUL,
//! * [`metrics`] and [`evaluation`] score predictions against ground truth,
//! * [`synth`] generates ageing records with a known degradation trend.
//!
//! Everything here is pure computation over owned buffers; file formats,
//! configuration and the command line live in the companion `prognos` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod abba;
pub mod emd;
mod error;
pub mod evaluation;
pub mod fft;
pub mod gru;
pub mod hi;
pub mod hilbert;
pub mod kde;
pub mod kmeans;
pub mod metrics;
pub mod rul;
pub mod spline;
pub mod stats;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
pub use timeseries::{NormalizationRecord, TimeSeries};

/// Seconds per hour; series are stored in hours, frequencies reported in Hz.
pub const SECONDS_PER_HOUR: f64 = 3600.0;
