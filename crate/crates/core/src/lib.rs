//! Sequential MMSE channel estimation over repetition copies affected by a
//! random common phase error, with baselines, channel and phase-noise models,
//! an OFDM waveform check of the common-phase-error model, and a Monte-Carlo
//! harness.

pub mod bessel;
pub mod channel;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod waveform;

pub use error::{Error, Result};
