//! Quantitative engine for a volatility index rebuilt from first principles:
//! a double-subordinated Levy model for log returns, FFT option pricing,
//! moment plus characteristic-function calibration, variance-swap index
//! construction, long-memory innovation filtering, and tail-ratio shock
//! series.

pub mod calibrate;
pub mod error;
pub mod fractional;
pub mod levy;
pub mod optimize;
pub mod pricer;
pub mod risk;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod vix;

pub use error::{Result, VvixError};
