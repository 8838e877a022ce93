//! Link-level model of predictor-antenna moving relays.
//!
//! A predictor antenna (PA) on the vehicle roof measures the channel that a
//! trailing receive antenna (RA) will meet a processing delay later. When the
//! vehicle speed does not match the antenna spacing the RA sees a correlated
//! but different channel. This crate quantifies the throughput cost of that
//! spatial mismatch and implements velocity-aware RA selection.
//!
//! Module map:
//! - [`specfun`]: Bessel, Marcum-Q and Gaussian-tail functions.
//! - [`channel`]: mismatch geometry, the conditional gain law and samplers.
//! - [`rate_adapt`]: per-observation rate optimisation and expected throughput.
//! - [`fbl`]: finite-blocklength error and throughput.
//! - [`selection`]: receive-antenna selection over speed sweeps.

pub mod channel;
pub mod error;
pub mod fbl;
pub mod quadrature;
pub mod rate_adapt;
pub mod selection;
pub mod specfun;

pub use error::{Error, Result};
