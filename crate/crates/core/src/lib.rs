//! Probabilistic forecasting primitives for hourly pollutant series.
//!
//! The crate is `no_std` (with `alloc`) and holds every numerical piece of the
//! toolkit: standard-normal functions and weighted quantiles ([`math`]), the
//! feature pipeline ([`features`]), the quantile model families ([`models`]),
//! predictive-distribution utilities ([`dist`]), scores ([`metrics`]) and the
//! cross-validation / rank-test machinery ([`eval`]). File formats, the
//! synthetic generator and the command-line front end live in the `noxcast`
//! crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dist;
pub mod error;
pub mod eval;
pub mod features;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod seed;
pub mod time;

pub use error::{Error, Result};
