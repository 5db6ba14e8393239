//! Tick-size effects on high-frequency returns and correlations.
//!
//! Prices live on a grid of width `q`. This crate decomposes returns by
//! price change, fits continuous densities behind discretized data,
//! compensates correlation coefficients for rounding, and simulates
//! correlated price pairs to validate the compensation.

pub mod decimal;
pub mod distfit;
pub mod epps;
pub mod error;
pub mod io;
pub mod microstructure;
pub mod series;
pub mod sim;

pub use decimal::{Decimal, TickSize};
pub use error::{Error, Result};
