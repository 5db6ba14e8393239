//! Tick-data ingestion, gridding, run configuration and output tables.

mod config;
mod grid;
mod output;
mod ticks;

pub use config::{PairSpec, RunConfig};
pub use grid::{aligned_returns, grid_prices, segment_returns, GridSegment};
pub use output::{ensemble_mean, validate_report_json, write_curve, CurvePoint};
pub use ticks::{load_ticks, read_ticks, write_ticks, LoadOptions, Session, TickFile, TickRow, DEFAULT_SESSION_GAP};
