//! Synthetic markets: correlated returns, rounded price paths and the
//! experiments built on them.

mod experiment;
mod model;
pub mod rng;
mod tails;

pub use experiment::{
    epps_experiment, simulate_pair, weighted_rms, write_curve_csv, write_theta_csv, EppsExperiment,
    EppsPoint, SimConfig, ThetaRow, DEFAULT_INTERVALS,
};
pub use model::{
    correlated_gaussian_pairs, discretize_prices, gbm_prices, noh_returns, Discretized, GbmForm,
};
pub use tails::{tail_experiment, total_variation, write_tail_csv, ChangeLaw, TailExperimentConfig, TailResult};
