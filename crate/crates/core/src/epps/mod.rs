//! Compensation of correlation coefficients for price discretization.
//!
//! The observed coefficient is decomposed into the covariance of the
//! discretized series plus terms involving the discretization errors θ.
//! Their conditional means come from densities fitted to the observed
//! histograms; the variances follow from the rounding kernel.

mod counts;
mod engine;
mod mean_error;
mod report;

pub use counts::{CountTensors, IndexBounds, PriceIndex, DEFAULT_MEMORY_BUDGET};
pub use engine::{
    corrected_corr_price_changes, corrected_corr_returns, correction_terms_discretized,
    CorrectionOptions, FLAG_CLAMPED, FLAG_IDENTICAL,
};
pub use mean_error::{mean_error, overall_mean_error, MeanErrorTable};
pub use report::{term_impact, BaseMoments, CorrectionReport, Form, TermId, TermSet};
