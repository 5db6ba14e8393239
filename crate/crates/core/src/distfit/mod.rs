//! Continuous densities behind discretized observations.

mod density;
mod fit;
mod histogram;
mod joint;
pub mod lm;
pub mod quadrature;
mod triangular;

pub use density::{
    Density1d, DensityModel, Gaussian, GaussianPatch, InterpolatedDensity, PowerLawWindow, Weighting,
    WINDOW_HALF,
};
pub use fit::{
    fit_density, fit_triangular_residual, fit_uniform_residual, DensityKind, FitOptions,
    FLAG_MOMENT_FIT, FLAG_PATCH_FAILED, FLAG_TABLE_FALLBACK,
};
pub use histogram::{Histogram, Histogram2d};
pub use joint::{JointDensity, JointMode, Slice, FLAG_MOMENT_MARGINAL, FLAG_SPARSE_JOINT};
pub use triangular::{triangular_density, TriangularKernel};
