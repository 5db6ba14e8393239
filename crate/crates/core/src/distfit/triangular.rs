//! Density of the difference of two independent uniform rounding errors.

use serde::{Deserialize, Serialize};

/// Triangular kernel centered at a price change, with half-width one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularKernel {
    pub center: f64,
    pub half_width: f64,
}

impl TriangularKernel {
    pub fn new(center: f64, half_width: f64) -> Self {
        assert!(half_width > 0.0, "triangular half-width must be positive");
        Self { center, half_width }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        triangular_density(x, self.center, self.half_width)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    /// Variance of the kernel, `q²/6`.
    pub fn variance(&self) -> f64 {
        self.half_width * self.half_width / 6.0
    }
}

/// Piecewise-linear kernel: zero at `center ± q`, `1/q` at `center`.
pub fn triangular_density(x: f64, center: f64, q: f64) -> f64 {
    let q2 = q * q;
    if x >= center - q && x < center {
        (x - center + q) / q2
    } else if x >= center && x <= center + q {
        (center + q - x) / q2
    } else {
        0.0
    }
}
