//! Conditional mean discretization errors `⟨θ_n⟩`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distfit::quadrature::integrate_half_cells;
use crate::distfit::{Density1d, Weighting};

/// Mean of `z - n·q` under the density restricted to cell `n`, weighted by
/// the cell kernel. `None` when the density carries no mass there.
pub fn mean_error<D: Density1d + ?Sized>(density: &D, n: i64, q: f64, w: Weighting) -> Option<f64> {
    let (lo, hi) = w.window(n, q);
    let c = n as f64 * q;
    // rescale by the largest sampled log density so far tails stay representable
    let reference = [lo, 0.5 * (lo + c), c, 0.5 * (c + hi), hi]
        .into_iter()
        .map(|z| density.ln_pdf(z))
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !reference.is_finite() {
        return None;
    }
    let rho = |z: f64| {
        let v = (density.ln_pdf(z) - reference).exp();
        if v.is_finite() {
            v * w.weight(z, n, q)
        } else {
            0.0
        }
    };
    let tol = 1e-13 * q;
    let mass = integrate_half_cells(&rho, lo, hi, q, tol);
    if !(mass > 1e-200) {
        return None;
    }
    let first = integrate_half_cells(&|z| (z - c) * rho(z), lo, hi, q, tol);
    let bound = match w {
        Weighting::Uniform => 0.5 * q,
        Weighting::Triangular => q,
    };
    Some((first / mass).clamp(-bound, bound))
}

/// `⟨θ_n⟩` for a set of cells, with cells of zero model mass recorded and
/// treated as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanErrorTable {
    pub q: f64,
    pub weighting: Weighting,
    pub values: BTreeMap<i64, f64>,
    /// Cells where the density had no mass; their entry is 0.
    pub fallbacks: Vec<i64>,
}

impl MeanErrorTable {
    pub fn build<D, I>(density: &D, cells: I, q: f64, w: Weighting) -> Self
    where
        D: Density1d + ?Sized,
        I: IntoIterator<Item = i64>,
    {
        let mut values = BTreeMap::new();
        let mut fallbacks = Vec::new();
        for n in cells {
            let v = mean_error(density, n, q, w).unwrap_or_else(|| {
                fallbacks.push(n);
                0.0
            });
            values.insert(n, v);
        }
        Self {
            q,
            weighting: w,
            values,
            fallbacks,
        }
    }

    pub fn get(&self, n: i64) -> f64 {
        self.values.get(&n).copied().unwrap_or(0.0)
    }
}

/// `(1/T)·Σ_n T_n⟨θ_n⟩`.
pub fn overall_mean_error(table: &MeanErrorTable, counts: &BTreeMap<i64, u64>) -> f64 {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return 0.0;
    }
    counts
        .iter()
        .map(|(&n, &c)| c as f64 * table.get(n))
        .sum::<f64>()
        / total as f64
}
