//! Continuous density models fitted to discretized histograms.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use libm::erfc;

use super::quadrature::integrate_half_cells;
use super::triangular::triangular_density;

/// How an observed cell `n·q` collects mass from the continuous variable.
///
/// `Uniform`: the value was rounded directly, so the cell covers
/// `[q(n-½), q(n+½)]`. `Triangular`: the value is a difference of two
/// rounded values, so mass comes from `[q(n-1), q(n+1)]` weighted by the
/// triangular kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Uniform,
    Triangular,
}

impl Weighting {
    pub fn window(self, n: i64, q: f64) -> (f64, f64) {
        let c = n as f64 * q;
        match self {
            Weighting::Uniform => (c - 0.5 * q, c + 0.5 * q),
            Weighting::Triangular => (c - q, c + q),
        }
    }

    pub fn weight(self, z: f64, n: i64, q: f64) -> f64 {
        match self {
            Weighting::Uniform => 1.0,
            Weighting::Triangular => triangular_density(z, n as f64 * q, q),
        }
    }

    /// Variance of the discretization error: `q²/12` for a single rounding,
    /// `q²/6` for the difference of two.
    pub fn error_variance(self, q: f64) -> f64 {
        match self {
            Weighting::Uniform => q * q / 12.0,
            Weighting::Triangular => q * q / 6.0,
        }
    }
}

pub trait Density1d {
    fn pdf(&self, x: f64) -> f64;

    fn ln_pdf(&self, x: f64) -> f64 {
        self.pdf(x).ln()
    }
}

/// Half-width, in cells, of the power-law fitting windows.
pub const WINDOW_HALF: i64 = 2;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn std_pdf(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Upper tail `P(Z > u)`.
fn std_sf(u: f64) -> f64 {
    0.5 * erfc(u / SQRT_2)
}

fn std_cdf(u: f64) -> f64 {
    0.5 * erfc(-u / SQRT_2)
}

/// `P(a < Z < b)` without cancellation in either tail.
fn std_interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        std_sf(a) - std_sf(b)
    } else if b <= 0.0 {
        std_cdf(b) - std_cdf(a)
    } else {
        1.0 - std_cdf(a) - std_sf(b)
    }
}

/// Second antiderivative of the standard normal density, `uΦ(u) + φ(u)`.
fn std_h(u: f64) -> f64 {
    if u < 0.0 {
        std_pdf(u) - (-u) * std_sf(-u)
    } else {
        u + std_pdf(u) - u * std_sf(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub sigma: f64,
}

impl Gaussian {
    pub fn new(mean: f64, sigma: f64) -> Self {
        Self { mean, sigma }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        std_cdf((x - self.mean) / self.sigma)
    }

    /// Closed-form mass collected by cell `n`.
    pub fn weighted_mass(&self, n: i64, q: f64, w: Weighting) -> f64 {
        let c = n as f64 * q;
        match w {
            Weighting::Uniform => {
                let s = self.sigma;
                std_interval((c - 0.5 * q - self.mean) / s, (c + 0.5 * q - self.mean) / s)
            }
            Weighting::Triangular => {
                // mirror so the kernel sits left of the mean; the second
                // difference of F2 then carries no linear part
                let c = if c > self.mean { 2.0 * self.mean - c } else { c };
                let s = self.sigma;
                let u = |x: f64| (x - self.mean) / s;
                let d = std_h(u(c + q)) - 2.0 * std_h(u(c)) + std_h(u(c - q));
                (s * d / (q * q)).max(0.0)
            }
        }
    }
}

impl Density1d for Gaussian {
    fn pdf(&self, x: f64) -> f64 {
        std_pdf((x - self.mean) / self.sigma) / self.sigma
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let u = (x - self.mean) / self.sigma;
        -0.5 * u * u - (self.sigma * (2.0 * PI).sqrt()).ln()
    }
}

/// Gaussian-shaped piece with free total weight, used for the center of a
/// piecewise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPatch {
    pub weight: f64,
    pub mean: f64,
    pub sigma: f64,
}

impl GaussianPatch {
    fn shape(&self) -> Gaussian {
        Gaussian::new(self.mean, self.sigma)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.weight * self.shape().pdf(x)
    }

    pub fn weighted_mass(&self, n: i64, q: f64, w: Weighting) -> f64 {
        self.weight * self.shape().weighted_mass(n, q, w)
    }
}

/// `∫ x^p dx` over `0 < lo <= hi`, stable near `p = -1`.
fn power_integral(p: f64, lo: f64, hi: f64) -> f64 {
    let l = (hi / lo).ln();
    let s = (p + 1.0) * l;
    let ratio = if s.abs() < 1e-10 { 1.0 + 0.5 * s } else { s.exp_m1() / s };
    lo.powf(p + 1.0) * l * ratio
}

/// Power-law piece `a·|x|^(-|b|)` fitted on a window of cells around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawWindow {
    pub center: i64,
    /// First and last cell of the window that entered the fit.
    pub lo: i64,
    pub hi: i64,
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

impl PowerLawWindow {
    pub fn exponent(&self) -> f64 {
        self.b.abs()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.a * x.abs().powf(-self.exponent())
    }

    pub fn covers(&self, n: i64) -> bool {
        self.lo <= n && n <= self.hi
    }

    /// Mass of `|x|^(-beta)` collected by cell `n` (unit amplitude). The cell
    /// window must not contain zero.
    pub fn unit_mass(beta: f64, n: i64, q: f64, w: Weighting) -> f64 {
        let c = (n as f64 * q).abs();
        let p = -beta;
        match w {
            Weighting::Uniform => power_integral(p, c - 0.5 * q, c + 0.5 * q),
            Weighting::Triangular => {
                let (l, r) = (c - q, c + q);
                (power_integral(p + 1.0, l, c) - l * power_integral(p, l, c)
                    + r * power_integral(p, c, r)
                    - power_integral(p + 1.0, c, r))
                    / (q * q)
            }
        }
    }
}

/// Linear interpolation through `(n·q, value)` knots, zero outside.
fn interpolate_knots(knots: &[(i64, f64)], q: f64, x: f64) -> f64 {
    let u = x / q;
    let i = knots.partition_point(|&(n, _)| (n as f64) <= u);
    if i == 0 || i == knots.len() {
        return 0.0;
    }
    let (n0, v0) = knots[i - 1];
    let (n1, v1) = knots[i];
    let t = (u - n0 as f64) / (n1 - n0) as f64;
    v0 + t * (v1 - v0)
}

/// Linear interpolation knots for a histogram: `T_n/(T·q)` on every cell of
/// the occupied range, closed by zero knots one cell beyond each end.
pub(crate) fn tabulate(hist: &super::Histogram) -> Vec<(i64, f64)> {
    let Some((lo, hi)) = hist.range() else {
        return Vec::new();
    };
    let mut knots = Vec::with_capacity((hi - lo + 3) as usize);
    knots.push((lo - 1, 0.0));
    for n in lo..=hi {
        knots.push((n, hist.frequency(n) / hist.q));
    }
    knots.push((hi + 1, 0.0));
    knots
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensityModel {
    Gaussian(Gaussian),
    /// Power-law windows away from the center, a Gaussian patch on the
    /// central cells and tabulated knots wherever neither applies.
    PiecewisePowerlaw {
        central_cells: i64,
        central: Option<GaussianPatch>,
        windows: Vec<PowerLawWindow>,
        table: Vec<(i64, f64)>,
    },
    Tabulated {
        knots: Vec<(i64, f64)>,
    },
}

/// A normalized continuous density together with the fit that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolatedDensity {
    pub model: DensityModel,
    /// Cell width of the histogram the density was fitted to.
    pub q: f64,
    pub weighting: Weighting,
    /// Finite support, or `None` for the whole real line.
    pub support: Option<[f64; 2]>,
    /// Raw model integral over the support; `pdf` divides by it.
    pub normalization: f64,
    /// Sum of squared per-cell residuals of the fit.
    pub residual: f64,
    pub flags: Vec<String>,
}

impl InterpolatedDensity {
    pub fn gaussian(&self) -> Option<Gaussian> {
        match self.model {
            DensityModel::Gaussian(g) => Some(g),
            _ => None,
        }
    }

    fn raw_pdf(&self, x: f64) -> f64 {
        if let Some([lo, hi]) = self.support {
            if x < lo || x > hi {
                return 0.0;
            }
        }
        match &self.model {
            DensityModel::Gaussian(g) => g.pdf(x),
            DensityModel::Tabulated { knots } => interpolate_knots(knots, self.q, x),
            DensityModel::PiecewisePowerlaw {
                central_cells,
                central,
                windows,
                table,
            } => {
                let c = (x / self.q + 0.5).floor() as i64;
                if let Some(patch) = central {
                    if c.abs() <= *central_cells {
                        return patch.pdf(x);
                    }
                }
                let start = windows.partition_point(|w| w.center < c - WINDOW_HALF);
                let (sum, k) = windows[start..]
                    .iter()
                    .take_while(|w| w.center <= c + WINDOW_HALF)
                    .filter(|w| w.covers(c))
                    .fold((0.0, 0u32), |(s, k), w| (s + w.pdf(x), k + 1));
                if k > 0 {
                    sum / f64::from(k)
                } else {
                    interpolate_knots(table, self.q, x)
                }
            }
        }
    }

    /// Mass collected by cell `n` under this density's weighting.
    pub fn weighted_mass(&self, n: i64) -> f64 {
        if let DensityModel::Gaussian(g) = self.model {
            return g.weighted_mass(n, self.q, self.weighting);
        }
        let (lo, hi) = self.weighting.window(n, self.q);
        let f = |z: f64| self.pdf(z) * self.weighting.weight(z, n, self.q);
        integrate_half_cells(&f, lo, hi, self.q, 1e-12)
    }

    /// Sum of squared differences between cell masses and histogram frequencies.
    pub fn residual_against(&self, hist: &super::Histogram) -> f64 {
        let Some((lo, hi)) = hist.range() else {
            return 0.0;
        };
        (lo..=hi)
            .map(|n| (self.weighted_mass(n) - hist.frequency(n)).powi(2))
            .sum()
    }

    /// Median fitted power-law exponent over all windows.
    pub fn tail_exponent(&self) -> Option<f64> {
        let DensityModel::PiecewisePowerlaw { windows, .. } = &self.model else {
            return None;
        };
        let mut b: Vec<f64> = windows.iter().map(PowerLawWindow::exponent).collect();
        if b.is_empty() {
            return None;
        }
        b.sort_by(f64::total_cmp);
        let m = b.len() / 2;
        Some(if b.len() % 2 == 1 { b[m] } else { 0.5 * (b[m - 1] + b[m]) })
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

impl Density1d for InterpolatedDensity {
    fn pdf(&self, x: f64) -> f64 {
        self.raw_pdf(x) / self.normalization
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        match self.model {
            DensityModel::Gaussian(g) => g.ln_pdf(x) - self.normalization.ln(),
            _ => self.pdf(x).ln(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distfit::quadrature::adaptive_simpson;

    #[test]
    fn gaussian_closed_forms_match_quadrature() {
        let g = Gaussian::new(0.3, 1.7);
        for n in -12..=12 {
            for w in [Weighting::Uniform, Weighting::Triangular] {
                let (lo, hi) = w.window(n, 1.0);
                let f = |z: f64| g.pdf(z) * w.weight(z, n, 1.0);
                let quad = integrate_half_cells(&f, lo, hi, 1.0, 1e-15);
                let closed = g.weighted_mass(n, 1.0, w);
                assert!((quad - closed).abs() < 1e-12, "n={n} {w:?}: {quad} vs {closed}");
            }
        }
    }

    #[test]
    fn gaussian_masses_sum_to_one() {
        let g = Gaussian::new(-0.2, 2.5);
        for w in [Weighting::Uniform, Weighting::Triangular] {
            let total: f64 = (-40..=40).map(|n| g.weighted_mass(n, 1.0, w)).sum();
            assert!((total - 1.0).abs() < 1e-12, "{w:?} {total}");
        }
    }

    #[test]
    fn far_tail_mass_is_positive_and_tiny() {
        let g = Gaussian::new(0.0, 1.0);
        let m = g.weighted_mass(30, 1.0, Weighting::Triangular);
        assert!(m > 0.0 && m < 1e-150);
    }

    #[test]
    fn power_law_unit_mass_matches_quadrature() {
        for beta in [0.0, 1.0, 2.0, 3.5, 6.0] {
            for n in [2i64, 5, 17, -4] {
                for w in [Weighting::Uniform, Weighting::Triangular] {
                    let q = 0.01;
                    let (lo, hi) = w.window(n, q);
                    let f = |z: f64| z.abs().powf(-beta) * w.weight(z, n, q);
                    let quad = adaptive_simpson(&f, lo, n as f64 * q, 1e-14 * n.abs() as f64)
                        + adaptive_simpson(&f, n as f64 * q, hi, 1e-14 * n.abs() as f64);
                    let closed = PowerLawWindow::unit_mass(beta, n, q, w);
                    let rel = ((quad - closed) / quad).abs();
                    assert!(rel < 1e-9, "beta={beta} n={n} {w:?}: {quad} {closed}");
                }
            }
        }
    }

    #[test]
    fn knots_interpolate_linearly() {
        let knots = [(0, 0.0), (1, 2.0), (3, 0.0)];
        assert_eq!(interpolate_knots(&knots, 0.5, 0.25), 1.0);
        assert_eq!(interpolate_knots(&knots, 0.5, 1.0), 1.0);
        assert_eq!(interpolate_knots(&knots, 0.5, -0.1), 0.0);
        assert_eq!(interpolate_knots(&knots, 0.5, 2.0), 0.0);
    }
}
