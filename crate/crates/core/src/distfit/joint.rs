//! Joint densities of two discretized variables and their one-dimensional slices.

use serde::{Deserialize, Serialize};

use super::density::{Density1d, Gaussian, InterpolatedDensity, Weighting};
use super::{Histogram, Histogram2d};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JointMode {
    /// Linear interpolation of the joint histogram.
    #[default]
    Tabulated,
    /// Bivariate Gaussian with the fitted marginals and the sample correlation.
    Gaussian,
    /// Product of the fitted marginals.
    Separable,
}

pub const FLAG_SPARSE_JOINT: &str = "sparse-joint-separable";
pub const FLAG_MOMENT_MARGINAL: &str = "moment-gaussian-marginal";

#[derive(Debug, Clone)]
enum Kind {
    Separable {
        first: InterpolatedDensity,
        second: InterpolatedDensity,
    },
    Gaussian {
        first: Gaussian,
        second: Gaussian,
        rho: f64,
    },
    Tabulated {
        hist: Histogram2d,
    },
}

#[derive(Debug, Clone)]
pub struct JointDensity {
    kind: Kind,
    pub flags: Vec<String>,
}

/// A one-dimensional cut through a joint density, unnormalized in general.
#[derive(Debug, Clone)]
pub enum Slice<'a> {
    Marginal { d: &'a InterpolatedDensity, scale: f64 },
    Gaussian { g: Gaussian, scale: f64 },
    /// Linear interpolation through `(n·q, value)` knots.
    Knots { q: f64, knots: Vec<(i64, f64)> },
}

impl Density1d for Slice<'_> {
    fn pdf(&self, x: f64) -> f64 {
        match self {
            Slice::Marginal { d, scale } => scale * d.pdf(x),
            Slice::Gaussian { g, scale } => scale * g.pdf(x),
            Slice::Knots { q, knots } => {
                let u = x / q;
                let i = knots.partition_point(|&(n, _)| (n as f64) <= u);
                if i == 0 || i == knots.len() {
                    return 0.0;
                }
                let ((n0, v0), (n1, v1)) = (knots[i - 1], knots[i]);
                v0 + (u - n0 as f64) / (n1 - n0) as f64 * (v1 - v0)
            }
        }
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            Slice::Gaussian { g, scale } => g.ln_pdf(x) + scale.ln(),
            _ => self.pdf(x).ln(),
        }
    }
}

impl Slice<'_> {
    /// Gaussian cuts have closed-form cell masses; others need quadrature.
    pub fn gaussian(&self) -> Option<Gaussian> {
        match self {
            Slice::Gaussian { g, .. } => Some(*g),
            Slice::Marginal { d, .. } => d.gaussian(),
            Slice::Knots { .. } => None,
        }
    }
}

fn as_gaussian(d: &InterpolatedDensity, hist: &Histogram, flags: &mut Vec<String>) -> Result<Gaussian> {
    if let Some(g) = d.gaussian() {
        return Ok(g);
    }
    flags.push(FLAG_MOMENT_MARGINAL.to_string());
    let (mean, var) = hist.moments()?;
    let ev = d.weighting.error_variance(hist.q);
    let v = if var - ev > 0.25 * var { var - ev } else { 0.25 * var };
    if v <= 0.0 {
        return Err(Error::Degenerate("marginal with zero variance".into()));
    }
    Ok(Gaussian::new(mean, v.sqrt()))
}

impl JointDensity {
    /// Build a joint density from the joint histogram and fitted marginals.
    ///
    /// A tabulated joint built from a histogram with no repeated cell is pure
    /// noise; it is replaced by the separable product and flagged.
    pub fn build(
        hist: &Histogram2d,
        first: &InterpolatedDensity,
        second: &InterpolatedDensity,
        mode: JointMode,
    ) -> Result<Self> {
        if hist.total == 0 {
            return Err(Error::EmptyInput("joint histogram has no observations"));
        }
        let mut flags = Vec::new();
        let kind = match mode {
            JointMode::Separable => Kind::Separable {
                first: first.clone(),
                second: second.clone(),
            },
            JointMode::Tabulated if hist.is_sparse() => {
                flags.push(FLAG_SPARSE_JOINT.to_string());
                Kind::Separable {
                    first: first.clone(),
                    second: second.clone(),
                }
            }
            JointMode::Tabulated => Kind::Tabulated { hist: hist.clone() },
            JointMode::Gaussian => {
                let g1 = as_gaussian(first, &hist.first_marginal(), &mut flags)?;
                let g2 = as_gaussian(second, &hist.second_marginal(), &mut flags)?;
                flags.dedup();
                // rounding errors are uncorrelated with everything else, so the
                // sample covariance of the cells estimates the true one
                let rho = (hist.covariance()? / (g1.sigma * g2.sigma)).clamp(-0.999, 0.999);
                Kind::Gaussian {
                    first: g1,
                    second: g2,
                    rho,
                }
            }
        };
        Ok(Self { kind, flags })
    }

    pub fn mode(&self) -> JointMode {
        match self.kind {
            Kind::Separable { .. } => JointMode::Separable,
            Kind::Gaussian { .. } => JointMode::Gaussian,
            Kind::Tabulated { .. } => JointMode::Tabulated,
        }
    }

    pub fn correlation(&self) -> Option<f64> {
        match self.kind {
            Kind::Gaussian { rho, .. } => Some(rho),
            Kind::Separable { .. } => Some(0.0),
            Kind::Tabulated { .. } => None,
        }
    }

    pub fn pdf(&self, x1: f64, x2: f64) -> f64 {
        match &self.kind {
            Kind::Separable { first, second } => first.pdf(x1) * second.pdf(x2),
            Kind::Gaussian { .. } => self.slice_first(x2).pdf(x1),
            Kind::Tabulated { .. } => self.slice_first(x2).pdf(x1),
        }
    }

    /// `ρ(·, x2)` as a function of the first variable.
    pub fn slice_first(&self, x2: f64) -> Slice<'_> {
        self.slice(x2, true)
    }

    /// `ρ(x1, ·)` as a function of the second variable.
    pub fn slice_second(&self, x1: f64) -> Slice<'_> {
        self.slice(x1, false)
    }

    fn slice(&self, fixed: f64, first_free: bool) -> Slice<'_> {
        match &self.kind {
            Kind::Separable { first, second } => {
                let (d, other) = if first_free { (first, second) } else { (second, first) };
                Slice::Marginal {
                    d,
                    scale: other.pdf(fixed),
                }
            }
            Kind::Gaussian { first, second, rho } => {
                let (free, other) = if first_free { (first, second) } else { (second, first) };
                let u = (fixed - other.mean) / other.sigma;
                let mean = free.mean + rho * free.sigma * u;
                let sigma = free.sigma * (1.0 - rho * rho).sqrt();
                Slice::Gaussian {
                    g: Gaussian::new(mean, sigma),
                    scale: other.pdf(fixed),
                }
            }
            Kind::Tabulated { hist } => {
                let (qf, qo) = if first_free { (hist.q1, hist.q2) } else { (hist.q2, hist.q1) };
                let mut u = fixed / qo;
                // cell centers come back as n·q/q, which can miss n by an ulp
                // and would otherwise select the neighbouring row
                if (u - u.round()).abs() <= 1e-9 * u.abs().max(1.0) {
                    u = u.round();
                }
                let (m0, t) = (u.floor() as i64, u - u.floor());
                let norm = hist.total as f64 * hist.q1 * hist.q2;
                let mut row = std::collections::BTreeMap::<i64, f64>::new();
                for (&(n, m), &c) in &hist.counts {
                    let (free, other) = if first_free { (n, m) } else { (m, n) };
                    let wgt = if other == m0 {
                        1.0 - t
                    } else if other == m0 + 1 {
                        t
                    } else {
                        continue;
                    };
                    if wgt > 0.0 {
                        *row.entry(free).or_insert(0.0) += wgt * c as f64 / norm;
                    }
                }
                let mut knots = Vec::with_capacity(row.len() * 3);
                for (n, v) in row {
                    // close every isolated knot with zeros so the slice stays local
                    if knots.last().is_none_or(|&(k, _)| k < n - 1) {
                        knots.push((n - 1, 0.0));
                    }
                    knots.push((n, v));
                }
                if let Some(&(k, _)) = knots.last() {
                    knots.push((k + 1, 0.0));
                }
                Slice::Knots { q: qf, knots }
            }
        }
    }

    /// The weighting of each marginal, used when the cut is integrated.
    pub fn weightings(&self) -> Option<(Weighting, Weighting)> {
        match &self.kind {
            Kind::Separable { first, second } => Some((first.weighting, second.weighting)),
            _ => None,
        }
    }
}
