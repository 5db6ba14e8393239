//! Fitting continuous densities to discretized histograms by matching cell masses.

use serde::{Deserialize, Serialize};

use super::density::{
    tabulate, DensityModel, Gaussian, GaussianPatch, InterpolatedDensity, PowerLawWindow, Weighting,
    WINDOW_HALF,
};
use super::lm;
use super::quadrature::integrate_half_cells;
use super::Histogram;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    #[default]
    Gaussian,
    Powerlaw,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Cells with `|n|` at most this are covered by the central Gaussian patch.
    pub central_cells: i64,
    pub max_iter: usize,
    /// Above this many cells between the extreme occupied cells a Gaussian is
    /// fitted by moments instead of least squares.
    pub moment_fallback_cells: i64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            central_cells: 3,
            max_iter: 500,
            moment_fallback_cells: 100_000,
        }
    }
}

pub const FLAG_MOMENT_FIT: &str = "moment-fit";
pub const FLAG_TABLE_FALLBACK: &str = "tabulated-fallback";
pub const FLAG_PATCH_FAILED: &str = "central-patch-failed";

/// Fit to directly rounded values (cell `[q(n-½), q(n+½)]`).
pub fn fit_uniform_residual(hist: &Histogram, kind: DensityKind) -> Result<InterpolatedDensity> {
    fit_density(hist, kind, Weighting::Uniform, &FitOptions::default())
}

/// Fit to differences of rounded values (triangular kernel on `[q(n-1), q(n+1)]`).
pub fn fit_triangular_residual(hist: &Histogram, kind: DensityKind) -> Result<InterpolatedDensity> {
    fit_density(hist, kind, Weighting::Triangular, &FitOptions::default())
}

pub fn fit_density(
    hist: &Histogram,
    kind: DensityKind,
    weighting: Weighting,
    opts: &FitOptions,
) -> Result<InterpolatedDensity> {
    if hist.total == 0 {
        return Err(Error::EmptyInput("histogram has no observations"));
    }
    if !(hist.q > 0.0 && hist.q.is_finite()) {
        return Err(Error::InvalidParameter(format!("cell width {} must be positive", hist.q)));
    }
    match kind {
        DensityKind::Gaussian => fit_gaussian(hist, weighting, opts),
        DensityKind::Powerlaw => fit_piecewise(hist, weighting, opts),
        DensityKind::Tabulated => Ok(tabulated(hist, weighting)),
    }
}

fn moment_gaussian(hist: &Histogram, w: Weighting) -> Result<Gaussian> {
    let (mean, var) = hist.moments()?;
    let ev = w.error_variance(hist.q);
    let corrected = if var - ev > 0.25 * var { var - ev } else { 0.25 * var };
    if corrected <= 0.0 {
        return Err(Error::Degenerate("histogram has zero variance".into()));
    }
    Ok(Gaussian::new(mean, corrected.sqrt()))
}

fn support(hist: &Histogram, w: Weighting) -> Option<[f64; 2]> {
    let (lo, hi) = hist.range()?;
    Some([w.window(lo, hist.q).0, w.window(hi, hist.q).1])
}

fn tabulated(hist: &Histogram, w: Weighting) -> InterpolatedDensity {
    let mut d = InterpolatedDensity {
        model: DensityModel::Tabulated { knots: tabulate(hist) },
        q: hist.q,
        weighting: w,
        support: None,
        normalization: 1.0,
        residual: 0.0,
        flags: Vec::new(),
    };
    d.residual = d.residual_against(hist);
    d
}

fn fit_gaussian(hist: &Histogram, w: Weighting, opts: &FitOptions) -> Result<InterpolatedDensity> {
    if hist.occupied() < 3 {
        return Err(Error::Fit {
            reason: format!(
                "a Gaussian needs at least 3 occupied cells, found {}",
                hist.occupied()
            ),
            residual: f64::NAN,
        });
    }
    let (lo, hi) = hist.range().expect("non-empty");
    let start = moment_gaussian(hist, w)?;
    let q = hist.q;

    let mut flags = Vec::new();
    let g = if hi - lo > opts.moment_fallback_cells {
        flags.push(FLAG_MOMENT_FIT.to_string());
        start
    } else {
        let cells: Vec<(i64, f64)> = (lo - 1..=hi + 1).map(|n| (n, hist.frequency(n))).collect();
        let out = lm::minimize(
            |p| {
                let g = Gaussian::new(p[0] * q, p[1].exp() * q);
                cells.iter().map(|&(n, f)| g.weighted_mass(n, q, w) - f).collect()
            },
            &[start.mean / q, (start.sigma / q).ln()],
            opts.max_iter,
        )?;
        Gaussian::new(out.params[0] * q, out.params[1].exp() * q)
    };
    let mut d = InterpolatedDensity {
        model: DensityModel::Gaussian(g),
        q,
        weighting: w,
        support: None,
        normalization: 1.0,
        residual: 0.0,
        flags,
    };
    d.residual = d.residual_against(hist);
    Ok(d)
}

fn fit_patch(hist: &Histogram, w: Weighting, opts: &FitOptions) -> Result<Option<GaussianPatch>> {
    let (lo, hi) = hist.range().expect("non-empty");
    let c = opts.central_cells;
    let cells: Vec<(i64, f64)> = (lo.max(-c)..=hi.min(c)).map(|n| (n, hist.frequency(n))).collect();
    if cells.iter().filter(|(_, f)| *f > 0.0).count() < 3 {
        return Ok(None);
    }
    let q = hist.q;
    let sigma0 = {
        let (_, var) = hist.moments()?;
        (var - w.error_variance(q)).max(0.25 * q * q).sqrt()
    };
    let mass: f64 = cells.iter().map(|c| c.1).sum();
    let mu0 = cells.iter().map(|&(n, f)| n as f64 * q * f).sum::<f64>() / mass;
    let g0 = Gaussian::new(mu0, sigma0);
    let shape: f64 = cells.iter().map(|&(n, _)| g0.weighted_mass(n, q, w)).sum();
    let out = lm::minimize(
        |p| {
            let patch = GaussianPatch {
                weight: p[0].exp(),
                mean: p[1] * q,
                sigma: p[2].exp() * q,
            };
            cells.iter().map(|&(n, f)| patch.weighted_mass(n, q, w) - f).collect()
        },
        &[(mass / shape).ln(), mu0 / q, (sigma0 / q).ln()],
        opts.max_iter,
    )?;
    Ok(Some(GaussianPatch {
        weight: out.params[0].exp(),
        mean: out.params[1] * q,
        sigma: out.params[2].exp() * q,
    }))
}

/// Cells of the window around `center` that can enter a power-law fit: same
/// sign as the center, inside the occupied range, and far enough from zero
/// that the cell window excludes the singularity.
fn window_cells(center: i64, range: (i64, i64), w: Weighting) -> Vec<i64> {
    let min_abs = match w {
        Weighting::Uniform => 1,
        Weighting::Triangular => 2,
    };
    if center.abs() < min_abs {
        return Vec::new();
    }
    (center - WINDOW_HALF..=center + WINDOW_HALF)
        .filter(|&n| n >= range.0 && n <= range.1)
        .filter(|&n| n.signum() == center.signum() && n.abs() >= min_abs)
        .collect()
}

/// Fit `a·|x|^(-b)` to the window. The amplitude enters linearly, so it is
/// profiled out and only the exponent is searched: a coarse scan followed by
/// golden-section refinement.
fn fit_window(hist: &Histogram, center: i64, cells: &[i64], w: Weighting) -> Option<PowerLawWindow> {
    let f: Vec<f64> = cells.iter().map(|&n| hist.frequency(n)).collect();
    if cells.len() < 3 || f.iter().filter(|&&v| v > 0.0).count() < 2 {
        return None;
    }
    let q = hist.q;
    let profile = |beta: f64| -> (f64, f64) {
        let m: Vec<f64> = cells
            .iter()
            .map(|&n| PowerLawWindow::unit_mass(beta, n, q, w))
            .collect();
        let mm: f64 = m.iter().map(|v| v * v).sum();
        let fm: f64 = m.iter().zip(&f).map(|(a, b)| a * b).sum();
        let a = fm / mm;
        let cost: f64 = m.iter().zip(&f).map(|(mi, fi)| (a * mi - fi).powi(2)).sum();
        if cost.is_finite() && a.is_finite() {
            (cost, a)
        } else {
            (f64::INFINITY, f64::NAN)
        }
    };

    const STEP: f64 = 0.25;
    const MAX_BETA: f64 = 40.0;
    let (mut best, mut best_cost) = (0.0, f64::INFINITY);
    let mut beta = 0.0;
    while beta <= MAX_BETA {
        let c = profile(beta).0;
        if c < best_cost {
            best_cost = c;
            best = beta;
        }
        beta += STEP;
    }
    if !best_cost.is_finite() {
        return None;
    }
    let (mut lo, mut hi) = ((best - STEP).max(0.0), (best + STEP).min(MAX_BETA));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut c1, mut c2) = (profile(x1).0, profile(x2).0);
    for _ in 0..80 {
        if c1 <= c2 {
            hi = x2;
            x2 = x1;
            c2 = c1;
            x1 = hi - ratio * (hi - lo);
            c1 = profile(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            c1 = c2;
            x2 = lo + ratio * (hi - lo);
            c2 = profile(x2).0;
        }
    }
    let b = 0.5 * (lo + hi);
    let (cost, a) = profile(b);
    if !a.is_finite() {
        return None;
    }
    Some(PowerLawWindow {
        center,
        lo: cells[0],
        hi: *cells.last().expect("non-empty window"),
        a,
        b,
        residual: cost,
    })
}

fn fit_piecewise(hist: &Histogram, w: Weighting, opts: &FitOptions) -> Result<InterpolatedDensity> {
    if hist.occupied() < 5 {
        return Err(Error::Fit {
            reason: format!(
                "a piecewise power law needs at least 5 occupied cells, found {}",
                hist.occupied()
            ),
            residual: f64::NAN,
        });
    }
    let (lo, hi) = hist.range().expect("non-empty");
    if hi - lo > opts.moment_fallback_cells {
        let mut d = fit_gaussian(hist, w, opts)?;
        d.flags.push(FLAG_MOMENT_FIT.to_string());
        d.flags.dedup();
        return Ok(d);
    }
    let mut flags = Vec::new();
    let central = match fit_patch(hist, w, opts) {
        Ok(p) => p,
        Err(_) => {
            flags.push(FLAG_PATCH_FAILED.to_string());
            None
        }
    };
    let windows: Vec<PowerLawWindow> = (lo..=hi)
        .filter(|c| central.is_none() || c.abs() > opts.central_cells)
        .filter_map(|c| fit_window(hist, c, &window_cells(c, (lo, hi), w), w))
        .collect();

    let covered = |n: i64| {
        (central.is_some() && n.abs() <= opts.central_cells)
            || windows
                .iter()
                .any(|win| (win.center - n).abs() <= WINDOW_HALF && win.covers(n))
    };
    if (lo..=hi).any(|n| !covered(n)) {
        flags.push(FLAG_TABLE_FALLBACK.to_string());
    }

    let mut d = InterpolatedDensity {
        model: DensityModel::PiecewisePowerlaw {
            central_cells: opts.central_cells,
            central,
            windows,
            table: tabulate(hist),
        },
        q: hist.q,
        weighting: w,
        support: support(hist, w),
        normalization: 1.0,
        residual: 0.0,
        flags,
    };
    let [a, b] = d.support.expect("non-empty");
    let total = integrate_half_cells(&|x| super::Density1d::pdf(&d, x), a, b, hist.q, 1e-12);
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Fit {
            reason: "piecewise model does not integrate to a positive mass".into(),
            residual: total,
        });
    }
    d.normalization = total;
    d.residual = d.residual_against(hist);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distfit::Density1d;

    fn gaussian_hist(g: Gaussian, q: f64, w: Weighting, total: u64) -> Histogram {
        let mut counts = std::collections::BTreeMap::new();
        for n in -200..=200 {
            let c = (g.weighted_mass(n, q, w) * total as f64).round() as u64;
            if c > 0 {
                counts.insert(n, c);
            }
        }
        Histogram::from_counts(q, counts)
    }

    #[test]
    fn recovers_gaussian_from_exact_masses() {
        for w in [Weighting::Uniform, Weighting::Triangular] {
            let truth = Gaussian::new(0.4, 2.2);
            let h = gaussian_hist(truth, 1.0, w, 1_000_000_000_000);
            let d = fit_density(&h, DensityKind::Gaussian, w, &FitOptions::default()).unwrap();
            let g = d.gaussian().unwrap();
            assert!((g.mean - 0.4).abs() < 1e-6, "{w:?} {g:?}");
            assert!((g.sigma - 2.2).abs() < 1e-6, "{w:?} {g:?}");
            assert!(d.flags.is_empty());
        }
    }

    #[test]
    fn too_few_cells_is_a_fit_error() {
        let h = Histogram::from_cells(1.0, [0, 0, 1]);
        let err = fit_uniform_residual(&h, DensityKind::Gaussian).unwrap_err();
        assert!(matches!(err, Error::Fit { .. }));
        let h = Histogram::from_cells(1.0, [0, 1, 2, 3]);
        assert!(fit_uniform_residual(&h, DensityKind::Powerlaw).is_err());
    }

    #[test]
    fn wide_range_falls_back_to_moments() {
        let h = Histogram::from_cells(1e-6, [-300_000, 0, 5, 300_000]);
        let d = fit_uniform_residual(&h, DensityKind::Gaussian).unwrap();
        assert!(d.flags.iter().any(|f| f == FLAG_MOMENT_FIT));
    }

    #[test]
    fn piecewise_integrates_to_one() {
        let truth = Gaussian::new(0.0, 4.0);
        let h = gaussian_hist(truth, 1.0, Weighting::Uniform, 1_000_000);
        let d = fit_uniform_residual(&h, DensityKind::Powerlaw).unwrap();
        let [a, b] = d.support.unwrap();
        let total = integrate_half_cells(&|x| d.pdf(x), a, b, 1.0, 1e-12);
        assert!((total - 1.0).abs() < 1e-9);
        assert!(d.residual < 1e-4, "{}", d.residual);
    }

    #[test]
    fn tabulated_density_integrates_to_one() {
        let h = Histogram::from_cells(0.5, [-2, -1, -1, 0, 0, 0, 1, 3]);
        let d = fit_uniform_residual(&h, DensityKind::Tabulated).unwrap();
        let total = integrate_half_cells(&|x| d.pdf(x), -3.0, 3.0, 0.5, 1e-13);
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let h = Histogram::from_cells(1.0, [-3, -2, -1, 0, 0, 1, 2, 3, 4]);
        let d = fit_triangular_residual(&h, DensityKind::Powerlaw).unwrap();
        let back = InterpolatedDensity::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(d, back);
    }
}
