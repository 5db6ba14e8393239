//! Compensated correlation coefficients for discretized series, price changes
//! and returns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::counts::{check_synchronous, CountTensors, DEFAULT_MEMORY_BUDGET};
use super::mean_error::{mean_error, overall_mean_error, MeanErrorTable};
use super::report::{BaseMoments, CorrectionReport, Form, TermId, TermSet};
use crate::distfit::{
    fit_density, DensityKind, FitOptions, Histogram, Histogram2d, JointDensity,
    JointMode, Weighting,
};
use crate::error::{Error, Result};
use crate::series::{covariance, ReturnSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectionOptions {
    /// Label copied into the report.
    pub pair: String,
    pub density: DensityKind,
    pub joint: JointMode,
    pub term_set: TermSet,
    /// Logarithmic start-price bins for the return tensors; exact prices when unset.
    pub price_bins: Option<usize>,
    /// Maximum number of occupied four-index cells in full mode.
    pub memory_budget: usize,
}

impl Default for CorrectionOptions {
    fn default() -> Self {
        Self {
            pair: String::new(),
            density: DensityKind::Gaussian,
            joint: JointMode::Tabulated,
            term_set: TermSet::Full,
            price_bins: None,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

pub const FLAG_IDENTICAL: &str = "identical-series";
pub const FLAG_CLAMPED: &str = "clamped";

/// Mean-error tables of the fitted marginals and, in full mode, the joint.
struct Fitted {
    t1: MeanErrorTable,
    t2: MeanErrorTable,
    joint: Option<JointDensity>,
    flags: Vec<String>,
}

fn fit_pair(
    counts: &CountTensors,
    q1: f64,
    q2: f64,
    w: Weighting,
    opts: &CorrectionOptions,
    with_joint: bool,
) -> Result<Fitted> {
    let h1 = Histogram::from_counts(q1, counts.first.clone());
    let h2 = Histogram::from_counts(q2, counts.second.clone());
    let fit_opts = FitOptions::default();
    let d1 = fit_density(&h1, opts.density, w, &fit_opts)?;
    let d2 = fit_density(&h2, opts.density, w, &fit_opts)?;
    let t1 = MeanErrorTable::build(&d1, counts.first.keys().copied(), q1, w);
    let t2 = MeanErrorTable::build(&d2, counts.second.keys().copied(), q2, w);

    let mut flags = Vec::new();
    for (tag, d, t) in [("first", &d1, &t1), ("second", &d2, &t2)] {
        flags.extend(d.flags.iter().map(|f| format!("{tag}:{f}")));
        if !t.fallbacks.is_empty() {
            flags.push(format!("{tag}:zero-mass-cells={}", t.fallbacks.len()));
        }
    }
    let joint = if with_joint {
        let h = Histogram2d {
            q1,
            q2,
            counts: counts.pairs.clone(),
            total: counts.total,
        };
        let j = JointDensity::build(&h, &d1, &d2, opts.joint)?;
        flags.extend(j.flags.iter().map(|f| format!("joint:{f}")));
        Some(j)
    } else {
        None
    };
    Ok(Fitted {
        t1,
        t2,
        joint,
        flags,
    })
}

/// `⟨θ2_{m,n}⟩` and `⟨θ1_{n,m}⟩` for every occupied pair, falling back to the
/// marginal value where a slice carries no mass.
fn joint_tables(
    f: &Fitted,
    pairs: &BTreeMap<(i64, i64), u64>,
    q1: f64,
    q2: f64,
    w: Weighting,
) -> BTreeMap<(i64, i64), (f64, f64)> {
    let joint = f.joint.as_ref().expect("joint fitted in full mode");
    pairs
        .keys()
        .map(|&(n, m)| {
            let th2 = mean_error(&joint.slice_second(n as f64 * q1), m, q2, w).unwrap_or(f.t2.get(m));
            let th1 = mean_error(&joint.slice_first(m as f64 * q2), n, q1, w).unwrap_or(f.t1.get(n));
            ((n, m), (th1, th2))
        })
        .collect()
}

struct Draft {
    form: Form,
    dt: u32,
    base: BaseMoments,
    terms: BTreeMap<TermId, f64>,
    neglected: Vec<TermId>,
    flags: Vec<String>,
    joint: Option<JointMode>,
}

fn finish(d: Draft, opts: &CorrectionOptions) -> Result<CorrectionReport> {
    if !(d.base.var1 > 0.0 && d.base.var2 > 0.0) {
        return Err(Error::Degenerate(
            "a series has zero variance; the correlation is undefined".into(),
        ));
    }
    let raw = d.base.cov / (d.base.var1 * d.base.var2).sqrt();
    let mut report = CorrectionReport {
        pair: opts.pair.clone(),
        dt: d.dt,
        form: d.form,
        term_set: opts.term_set,
        density: opts.density,
        joint: d.joint,
        raw,
        base: d.base,
        terms: d.terms.iter().map(|(k, v)| (k.name().to_string(), *v)).collect(),
        neglected: d.neglected.iter().map(|t| t.name().to_string()).collect(),
        compensated: 0.0,
        clamped: false,
        flags: d.flags,
    };
    let value = report.evaluate(&[]);
    if !value.is_finite() {
        return Err(Error::Degenerate(format!(
            "corrected variances are not positive (terms {:?})",
            report.terms
        )));
    }
    report.clamped = !(-1.0..=1.0).contains(&value);
    if report.clamped {
        report.flags.push(FLAG_CLAMPED.to_string());
    }
    report.compensated = value.clamp(-1.0, 1.0);
    Ok(report)
}

/// Terms for two identical series: the errors coincide, so the error
/// covariance equals the error variance and the coefficient stays 1.
fn identical_terms(cov_x_theta: f64, var_theta: f64) -> BTreeMap<TermId, f64> {
    TermId::ALL
        .into_iter()
        .map(|t| {
            let v = match t {
                TermId::VarTheta1 | TermId::VarTheta2 | TermId::CovTheta1Theta2 => var_theta,
                _ => cov_x_theta,
            };
            (t, v)
        })
        .collect()
}

fn neglected_for(set: TermSet) -> Vec<TermId> {
    match set {
        TermSet::Full => vec![TermId::CovTheta1Theta2],
        TermSet::Dominant => vec![TermId::CovX1Theta2, TermId::CovX2Theta1, TermId::CovTheta1Theta2],
    }
}

fn discretized_form(
    form: Form,
    dt: u32,
    x1: &[i64],
    x2: &[i64],
    q1: f64,
    q2: f64,
    w: Weighting,
    opts: &CorrectionOptions,
) -> Result<CorrectionReport> {
    for q in [q1, q2] {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("tick size {q} must be positive")));
        }
    }
    let counts = CountTensors::from_pairs(x1, x2)?;
    let t = counts.total as f64;
    let h1 = Histogram::from_counts(q1, counts.first.clone());
    let h2 = Histogram::from_counts(q2, counts.second.clone());
    let (mean1, var1) = h1.moments()?;
    let (mean2, var2) = h2.moments()?;
    let cov = Histogram2d {
        q1,
        q2,
        counts: counts.pairs.clone(),
        total: counts.total,
    }
    .covariance()?;
    let base = BaseMoments { cov, var1, var2 };
    if !(var1 > 0.0 && var2 > 0.0) {
        return Err(Error::Degenerate("all values of a series are equal".into()));
    }

    let identical = x1 == x2 && q1 == q2;
    let full = opts.term_set == TermSet::Full && !identical;
    let f = fit_pair(&counts, q1, q2, w, opts, full)?;
    let theta1 = overall_mean_error(&f.t1, &counts.first);
    let theta2 = overall_mean_error(&f.t2, &counts.second);
    let own = |q: f64, tab: &MeanErrorTable, c: &BTreeMap<i64, u64>, mean: f64, theta: f64| {
        q / t * c.iter().map(|(&n, &k)| k as f64 * n as f64 * tab.get(n)).sum::<f64>() - mean * theta
    };
    let cov_x1_theta1 = own(q1, &f.t1, &counts.first, mean1, theta1);
    let cov_x2_theta2 = own(q2, &f.t2, &counts.second, mean2, theta2);
    let (var_theta1, var_theta2) = (w.error_variance(q1), w.error_variance(q2));

    let mut flags = f.flags.clone();
    if identical {
        flags.push(FLAG_IDENTICAL.to_string());
        return finish(
            Draft {
                form,
                dt,
                base,
                terms: identical_terms(cov_x1_theta1, var_theta1),
                neglected: Vec::new(),
                flags,
                joint: None,
            },
            opts,
        );
    }

    let mut terms = BTreeMap::from([
        (TermId::CovX1Theta1, cov_x1_theta1),
        (TermId::CovX2Theta2, cov_x2_theta2),
        (TermId::VarTheta1, var_theta1),
        (TermId::VarTheta2, var_theta2),
        (TermId::CovTheta1Theta2, 0.0),
    ]);
    if full {
        let jt = joint_tables(&f, &counts.pairs, q1, q2, w);
        let (mut s12, mut s21) = (0.0, 0.0);
        for (&(n, m), &c) in &counts.pairs {
            let (th1, th2) = jt[&(n, m)];
            s12 += c as f64 * n as f64 * th2;
            s21 += c as f64 * m as f64 * th1;
        }
        terms.insert(TermId::CovX1Theta2, q1 * s12 / t - mean1 * theta2);
        terms.insert(TermId::CovX2Theta1, q2 * s21 / t - mean2 * theta1);
    } else {
        terms.insert(TermId::CovX1Theta2, 0.0);
        terms.insert(TermId::CovX2Theta1, 0.0);
    }
    finish(
        Draft {
            form,
            dt,
            base,
            terms,
            neglected: neglected_for(opts.term_set),
            flags,
            joint: f.joint.as_ref().map(JointDensity::mode),
        },
        opts,
    )
}

/// Compensated correlation of two synchronous series of directly rounded
/// values, given as cell indices `n` with values `n·q`.
pub fn correction_terms_discretized(
    x1: &[i64],
    x2: &[i64],
    q1: f64,
    q2: f64,
    opts: &CorrectionOptions,
) -> Result<CorrectionReport> {
    discretized_form(Form::Discretized, 0, x1, x2, q1, q2, Weighting::Uniform, opts)
}

/// Compensated correlation of price changes. Each change is a difference of
/// two rounded prices, so its error follows the triangular kernel.
pub fn corrected_corr_price_changes(
    r1: &ReturnSeries,
    r2: &ReturnSeries,
    opts: &CorrectionOptions,
) -> Result<CorrectionReport> {
    check_synchronous(r1, r2)?;
    let x1: Vec<i64> = r1.changes().collect();
    let x2: Vec<i64> = r2.changes().collect();
    let (q1, q2) = (r1.q.to_f64(), r2.q.to_f64());
    discretized_form(
        Form::PriceChanges,
        r1.interval,
        &x1,
        &x2,
        q1,
        q2,
        Weighting::Triangular,
        opts,
    )
}

/// Compensated correlation of returns `ΔS/S`. All error terms are evaluated
/// in tick units, where the tick size cancels.
pub fn corrected_corr_returns(
    r1: &ReturnSeries,
    r2: &ReturnSeries,
    opts: &CorrectionOptions,
) -> Result<CorrectionReport> {
    check_synchronous(r1, r2)?;
    let identical = r1.entries == r2.entries;
    let full = opts.term_set == TermSet::Full && !identical;
    let counts = CountTensors::from_returns(r1, r2, full, opts.price_bins, opts.memory_budget)?;
    let t = counts.total as f64;
    let (v1, v2) = (r1.values(), r2.values());
    let base = BaseMoments {
        cov: covariance(&v1, &v2)?,
        var1: covariance(&v1, &v1)?,
        var2: covariance(&v2, &v2)?,
    };
    if !(base.var1 > 0.0 && base.var2 > 0.0) {
        return Err(Error::Degenerate("all returns of a series are equal".into()));
    }
    let mean1 = v1.iter().sum::<f64>() / t;
    let mean2 = v2.iter().sum::<f64>() / t;

    let w = Weighting::Triangular;
    let f = fit_pair(&counts, 1.0, 1.0, w, opts, full)?;
    let price = |k: i64| counts.price_index.value(k);

    // ⟨θ/S⟩, cov(r̄, θ/S) and ⟨1/S²⟩ from T_{n,k}
    let own = |tab: &MeanErrorTable, by_price: &BTreeMap<(i64, i64), u64>, mean: f64| {
        let (mut th, mut cross, mut inv2) = (0.0, 0.0, 0.0);
        for (&(n, k), &c) in by_price {
            let (c, s, e) = (c as f64, price(k), tab.get(n));
            th += c * e / s;
            cross += c * n as f64 * e / (s * s);
            inv2 += c / (s * s);
        }
        let th = th / t;
        (th, cross / t - mean * th, w.error_variance(1.0) * inv2 / t)
    };
    let (theta1, cov_x1_theta1, var_theta1) = own(&f.t1, &counts.first_by_price, mean1);
    let (theta2, cov_x2_theta2, var_theta2) = own(&f.t2, &counts.second_by_price, mean2);

    let mut flags = f.flags.clone();
    if !matches!(counts.price_index, super::counts::PriceIndex::Exact) {
        flags.push("log-price-bins".to_string());
    }
    if identical {
        flags.push(FLAG_IDENTICAL.to_string());
        return finish(
            Draft {
                form: Form::Returns,
                dt: r1.interval,
                base,
                terms: identical_terms(cov_x1_theta1, var_theta1),
                neglected: Vec::new(),
                flags,
                joint: None,
            },
            opts,
        );
    }

    let mut terms = BTreeMap::from([
        (TermId::CovX1Theta1, cov_x1_theta1),
        (TermId::CovX2Theta2, cov_x2_theta2),
        (TermId::VarTheta1, var_theta1),
        (TermId::VarTheta2, var_theta2),
        (TermId::CovTheta1Theta2, 0.0),
        (TermId::CovX1Theta2, 0.0),
        (TermId::CovX2Theta1, 0.0),
    ]);
    if full {
        let jt = joint_tables(&f, &counts.pairs, 1.0, 1.0, w);
        let quads = counts.quads.as_ref().expect("full mode builds the tensor");
        let (mut s12, mut s21) = (0.0, 0.0);
        for (&(n, m, k, l), &c) in quads {
            let (th1, th2) = jt[&(n, m)];
            let (sk, sl) = (price(k), price(l));
            s12 += c as f64 * (n as f64 / sk) * th2 / sl;
            s21 += c as f64 * (m as f64 / sl) * th1 / sk;
        }
        terms.insert(TermId::CovX1Theta2, s12 / t - mean1 * theta2);
        terms.insert(TermId::CovX2Theta1, s21 / t - mean2 * theta1);
    }
    finish(
        Draft {
            form: Form::Returns,
            dt: r1.interval,
            base,
            terms,
            neglected: neglected_for(opts.term_set),
            flags,
            joint: f.joint.as_ref().map(JointDensity::mode),
        },
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::TickSize;
    use crate::series::{build_returns, PriceSeries, Windowing};

    fn cells(xs: &[f64], q: f64) -> Vec<i64> {
        xs.iter().map(|x| (x / q + 0.5).floor() as i64).collect()
    }

    fn lcg_normals(seed: u64, count: usize) -> Vec<f64> {
        // Box-Muller over a 64-bit LCG; good enough for a unit test
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 + 0.5) / (1u64 << 53) as f64
        };
        (0..count)
            .map(|_| {
                let (u, v) = (next(), next());
                (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
            })
            .collect()
    }

    #[test]
    fn var_theta_is_q_squared_over_12() {
        let a = lcg_normals(1, 2000);
        let b = lcg_normals(2, 2000);
        let r = correction_terms_discretized(&cells(&a, 0.5), &cells(&b, 0.5), 1.0, 1.0, &Default::default())
            .unwrap();
        assert!((r.term(TermId::VarTheta1) - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(r.neglected, vec!["cov_theta1_theta2"]);
    }

    #[test]
    fn identical_series_stay_at_one() {
        let a = cells(&lcg_normals(3, 500), 0.7);
        let r = correction_terms_discretized(&a, &a, 1.0, 1.0, &Default::default()).unwrap();
        assert!((r.raw - 1.0).abs() < 1e-12);
        assert!((r.compensated - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_series_is_an_error() {
        let err = correction_terms_discretized(&[2, 2, 2, 2], &[1, 2, 3, 4], 1.0, 1.0, &Default::default());
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn symmetric_in_its_arguments() {
        let z = lcg_normals(5, 6000);
        let a: Vec<f64> = z[..3000].iter().map(|v| 2.5 * v).collect();
        let b: Vec<f64> = z[..3000].iter().zip(&z[3000..]).map(|(x, y)| 2.0 * (0.6 * x + 0.8 * y)).collect();
        let (ca, cb) = (cells(&a, 1.0), cells(&b, 1.0));
        let o = CorrectionOptions::default();
        let ab = correction_terms_discretized(&ca, &cb, 1.0, 1.0, &o).unwrap();
        let ba = correction_terms_discretized(&cb, &ca, 1.0, 1.0, &o).unwrap();
        assert!((ab.compensated - ba.compensated).abs() < 1e-12);
        assert!((ab.raw - ba.raw).abs() < 1e-12);
    }

    #[test]
    fn dominant_mode_lists_cross_terms_as_neglected() {
        let q = TickSize::ONE;
        let a = PriceSeries::from_prices("a", q, 0, &[100, 101, 99, 99, 102, 103, 101, 100, 98, 99]).unwrap();
        let b = PriceSeries::from_prices("b", q, 0, &[50, 50, 51, 52, 50, 49, 49, 51, 53, 52]).unwrap();
        let ra = build_returns(&a, 1, Windowing::NonOverlapping).unwrap();
        let rb = build_returns(&b, 1, Windowing::NonOverlapping).unwrap();
        let o = CorrectionOptions {
            term_set: TermSet::Dominant,
            ..Default::default()
        };
        let r = corrected_corr_returns(&ra, &rb, &o).unwrap();
        assert_eq!(r.neglected.len(), 3);
        assert_eq!(r.term(TermId::CovX1Theta2), 0.0);
        let expect: f64 = ra.entries.iter().map(|e| 1.0 / (e.start as f64).powi(2)).sum::<f64>() / 6.0 / 9.0;
        assert!((r.term(TermId::VarTheta1) - expect).abs() < 1e-18);
    }
}
