//! Epps-curve experiment on simulated, rounded price pairs.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::model::{discretize_prices, gbm_prices, noh_returns, Discretized, GbmForm};
use crate::distfit::{fit_density, DensityKind, FitOptions, Histogram, JointMode, Weighting};
use crate::epps::{
    corrected_corr_price_changes, corrected_corr_returns, CorrectionOptions, CorrectionReport,
    MeanErrorTable, TermSet,
};
use crate::error::{Error, Result};
use crate::series::{build_returns, correlation, Windowing};

pub const DEFAULT_INTERVALS: [u32; 8] = [60, 120, 180, 300, 600, 900, 1200, 1800];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Latent correlation of the two return series.
    pub c: f64,
    pub steps: usize,
    /// Per-step volatility of the log price.
    pub sigma: f64,
    /// Start prices in price units.
    pub s0: [f64; 2],
    /// Grid spacing of the rounded prices.
    pub q: u32,
    pub seed: u64,
    pub intervals: Vec<u32>,
    pub gbm: GbmForm,
    pub density: DensityKind,
    pub joint: JointMode,
    pub term_set: TermSet,
    /// Interval of the mean-error benchmark; the first interval when unset.
    pub benchmark_dt: Option<u32>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            c: 0.4,
            steps: 1_000_000,
            sigma: 1e-3,
            s0: [1000.0, 1000.0],
            q: 1,
            seed: 1,
            intervals: DEFAULT_INTERVALS.to_vec(),
            gbm: GbmForm::Exponential,
            density: DensityKind::Gaussian,
            joint: JointMode::Tabulated,
            term_set: TermSet::Full,
            benchmark_dt: None,
        }
    }
}

impl SimConfig {
    /// One trading year of one-second steps.
    pub fn year_preset() -> Self {
        Self {
            steps: 7_200_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.c) {
            return bad(format!("c = {} outside [0, 1]", self.c));
        }
        if !(self.sigma > 0.0) {
            return bad(format!("sigma = {} must be positive", self.sigma));
        }
        if self.q == 0 {
            return bad("q must be >= 1".into());
        }
        if self.s0.iter().any(|&s| s < f64::from(self.q)) {
            return bad(format!("start prices {:?} must be at least one tick", self.s0));
        }
        if self.intervals.is_empty() || self.intervals.contains(&0) {
            return bad("intervals must be a non-empty list of positive steps".into());
        }
        let longest = *self.intervals.iter().max().expect("non-empty") as usize;
        if self.steps < longest {
            return bad(format!("steps {} shorter than the longest interval {longest}", self.steps));
        }
        Ok(())
    }

    fn correction_options(&self) -> CorrectionOptions {
        CorrectionOptions {
            pair: format!("sim-{}", self.seed),
            density: self.density,
            joint: self.joint,
            term_set: self.term_set,
            ..CorrectionOptions::default()
        }
    }
}

/// One interval of the Epps curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EppsPoint {
    pub dt: u32,
    /// Raw correlation of the rounded returns.
    pub raw: f64,
    pub compensated: f64,
    pub raw_price_changes: f64,
    pub compensated_price_changes: f64,
    /// Correlations of the same windows before rounding.
    pub continuous: f64,
    pub continuous_price_changes: f64,
    pub ground_truth_c: f64,
    pub seed: u64,
}

/// Estimated against actual mean price-change error for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub series: u8,
    pub n: i64,
    pub count: u64,
    pub actual: f64,
    pub estimated: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EppsExperiment {
    pub config: SimConfig,
    pub points: Vec<EppsPoint>,
    pub returns_reports: Vec<CorrectionReport>,
    pub price_change_reports: Vec<CorrectionReport>,
    pub theta: Vec<ThetaRow>,
    /// Steps clamped to one tick, per series.
    pub clamped: [usize; 2],
}

impl EppsExperiment {
    /// Count-weighted RMS of estimated minus actual mean errors, in ticks.
    pub fn theta_rms(&self) -> f64 {
        weighted_rms(&self.theta)
    }
}

pub fn weighted_rms(rows: &[ThetaRow]) -> f64 {
    let (mut s, mut w) = (0.0, 0.0);
    for r in rows {
        s += r.count as f64 * (r.estimated - r.actual).powi(2);
        w += r.count as f64;
    }
    if w == 0.0 {
        f64::NAN
    } else {
        (s / w).sqrt()
    }
}

/// Rounded pair of price paths for a configuration.
pub fn simulate_pair(cfg: &SimConfig) -> Result<(Vec<f64>, Vec<f64>, Discretized, Discretized)> {
    cfg.validate()?;
    let (r1, r2) = noh_returns(cfg.c, cfg.steps, cfg.seed)?;
    let x1 = gbm_prices(&r1, cfg.sigma, cfg.s0[0], cfg.gbm)?;
    let x2 = gbm_prices(&r2, cfg.sigma, cfg.s0[1], cfg.gbm)?;
    let d1 = discretize_prices("sim-1", &x1, cfg.q)?;
    let d2 = discretize_prices("sim-2", &x2, cfg.q)?;
    Ok((x1, x2, d1, d2))
}

fn continuous_changes(x: &[f64], dt: usize, count: usize) -> (Vec<f64>, Vec<f64>) {
    (0..count)
        .map(|i| {
            let (a, b) = (x[i * dt], x[i * dt + dt]);
            (b - a, (b - a) / a)
        })
        .unzip()
}

/// Mean-error benchmark: per price-change cell, the simulator's actual mean
/// error against the estimate from a density fitted to the rounded changes.
fn theta_table(series: u8, d: &Discretized, dt: u32, cfg: &SimConfig) -> Result<Vec<ThetaRow>> {
    let r = build_returns(&d.series, dt, Windowing::NonOverlapping)?;
    let q = f64::from(cfg.q);
    let mut actual: BTreeMap<i64, (u64, f64)> = BTreeMap::new();
    for (i, e) in r.entries.iter().enumerate() {
        let start = i * dt as usize;
        let err = (d.theta[start + dt as usize] - d.theta[start]) / q;
        let slot = actual.entry(e.change).or_insert((0, 0.0));
        slot.0 += 1;
        slot.1 += err;
    }
    let hist = Histogram::from_counts(1.0, actual.iter().map(|(&n, &(c, _))| (n, c)).collect());
    let density = fit_density(&hist, cfg.density, Weighting::Triangular, &FitOptions::default())?;
    let table = MeanErrorTable::build(&density, actual.keys().copied(), 1.0, Weighting::Triangular);
    Ok(actual
        .into_iter()
        .map(|(n, (count, sum))| ThetaRow {
            series,
            n,
            count,
            actual: sum / count as f64,
            estimated: table.get(n),
        })
        .collect())
}

pub fn epps_experiment(cfg: &SimConfig) -> Result<EppsExperiment> {
    let (x1, x2, d1, d2) = simulate_pair(cfg)?;
    let opts = cfg.correction_options();
    let mut points = Vec::with_capacity(cfg.intervals.len());
    let mut returns_reports = Vec::new();
    let mut price_change_reports = Vec::new();
    for &dt in &cfg.intervals {
        let r1 = build_returns(&d1.series, dt, Windowing::NonOverlapping)?;
        let r2 = build_returns(&d2.series, dt, Windowing::NonOverlapping)?;
        let rep_r = corrected_corr_returns(&r1, &r2, &opts)?;
        let rep_pc = corrected_corr_price_changes(&r1, &r2, &opts)?;
        let (c1, cr1) = continuous_changes(&x1, dt as usize, r1.len());
        let (c2, cr2) = continuous_changes(&x2, dt as usize, r2.len());
        points.push(EppsPoint {
            dt,
            raw: rep_r.raw,
            compensated: rep_r.compensated,
            raw_price_changes: rep_pc.raw,
            compensated_price_changes: rep_pc.compensated,
            continuous: correlation(&cr1, &cr2)?,
            continuous_price_changes: correlation(&c1, &c2)?,
            ground_truth_c: cfg.c,
            seed: cfg.seed,
        });
        returns_reports.push(rep_r);
        price_change_reports.push(rep_pc);
    }
    let bench_dt = cfg.benchmark_dt.unwrap_or(cfg.intervals[0]);
    let mut theta = theta_table(1, &d1, bench_dt, cfg)?;
    theta.extend(theta_table(2, &d2, bench_dt, cfg)?);
    Ok(EppsExperiment {
        config: cfg.clone(),
        points,
        returns_reports,
        price_change_reports,
        theta,
        clamped: [d1.clamped, d2.clamped],
    })
}

pub fn write_curve_csv<W: Write>(points: &[EppsPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dt",
        "raw",
        "compensated",
        "ground_truth_c",
        "seed",
        "raw_price_changes",
        "compensated_price_changes",
        "continuous",
        "continuous_price_changes",
    ])?;
    for p in points {
        w.write_record([
            p.dt.to_string(),
            p.raw.to_string(),
            p.compensated.to_string(),
            p.ground_truth_c.to_string(),
            p.seed.to_string(),
            p.raw_price_changes.to_string(),
            p.compensated_price_changes.to_string(),
            p.continuous.to_string(),
            p.continuous_price_changes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_theta_csv<W: Write>(rows: &[ThetaRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
