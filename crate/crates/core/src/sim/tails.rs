//! Tail experiment: discrete price changes divided by uniformly drawn prices.
//!
//! All quantities are drawn in tick units, so scaling the tick size, the
//! change volatility and the price range together leaves the draws intact.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{stream, STREAM_TAIL_CHANGES, STREAM_TAIL_PRICES, STREAM_TAIL_SIGNS};
use crate::error::{Error, Result};
use crate::series::{moments, normalize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum ChangeLaw {
    #[default]
    Gaussian,
    /// Symmetric Pareto with the given tail index, scaled to the target
    /// standard deviation. The index must exceed 2.
    Powerlaw { tail_index: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailExperimentConfig {
    pub law: ChangeLaw,
    /// Tick size in price units.
    pub q: f64,
    /// Standard deviation of the price changes in price units.
    pub sigma: f64,
    /// Lower end of the price range in price units.
    pub s_min: f64,
    /// `S_max / S_min`.
    pub ratio: f64,
    pub samples: usize,
    pub seed: u64,
    /// Histogram bins over `[-range, range]` in normalized units.
    pub bins: usize,
    pub range: f64,
}

impl Default for TailExperimentConfig {
    fn default() -> Self {
        Self {
            law: ChangeLaw::Gaussian,
            q: 1.0,
            sigma: 60.0,
            s_min: 1000.0,
            ratio: 2.0,
            samples: 1_000_000,
            seed: 1,
            bins: 400,
            range: 10.0,
        }
    }
}

impl TailExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.ratio > 1.0) {
            return bad(format!("price ratio {} must exceed 1", self.ratio));
        }
        if !(self.sigma > 0.0 && self.q > 0.0 && self.s_min >= self.q) {
            return bad("sigma and q must be positive and s_min at least one tick".into());
        }
        if let ChangeLaw::Powerlaw { tail_index } = self.law {
            if !(tail_index > 2.0) {
                return bad(format!("tail index {tail_index} must exceed 2 for a finite variance"));
            }
        }
        if self.samples < 2 || self.bins == 0 || !(self.range > 0.0) {
            return bad("need at least two samples, one bin and a positive range".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailResult {
    pub bin_centers: Vec<f64>,
    /// Probability per bin of the normalized price changes.
    pub changes: Vec<f64>,
    /// Probability per bin of the normalized returns.
    pub returns: Vec<f64>,
    pub changes_excess_kurtosis: f64,
    pub returns_excess_kurtosis: f64,
}

impl TailResult {
    pub fn total_variation(&self) -> f64 {
        total_variation(&self.changes, &self.returns)
    }
}

/// `½ Σ |p − q|` over aligned bins.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn draw_changes(cfg: &TailExperimentConfig) -> Vec<i64> {
    let s = cfg.sigma / cfg.q;
    let mut rng = stream(cfg.seed, STREAM_TAIL_CHANGES);
    let mut signs = stream(cfg.seed, STREAM_TAIL_SIGNS);
    (0..cfg.samples)
        .map(|_| {
            let x = match cfg.law {
                ChangeLaw::Gaussian => s * rng.sample::<f64, _>(StandardNormal),
                ChangeLaw::Powerlaw { tail_index: a } => {
                    // Pareto(x_m, a) has E[X²] = a·x_m²/(a−2)
                    let xm = s * ((a - 2.0) / a).sqrt();
                    let u: f64 = rng.random();
                    let mag = xm * (1.0 - u).powf(-1.0 / a);
                    if signs.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                }
            };
            (x + 0.5).floor() as i64
        })
        .collect()
}

fn histogram(xs: &[f64], bins: usize, range: f64) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    let width = 2.0 * range / bins as f64;
    for &x in xs {
        let i = ((x + range) / width).floor();
        if i >= 0.0 && (i as usize) < bins {
            h[i as usize] += 1.0;
        }
    }
    let n = xs.len() as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

pub fn tail_experiment(cfg: &TailExperimentConfig) -> Result<TailResult> {
    cfg.validate()?;
    let changes = draw_changes(cfg);
    let lo = (cfg.s_min / cfg.q).ceil() as i64;
    let hi = ((cfg.s_min * cfg.ratio / cfg.q).floor() as i64).max(lo);
    let mut prices = stream(cfg.seed, STREAM_TAIL_PRICES);
    let returns: Vec<f64> = changes
        .iter()
        .map(|&n| n as f64 / prices.random_range(lo..=hi) as f64)
        .collect();
    let changes: Vec<f64> = changes.iter().map(|&n| n as f64).collect();
    let (dn, rn) = (normalize(&changes)?, normalize(&returns)?);
    let width = 2.0 * cfg.range / cfg.bins as f64;
    Ok(TailResult {
        bin_centers: (0..cfg.bins).map(|i| -cfg.range + (i as f64 + 0.5) * width).collect(),
        changes: histogram(&dn, cfg.bins, cfg.range),
        returns: histogram(&rn, cfg.bins, cfg.range),
        changes_excess_kurtosis: moments(&changes)?.excess_kurtosis,
        returns_excess_kurtosis: moments(&returns)?.excess_kurtosis,
    })
}

pub fn write_tail_csv<W: Write>(r: &TailResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "price_changes", "returns"])?;
    for i in 0..r.bin_centers.len() {
        w.write_record([
            r.bin_centers[i].to_string(),
            r.changes[i].to_string(),
            r.returns[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
