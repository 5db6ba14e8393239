//! Noh-model returns, geometric Brownian motion and tick rounding.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{stream, STREAM_FACTOR, STREAM_IDIOSYNCRATIC_1, STREAM_IDIOSYNCRATIC_2};
use crate::decimal::{Decimal, TickSize};
use crate::error::{Error, Result};
use crate::series::PriceSeries;

/// Two standardized return sequences with latent correlation `c`:
/// `r = √c·η + √(1-c)·ε`.
pub fn noh_returns(c: f64, steps: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("correlation {c} outside [0, 1]")));
    }
    let (a, b) = (c.sqrt(), (1.0 - c).sqrt());
    let mut factor = stream(seed, STREAM_FACTOR);
    let mut e1 = stream(seed, STREAM_IDIOSYNCRATIC_1);
    let mut e2 = stream(seed, STREAM_IDIOSYNCRATIC_2);
    let mut r1 = Vec::with_capacity(steps);
    let mut r2 = Vec::with_capacity(steps);
    for _ in 0..steps {
        let eta: f64 = factor.sample(StandardNormal);
        let x: f64 = e1.sample(StandardNormal);
        let y: f64 = e2.sample(StandardNormal);
        r1.push(a * eta + b * x);
        r2.push(a * eta + b * y);
    }
    Ok((r1, r2))
}

/// Correlated Gaussian pairs with standard deviation `sigma` and correlation `c`.
pub fn correlated_gaussian_pairs(c: f64, sigma: f64, count: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut a, mut b) = noh_returns(c, count, seed)?;
    a.iter_mut().chain(b.iter_mut()).for_each(|v| *v *= sigma);
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GbmForm {
    /// `S(t+1) = S(t)·exp(σr − σ²/2)`, a positive martingale.
    #[default]
    Exponential,
    /// `S(t+1) = S(t)·(1 + σr)`.
    Multiplicative,
}

/// Continuous price path of length `returns.len() + 1` starting at `s0`.
pub fn gbm_prices(returns: &[f64], sigma: f64, s0: f64, form: GbmForm) -> Result<Vec<f64>> {
    if !(s0 > 0.0) {
        return Err(Error::InvalidParameter(format!("start price {s0} must be positive")));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("volatility {sigma} must be positive")));
    }
    let mut path = Vec::with_capacity(returns.len() + 1);
    let mut s = s0;
    path.push(s);
    let drift = -0.5 * sigma * sigma;
    for &r in returns {
        s = match form {
            GbmForm::Exponential => s * (sigma * r + drift).exp(),
            GbmForm::Multiplicative => (s * (1.0 + sigma * r)).max(f64::MIN_POSITIVE),
        };
        path.push(s);
    }
    Ok(path)
}

/// A rounded price path with its rounding errors kept as ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretized {
    pub series: PriceSeries,
    /// `θ = x − x̄` in price units, per step.
    pub theta: Vec<f64>,
    /// Steps where the price fell below half a tick and was clamped to one tick.
    pub clamped: usize,
}

/// Round half up to the grid of integer multiples of `q`.
pub fn discretize_prices(label: &str, prices: &[f64], q: u32) -> Result<Discretized> {
    if q == 0 {
        return Err(Error::InvalidParameter("tick size must be >= 1".into()));
    }
    let qf = f64::from(q);
    let mut ticks = Vec::with_capacity(prices.len());
    let mut theta = Vec::with_capacity(prices.len());
    let mut clamped = 0;
    for &x in prices {
        let mut n = (x / qf + 0.5).floor() as i64;
        if n < 1 {
            n = 1;
            clamped += 1;
        }
        ticks.push(n);
        theta.push(x - n as f64 * qf);
    }
    let tick = TickSize::new(Decimal {
        mantissa: i128::from(q),
        scale: 0,
    })?;
    Ok(Discretized {
        series: PriceSeries::from_prices(label, tick, 0, &ticks)?,
        theta,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{correlation, moments};

    #[test]
    fn full_factor_gives_identical_series() {
        let (a, b) = noh_returns(1.0, 1000, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn latent_correlation_is_recovered() {
        let (a, b) = noh_returns(0.4, 200_000, 11).unwrap();
        let c = correlation(&a, &b).unwrap();
        // standard error ≈ (1 − c²)/√T ≈ 0.0019
        assert!((c - 0.4).abs() < 0.008, "{c}");
        let (a, b) = noh_returns(0.0, 200_000, 12).unwrap();
        assert!(correlation(&a, &b).unwrap().abs() < 3.0 / (200_000f64).sqrt());
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(noh_returns(0.3, 50, 5).unwrap(), noh_returns(0.3, 50, 5).unwrap());
        assert_ne!(noh_returns(0.3, 50, 5).unwrap(), noh_returns(0.3, 50, 6).unwrap());
    }

    #[test]
    fn zero_returns_decay_by_drift() {
        let p = gbm_prices(&[0.0; 1000], 1e-3, 1000.0, GbmForm::Exponential).unwrap();
        let expect = 1000.0 * (-5e-7 * 1000.0f64).exp();
        assert!((p[1000] - expect).abs() < 1e-9);
    }

    #[test]
    fn log_returns_have_sigma_std() {
        let (r, _) = noh_returns(0.5, 100_000, 2).unwrap();
        let p = gbm_prices(&r, 1e-3, 1000.0, GbmForm::Exponential).unwrap();
        let lr: Vec<f64> = p.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        let m = moments(&lr).unwrap();
        assert!((m.variance.sqrt() / 1e-3 - 1.0).abs() < 0.01);
    }

    #[test]
    fn rounds_half_up() {
        let d = discretize_prices("x", &[1000.4999, 1000.5, 7.0, 0.2], 1).unwrap();
        let t: Vec<i64> = d.series.prices().collect();
        assert_eq!(t, vec![1000, 1001, 7, 1]);
        assert_eq!(d.theta[2], 0.0);
        assert_eq!(d.clamped, 1);
    }
}
