//! Price and return series, population moments and normalization.
//!
//! Prices are integer multiples of the tick size throughout. Floating point
//! only enters through ratios (returns) and densities.

use serde::{Deserialize, Serialize};

use crate::decimal::TickSize;
use crate::error::{Error, Result};

/// One observation: integer time step and price in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tick {
    pub t: i64,
    pub price: i64,
}

/// A discretized price path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    label: String,
    q: TickSize,
    ticks: Vec<Tick>,
}

impl PriceSeries {
    /// Validates strictly increasing times and strictly positive prices.
    pub fn new(label: impl Into<String>, q: TickSize, ticks: Vec<Tick>) -> Result<Self> {
        if let Some(bad) = ticks.iter().position(|t| t.price <= 0) {
            return Err(Error::Precondition(format!(
                "price at index {bad} is not strictly positive ({})",
                ticks[bad].price
            )));
        }
        if let Some(w) = ticks.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::Precondition(format!(
                "time indices not strictly increasing at index {}",
                w + 1
            )));
        }
        Ok(Self {
            label: label.into(),
            q,
            ticks,
        })
    }

    /// Series on the regular grid `t0, t0+1, ...`.
    pub fn from_prices(label: impl Into<String>, q: TickSize, t0: i64, prices: &[i64]) -> Result<Self> {
        let ticks = prices
            .iter()
            .enumerate()
            .map(|(i, &price)| Tick { t: t0 + i as i64, price })
            .collect();
        Self::new(label, q, ticks)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn tick_size(&self) -> TickSize {
        self.q
    }

    pub fn ticks(&self) -> &[Tick] {
        &self.ticks
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn prices(&self) -> impl Iterator<Item = i64> + '_ {
        self.ticks.iter().map(|t| t.price)
    }

    pub fn min_price(&self) -> Option<i64> {
        self.prices().min()
    }

    pub fn max_price(&self) -> Option<i64> {
        self.prices().max()
    }

    fn is_regular(&self) -> bool {
        self.ticks.windows(2).all(|w| w[1].t - w[0].t == 1)
    }
}

/// Window placement for [`build_returns`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Windowing {
    #[default]
    NonOverlapping,
    Overlapping,
}

/// A single interval return `n / k`: price change and start price in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnEntry {
    pub t: i64,
    pub change: i64,
    pub start: i64,
}

impl ReturnEntry {
    pub fn value(&self) -> f64 {
        self.change as f64 / self.start as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub interval: u32,
    pub q: TickSize,
    pub entries: Vec<ReturnEntry>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(ReturnEntry::value).collect()
    }

    pub fn changes(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.iter().map(|e| e.change)
    }

    /// Price changes in currency units.
    pub fn price_changes(&self) -> Vec<f64> {
        let q = self.q.to_f64();
        self.changes().map(|n| n as f64 * q).collect()
    }

    /// Concatenate segments that share interval and tick size.
    pub fn concat(parts: &[ReturnSeries]) -> Result<ReturnSeries> {
        let first = parts.first().ok_or(Error::EmptyInput("no return segments"))?;
        if parts.iter().any(|p| p.interval != first.interval || p.q != first.q) {
            return Err(Error::Precondition(
                "segments differ in interval or tick size".into(),
            ));
        }
        Ok(ReturnSeries {
            interval: first.interval,
            q: first.q,
            entries: parts.iter().flat_map(|p| p.entries.iter().copied()).collect(),
        })
    }
}

/// Interval returns over a regular grid.
///
/// Non-overlapping windows start at the first observation and step by `dt`,
/// giving `floor((N-1)/dt)` entries.
pub fn build_returns(prices: &PriceSeries, dt: u32, windowing: Windowing) -> Result<ReturnSeries> {
    if dt == 0 {
        return Err(Error::InvalidParameter("return interval must be >= 1".into()));
    }
    if !prices.is_regular() {
        return Err(Error::Precondition(
            "price series is not on a regular unit-step grid".into(),
        ));
    }
    let ticks = prices.ticks();
    let dt = dt as usize;
    if ticks.len() < dt + 1 {
        return Err(Error::EmptyInput("series shorter than one return interval"));
    }
    let step = match windowing {
        Windowing::NonOverlapping => dt,
        Windowing::Overlapping => 1,
    };
    let entries = (0..ticks.len() - dt)
        .step_by(step)
        .map(|i| ReturnEntry {
            t: ticks[i].t,
            change: ticks[i + dt].price - ticks[i].price,
            start: ticks[i].price,
        })
        .collect();
    Ok(ReturnSeries {
        interval: dt as u32,
        q: prices.tick_size(),
        entries,
    })
}

/// Population moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    /// Excess kurtosis; `-3` for a zero-variance sample.
    pub excess_kurtosis: f64,
}

pub fn moments(xs: &[f64]) -> Result<Moments> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("moments of an empty sample"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(m2, m4), &x| {
        let d2 = (x - mean) * (x - mean);
        (m2 + d2, m4 + d2 * d2)
    });
    let variance = m2 / n;
    let excess_kurtosis = if variance > 0.0 {
        (m4 / n) / (variance * variance) - 3.0
    } else {
        -3.0
    };
    Ok(Moments {
        count: xs.len(),
        mean,
        variance,
        excess_kurtosis,
    })
}

/// Shift to zero mean and scale to unit population variance.
pub fn normalize(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.len() < 2 {
        return Err(Error::EmptyInput("normalization needs at least two values"));
    }
    let m = moments(xs)?;
    if !(m.variance > 0.0) {
        return Err(Error::Degenerate("zero variance, cannot normalize".into()));
    }
    let sd = m.variance.sqrt();
    Ok(xs.iter().map(|x| (x - m.mean) / sd).collect())
}

/// Population covariance of two equally long samples.
pub fn covariance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Precondition(format!(
            "series lengths differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("covariance of empty samples"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    Ok(a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n)
}

/// Pearson correlation with population moments.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    let cov = covariance(a, b)?;
    let va = covariance(a, a)?;
    let vb = covariance(b, b)?;
    if !(va > 0.0 && vb > 0.0) {
        return Err(Error::Degenerate("zero variance in correlation".into()));
    }
    Ok(cov / (va * vb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(prices: &[i64]) -> PriceSeries {
        PriceSeries::from_prices("s", TickSize::ONE, 0, prices).unwrap()
    }

    #[test]
    fn returns_of_three_prices() {
        let r = build_returns(&series(&[1000, 1001, 999]), 1, Windowing::NonOverlapping).unwrap();
        let n: Vec<_> = r.changes().collect();
        let k: Vec<_> = r.entries.iter().map(|e| e.start).collect();
        assert_eq!(n, [1, -2]);
        assert_eq!(k, [1000, 1001]);
        let v = r.values();
        assert_eq!(v[0], 0.001);
        assert_eq!(v[1], -2.0 / 1001.0);
    }

    #[test]
    fn constant_series_has_zero_returns() {
        for dt in 1..5 {
            let r = build_returns(&series(&[77; 13]), dt, Windowing::NonOverlapping).unwrap();
            assert_eq!(r.len(), 12 / dt as usize);
            assert!(r.values().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn too_short_and_irregular() {
        assert!(matches!(
            build_returns(&series(&[1, 2]), 2, Windowing::NonOverlapping),
            Err(Error::EmptyInput(_))
        ));
        let gappy = PriceSeries::new(
            "g",
            TickSize::ONE,
            vec![Tick { t: 0, price: 1 }, Tick { t: 2, price: 2 }],
        )
        .unwrap();
        assert!(matches!(
            build_returns(&gappy, 1, Windowing::NonOverlapping),
            Err(Error::Precondition(_))
        ));
        assert!(build_returns(&series(&[1, 2]), 0, Windowing::NonOverlapping).is_err());
    }

    #[test]
    fn overlapping_windows() {
        let r = build_returns(&series(&[10, 11, 12, 13, 14]), 2, Windowing::Overlapping).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.changes().all(|n| n == 2));
    }

    #[test]
    fn price_series_invariants() {
        assert!(PriceSeries::from_prices("x", TickSize::ONE, 0, &[1, 0]).is_err());
        let dup = vec![Tick { t: 1, price: 1 }, Tick { t: 1, price: 2 }];
        assert!(PriceSeries::new("x", TickSize::ONE, dup).is_err());
    }

    #[test]
    fn normalize_small() {
        let z = normalize(&[1.0, 2.0, 3.0]).unwrap();
        let s = 1.5f64.sqrt();
        assert!((z[0] + s).abs() < 1e-12 && z[1].abs() < 1e-12 && (z[2] - s).abs() < 1e-12);
        let again = normalize(&z).unwrap();
        for (a, b) in z.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(normalize(&[2.0, 2.0]), Err(Error::Degenerate(_))));
        assert!(normalize(&[2.0]).is_err());
    }

    #[test]
    fn moments_conventions() {
        let m = moments(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!((m.mean, m.variance, m.excess_kurtosis), (0.0, 0.0, -3.0));
        let m = moments(&[-1.0, 1.0]).unwrap();
        assert_eq!((m.mean, m.variance), (0.0, 1.0));
        assert!(moments(&[]).is_err());
    }

    #[test]
    fn correlation_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((correlation(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let b: Vec<f64> = a.iter().map(|x| -2.0 * x + 1.0).collect();
        assert!((correlation(&a, &b).unwrap() + 1.0).abs() < 1e-15);
        assert!(correlation(&a, &[1.0; 4]).is_err());
    }
}
