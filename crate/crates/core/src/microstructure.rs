//! Decomposition of a return set by integer price change.
//!
//! Every return is `n·q / S`. Grouping by `n` gives subsets whose supports are
//! bounded by the extreme start prices of the subset; their centers sit a
//! constant distance apart, so the bands overlap beyond a critical `|n|`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::decimal::TickSize;
use crate::error::{Error, Result};
use crate::series::{moments, ReturnSeries};

/// Returns that share one price change `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subset {
    pub returns: Vec<f64>,
    pub start_prices: Vec<i64>,
}

impl Subset {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn min_start(&self) -> i64 {
        *self.start_prices.iter().min().expect("subsets are never empty")
    }

    pub fn max_start(&self) -> i64 {
        *self.start_prices.iter().max().expect("subsets are never empty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnDecomposition {
    pub q: TickSize,
    pub subsets: BTreeMap<i64, Subset>,
    /// Smallest observed price change in ticks.
    pub n_min: i64,
    /// Largest observed price change in ticks.
    pub n_max: i64,
    /// Global start-price extrema in ticks.
    pub s_min: i64,
    pub s_max: i64,
}

impl ReturnDecomposition {
    pub fn total(&self) -> usize {
        self.subsets.values().map(Subset::len).sum()
    }

    pub fn all_returns(&self) -> Vec<f64> {
        self.subsets.values().flat_map(|s| s.returns.iter().copied()).collect()
    }

    /// Bounds from the subset's own start-price extrema (exact).
    pub fn exact_bounds(&self, n: i64) -> Option<SubsetBounds> {
        let s = self.subsets.get(&n)?;
        let q = self.q.to_f64();
        // returns are n/k; work in tick units so q cancels
        subset_bounds(n, 1.0, s.min_start() as f64, s.max_start() as f64)
            .ok()
            .map(|b| b.with_spacing(spacing(q, self.s_min as f64 * q, self.s_max as f64 * q)))
    }

    /// Bounds from the global start-price extrema.
    pub fn approx_bounds(&self, n: i64) -> SubsetBounds {
        let q = self.q.to_f64();
        subset_bounds(n, q, self.s_min as f64 * q, self.s_max as f64 * q)
            .expect("start prices are strictly positive")
    }
}

/// Group returns by their integer price change.
pub fn decompose(returns: &ReturnSeries) -> Result<ReturnDecomposition> {
    if returns.is_empty() {
        return Err(Error::EmptyInput("no returns to decompose"));
    }
    let mut subsets: BTreeMap<i64, Subset> = BTreeMap::new();
    for e in &returns.entries {
        let s = subsets.entry(e.change).or_insert_with(|| Subset {
            returns: Vec::new(),
            start_prices: Vec::new(),
        });
        s.returns.push(e.value());
        s.start_prices.push(e.start);
    }
    let starts = returns.entries.iter().map(|e| e.start);
    Ok(ReturnDecomposition {
        q: returns.q,
        n_min: *subsets.keys().next().unwrap(),
        n_max: *subsets.keys().next_back().unwrap(),
        s_min: starts.clone().min().unwrap(),
        s_max: starts.max().unwrap(),
        subsets,
    })
}

/// Support interval of the returns with price change `n` and the distance
/// between adjacent band centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetBounds {
    pub n: i64,
    pub min: f64,
    pub max: f64,
    pub spacing: f64,
}

impl SubsetBounds {
    fn with_spacing(mut self, d: f64) -> Self {
        self.spacing = d;
        self
    }

    pub fn contains(&self, r: f64) -> bool {
        self.min <= r && r <= self.max
    }

    pub fn intersects(&self, other: &SubsetBounds) -> bool {
        self.min <= other.max && other.min <= self.max
    }
}

fn spacing(q: f64, s_min: f64, s_max: f64) -> f64 {
    q / 2.0 * (1.0 / s_min - 1.0 / s_max)
}

pub fn subset_bounds(n: i64, q: f64, s_min: f64, s_max: f64) -> Result<SubsetBounds> {
    if !(s_min > 0.0 && s_max >= s_min) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < S_min <= S_max, got {s_min}, {s_max}"
        )));
    }
    if !(q > 0.0) {
        return Err(Error::InvalidParameter("tick size must be positive".into()));
    }
    let dn = n as f64 * q;
    let (a, b) = (dn / s_max, dn / s_min);
    Ok(SubsetBounds {
        n,
        min: a.min(b),
        max: a.max(b),
        spacing: spacing(q, s_min, s_max),
    })
}

/// Smallest `n > 0` whose band touches the band of `n + 1`.
///
/// `n·q/S_min >= (n+1)·q/S_max` reduces to `n >= S_min / (S_max - S_min)`.
pub fn overlap_onset(s_min: f64, s_max: f64) -> Result<i64> {
    if !(s_min > 0.0 && s_max > s_min) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < S_min < S_max, got {s_min}, {s_max}"
        )));
    }
    let x = s_min / (s_max - s_min);
    let nearest = x.round();
    let n = if (x - nearest).abs() <= 1e-9 * x.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    Ok((n as i64).max(1))
}

/// Excess-kurtosis ratio of one subset against the whole return set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum KurtosisRatio {
    Defined { ratio: f64 },
    /// Fewer than [`MIN_KURTOSIS_COUNT`] returns in the subset.
    Undefined { count: usize },
}

impl KurtosisRatio {
    pub fn value(&self) -> Option<f64> {
        match self {
            KurtosisRatio::Defined { ratio } => Some(*ratio),
            KurtosisRatio::Undefined { .. } => None,
        }
    }
}

pub const MIN_KURTOSIS_COUNT: usize = 4;

/// `kurt(R⁽ⁿ⁾) / kurt(R)` for every subset. The `n = 0` subset holds only
/// zeros, whose excess kurtosis is −3 by convention.
pub fn subset_kurtosis_profile(dec: &ReturnDecomposition) -> Result<BTreeMap<i64, KurtosisRatio>> {
    let overall = moments(&dec.all_returns())?;
    if !(overall.variance > 0.0) {
        return Err(Error::Degenerate("overall return variance is zero".into()));
    }
    if overall.excess_kurtosis == 0.0 {
        return Err(Error::Degenerate("overall excess kurtosis is exactly zero".into()));
    }
    dec.subsets
        .iter()
        .map(|(&n, s)| {
            let ratio = if s.len() < MIN_KURTOSIS_COUNT {
                KurtosisRatio::Undefined { count: s.len() }
            } else {
                let k = moments(&s.returns)?.excess_kurtosis;
                KurtosisRatio::Defined {
                    ratio: k / overall.excess_kurtosis,
                }
            };
            Ok((n, ratio))
        })
        .collect()
}

/// One row of the decomposition summary table.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub n: i64,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub exact_lower: f64,
    pub exact_upper: f64,
    pub approx_lower: f64,
    pub approx_upper: f64,
    pub spacing: f64,
    pub kurt_ratio: Option<f64>,
}

pub fn summary(dec: &ReturnDecomposition) -> Result<Vec<SummaryRow>> {
    // a degenerate overall distribution still gets a table, just without ratios
    let profile = subset_kurtosis_profile(dec).unwrap_or_default();
    Ok(dec
        .subsets
        .iter()
        .map(|(&n, s)| {
            let exact = dec.exact_bounds(n).expect("subset exists");
            let approx = dec.approx_bounds(n);
            let (min, max) = s
                .returns
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
            SummaryRow {
                n,
                count: s.len(),
                min,
                max,
                exact_lower: exact.min,
                exact_upper: exact.max,
                approx_lower: approx.min,
                approx_upper: approx.max,
                spacing: approx.spacing,
                kurt_ratio: profile.get(&n).and_then(KurtosisRatio::value),
            }
        })
        .collect())
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ReturnEntry;

    fn returns(entries: &[(i64, i64)]) -> ReturnSeries {
        ReturnSeries {
            interval: 1,
            q: TickSize::parse("0.01").unwrap(),
            entries: entries
                .iter()
                .enumerate()
                .map(|(t, &(change, start))| ReturnEntry {
                    t: t as i64,
                    change,
                    start,
                })
                .collect(),
        }
    }

    #[test]
    fn counts_subsets() {
        let dec = decompose(&returns(&[(-1, 100), (0, 101), (0, 99), (2, 100)])).unwrap();
        let sizes: Vec<_> = dec.subsets.iter().map(|(&n, s)| (n, s.len())).collect();
        assert_eq!(sizes, [(-1, 1), (0, 2), (2, 1)]);
        assert_eq!((dec.n_min, dec.n_max), (-1, 2));
        assert_eq!(dec.total(), 4);
    }

    #[test]
    fn all_zero_changes() {
        let dec = decompose(&returns(&[(0, 5), (0, 6), (0, 7)])).unwrap();
        assert_eq!(dec.subsets.len(), 1);
        assert!(dec.all_returns().iter().all(|&r| r == 0.0));
        assert!(decompose(&returns(&[])).is_err());
    }

    #[test]
    fn bounds_and_spacing() {
        let b = subset_bounds(1, 0.01, 10.0, 20.0).unwrap();
        assert!((b.min - 0.0005).abs() < 1e-15 && (b.max - 0.001).abs() < 1e-15);
        assert!((b.spacing - 2.5e-4).abs() < 1e-15);
        let z = subset_bounds(0, 0.01, 10.0, 20.0).unwrap();
        assert_eq!((z.min, z.max), (0.0, 0.0));
        let neg = subset_bounds(-2, 0.01, 10.0, 20.0).unwrap();
        assert!(neg.min < neg.max && neg.max < 0.0);
        assert!(subset_bounds(1, 0.01, 0.0, 20.0).is_err());
        assert!(subset_bounds(1, 0.01, 30.0, 20.0).is_err());
    }

    #[test]
    fn spacing_is_constant_in_n() {
        let d: Vec<f64> = (-30..=30)
            .map(|n| subset_bounds(n, 0.01, 60.0, 90.0).unwrap().spacing)
            .collect();
        assert!(d.iter().all(|&x| x == d[0]));
    }

    #[test]
    fn overlap_onsets() {
        assert_eq!(overlap_onset(10.0, 20.0).unwrap(), 1);
        assert_eq!(overlap_onset(10.0, 10.5).unwrap(), 20);
        assert_eq!(overlap_onset(1.0, 1.1).unwrap(), 10);
        assert_eq!(overlap_onset(50.0, 55.0).unwrap(), 10);
        assert!(overlap_onset(10.0, 10.0).is_err());
        // the onset band really touches its neighbour and the one before does not
        for (lo, hi) in [(10.0, 10.5), (60.0, 90.0), (1.0, 1.1), (33.0, 34.7)] {
            let n = overlap_onset(lo, hi).unwrap();
            let b = |k| subset_bounds(k, 0.01, lo, hi).unwrap();
            assert!(b(n).intersects(&b(n + 1)), "{lo} {hi}");
            if n > 1 {
                assert!(!b(n - 1).intersects(&b(n)), "{lo} {hi}");
            }
        }
    }

    #[test]
    fn kurtosis_profile_zero_subset_and_small_subsets() {
        let mut e = vec![(0, 100); 10];
        e.extend([(1, 100), (1, 120), (1, 90), (1, 110), (-1, 100), (9, 100)]);
        let dec = decompose(&returns(&e)).unwrap();
        let overall = moments(&dec.all_returns()).unwrap().excess_kurtosis;
        let p = subset_kurtosis_profile(&dec).unwrap();
        assert_eq!(p[&0], KurtosisRatio::Defined { ratio: -3.0 / overall });
        assert_eq!(p[&-1], KurtosisRatio::Undefined { count: 1 });
        assert!(p[&1].value().is_some());
    }

    #[test]
    fn summary_csv_has_bound_columns() {
        let dec = decompose(&returns(&[(1, 100), (1, 110), (-1, 105), (0, 100), (3, 90)])).unwrap();
        let rows = summary(&dec).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "n,count,min,max,exact_lower,exact_upper,approx_lower,approx_upper,spacing,kurt_ratio"
        ));
        assert_eq!(text.lines().count(), 5);
    }
}
