//! Occupation counts of discretized values, value pairs and value/price pairs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ReturnSeries;

/// How start prices are indexed in the return tensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriceIndex {
    /// One index per integer tick price.
    Exact,
    /// `bins` logarithmic bins spanning `[min, max]` ticks.
    Log { bins: usize, min: i64, max: i64 },
}

impl PriceIndex {
    pub fn log(bins: usize, min: i64, max: i64) -> Result<Self> {
        if bins == 0 || min < 1 || max < min {
            return Err(Error::InvalidParameter(format!(
                "log price binning needs bins > 0 and 1 <= min <= max, got {bins}, {min}, {max}"
            )));
        }
        Ok(PriceIndex::Log { bins, min, max })
    }

    pub fn bin(&self, price: i64) -> i64 {
        match *self {
            PriceIndex::Exact => price,
            PriceIndex::Log { bins, min, max } => {
                if max == min {
                    return 0;
                }
                let span = (max as f64 / min as f64).ln();
                let u = (price as f64 / min as f64).ln() / span;
                ((u * bins as f64) as i64).clamp(0, bins as i64 - 1)
            }
        }
    }

    /// Representative price of a bin in ticks.
    pub fn value(&self, bin: i64) -> f64 {
        match *self {
            PriceIndex::Exact => bin as f64,
            PriceIndex::Log { bins, min, max } => {
                if max == min {
                    return min as f64;
                }
                let span = (max as f64 / min as f64).ln();
                min as f64 * ((bin as f64 + 0.5) / bins as f64 * span).exp()
            }
        }
    }
}

/// Sparse occupation counts. All maps are ordered so that sums over them are
/// reproducible bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTensors {
    pub total: u64,
    /// `T_n`
    pub first: BTreeMap<i64, u64>,
    /// `T_m`
    pub second: BTreeMap<i64, u64>,
    /// `T_{n,m}`
    pub pairs: BTreeMap<(i64, i64), u64>,
    /// `T_{n,k}`, price change `n` at start price index `k`.
    pub first_by_price: BTreeMap<(i64, i64), u64>,
    /// `T_{m,l}`
    pub second_by_price: BTreeMap<(i64, i64), u64>,
    /// `T_{n,m,k,l}`, only in full mode.
    pub quads: Option<BTreeMap<(i64, i64, i64, i64), u64>>,
    pub price_index: PriceIndex,
}

/// Index ranges `N±, M±, K±, L±` of the occupied cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexBounds {
    pub n: (i64, i64),
    pub m: (i64, i64),
    pub k: Option<(i64, i64)>,
    pub l: Option<(i64, i64)>,
}

/// Default cap on the number of occupied `T_{n,m,k,l}` cells.
pub const DEFAULT_MEMORY_BUDGET: usize = 20_000_000;

fn bump<K: Ord>(map: &mut BTreeMap<K, u64>, key: K) {
    *map.entry(key).or_insert(0) += 1;
}

fn key_range<K: Copy, V>(map: &BTreeMap<K, V>, f: impl Fn(K) -> i64) -> Option<(i64, i64)> {
    let mut it = map.keys().map(|&k| f(k));
    let first = it.next()?;
    Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
}

impl CountTensors {
    /// Counts for two synchronous series of cell indices.
    pub fn from_pairs(x1: &[i64], x2: &[i64]) -> Result<Self> {
        if x1.len() != x2.len() {
            return Err(Error::Precondition(format!(
                "series are not synchronous: {} vs {} values",
                x1.len(),
                x2.len()
            )));
        }
        if x1.is_empty() {
            return Err(Error::EmptyInput("no synchronous pairs"));
        }
        let mut c = Self::empty(PriceIndex::Exact);
        for (&n, &m) in x1.iter().zip(x2) {
            bump(&mut c.first, n);
            bump(&mut c.second, m);
            bump(&mut c.pairs, (n, m));
        }
        c.total = x1.len() as u64;
        Ok(c)
    }

    /// Counts for two synchronous return series. `full` also builds the
    /// four-index tensor, failing once it exceeds `budget` occupied cells.
    pub fn from_returns(
        r1: &ReturnSeries,
        r2: &ReturnSeries,
        full: bool,
        log_bins: Option<usize>,
        budget: usize,
    ) -> Result<Self> {
        check_synchronous(r1, r2)?;
        let index = match log_bins {
            None => PriceIndex::Exact,
            Some(bins) => {
                let starts = r1.entries.iter().chain(&r2.entries).map(|e| e.start);
                let (lo, hi) = starts.fold((i64::MAX, i64::MIN), |(a, b), s| (a.min(s), b.max(s)));
                PriceIndex::log(bins, lo, hi)?
            }
        };
        let mut c = Self::empty(index);
        let mut quads = BTreeMap::new();
        for (a, b) in r1.entries.iter().zip(&r2.entries) {
            let (n, m) = (a.change, b.change);
            let (k, l) = (index.bin(a.start), index.bin(b.start));
            bump(&mut c.first, n);
            bump(&mut c.second, m);
            bump(&mut c.pairs, (n, m));
            bump(&mut c.first_by_price, (n, k));
            bump(&mut c.second_by_price, (m, l));
            if full {
                bump(&mut quads, (n, m, k, l));
                if quads.len() > budget {
                    return Err(Error::MemoryBudget {
                        cells: quads.len(),
                        budget,
                    });
                }
            }
        }
        c.total = r1.len() as u64;
        if full {
            c.quads = Some(quads);
        }
        Ok(c)
    }

    fn empty(price_index: PriceIndex) -> Self {
        Self {
            total: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
            pairs: BTreeMap::new(),
            first_by_price: BTreeMap::new(),
            second_by_price: BTreeMap::new(),
            quads: None,
            price_index,
        }
    }

    pub fn bounds(&self) -> Option<IndexBounds> {
        Some(IndexBounds {
            n: key_range(&self.first, |n| n)?,
            m: key_range(&self.second, |m| m)?,
            k: key_range(&self.first_by_price, |(_, k)| k),
            l: key_range(&self.second_by_price, |(_, l)| l),
        })
    }
}

pub(crate) fn check_synchronous(r1: &ReturnSeries, r2: &ReturnSeries) -> Result<()> {
    if r1.is_empty() || r2.is_empty() {
        return Err(Error::EmptyInput("return series"));
    }
    if r1.len() != r2.len() || r1.entries.iter().zip(&r2.entries).any(|(a, b)| a.t != b.t) {
        return Err(Error::Precondition(
            "return series are not synchronous (different lengths or timestamps)".into(),
        ));
    }
    if r1.interval != r2.interval {
        return Err(Error::Precondition(format!(
            "return intervals differ: {} vs {}",
            r1.interval, r2.interval
        )));
    }
    Ok(())
}
