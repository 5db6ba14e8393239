use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of values discretized to cells `n·q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub q: f64,
    pub counts: BTreeMap<i64, u64>,
    pub total: u64,
}

impl Histogram {
    pub fn from_cells<I: IntoIterator<Item = i64>>(q: f64, cells: I) -> Self {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for n in cells {
            *counts.entry(n).or_insert(0) += 1;
            total += 1;
        }
        Self { q, counts, total }
    }

    pub fn from_counts(q: f64, counts: BTreeMap<i64, u64>) -> Self {
        let counts: BTreeMap<i64, u64> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let total = counts.values().sum();
        Self { q, counts, total }
    }

    pub fn range(&self) -> Option<(i64, i64)> {
        Some((*self.counts.keys().next()?, *self.counts.keys().next_back()?))
    }

    pub fn occupied(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, n: i64) -> u64 {
        self.counts.get(&n).copied().unwrap_or(0)
    }

    pub fn frequency(&self, n: i64) -> f64 {
        self.count(n) as f64 / self.total as f64
    }

    /// Mean and population variance of the cell values `n·q`.
    pub fn moments(&self) -> Result<(f64, f64)> {
        if self.total == 0 {
            return Err(Error::EmptyInput("empty histogram"));
        }
        let t = self.total as f64;
        let mean = self.counts.iter().map(|(&n, &c)| n as f64 * c as f64).sum::<f64>() / t;
        let var = self
            .counts
            .iter()
            .map(|(&n, &c)| (n as f64 - mean).powi(2) * c as f64)
            .sum::<f64>()
            / t;
        Ok((mean * self.q, var * self.q * self.q))
    }
}

/// Joint counts over cells `(n·q1, m·q2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2d {
    pub q1: f64,
    pub q2: f64,
    pub counts: BTreeMap<(i64, i64), u64>,
    pub total: u64,
}

impl Histogram2d {
    pub fn from_pairs<I: IntoIterator<Item = (i64, i64)>>(q1: f64, q2: f64, pairs: I) -> Self {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for p in pairs {
            *counts.entry(p).or_insert(0) += 1;
            total += 1;
        }
        Self { q1, q2, counts, total }
    }

    pub fn first_marginal(&self) -> Histogram {
        let mut m = BTreeMap::new();
        for (&(n, _), &c) in &self.counts {
            *m.entry(n).or_insert(0) += c;
        }
        Histogram::from_counts(self.q1, m)
    }

    pub fn second_marginal(&self) -> Histogram {
        let mut m = BTreeMap::new();
        for (&(_, k), &c) in &self.counts {
            *m.entry(k).or_insert(0) += c;
        }
        Histogram::from_counts(self.q2, m)
    }

    /// True when no cell holds more than one observation.
    pub fn is_sparse(&self) -> bool {
        self.counts.values().all(|&c| c <= 1)
    }

    /// Population covariance of the cell values.
    pub fn covariance(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptyInput("empty joint histogram"));
        }
        let t = self.total as f64;
        let (mut s1, mut s2, mut s12) = (0.0, 0.0, 0.0);
        for (&(n, m), &c) in &self.counts {
            let (x, y, c) = (n as f64, m as f64, c as f64);
            s1 += x * c;
            s2 += y * c;
            s12 += x * y * c;
        }
        let (m1, m2) = (s1 / t, s2 / t);
        Ok((s12 / t - m1 * m2) * self.q1 * self.q2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_sum_to_total() {
        let h = Histogram::from_cells(0.5, [1, 1, 2, -3, 1]);
        assert_eq!(h.total, 5);
        assert_eq!(h.counts.values().sum::<u64>(), h.total);
        assert_eq!(h.range(), Some((-3, 2)));
        assert_eq!(h.count(1), 3);
        let (mean, var) = h.moments().unwrap();
        assert!((mean - 0.2).abs() < 1e-15);
        assert!((var - 0.25 * (16.0 / 5.0 - 0.16)).abs() < 1e-12);
    }

    #[test]
    fn joint_marginals() {
        let h = Histogram2d::from_pairs(1.0, 2.0, [(0, 0), (0, 1), (1, 1), (1, 1)]);
        assert_eq!(h.first_marginal().counts, BTreeMap::from([(0, 2), (1, 2)]));
        assert_eq!(h.second_marginal().counts, BTreeMap::from([(0, 1), (1, 3)]));
        assert!(!h.is_sparse());
        // x = [0,0,1,1], y = 2·[0,1,1,1]
        assert!((h.covariance().unwrap() - 2.0 * (0.5 - 0.5 * 0.75)).abs() < 1e-15);
    }
}
