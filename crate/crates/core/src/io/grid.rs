//! Previous-tick sampling onto a regular grid and pair alignment.

use crate::error::{Error, Result};
use crate::series::{build_returns, PriceSeries, ReturnSeries, Windowing};

use super::ticks::TickFile;

/// One session sampled on the grid. Time indices are `timestamp / step`,
/// so consecutive entries differ by one.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSegment {
    pub session: String,
    pub series: PriceSeries,
}

impl GridSegment {
    pub fn first_t(&self) -> i64 {
        self.series.ticks()[0].t
    }

    pub fn last_t(&self) -> i64 {
        self.series.ticks()[self.series.len() - 1].t
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// Last observed price at or before each grid point. Grid points run from
/// the first multiple of `step` at or after the session's first trade to
/// the first multiple at or after its last trade; each session yields its
/// own segment so no return spans two sessions.
pub fn grid_prices(file: &TickFile, step: i64) -> Result<Vec<GridSegment>> {
    if step < 1 {
        return Err(Error::InvalidParameter(format!("grid step {step} must be >= 1")));
    }
    let mut out = Vec::with_capacity(file.sessions.len());
    for s in &file.sessions {
        let rows = file.session_rows(s);
        let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
            continue;
        };
        let (g0, g1) = (ceil_div(first.timestamp, step), ceil_div(last.timestamp, step));
        let mut prices = Vec::with_capacity((g1 - g0 + 1) as usize);
        let mut j = 0;
        for g in g0..=g1 {
            let time = g * step;
            while j + 1 < rows.len() && rows[j + 1].timestamp <= time {
                j += 1;
            }
            prices.push(rows[j].price);
        }
        out.push(GridSegment {
            session: s.label.clone(),
            series: PriceSeries::from_prices(s.label.clone(), file.q, g0, &prices)?,
        });
    }
    Ok(out)
}

fn window(seg: &GridSegment, lo: i64, hi: i64) -> Result<PriceSeries> {
    let off = (lo - seg.first_t()) as usize;
    let prices: Vec<i64> = seg.series.prices().skip(off).take((hi - lo + 1) as usize).collect();
    PriceSeries::from_prices(seg.series.label(), seg.series.tick_size(), lo, &prices)
}

/// Synchronous returns of two gridded files over the overlap of matching
/// sessions. Sessions match by label when both files carry a session
/// column and by overlapping grid range otherwise. Segments shorter than
/// one interval are skipped.
pub fn aligned_returns(
    a: &[GridSegment],
    b: &[GridSegment],
    labelled: bool,
    dt: u32,
) -> Result<(ReturnSeries, ReturnSeries)> {
    let (mut ra, mut rb) = (Vec::new(), Vec::new());
    for sa in a {
        for sb in b {
            if labelled && sa.session != sb.session {
                continue;
            }
            let (lo, hi) = (sa.first_t().max(sb.first_t()), sa.last_t().min(sb.last_t()));
            if hi - lo < i64::from(dt) {
                continue;
            }
            ra.push(build_returns(&window(sa, lo, hi)?, dt, Windowing::NonOverlapping)?);
            rb.push(build_returns(&window(sb, lo, hi)?, dt, Windowing::NonOverlapping)?);
        }
    }
    if ra.is_empty() {
        return Err(Error::EmptyInput("no overlapping session spans one return interval"));
    }
    Ok((ReturnSeries::concat(&ra)?, ReturnSeries::concat(&rb)?))
}

/// Returns of every segment of one file, concatenated.
pub fn segment_returns(segs: &[GridSegment], dt: u32) -> Result<ReturnSeries> {
    let parts = segs
        .iter()
        .filter(|s| s.series.len() > dt as usize)
        .map(|s| build_returns(&s.series, dt, Windowing::NonOverlapping))
        .collect::<Result<Vec<_>>>()?;
    if parts.is_empty() {
        return Err(Error::EmptyInput("no session spans one return interval"));
    }
    ReturnSeries::concat(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::TickSize;
    use crate::io::ticks::{read_ticks, LoadOptions};

    fn file(text: &str) -> TickFile {
        read_ticks(text.as_bytes(), TickSize::ONE, LoadOptions::default()).unwrap()
    }

    #[test]
    fn previous_tick_rule() {
        let segs = grid_prices(&file("timestamp,price\n0,7\n5,9\n"), 2).unwrap();
        assert_eq!(segs.len(), 1);
        let s = &segs[0].series;
        let t: Vec<i64> = s.ticks().iter().map(|x| x.t).collect();
        assert_eq!(t, [0, 1, 2, 3]);
        assert_eq!(s.prices().collect::<Vec<_>>(), [7, 7, 7, 9]);
    }

    #[test]
    fn grid_points_before_first_trade_are_dropped() {
        let segs = grid_prices(&file("timestamp,price\n3,7\n4,8\n9,9\n"), 5).unwrap();
        assert_eq!(segs[0].first_t(), 1);
        assert_eq!(segs[0].series.prices().collect::<Vec<_>>(), [8, 9]);
    }

    #[test]
    fn sessions_become_segments() {
        let f = file("timestamp,price\n0,1\n10,2\n90000,3\n90010,4\n");
        let segs = grid_prices(&f, 1).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].series.len(), 11);
        assert_eq!(segs[1].series.len(), 11);
        let r = segment_returns(&segs, 5).unwrap();
        // no return spans the overnight gap
        assert!(r.entries.iter().all(|e| e.t + 5 <= 10 || e.t >= 90000));
        assert_eq!(r.len(), 4);
    }

    #[test]
    fn aligned_pair_uses_the_overlap() {
        let a = grid_prices(&file("timestamp,price\n0,10\n20,11\n"), 1).unwrap();
        let b = grid_prices(&file("timestamp,price\n5,20\n30,21\n"), 1).unwrap();
        let (ra, rb) = aligned_returns(&a, &b, false, 5).unwrap();
        assert_eq!(ra.len(), 3);
        assert_eq!(ra.entries[0].t, 5);
        assert!(ra.entries.iter().zip(&rb.entries).all(|(x, y)| x.t == y.t));
    }
}
