//! Plot-ready curve tables and report validation.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::epps::{CorrectionReport, TermId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub dt: u32,
    pub raw: f64,
    pub compensated: f64,
}

impl From<&CorrectionReport> for CurvePoint {
    fn from(r: &CorrectionReport) -> Self {
        Self {
            dt: r.dt,
            raw: r.raw,
            compensated: r.compensated,
        }
    }
}

/// Pointwise mean over curves, keyed by interval.
pub fn ensemble_mean(curves: &[Vec<CurvePoint>]) -> Vec<CurvePoint> {
    let mut acc: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
    for p in curves.iter().flatten() {
        let e = acc.entry(p.dt).or_insert((0.0, 0.0, 0));
        e.0 += p.raw;
        e.1 += p.compensated;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(dt, (r, c, n))| CurvePoint {
            dt,
            raw: r / n as f64,
            compensated: c / n as f64,
        })
        .collect()
}

/// Write `dt,raw,compensated`. With `normalize`, two more columns hold
/// both curves divided by their value at the largest interval; stored
/// reports are never altered.
pub fn write_curve<W: Write>(points: &[CurvePoint], normalize: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["dt", "raw", "compensated"];
    let mut reference = None;
    if normalize {
        header.extend(["normalized", "normalized_compensated"]);
        let last = points
            .iter()
            .max_by_key(|p| p.dt)
            .ok_or(Error::EmptyInput("curve has no points"))?;
        reference = Some((last.raw, last.compensated));
    }
    w.write_record(&header)?;
    for p in points {
        let mut rec = vec![p.dt.to_string(), p.raw.to_string(), p.compensated.to_string()];
        if let Some((r, c)) = reference {
            rec.push((p.raw / r).to_string());
            rec.push((p.compensated / c).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a report and check it against the schema: known term names,
/// finite numbers, and a compensated value consistent with the terms.
pub fn validate_report_json(text: &str) -> Result<CorrectionReport> {
    let r: CorrectionReport = serde_json::from_str(text)?;
    for name in r.terms.keys().chain(&r.neglected) {
        name.parse::<TermId>()?;
    }
    let numbers = [r.raw, r.compensated, r.base.cov, r.base.var1, r.base.var2];
    if numbers.iter().chain(r.terms.values()).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("report holds a non-finite number".into()));
    }
    if !(-1.0..=1.0).contains(&r.compensated) || !(-1.0..=1.0).contains(&r.raw) {
        return Err(Error::Degenerate("correlation outside [-1, 1]".into()));
    }
    let value = r.evaluate(&[]);
    if !r.clamped && (value - r.compensated).abs() > 1e-9 {
        return Err(Error::Degenerate(format!(
            "compensated {} does not match its terms ({value})",
            r.compensated
        )));
    }
    Ok(r)
}
