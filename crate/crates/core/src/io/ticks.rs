//! Tick CSV files with exact decimal prices.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decimal::{Decimal, TickSize};
use crate::error::{Error, Result};

/// Gap between consecutive trades that starts a new session when the file
/// has no session column.
pub const DEFAULT_SESSION_GAP: i64 = 4 * 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickRow {
    /// Seconds on the session clock.
    pub timestamp: i64,
    /// Price in ticks.
    pub price: i64,
}

/// Contiguous run of rows sharing a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickFile {
    pub q: TickSize,
    pub rows: Vec<TickRow>,
    pub sessions: Vec<Session>,
    /// Whether the session labels came from a column rather than gaps.
    pub labelled: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub session_gap: i64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            session_gap: DEFAULT_SESSION_GAP,
        }
    }
}

impl TickFile {
    pub fn session_rows(&self, s: &Session) -> &[TickRow] {
        &self.rows[s.start..s.end]
    }

    /// Split sessions further at the given timestamps. A row at a split
    /// timestamp opens the new segment.
    pub fn split_at(&mut self, splits: &[i64]) {
        if splits.is_empty() {
            return;
        }
        let mut out = Vec::new();
        for s in &self.sessions {
            let mut start = s.start;
            let mut part = 0;
            for i in s.start + 1..s.end {
                let (a, b) = (self.rows[i - 1].timestamp, self.rows[i].timestamp);
                if splits.iter().any(|&x| a < x && x <= b) {
                    out.push(Session {
                        label: format!("{}#{part}", s.label),
                        start,
                        end: i,
                    });
                    part += 1;
                    start = i;
                }
            }
            let label = if part == 0 { s.label.clone() } else { format!("{}#{part}", s.label) };
            out.push(Session { label, start, end: s.end });
        }
        self.sessions = out;
    }
}

fn row_err(row: usize, message: impl Into<String>) -> Error {
    Error::Row {
        row,
        message: message.into(),
    }
}

/// Parse a tick CSV with header `timestamp,price` and an optional
/// `session` column. Rows are numbered from 1 after the header.
pub fn read_ticks<R: Read>(input: R, q: TickSize, opts: LoadOptions) -> Result<TickFile> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(ti), Some(pi)) = (col("timestamp"), col("price")) else {
        return Err(Error::Precondition(format!(
            "tick file needs a `timestamp,price` header, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    };
    let si = col("session");

    let mut rows: Vec<TickRow> = Vec::new();
    let mut sessions: Vec<Session> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| row_err(row, e.to_string()))?;
        let field = |j: usize, what: &str| {
            rec.get(j)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| row_err(row, format!("missing {what}")))
        };
        let ts = field(ti, "timestamp")?;
        let timestamp: i64 = ts
            .parse()
            .map_err(|_| row_err(row, format!("timestamp {ts:?} is not an integer number of seconds")))?;
        let raw = field(pi, "price")?;
        let dec = Decimal::parse(raw).map_err(|e| row_err(row, e.to_string()))?;
        let price = q
            .ticks_in(dec)
            .ok_or_else(|| row_err(row, format!("price {raw} is not a multiple of the tick size {q}")))?;
        if price <= 0 {
            return Err(row_err(row, format!("price {raw} is not positive")));
        }

        let label = match si {
            Some(j) => field(j, "session")?.to_string(),
            None => match (sessions.last(), rows.last()) {
                (Some(s), Some(prev)) if timestamp - prev.timestamp <= opts.session_gap => s.label.clone(),
                (Some(_), Some(_)) => sessions.len().to_string(),
                _ => "0".to_string(),
            },
        };
        let idx = rows.len();
        match sessions.last_mut() {
            Some(s) if s.label == label => {
                if timestamp < rows[idx - 1].timestamp {
                    return Err(row_err(row, format!("timestamp {timestamp} decreases within a session")));
                }
                s.end = idx + 1;
            }
            _ => {
                if si.is_none() {
                    if let Some(prev) = rows.last() {
                        if timestamp < prev.timestamp {
                            return Err(row_err(row, format!("timestamp {timestamp} decreases")));
                        }
                    }
                }
                if seen.insert(label.clone(), sessions.len()).is_some() {
                    return Err(row_err(row, format!("session {label:?} is not contiguous")));
                }
                sessions.push(Session {
                    label,
                    start: idx,
                    end: idx + 1,
                });
            }
        }
        rows.push(TickRow { timestamp, price });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("tick file has no rows"));
    }
    Ok(TickFile {
        q,
        rows,
        sessions,
        labelled: si.is_some(),
    })
}

pub fn load_ticks(path: &Path, q: TickSize, opts: LoadOptions) -> Result<TickFile> {
    let f = File::open(path)?;
    read_ticks(f, q, opts)
}

/// Write a tick file; the session column is emitted when the sessions
/// came from one.
pub fn write_ticks<W: Write>(file: &TickFile, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if file.labelled {
        w.write_record(["timestamp", "price", "session"])?;
    } else {
        w.write_record(["timestamp", "price"])?;
    }
    for s in &file.sessions {
        for r in file.session_rows(s) {
            let ts = r.timestamp.to_string();
            let price = file.q.price_of(r.price).to_string();
            if file.labelled {
                w.write_record([ts.as_str(), price.as_str(), s.label.as_str()])?;
            } else {
                w.write_record([ts, price])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> TickSize {
        TickSize::parse(s).unwrap()
    }

    fn load(text: &str) -> Result<TickFile> {
        read_ticks(text.as_bytes(), q("0.01"), LoadOptions::default())
    }

    #[test]
    fn exact_decimal_parse() {
        let f = load("timestamp,price\n0,10.01\n1,10.02\n").unwrap();
        let p: Vec<i64> = f.rows.iter().map(|r| r.price).collect();
        assert_eq!(p, [1001, 1002]);
        assert_eq!(f.sessions.len(), 1);
    }

    #[test]
    fn off_grid_price_reports_row() {
        match load("timestamp,price\n0,10.015\n") {
            Err(Error::Row { row: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decreasing_timestamp_fails() {
        assert!(matches!(
            load("timestamp,price\n5,1\n4,1\n"),
            Err(Error::Row { row: 2, .. })
        ));
    }

    #[test]
    fn empty_file_fails() {
        assert!(matches!(load("timestamp,price\n"), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn gap_starts_session() {
        let f = load("timestamp,price\n0,1\n10,1\n50000,1\n50001,1\n").unwrap();
        assert_eq!(f.sessions.len(), 2);
        assert_eq!((f.sessions[1].start, f.sessions[1].end), (2, 4));
    }

    #[test]
    fn session_column_allows_clock_reset() {
        let f = load("timestamp,price,session\n0,1,d1\n9,1,d1\n0,1,d2\n").unwrap();
        assert_eq!(f.sessions.len(), 2);
        assert!(load("timestamp,price,session\n0,1,d1\n0,1,d2\n1,1,d1\n").is_err());
    }

    #[test]
    fn split_dates_segment_sessions() {
        let mut f = load("timestamp,price\n0,1\n10,1\n20,1\n30,1\n").unwrap();
        f.split_at(&[15]);
        assert_eq!(f.sessions.len(), 2);
        assert_eq!(f.sessions[1].start, 2);
    }

    #[test]
    fn write_then_read_is_identity() {
        for text in [
            "timestamp,price\n0,10.01\n3,10.00\n60000,9.99\n",
            "timestamp,price,session\n0,10.01,a\n0,10.02,b\n",
        ] {
            let f = load(text).unwrap();
            let mut buf = Vec::new();
            write_ticks(&f, &mut buf).unwrap();
            assert_eq!(String::from_utf8(buf.clone()).unwrap(), text);
            assert_eq!(read_ticks(buf.as_slice(), f.q, LoadOptions::default()).unwrap(), f);
        }
    }
}
