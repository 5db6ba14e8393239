mod common;

use ticksize::io::{aligned_returns, grid_prices, read_ticks, write_ticks, LoadOptions};
use ticksize::TickSize;

use common::{taq_pair, SESSION_SECONDS};

fn cent() -> TickSize {
    TickSize::parse("0.01").unwrap()
}

#[test]
fn one_day_fixture_loads_as_one_session() {
    let f = taq_pair(11, 1, 1.07, [5000, 4000], 0.4);
    assert!(f.rows_a > 24_000 && f.rows_a < 26_500, "{}", f.rows_a);
    let t = read_ticks(f.a.as_bytes(), cent(), LoadOptions::default()).unwrap();
    assert_eq!(t.rows.len(), f.rows_a);
    assert_eq!(t.sessions.len(), 1);
}

#[test]
fn dense_grid_matches_session_length() {
    let f = taq_pair(12, 3, 1.0, [5000, 4000], 0.4);
    let t = read_ticks(f.a.as_bytes(), cent(), LoadOptions::default()).unwrap();
    assert_eq!(t.sessions.len(), 3);
    let segs = grid_prices(&t, 1).unwrap();
    assert_eq!(segs.len(), 3);
    for s in &segs {
        assert_eq!(s.series.len() as i64, SESSION_SECONDS + 1);
    }
}

#[test]
fn no_return_crosses_a_session() {
    let f = taq_pair(13, 2, 0.3, [5000, 4000], 0.4);
    let a = read_ticks(f.a.as_bytes(), cent(), LoadOptions::default()).unwrap();
    let b = read_ticks(f.b.as_bytes(), cent(), LoadOptions::default()).unwrap();
    let (sa, sb) = (grid_prices(&a, 1).unwrap(), grid_prices(&b, 1).unwrap());
    for dt in [60, 1800] {
        let (ra, rb) = aligned_returns(&sa, &sb, false, dt).unwrap();
        assert_eq!(ra.len(), rb.len());
        for e in &ra.entries {
            let end = e.t + i64::from(dt);
            assert!(
                sa.iter().any(|s| s.first_t() <= e.t && end <= s.last_t()),
                "return at {} spans sessions",
                e.t
            );
        }
    }
}

#[test]
fn write_then_read_reproduces_the_file() {
    let f = taq_pair(14, 2, 0.5, [5000, 4000], 0.4);
    let t = read_ticks(f.a.as_bytes(), cent(), LoadOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_ticks(&t, &mut buf).unwrap();
    // canonical two-decimal input strings come back byte for byte
    assert_eq!(String::from_utf8(buf.clone()).unwrap(), f.a);
    assert_eq!(read_ticks(buf.as_slice(), cent(), LoadOptions::default()).unwrap(), t);
}
