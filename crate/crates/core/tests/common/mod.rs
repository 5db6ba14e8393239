//! Synthetic TAQ-like tick files: two correlated stocks traded at random
//! times on a cent grid, one or more 6.5-hour sessions.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const SESSION_SECONDS: i64 = 23_400;
pub const OVERNIGHT: i64 = 64_800;

pub struct Fixture {
    pub a: String,
    pub b: String,
    pub rows_a: usize,
    pub rows_b: usize,
}

/// About `rate` trades per second, several may share a second; prices follow a
/// correlated random walk in cents started at `start` cents.
pub fn taq_pair(seed: u64, sessions: usize, rate: f64, start: [i64; 2], c: f64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = [String::from("timestamp,price\n"), String::from("timestamp,price\n")];
    let mut rows = [0usize; 2];
    let mut latent = [start[0] as f64, start[1] as f64];
    let vol = 0.6;
    for day in 0..sessions as i64 {
        let open = day * (SESSION_SECONDS + OVERNIGHT);
        for s in 0..=SESSION_SECONDS {
            let common: f64 = rng.sample(StandardNormal);
            for i in 0..2 {
                let own: f64 = rng.sample(StandardNormal);
                latent[i] += vol * (c.sqrt() * common + (1.0 - c).sqrt() * own);
                latent[i] = latent[i].max(100.0);
                let mut trades = rate.floor() as usize + usize::from(rng.random::<f64>() < rate.fract());
                // first and last second always trade so sessions span the day
                if s == 0 || s == SESSION_SECONDS {
                    trades = trades.max(1);
                }
                for _ in 0..trades {
                    let cents = latent[i].round() as i64;
                    writeln!(text[i], "{},{}.{:02}", open + s, cents / 100, cents % 100).unwrap();
                    rows[i] += 1;
                }
            }
        }
    }
    let [a, b] = text;
    Fixture {
        a,
        b,
        rows_a: rows[0],
        rows_b: rows[1],
    }
}

pub fn write_pair(dir: &Path, f: &Fixture) -> (PathBuf, PathBuf) {
    let (pa, pb) = (dir.join("AAA.csv"), dir.join("BBB.csv"));
    std::fs::write(&pa, &f.a).unwrap();
    std::fs::write(&pb, &f.b).unwrap();
    (pa, pb)
}
