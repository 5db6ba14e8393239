//! Exact decimal quotes and tick sizes.
//!
//! Quotes never pass through `f64` on their way to integer tick counts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A decimal number `mantissa · 10^(-scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimal {
    pub mantissa: i128,
    pub scale: u32,
}

const MAX_SCALE: u32 = 18;

impl Decimal {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("not a decimal number: {s:?}"));
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            Some(_) => (false, s),
            None => return Err(bad()),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = frac_part.len() as u32;
        if scale > MAX_SCALE {
            return Err(Error::InvalidParameter(format!(
                "more than {MAX_SCALE} decimal places: {s:?}"
            )));
        }
        let mut mantissa: i128 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            mantissa = mantissa
                .checked_mul(10)
                .and_then(|m| m.checked_add(i128::from(b - b'0')))
                .ok_or_else(bad)?;
        }
        Ok(Self {
            mantissa: if negative { -mantissa } else { mantissa },
            scale,
        })
    }

    pub fn to_f64(self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }

    /// Drop trailing zeros of the fractional part.
    pub fn normalized(mut self) -> Self {
        while self.scale > 0 && self.mantissa % 10 == 0 {
            self.mantissa /= 10;
            self.scale -= 1;
        }
        self
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let abs = self.mantissa.unsigned_abs();
        if self.scale == 0 {
            return write!(f, "{sign}{abs}");
        }
        let pow = 10u128.pow(self.scale);
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / pow,
            abs % pow,
            width = self.scale as usize
        )
    }
}

impl FromStr for Decimal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Smallest admissible price increment, kept as an exact positive decimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TickSize(Decimal);

impl TickSize {
    pub const ONE: TickSize = TickSize(Decimal { mantissa: 1, scale: 0 });

    pub fn new(value: Decimal) -> Result<Self> {
        if value.mantissa <= 0 {
            return Err(Error::InvalidParameter(format!(
                "tick size must be strictly positive, got {value}"
            )));
        }
        Ok(Self(value.normalized()))
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(Decimal::parse(s)?)
    }

    pub fn decimal(self) -> Decimal {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64()
    }

    /// Exact number of ticks in `price`, or `None` when the price is not a
    /// multiple of the tick size.
    pub fn ticks_in(self, price: Decimal) -> Option<i64> {
        // price / q = (pm · 10^qs) / (qm · 10^ps)
        let (num, den) = rescale(price.mantissa, price.scale, self.0.mantissa, self.0.scale)?;
        if num % den != 0 {
            return None;
        }
        i64::try_from(num / den).ok()
    }

    /// Price of `ticks` ticks as an exact decimal.
    pub fn price_of(self, ticks: i64) -> Decimal {
        Decimal {
            mantissa: i128::from(ticks) * self.0.mantissa,
            scale: self.0.scale,
        }
    }
}

fn rescale(pm: i128, ps: u32, qm: i128, qs: u32) -> Option<(i128, i128)> {
    let num = pm.checked_mul(10i128.checked_pow(qs)?)?;
    let den = qm.checked_mul(10i128.checked_pow(ps)?)?;
    Some((num, den))
}

impl fmt::Display for TickSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl TryFrom<String> for TickSize {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Self::parse(&s)
    }
}

impl From<TickSize> for String {
    fn from(q: TickSize) -> String {
        q.to_string()
    }
}

impl FromStr for TickSize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
