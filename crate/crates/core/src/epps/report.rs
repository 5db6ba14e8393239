use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distfit::{DensityKind, JointMode};
use crate::error::{Error, Result};

/// Which correction terms enter the compensated coefficient.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermSet {
    #[default]
    Full,
    /// Only the same-series terms, which carry the bulk of the correction.
    Dominant,
}

impl FromStr for TermSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(TermSet::Full),
            "dominant" => Ok(TermSet::Dominant),
            _ => Err(Error::InvalidParameter(format!("unknown term set {s:?}"))),
        }
    }
}

/// Quantity being correlated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    /// Directly rounded values.
    Discretized,
    PriceChanges,
    Returns,
}

/// A correction term of the decomposed correlation coefficient.
///
/// In the return form `x` stands for the observed return and `theta` for
/// the price-change error divided by the start price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermId {
    CovX1Theta2,
    CovX2Theta1,
    CovX1Theta1,
    CovX2Theta2,
    VarTheta1,
    VarTheta2,
    CovTheta1Theta2,
}

impl TermId {
    pub const ALL: [TermId; 7] = [
        TermId::CovX1Theta2,
        TermId::CovX2Theta1,
        TermId::CovX1Theta1,
        TermId::CovX2Theta2,
        TermId::VarTheta1,
        TermId::VarTheta2,
        TermId::CovTheta1Theta2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TermId::CovX1Theta2 => "cov_x1_theta2",
            TermId::CovX2Theta1 => "cov_x2_theta1",
            TermId::CovX1Theta1 => "cov_x1_theta1",
            TermId::CovX2Theta2 => "cov_x2_theta2",
            TermId::VarTheta1 => "var_theta1",
            TermId::VarTheta2 => "var_theta2",
            TermId::CovTheta1Theta2 => "cov_theta1_theta2",
        }
    }

    /// Cross-series terms: one series' value against the other's error.
    pub fn is_cross(self) -> bool {
        matches!(self, TermId::CovX1Theta2 | TermId::CovX2Theta1)
    }

    /// Same-series terms: value/error covariances and error variances.
    pub fn is_own(self) -> bool {
        matches!(
            self,
            TermId::CovX1Theta1 | TermId::CovX2Theta2 | TermId::VarTheta1 | TermId::VarTheta2
        )
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TermId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TermId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownTerm(s.to_string()))
    }
}

/// Moments of the observed (discretized) series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseMoments {
    pub cov: f64,
    pub var1: f64,
    pub var2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub pair: String,
    pub dt: u32,
    pub form: Form,
    pub term_set: TermSet,
    pub density: DensityKind,
    pub joint: Option<JointMode>,
    pub raw: f64,
    pub base: BaseMoments,
    pub terms: BTreeMap<String, f64>,
    pub neglected: Vec<String>,
    pub compensated: f64,
    pub clamped: bool,
    pub flags: Vec<String>,
}

impl CorrectionReport {
    pub fn term(&self, id: TermId) -> f64 {
        self.terms.get(id.name()).copied().unwrap_or(0.0)
    }

    /// Compensated coefficient with the listed terms set to zero, unclamped.
    pub fn evaluate(&self, zeroed: &[TermId]) -> f64 {
        let t = |id: TermId| if zeroed.contains(&id) { 0.0 } else { self.term(id) };
        let b = &self.base;
        let num = b.cov + t(TermId::CovX1Theta2) + t(TermId::CovX2Theta1) + t(TermId::CovTheta1Theta2);
        let d1 = b.var1 + t(TermId::VarTheta1) + 2.0 * t(TermId::CovX1Theta1);
        let d2 = b.var2 + t(TermId::VarTheta2) + 2.0 * t(TermId::CovX2Theta2);
        num / (d1 * d2).sqrt()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Change of the compensated coefficient caused by the named term: the full
/// value minus the value with that term set to zero.
pub fn term_impact(report: &CorrectionReport, term: &str) -> Result<f64> {
    let id: TermId = term.parse()?;
    Ok(report.evaluate(&[]) - report.evaluate(&[id]))
}
