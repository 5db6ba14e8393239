//! Run configuration shared by the command-line jobs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decimal::TickSize;
use crate::distfit::{DensityKind, JointMode};
use crate::epps::{CorrectionOptions, Form, TermSet, DEFAULT_MEMORY_BUDGET};
use crate::error::{Error, Result};
use crate::sim::{SimConfig, TailExperimentConfig};

use super::ticks::{LoadOptions, DEFAULT_SESSION_GAP};

/// Two tick files to correlate. `b` is absent for single-file jobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub a: PathBuf,
    #[serde(default)]
    pub b: Option<PathBuf>,
    /// Per-file tick sizes override the run-wide one.
    #[serde(default)]
    pub q_a: Option<TickSize>,
    #[serde(default)]
    pub q_b: Option<TickSize>,
}

impl PairSpec {
    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let stem = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        match &self.b {
            Some(b) => format!("{}-{}", stem(&self.a), stem(b)),
            None => stem(&self.a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pairs: Vec<PairSpec>,
    pub q: Option<TickSize>,
    /// Return intervals in grid steps.
    pub dt: Vec<u32>,
    /// Grid step in seconds.
    pub step: i64,
    pub density: DensityKind,
    pub joint: JointMode,
    pub mode: TermSet,
    pub form: Form,
    pub price_bins: Option<usize>,
    pub memory_budget: usize,
    /// Timestamps at which sessions are cut, e.g. stock splits.
    pub splits: Vec<i64>,
    pub session_gap: i64,
    /// Add curve columns divided by the value at the largest interval.
    pub normalize: bool,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub simulate: SimConfig,
    pub tails: TailExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pairs: Vec::new(),
            q: None,
            dt: vec![60, 300, 1800],
            step: 1,
            density: DensityKind::Gaussian,
            joint: JointMode::default(),
            mode: TermSet::Full,
            form: Form::Returns,
            price_bins: None,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            splits: Vec::new(),
            session_gap: DEFAULT_SESSION_GAP,
            normalize: false,
            out: None,
            seed: 1,
            simulate: SimConfig::default(),
            tails: TailExperimentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt.is_empty() || self.dt.contains(&0) {
            return Err(Error::Config("dt must list positive intervals".into()));
        }
        if self.step < 1 {
            return Err(Error::Config(format!("grid step {} must be >= 1", self.step)));
        }
        if self.form == Form::Discretized {
            return Err(Error::Config("form must be `returns` or `price-changes`".into()));
        }
        for p in &self.pairs {
            if p.q_a.or(self.q).is_none() || (p.b.is_some() && p.q_b.or(self.q).is_none()) {
                return Err(Error::Config(format!("no tick size for pair {}", p.label())));
            }
        }
        Ok(())
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            session_gap: self.session_gap,
        }
    }

    pub fn correction_options(&self, pair: &str) -> CorrectionOptions {
        CorrectionOptions {
            pair: pair.to_string(),
            density: self.density,
            joint: self.joint,
            term_set: self.mode,
            price_bins: self.price_bins,
            memory_budget: self.memory_budget,
        }
    }
}
