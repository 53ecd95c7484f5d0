//! Fit reports and the files they are written to.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use igr::recovery::{DiscretePmf, SupportKind};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `½ Σ |p - q|`, the tail masses counted as one extra bin.
    pub tv: f64,
    /// `Σ p log(p/q)` of target against recovered, after ε-smoothing.
    pub kl: f64,
    pub l2: f64,
    /// Batch loss of the last optimization step.
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredPmf {
    pub probs: Vec<f64>,
    pub tail_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPmf {
    pub probs: Vec<f64>,
}

/// Mean of the relaxed samples drawn during recovery, read as a pmf, and its
/// distances to the target. This is what the moment-matching objective
/// actually fits; the discretized `recovered` pmf can differ sharply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedMean {
    pub probs: Vec<f64>,
    pub tail_mass: f64,
    pub tv: f64,
    pub kl: f64,
    pub l2: f64,
}

/// Everything a single fit produces; serialized as `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub config: RunConfig,
    pub metrics: Metrics,
    pub recovered: RecoveredPmf,
    pub target: TargetPmf,
    /// Batch loss at every step.
    pub trajectory: Vec<f64>,
    /// Null unless timing was requested.
    pub wall_seconds: Option<f64>,
    pub seed: u64,
    /// Whether the recovered support is a truncation of an infinite one.
    pub truncated: bool,
    pub relaxed_mean: RelaxedMean,
}

impl FitReport {
    pub fn new(
        config: RunConfig,
        metrics: Metrics,
        recovered: &DiscretePmf,
        target: &DiscretePmf,
        relaxed_mean: RelaxedMean,
        trajectory: Vec<f64>,
        wall_seconds: Option<f64>,
    ) -> Self {
        Self {
            seed: config.seed,
            config,
            metrics,
            recovered: RecoveredPmf { probs: recovered.probs.clone(), tail_mass: recovered.tail_mass },
            target: TargetPmf { probs: target.probs.clone() },
            trajectory,
            wall_seconds,
            truncated: recovered.support_kind == SupportKind::TruncatedInfinite,
            relaxed_mean,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize") + "\n"
    }

    /// `category,target_prob,recovered_prob` over the longer of the two
    /// supports, plus a `tail` row for truncated recoveries.
    pub fn to_csv(&self) -> String {
        let n = self.target.probs.len().max(self.recovered.probs.len());
        let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
        let mut out = String::from("category,target_prob,recovered_prob\n");
        for k in 0..n {
            let _ = writeln!(out, "{k},{},{}", at(&self.target.probs, k), at(&self.recovered.probs, k));
        }
        if self.truncated {
            let _ = writeln!(out, "tail,0,{}", self.recovered.tail_mass);
        }
        out
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes `results.json` and `pmf.csv` into `dir`.
pub fn emit(report: &FitReport, dir: &Path) -> Result<()> {
    write_file(&dir.join("results.json"), &report.to_json())?;
    write_file(&dir.join("pmf.csv"), &report.to_csv())
}

pub fn read_report(path: &Path) -> Result<FitReport> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}
