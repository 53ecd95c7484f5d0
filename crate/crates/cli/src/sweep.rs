//! Temperature sweeps, selected on the recovered discrete pmf.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::fit::fit;
use crate::report::{emit, write_file, FitReport};

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub tv: Option<f64>,
    pub kl: Option<f64>,
    pub l2: Option<f64>,
    pub final_loss: Option<f64>,
    /// Why the run failed, when it did.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Index into `rows` of the selected run.
    pub best: Option<usize>,
}

/// Outcome of a sweep: the table and every report that finished.
#[derive(Debug)]
pub struct SweepOutcome {
    pub table: SweepTable,
    pub reports: Vec<Option<FitReport>>,
}

impl SweepOutcome {
    pub fn best(&self) -> Option<&FitReport> {
        self.table.best.and_then(|i| self.reports[i].as_ref())
    }
}

/// Index of the row with the smallest total variation; ties go to the lower
/// temperature. Failed rows and the continuous loss are ignored.
pub fn select_best(rows: &[SweepRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| r.tv.filter(|tv| tv.is_finite()).map(|tv| (i, tv, r.tau)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.total_cmp(&b.2)))
        .map(|(i, _, _)| i)
}

/// One fit per grid temperature, in parallel. Every run uses the configured
/// seed, so runs differ only in temperature.
pub fn sweep(config: &RunConfig, timing: bool) -> Result<SweepOutcome> {
    config.validate()?;
    let results: Vec<Result<FitReport>> =
        config.tau_grid.par_iter().map(|&tau| fit(&RunConfig { tau, ..config.clone() }, timing)).collect();
    let rows = config
        .tau_grid
        .iter()
        .zip(&results)
        .map(|(&tau, r)| match r {
            Ok(rep) => SweepRow {
                tau,
                tv: Some(rep.metrics.tv),
                kl: Some(rep.metrics.kl),
                l2: Some(rep.metrics.l2),
                final_loss: Some(rep.metrics.final_loss),
                error: None,
            },
            Err(e) => SweepRow { tau, tv: None, kl: None, l2: None, final_loss: None, error: Some(e.to_string()) },
        })
        .collect::<Vec<_>>();
    let best = select_best(&rows);
    let reports = results.into_iter().map(Result::ok).collect();
    Ok(SweepOutcome { table: SweepTable { rows, best }, reports })
}

/// Directory name of the run at `tau` within a sweep.
pub fn run_dir_name(tau: f64) -> String {
    format!("tau_{tau}")
}

/// Writes `sweep.json`, the per-temperature runs under `runs/`, and the
/// selected run's files at the top level. Fails when no run succeeded.
pub fn emit_sweep(outcome: &SweepOutcome, dir: &Path) -> Result<()> {
    let table = serde_json::to_string_pretty(&outcome.table).expect("tables always serialize") + "\n";
    write_file(&dir.join("sweep.json"), &table)?;
    for (row, report) in outcome.table.rows.iter().zip(&outcome.reports) {
        if let Some(report) = report {
            emit(report, &dir.join("runs").join(run_dir_name(row.tau)))?;
        }
    }
    match outcome.best() {
        Some(best) => emit(best, dir),
        None => Err(CliError::Runtime("every run in the sweep failed".into())),
    }
}
