//! Run configuration: built-in defaults, then a JSON file, then flags.

use std::path::Path;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::target::TargetSpec;

/// Temperatures tried by a sweep unless told otherwise.
pub const DEFAULT_TAU_GRID: [f64; 10] = [0.01, 0.03, 0.07, 0.1, 0.25, 0.4, 0.5, 0.67, 0.85, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// softmax++ on Gaussian noise.
    IgrI,
    /// Stick-breaking then softmax++; truncated at precision ρ unless `k` is given.
    IgrSb,
    /// Planar flow layers then softmax++.
    IgrPlanar,
    /// Gumbel-Softmax over `k` logits.
    Gs,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::IgrI => "igr-i",
            Model::IgrSb => "igr-sb",
            Model::IgrPlanar => "igr-planar",
            Model::Gs => "gs",
        }
    }
}

/// A fully resolved experiment configuration, echoed into every report.
///
/// The output directory is deliberately not part of it, so identical runs
/// written to different places produce identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub target: TargetSpec,
    /// Number of categories of a finite model; defaults to the target's support.
    pub k: Option<usize>,
    /// Truncation precision for the infinite stick-breaking model.
    pub rho: f64,
    pub tau: f64,
    pub tau_grid: Vec<f64>,
    pub steps: usize,
    pub batch: usize,
    pub seed: u64,
    pub lr: f64,
    /// softmax++ offset.
    pub delta: f64,
    /// Monte-Carlo draws used to recover the discrete pmf.
    pub recovery_samples: usize,
    pub planar_depth: usize,
}

impl RunConfig {
    pub fn new(model: Model, target: TargetSpec) -> Self {
        Self {
            model,
            target,
            k: None,
            rho: 0.999,
            tau: 0.1,
            tau_grid: DEFAULT_TAU_GRID.to_vec(),
            steps: 1000,
            batch: 64,
            seed: 0,
            lr: 0.05,
            delta: 1.0,
            recovery_samples: 100_000,
            planar_depth: igr::transforms::DEFAULT_PLANAR_DEPTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        self.target.validate()?;
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be positive, got {x}")))
            }
        };
        positive("tau", self.tau)?;
        positive("lr", self.lr)?;
        positive("delta", self.delta)?;
        if self.tau_grid.is_empty() {
            return bad("temperature grid is empty".into());
        }
        for &t in &self.tau_grid {
            positive("grid temperature", t)?;
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho must lie in (0, 1), got {}", self.rho));
        }
        if self.steps == 0 || self.batch == 0 || self.recovery_samples == 0 {
            return bad("steps, batch and recovery_samples must be at least 1".into());
        }
        if self.model == Model::IgrPlanar && self.planar_depth == 0 {
            return bad("planar_depth must be at least 1".into());
        }
        if let Some(k) = self.k {
            if k < 2 {
                return bad(format!("k must be at least 2, got {k}"));
            }
        }
        Ok(())
    }

    /// Whether the run uses the growable, truncated stick-breaking model.
    pub fn is_truncated(&self) -> bool {
        self.model == Model::IgrSb && self.k.is_none()
    }
}

/// Optional settings shared by the configuration file and the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// e.g. poisson:50, binomial:12,0.3, negbinomial:50,0.6, custom:0.2,0.8
    #[arg(long)]
    pub target: Option<TargetSpec>,
    /// Number of categories [default: the target's support]
    #[arg(long)]
    pub k: Option<usize>,
    /// Precision ρ of the stick-breaking truncation [default: 0.999]
    #[arg(long)]
    pub rho: Option<f64>,
    /// Temperature for `fit` [default: 0.1]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Comma-separated temperatures for `sweep`.
    #[arg(long, value_delimiter = ',')]
    pub tau_grid: Option<Vec<f64>>,
    /// Adam steps [default: 1000]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Samples per gradient estimate [default: 64]
    #[arg(long)]
    pub batch: Option<usize>,
    /// Random seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Adam learning rate [default: 0.05]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Softmax++ constant δ [default: 1]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Draws for the final discrete recovery [default: 100000]
    #[arg(long)]
    pub recovery_samples: Option<usize>,
    /// Planar layers for igr-planar [default: 2]
    #[arg(long)]
    pub planar_depth: Option<usize>,
}

impl Overrides {
    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            model: self.model.or(base.model),
            target: self.target.or(base.target),
            k: self.k.or(base.k),
            rho: self.rho.or(base.rho),
            tau: self.tau.or(base.tau),
            tau_grid: self.tau_grid.or(base.tau_grid),
            steps: self.steps.or(base.steps),
            batch: self.batch.or(base.batch),
            seed: self.seed.or(base.seed),
            lr: self.lr.or(base.lr),
            delta: self.delta.or(base.delta),
            recovery_samples: self.recovery_samples.or(base.recovery_samples),
            planar_depth: self.planar_depth.or(base.planar_depth),
        }
    }

    pub fn from_file(path: &Path) -> Result<Overrides> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fills unset fields from the defaults; `model` and `target` are required.
    pub fn resolve(self) -> Result<RunConfig> {
        let model = self.model.ok_or_else(|| CliError::Config("--model is required".into()))?;
        let target = self.target.ok_or_else(|| CliError::Config("--target is required".into()))?;
        let mut c = RunConfig::new(model, target);
        c.k = self.k;
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.$field = v; })* };
        }
        take!(rho, tau, tau_grid, steps, batch, seed, lr, delta, recovery_samples, planar_depth);
        c.validate()?;
        Ok(c)
    }
}
