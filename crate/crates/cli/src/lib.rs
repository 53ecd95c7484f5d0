//! Experiment driver: fit relaxations to target pmfs, sweep temperatures,
//! and write machine-readable reports.

pub mod config;
pub mod error;
pub mod fit;
pub mod gradcheck;
pub mod report;
pub mod sweep;
pub mod target;

pub use config::{Model, Overrides, RunConfig};
pub use error::{CliError, Result};
pub use fit::fit;
pub use report::{emit, FitReport};
pub use sweep::{select_best, sweep, SweepOutcome};
pub use target::TargetSpec;
