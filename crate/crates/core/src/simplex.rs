use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ coords + remainder = 1` for points built from an explicit remainder.
const PARTITION_TOL: f64 = 1e-9;

/// A point of the open simplex: `K-1` positive coordinates whose sum is below one.
///
/// The remainder `1 - Σ coords` is stored alongside the coordinates. Transforms
/// compute it directly, which keeps it accurate when the coordinates sum to
/// within rounding distance of one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexInterior {
    coords: Vec<f64>,
    remainder: f64,
}

impl SimplexInterior {
    /// Builds a point from its coordinates; the remainder is `1 - Σ coords`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let remainder = 1.0 - coords.iter().sum::<f64>();
        Self::with_remainder(coords, remainder)
    }

    /// Builds a point from coordinates and a separately computed remainder.
    pub fn with_remainder(coords: Vec<f64>, remainder: f64) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("simplex point needs at least one coordinate".into()));
        }
        if let Some((i, &c)) = coords.iter().enumerate().find(|(_, c)| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::Domain(format!("coordinate {i} is not strictly positive ({c})")));
        }
        if !(remainder > 0.0 && remainder.is_finite()) {
            return Err(Error::Domain(format!("remainder is not strictly positive ({remainder})")));
        }
        let total = coords.iter().sum::<f64>() + remainder;
        if (total - 1.0).abs() > PARTITION_TOL {
            return Err(Error::Domain(format!("coordinates and remainder sum to {total}, not 1")));
        }
        Ok(Self { coords, remainder })
    }

    /// Trusted constructor for transform outputs that are positive by construction.
    pub(crate) fn from_parts_unchecked(coords: Vec<f64>, remainder: f64) -> Self {
        debug_assert!(coords.iter().all(|&c| c > 0.0), "non-positive coordinate {coords:?}");
        debug_assert!(remainder > 0.0, "non-positive remainder {remainder}");
        Self { coords, remainder }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn remainder(&self) -> f64 {
        self.remainder
    }

    /// Number of free coordinates, `K - 1`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Number of categories `K` of the completed vector.
    pub fn categories(&self) -> usize {
        self.coords.len() + 1
    }

    /// The length-`K` probability vector with the remainder appended.
    pub fn completed(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coords.len() + 1);
        out.extend_from_slice(&self.coords);
        out.push(self.remainder);
        out
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}
