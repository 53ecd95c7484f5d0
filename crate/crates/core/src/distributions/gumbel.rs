//! Gumbel-Softmax (Concrete) baseline, computed in log space.

use libm::lgamma as ln_gamma;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, ensure_positive, Error, Result};
use crate::special::log_sum_exp;

const UNIFORM_FLOOR: f64 = 1e-300;
const UNIFORM_CEIL: f64 = 1.0 - 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GsParamsRepr")]
pub struct GsParams {
    pub alpha: Vec<f64>,
    pub tau: f64,
}

#[derive(Deserialize)]
struct GsParamsRepr {
    alpha: Vec<f64>,
    tau: f64,
}

impl TryFrom<GsParamsRepr> for GsParams {
    type Error = Error;
    fn try_from(r: GsParamsRepr) -> Result<Self> {
        GsParams::new(r.alpha, r.tau)
    }
}

impl GsParams {
    pub fn new(alpha: Vec<f64>, tau: f64) -> Result<Self> {
        ensure_positive("tau", tau)?;
        if alpha.len() < 2 {
            return Err(Error::InvalidInput("Gumbel-Softmax needs at least two categories".into()));
        }
        for (i, a) in alpha.iter().enumerate() {
            ensure_positive(&format!("alpha[{i}]"), *a)?;
        }
        Ok(Self { alpha, tau })
    }

    /// Parameters from unnormalized log-weights.
    pub fn from_logits(logits: &[f64], tau: f64) -> Result<Self> {
        Self::new(logits.iter().map(|l| l.exp()).collect(), tau)
    }

    pub fn categories(&self) -> usize {
        self.alpha.len()
    }
}

/// Standard Gumbel noise `-log(-log U)` with `U` clamped away from 0 and 1.
pub fn gumbel_noise<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>().clamp(UNIFORM_FLOOR, UNIFORM_CEIL);
    -(-u.ln()).ln()
}

/// Log of a Gumbel-Softmax draw: `log_softmax((g + log α) / τ)`.
pub fn gs_sample_log<R: Rng + ?Sized>(params: &GsParams, rng: &mut R) -> Vec<f64> {
    let logits: Vec<f64> = params.alpha.iter().map(|a| (gumbel_noise(rng) + a.ln()) / params.tau).collect();
    let norm = log_sum_exp(&logits);
    logits.iter().map(|l| l - norm).collect()
}

/// A Gumbel-Softmax draw on the completed simplex (length `K`).
///
/// At very low temperature small coordinates can underflow to zero; use
/// [`gs_sample_log`] when they are needed.
pub fn gs_sample<R: Rng + ?Sized>(params: &GsParams, rng: &mut R) -> Vec<f64> {
    gs_sample_log(params, rng).into_iter().map(f64::exp).collect()
}

/// `log Γ(K) + (K-1) log τ + Σ [log α_k - (τ+1) log z_k] - K log Σ α_j z_j^{-τ}`.
pub fn gs_log_density(params: &GsParams, z: &[f64]) -> Result<f64> {
    ensure_len(params.categories(), z.len())?;
    if let Some((i, v)) = z.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("z[{i}] = {v} is on the boundary")));
    }
    let total: f64 = z.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("z sums to {total}, not 1")));
    }
    let k = z.len() as f64;
    let tau = params.tau;
    let log_z: Vec<f64> = z.iter().map(|v| v.ln()).collect();
    let terms: Vec<f64> = params.alpha.iter().zip(&log_z).map(|(a, lz)| a.ln() - tau * lz).collect();
    let pointwise: f64 = params.alpha.iter().zip(&log_z).map(|(a, lz)| a.ln() - (tau + 1.0) * lz).sum();
    Ok(ln_gamma(k) + (k - 1.0) * tau.ln() + pointwise - k * log_sum_exp(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_density_for_two_unit_weights() {
        let p = GsParams::new(vec![1.0, 1.0], 1.0).unwrap();
        for z in [[0.5, 0.5], [0.9, 0.1], [0.01, 0.99]] {
            assert!(gs_log_density(&p, &z).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn samples_lie_in_simplex() {
        let p = GsParams::new(vec![0.5, 2.0, 1.0], 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let z = gs_sample(&p, &mut rng);
            assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(z.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn scaling_weights_leaves_samples_unchanged() {
        let p = GsParams::new(vec![0.5, 2.0, 1.0], 0.3).unwrap();
        let q = GsParams::new(vec![5.0, 20.0, 10.0], 0.3).unwrap();
        let a = gs_sample(&p, &mut ChaCha8Rng::seed_from_u64(4));
        let b = gs_sample(&q, &mut ChaCha8Rng::seed_from_u64(4));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_rejected() {
        let p = GsParams::new(vec![1.0, 1.0], 1.0).unwrap();
        assert!(gs_log_density(&p, &[1.0, 0.0]).is_err());
        assert!(gs_log_density(&p, &[0.6, 0.6]).is_err());
        assert!(GsParams::new(vec![1.0, 0.0], 1.0).is_err());
    }
}
