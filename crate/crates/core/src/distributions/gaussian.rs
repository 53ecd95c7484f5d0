use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::special::normal_log_pdf;

/// Diagonal Gaussian `N(mean, diag(std²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianDiag {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl GaussianDiag {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        ensure_len(mean.len(), std.len())?;
        ensure_finite("mean", &mean)?;
        if let Some((i, s)) = std.iter().enumerate().find(|(_, s)| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput(format!("std[{i}] must be positive, got {s}")));
        }
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| normal_log_pdf(*x, *m, *s)).sum()
    }

    /// Draws `(ε, mean + std ⊙ ε)` with `ε ~ N(0, I)`.
    pub fn sample_with_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let eps: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(rng)).collect();
        let y = eps.iter().zip(&self.mean).zip(&self.std).map(|((e, m), s)| m + s * e).collect();
        (eps, y)
    }

    /// `KL(self ‖ other) = Σ log(σq/σp) + (σp² + (μp - μq)²) / (2σq²) - 1/2`.
    pub fn kl(&self, other: &GaussianDiag) -> Result<f64> {
        ensure_len(self.dim(), other.dim())?;
        let mut kl = 0.0;
        for k in 0..self.dim() {
            let (mp, sp) = (self.mean[k], self.std[k]);
            let (mq, sq) = (other.mean[k], other.std[k]);
            kl += (sq / sp).ln() + (sp * sp + (mp - mq).powi(2)) / (2.0 * sq * sq) - 0.5;
        }
        Ok(kl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_shift_kl() {
        let p = GaussianDiag::new(vec![1.0], vec![1.0]).unwrap();
        let q = GaussianDiag::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(p.kl(&q).unwrap(), 0.5);
        assert_eq!(p.kl(&p).unwrap(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_std() {
        assert!(GaussianDiag::new(vec![0.0], vec![0.0]).is_err());
        assert!(GaussianDiag::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
