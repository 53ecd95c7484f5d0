//! Planar normalizing-flow layers `f(y) = y + û tanh(w·y + b)`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::special::{sigmoid, softplus};

/// Parameters of a single planar layer.
///
/// `u` is used as-is when `w·u ≥ -1`. Otherwise it is replaced by
/// `û = u + (m(w·u) - w·u) w/‖w‖²` with `m(x) = -1 + softplus(x)`, which
/// restores `w·û ≥ -1` and with it invertibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarLayer {
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: f64,
}

/// Gradient with respect to the raw layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarGrad {
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Projected {
    u_hat: Vec<f64>,
    /// Present when the correction was applied: `(w·u, ‖w‖², m(w·u) - w·u)`.
    correction: Option<(f64, f64, f64)>,
}

impl PlanarLayer {
    pub fn new(w: Vec<f64>, u: Vec<f64>, b: f64) -> Result<Self> {
        let layer = Self { w, u, b };
        layer.validate(layer.w.len())?;
        Ok(layer)
    }

    pub fn identity(dim: usize) -> Self {
        Self { w: vec![1.0; dim], u: vec![0.0; dim], b: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        ensure_len(dim, self.w.len())?;
        ensure_len(dim, self.u.len())?;
        ensure_finite("w", &self.w)?;
        ensure_finite("u", &self.u)?;
        ensure_finite("b", &[self.b])?;
        if dot(&self.w, &self.w) == 0.0 {
            return Err(Error::DegenerateLayer);
        }
        Ok(())
    }

    fn project(&self) -> Result<Projected> {
        let norm2 = dot(&self.w, &self.w);
        if norm2 == 0.0 {
            return Err(Error::DegenerateLayer);
        }
        let wu = dot(&self.w, &self.u);
        if wu >= -1.0 {
            return Ok(Projected { u_hat: self.u.clone(), correction: None });
        }
        let shift = -1.0 + softplus(wu) - wu;
        let u_hat = self.u.iter().zip(&self.w).map(|(u, w)| u + shift * w / norm2).collect();
        Ok(Projected { u_hat, correction: Some((wu, norm2, shift)) })
    }

    /// The constrained update vector `û`.
    pub fn u_hat(&self) -> Result<Vec<f64>> {
        Ok(self.project()?.u_hat)
    }

    /// Returns `f(y)` and `log |1 + ûᵀψ(y)|` with `ψ(y) = (1 - tanh²(w·y + b)) w`.
    pub fn forward(&self, y: &[f64]) -> Result<(Vec<f64>, f64)> {
        ensure_len(self.dim(), y.len())?;
        let u_hat = self.project()?.u_hat;
        let h = (dot(&self.w, y) + self.b).tanh();
        let out = y.iter().zip(&u_hat).map(|(yi, ui)| yi + ui * h).collect();
        let logdet = (1.0 + (1.0 - h * h) * dot(&self.w, &u_hat)).abs().ln();
        Ok((out, logdet))
    }

    /// Inverts the layer by bisection on the scalar `a = w·y`, which solves
    /// `w·x = a + (w·û) tanh(a + b)` (monotone in `a` under the constraint).
    pub fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_len(self.dim(), x.len())?;
        let u_hat = self.project()?.u_hat;
        let gamma = dot(&self.w, &u_hat);
        let target = dot(&self.w, x);
        let residual = |a: f64| a + gamma * (a + self.b).tanh() - target;
        let (mut lo, mut hi) = (target - gamma.abs() - 1.0, target + gamma.abs() + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if residual(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = 0.5 * (lo + hi);
        let h = (a + self.b).tanh();
        Ok(x.iter().zip(&u_hat).map(|(xi, ui)| xi - ui * h).collect())
    }

    /// `Jᵀc = c + ψ (û·c)`.
    pub fn pullback(&self, y: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
        ensure_len(self.dim(), y.len())?;
        ensure_len(self.dim(), cotangent.len())?;
        let u_hat = self.project()?.u_hat;
        let h = (dot(&self.w, y) + self.b).tanh();
        let scale = (1.0 - h * h) * dot(&u_hat, cotangent);
        Ok(cotangent.iter().zip(&self.w).map(|(c, w)| c + scale * w).collect())
    }

    /// Gradient of `cᵀ f(y)` with respect to `(w, u, b)`, including the
    /// dependence of `û` on `w` and `u` when the correction is active.
    pub fn param_pullback(&self, y: &[f64], cotangent: &[f64]) -> Result<PlanarGrad> {
        ensure_len(self.dim(), y.len())?;
        ensure_len(self.dim(), cotangent.len())?;
        let Projected { u_hat, correction } = self.project()?;
        let h = (dot(&self.w, y) + self.b).tanh();
        let sech2 = 1.0 - h * h;
        let uc = dot(&u_hat, cotangent);
        let db = sech2 * uc;
        let mut dw: Vec<f64> = y.iter().map(|yi| db * yi).collect();
        let du_hat: Vec<f64> = cotangent.iter().map(|c| c * h).collect();
        let mut du = du_hat.clone();
        if let Some((wu, norm2, shift)) = correction {
            // û = u + β(w·u) w / n with β(α) = m(α) - α, β'(α) = sigmoid(α) - 1.
            let dshift = sigmoid(wu) - 1.0;
            let gw = dot(&du_hat, &self.w);
            for i in 0..du.len() {
                du[i] += gw * dshift * self.w[i] / norm2;
                dw[i] += dshift * self.u[i] * gw / norm2 + shift * du_hat[i] / norm2
                    - 2.0 * shift * gw * self.w[i] / (norm2 * norm2);
            }
        }
        Ok(PlanarGrad { w: dw, u: du, b: db })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_update_is_identity() {
        let layer = PlanarLayer::new(vec![0.3, -1.2], vec![0.0, 0.0], 0.4).unwrap();
        let (out, ld) = layer.forward(&[0.5, -2.0]).unwrap();
        assert_eq!(out, vec![0.5, -2.0]);
        assert_eq!(ld, 0.0);
    }

    #[test]
    fn saturated_bias_translates() {
        let layer = PlanarLayer::new(vec![0.3, -1.2], vec![0.7, 0.2], 50.0).unwrap();
        let (out, ld) = layer.forward(&[0.5, -2.0]).unwrap();
        assert!((out[0] - 1.2).abs() < 1e-12 && (out[1] + 1.8).abs() < 1e-12);
        assert!(ld.abs() < 1e-12);
    }

    #[test]
    fn violating_layer_is_projected() {
        let layer = PlanarLayer::new(vec![1.0, 0.0], vec![-3.0, 1.0], 0.0).unwrap();
        let u_hat = layer.u_hat().unwrap();
        assert!(dot(&layer.w, &u_hat) >= -1.0);
        let x = layer.forward(&[0.1, 0.2]).unwrap().0;
        let back = layer.inverse(&x).unwrap();
        assert!((back[0] - 0.1).abs() < 1e-12 && (back[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_direction_is_degenerate() {
        assert_eq!(PlanarLayer::new(vec![0.0, 0.0], vec![1.0, 0.0], 0.0), Err(Error::DegenerateLayer));
    }
}
