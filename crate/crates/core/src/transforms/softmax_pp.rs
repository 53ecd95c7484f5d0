//! softmax++: a softmax with an extra constant `δ` in the denominator, which
//! makes it a bijection from `R^{K-1}` onto the open simplex.

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::simplex::SimplexInterior;

/// Scaled exponents `a = y/τ`, the shift `c = max(max a, 0)` and the shifted
/// denominator `Σ exp(a - c) + δ exp(-c)`.
struct Shifted {
    scaled: Vec<f64>,
    shift: f64,
    exps: Vec<f64>,
    denom: f64,
}

fn shifted(y: &[f64], tau: f64, delta: f64) -> Result<Shifted> {
    ensure_finite("y", y)?;
    ensure_positive("tau", tau)?;
    ensure_positive("delta", delta)?;
    if y.is_empty() {
        return Err(Error::InvalidInput("softmax++ needs at least one coordinate".into()));
    }
    let scaled: Vec<f64> = y.iter().map(|v| v / tau).collect();
    let shift = scaled.iter().copied().fold(0.0, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|a| (a - shift).exp()).collect();
    let denom = exps.iter().sum::<f64>() + delta * (-shift).exp();
    Ok(Shifted { scaled, shift, exps, denom })
}

/// `z_k = exp(y_k/τ) / (Σ_j exp(y_j/τ) + δ)`.
///
/// Coordinates that underflow are floored at the smallest positive normal
/// double so the output stays in the open simplex.
pub fn softmax_pp(y: &[f64], tau: f64, delta: f64) -> Result<SimplexInterior> {
    let s = shifted(y, tau, delta)?;
    let coords = s.exps.iter().map(|e| (e / s.denom).max(f64::MIN_POSITIVE)).collect();
    let log_rest = delta.ln() - s.shift - s.denom.ln();
    let rest = log_rest.exp().max(f64::MIN_POSITIVE);
    Ok(SimplexInterior::from_parts_unchecked(coords, rest))
}

/// `y_k = τ log(δ z_k / (1 - Σ z))`.
pub fn softmax_pp_inverse(z: &SimplexInterior, tau: f64, delta: f64) -> Result<Vec<f64>> {
    ensure_positive("tau", tau)?;
    ensure_positive("delta", delta)?;
    let rest = z.remainder();
    if rest <= 0.0 {
        return Err(Error::Domain(format!("remainder {rest} is not positive")));
    }
    let offset = delta.ln() - rest.ln();
    Ok(z.coords().iter().map(|c| tau * (c.ln() + offset)).collect())
}

/// `log |det J| = log δ + Σ y_k/τ - (K-1) log τ - K log s` with
/// `s = Σ exp(y_k/τ) + δ`.
///
/// The Jacobian is `(1/τ)(diag z - z zᵀ)`, whose determinant is
/// `τ^{-(K-1)} Π z_k (1 - Σ z)`.
pub fn softmax_pp_logdet(y: &[f64], tau: f64, delta: f64) -> Result<f64> {
    let s = shifted(y, tau, delta)?;
    let n = y.len() as f64;
    let log_s = s.shift + s.denom.ln();
    Ok(delta.ln() + s.scaled.iter().sum::<f64>() - n * tau.ln() - (n + 1.0) * log_s)
}

/// Vector-Jacobian product: `Jᵀc = (1/τ)(z ⊙ c - z (z·c))`; the Jacobian is symmetric.
pub fn softmax_pp_pullback(y: &[f64], tau: f64, delta: f64, cotangent: &[f64]) -> Result<Vec<f64>> {
    crate::error::ensure_len(y.len(), cotangent.len())?;
    let z = softmax_pp(y, tau, delta)?;
    Ok(pullback_at(z.coords(), tau, cotangent))
}

pub(crate) fn pullback_at(z: &[f64], tau: f64, cotangent: &[f64]) -> Vec<f64> {
    let dot: f64 = z.iter().zip(cotangent).map(|(a, b)| a * b).sum();
    z.iter().zip(cotangent).map(|(zk, ck)| zk * (ck - dot) / tau).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_point_splits_mass_evenly() {
        let z = softmax_pp(&[0.0, 0.0], 1.0, 1.0).unwrap();
        for c in z.completed() {
            assert!((c - 1.0 / 3.0).abs() < 1e-15);
        }
        let y = softmax_pp_inverse(&z, 1.0, 1.0).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn half_temperature_reference_value() {
        // e²/(e²+e⁴+1), e⁴/(e²+e⁴+1)
        let e2 = 2f64.exp();
        let e4 = 4f64.exp();
        let d = e2 + e4 + 1.0;
        let z = softmax_pp(&[1.0, 2.0], 0.5, 1.0).unwrap();
        assert!((z.coords()[0] - e2 / d).abs() < 1e-15);
        assert!((z.coords()[1] - e4 / d).abs() < 1e-15);
        assert!((z.coords()[0] - 0.11731).abs() < 1e-5);
        assert!((z.coords()[1] - 0.86681).abs() < 1e-5);

        let back = softmax_pp_inverse(&SimplexInterior::new(vec![0.11731, 0.86681]).unwrap(), 0.5, 1.0).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-3);
        assert!((back[1] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn low_temperature_approaches_vertex() {
        let z = softmax_pp(&[3.0, -1.0], 0.01, 1.0).unwrap();
        assert!((z.coords()[0] - 1.0).abs() < 1e-6);
        assert!(z.coords()[1] < 1e-6);
    }

    #[test]
    fn scalar_logdet_values() {
        // d/dy e^y/(e^y+1) at 0 is 1/4; with δ = 2 it is 2/9.
        let ld = softmax_pp_logdet(&[0.0], 1.0, 1.0).unwrap();
        assert!((ld - 0.25f64.ln()).abs() < 1e-15);
        let ld = softmax_pp_logdet(&[0.0], 1.0, 2.0).unwrap();
        assert!((ld - (2.0f64 / 9.0).ln()).abs() < 1e-15);
        let g = softmax_pp_pullback(&[0.0], 1.0, 1.0, &[1.0]).unwrap();
        assert!((g[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn large_inputs_stay_interior() {
        let z = softmax_pp(&[30.0, -30.0, 29.0], 0.01, 1.0).unwrap();
        assert!(z.coords().iter().all(|&c| c > 0.0));
        assert!(z.remainder() > 0.0);
        assert!(softmax_pp_logdet(&[30.0, -30.0, 29.0], 0.01, 1.0).unwrap().is_finite());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(softmax_pp(&[f64::NAN], 1.0, 1.0).is_err());
        assert!(softmax_pp(&[0.0], 0.0, 1.0).is_err());
        assert!(softmax_pp(&[0.0], 1.0, 0.0).is_err());
    }
}
