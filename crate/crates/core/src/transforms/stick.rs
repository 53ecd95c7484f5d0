//! Sigmoid squashing and stick-breaking onto the simplex.

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::simplex::SimplexInterior;
use crate::special::sigmoid;

/// Sigmoid outputs are clamped to `[UNIT_CLAMP, 1 - UNIT_CLAMP]`.
pub const UNIT_CLAMP: f64 = 1e-12;

pub fn clamped_sigmoid(y: &[f64]) -> Vec<f64> {
    y.iter().map(|&v| sigmoid(v).clamp(UNIT_CLAMP, 1.0 - UNIT_CLAMP)).collect()
}

pub fn logit(u: &[f64]) -> Result<Vec<f64>> {
    check_unit("u", u)?;
    Ok(u.iter().map(|&p| p.ln() - (-p).ln_1p()).collect())
}

pub fn sigmoid_logdet(u: &[f64]) -> f64 {
    u.iter().map(|&p| (p * (1.0 - p)).ln()).sum()
}

pub fn sigmoid_pullback(u: &[f64], cotangent: &[f64]) -> Vec<f64> {
    u.iter().zip(cotangent).map(|(p, c)| c * p * (1.0 - p)).collect()
}

fn check_unit(name: &str, u: &[f64]) -> Result<()> {
    ensure_finite(name, u)?;
    if u.is_empty() {
        return Err(Error::InvalidInput(format!("{name} is empty")));
    }
    if let Some((i, p)) = u.iter().enumerate().find(|(_, p)| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::Domain(format!("{name}[{i}] = {p} is outside (0, 1)")));
    }
    Ok(())
}

/// Remaining stick before each break: `P_k = Π_{i<k} (1 - u_i)`, plus the final remainder.
fn sticks(u: &[f64]) -> (Vec<f64>, f64) {
    let mut remaining = 1.0;
    let before = u
        .iter()
        .map(|p| {
            let here = remaining;
            remaining *= 1.0 - p;
            here
        })
        .collect();
    (before, remaining)
}

/// `v_k = u_k Π_{i<k} (1 - u_i)`; the remainder is the stick left after the last break.
pub fn stick_break(u: &[f64]) -> Result<SimplexInterior> {
    check_unit("u", u)?;
    let (before, rest) = sticks(u);
    let coords = u.iter().zip(&before).map(|(p, s)| (p * s).max(f64::MIN_POSITIVE)).collect();
    Ok(SimplexInterior::from_parts_unchecked(coords, rest.max(f64::MIN_POSITIVE)))
}

/// `u_k = v_k / (1 - Σ_{i<k} v_i)`, with the denominator accumulated from the tail.
pub fn stick_break_inverse(v: &SimplexInterior) -> Result<Vec<f64>> {
    let coords = v.coords();
    let mut tail = v.remainder();
    let mut u = vec![0.0; coords.len()];
    for k in (0..coords.len()).rev() {
        tail += coords[k];
        if tail <= 0.0 {
            return Err(Error::Domain(format!("stick depleted before coordinate {k}")));
        }
        u[k] = coords[k] / tail;
    }
    Ok(u)
}

/// Triangular Jacobian; the diagonal is `Π_{i<k} (1 - u_i)`.
pub fn stick_break_logdet(u: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut total = 0.0;
    for p in u {
        total += acc;
        acc += (-p).ln_1p();
    }
    total
}

/// `∂L/∂u_j = c_j P_j - (1/(1-u_j)) Σ_{k>j} c_k v_k`.
pub fn stick_break_pullback(u: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
    ensure_len(u.len(), cotangent.len())?;
    let (before, _) = sticks(u);
    let mut grad = vec![0.0; u.len()];
    let mut later = 0.0;
    for j in (0..u.len()).rev() {
        grad[j] = cotangent[j] * before[j] - later / (1.0 - u[j]);
        later += cotangent[j] * u[j] * before[j];
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_term_products() {
        let v = stick_break(&[0.5, 0.5]).unwrap();
        assert_eq!(v.coords(), &[0.5, 0.25]);
        assert_eq!(v.remainder(), 0.25);
        let v = stick_break(&[0.3, 0.6]).unwrap();
        assert!((v.coords()[1] - 0.42).abs() < 1e-15);

        let u = stick_break_inverse(&SimplexInterior::new(vec![0.5, 0.25]).unwrap()).unwrap();
        assert_eq!(u, vec![0.5, 0.5]);
        let u = stick_break_inverse(&SimplexInterior::new(vec![0.3, 0.42]).unwrap()).unwrap();
        assert!((u[0] - 0.3).abs() < 1e-15 && (u[1] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn boundary_values_rejected() {
        assert!(matches!(stick_break(&[0.0, 0.5]), Err(Error::Domain(_))));
        assert!(matches!(stick_break(&[0.5, 1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn logdet_of_half_sticks() {
        // diagonal (1, 0.5)
        assert!((stick_break_logdet(&[0.5, 0.5]) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn clamp_keeps_unit_interval_open() {
        let u = clamped_sigmoid(&[-1e3, 1e3, 0.0]);
        assert_eq!(u, vec![UNIT_CLAMP, 1.0 - UNIT_CLAMP, 0.5]);
        assert!(stick_break(&u).is_ok());
    }
}
