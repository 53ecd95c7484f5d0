//! Linear interpolation towards the nearest simplex vertex.

use crate::error::{ensure_len, Error, Result};
use crate::simplex::SimplexInterior;
use crate::special::argmax;

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidInput(format!("interpolation temperature must lie in (0, 1], got {tau}")));
    }
    Ok(())
}

/// Vertex of the completed vector's argmax (lowest index on ties). `K - 1`
/// denotes the remainder vertex, which is the origin in free coordinates.
pub fn nearest_vertex(w: &SimplexInterior) -> usize {
    argmax(&w.completed())
}

/// `τ w + (1 - τ) P(w)` where `P` projects onto the nearest vertex.
pub fn vertex_interp(w: &SimplexInterior, tau: f64) -> Result<SimplexInterior> {
    check_tau(tau)?;
    let vertex = nearest_vertex(w);
    let mut coords: Vec<f64> = w.coords().iter().map(|c| tau * c).collect();
    let mut rest = tau * w.remainder();
    match coords.get_mut(vertex) {
        Some(c) => *c += 1.0 - tau,
        None => rest += 1.0 - tau,
    }
    Ok(SimplexInterior::from_parts_unchecked(coords, rest))
}

/// Inverse of [`vertex_interp`]; the nearest vertex is preserved by the map.
pub fn vertex_interp_inverse(z: &SimplexInterior, tau: f64) -> Result<SimplexInterior> {
    check_tau(tau)?;
    let vertex = nearest_vertex(z);
    let mut coords: Vec<f64> = z.coords().to_vec();
    let mut rest = z.remainder();
    match coords.get_mut(vertex) {
        Some(c) => *c -= 1.0 - tau,
        None => rest -= 1.0 - tau,
    }
    coords.iter_mut().for_each(|c| *c /= tau);
    rest /= tau;
    SimplexInterior::with_remainder(coords, rest)
        .map_err(|_| Error::Domain("point is outside the image of vertex interpolation".into()))
}

/// Almost-everywhere log-determinant, `(K-1) log τ`.
pub fn vertex_interp_logdet(dim: usize, tau: f64) -> f64 {
    dim as f64 * tau.ln()
}

pub fn vertex_interp_pullback(tau: f64, cotangent: &[f64], dim: usize) -> Result<Vec<f64>> {
    ensure_len(dim, cotangent.len())?;
    Ok(cotangent.iter().map(|c| tau * c).collect())
}
