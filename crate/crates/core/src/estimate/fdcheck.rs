//! Central finite differences, the reference for every hand-written pullback.

/// Relative deviations are measured against `max(|fd|, |analytic|, FD_FLOOR)`.
pub const FD_FLOOR: f64 = 1e-4;

/// Step used for coordinate `x`: `1e-5 (1 + |x|)`.
pub fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

/// Gradient of the scalar `f` at `point` by central differences.
pub fn fd_gradient<F>(mut f: F, point: &[f64]) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = point.to_vec();
    (0..point.len())
        .map(|k| {
            let h = fd_step(point[k]);
            x[k] = point[k] + h;
            let up = f(&x);
            x[k] = point[k] - h;
            let down = f(&x);
            x[k] = point[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Jacobian of `f` at `point` by central differences; `jac[i][j] = ∂f_i/∂x_j`.
pub fn fd_jacobian<F>(mut f: F, point: &[f64]) -> Vec<Vec<f64>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let mut x = point.to_vec();
    let columns: Vec<Vec<f64>> = (0..point.len())
        .map(|j| {
            let h = fd_step(point[j]);
            x[j] = point[j] + h;
            let up = f(&x);
            x[j] = point[j] - h;
            let down = f(&x);
            x[j] = point[j];
            up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    let rows = columns.first().map_or(0, Vec::len);
    (0..rows).map(|i| columns.iter().map(|c| c[i]).collect()).collect()
}

/// Largest per-coordinate relative deviation between two gradients.
pub fn max_relative_error(reference: &[f64], candidate: &[f64]) -> f64 {
    assert_eq!(reference.len(), candidate.len(), "gradient lengths differ");
    reference
        .iter()
        .zip(candidate)
        .map(|(r, c)| {
            let scale = r.abs().max(c.abs()).max(FD_FLOOR);
            if r.is_finite() && c.is_finite() {
                (r - c).abs() / scale
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Compares `pullback(point, cotangent)` with central differences of
/// `cotangentᵀ fun(x)` and returns the largest relative deviation.
pub fn fd_check<F, P>(mut fun: F, point: &[f64], cotangent: &[f64], pullback: P) -> f64
where
    F: FnMut(&[f64]) -> Vec<f64>,
    P: FnOnce(&[f64], &[f64]) -> Vec<f64>,
{
    let reference = fd_gradient(|x| fun(x).iter().zip(cotangent).map(|(a, b)| a * b).sum(), point);
    max_relative_error(&reference, &pullback(point, cotangent))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(x: &[f64]) -> Vec<f64> {
        vec![2.0 * x[0] - x[1] + 0.5 * x[2], 3.0 * x[1] + x[2]]
    }

    fn linear_vjp(_: &[f64], c: &[f64]) -> Vec<f64> {
        vec![2.0 * c[0], -c[0] + 3.0 * c[1], 0.5 * c[0] + c[1]]
    }

    #[test]
    fn exact_on_linear_maps() {
        let err = fd_check(linear, &[0.3, -1.2, 4.0], &[1.5, -0.7], linear_vjp);
        // only roundoff: ε·|f|/h ≈ 1e-11 per coordinate
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn detects_sign_flip() {
        let corrupted = |x: &[f64], c: &[f64]| {
            let mut g = linear_vjp(x, c);
            g[1] = -g[1];
            g
        };
        let err = fd_check(linear, &[0.3, -1.2, 4.0], &[1.5, -0.7], corrupted);
        assert!(err >= 0.1, "{err}");
    }

    #[test]
    fn jacobian_layout() {
        let j = fd_jacobian(linear, &[0.0, 0.0, 0.0]);
        assert_eq!(j.len(), 2);
        assert!((j[0][0] - 2.0).abs() < 1e-9 && (j[1][2] - 1.0).abs() < 1e-9);
    }
}
