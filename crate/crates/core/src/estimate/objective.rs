use super::fdcheck::fd_gradient;

/// A test function on the completed simplex (length `K` vectors), optionally
/// paired with its restriction to the vertices.
pub trait TestObjective {
    fn eval(&self, z: &[f64]) -> f64;

    /// Analytic gradient; central differences on [`TestObjective::eval`] are used when absent.
    fn grad(&self, _z: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Value at the vertex of category `k`.
    fn discrete_eval(&self, _k: usize) -> Option<f64> {
        None
    }
}

/// Gradient of the objective at `z`, analytic when available.
pub fn objective_gradient<O: TestObjective + ?Sized>(obj: &O, z: &[f64]) -> Vec<f64> {
    obj.grad(z).unwrap_or_else(|| fd_gradient(|x| obj.eval(x), z))
}

/// `f(z) = c`.
#[derive(Debug, Clone)]
pub struct Constant(pub f64);

impl TestObjective for Constant {
    fn eval(&self, _: &[f64]) -> f64 {
        self.0
    }
    fn discrete_eval(&self, _: usize) -> Option<f64> {
        Some(self.0)
    }
}

/// `f(z) = Σ v_k z_k`, which equals `v_k` at vertex `k`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub values: Vec<f64>,
}

impl Linear {
    /// Linear extension of a function on categories.
    pub fn from_fn(categories: usize, f: impl Fn(usize) -> f64) -> Self {
        Self { values: (0..categories).map(f).collect() }
    }
}

impl TestObjective for Linear {
    fn eval(&self, z: &[f64]) -> f64 {
        z.iter().zip(&self.values).map(|(a, b)| a * b).sum()
    }
    fn grad(&self, _: &[f64]) -> Option<Vec<f64>> {
        Some(self.values.clone())
    }
    fn discrete_eval(&self, k: usize) -> Option<f64> {
        self.values.get(k).copied()
    }
}

/// `f(z) = zᵀ A z + bᵀ z`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl TestObjective for Quadratic {
    fn eval(&self, z: &[f64]) -> f64 {
        let quad: f64 =
            self.a.iter().zip(z).map(|(row, zi)| zi * row.iter().zip(z).map(|(a, zj)| a * zj).sum::<f64>()).sum();
        quad + self.b.iter().zip(z).map(|(b, zi)| b * zi).sum::<f64>()
    }
    fn grad(&self, z: &[f64]) -> Option<Vec<f64>> {
        let n = z.len();
        Some((0..n).map(|i| (0..n).map(|j| (self.a[i][j] + self.a[j][i]) * z[j]).sum::<f64>() + self.b[i]).collect())
    }
    fn discrete_eval(&self, k: usize) -> Option<f64> {
        Some(self.a[k][k] + self.b[k])
    }
}

/// `f(z) = ‖z - p‖²`, the moment-matching objective.
#[derive(Debug, Clone)]
pub struct SquaredDistance {
    pub target: Vec<f64>,
}

impl TestObjective for SquaredDistance {
    fn eval(&self, z: &[f64]) -> f64 {
        z.iter().zip(&self.target).map(|(a, b)| (a - b).powi(2)).sum()
    }
    fn grad(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some(z.iter().zip(&self.target).map(|(a, b)| 2.0 * (a - b)).collect())
    }
}

/// Wraps a closure; its gradient comes from central differences.
pub struct FnObjective<F>(pub F);

impl<F: Fn(&[f64]) -> f64> TestObjective for FnObjective<F> {
    fn eval(&self, z: &[f64]) -> f64 {
        (self.0)(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_gradients_match_differences() {
        let q = Quadratic { a: vec![vec![1.0, 0.5], vec![-0.3, 2.0]], b: vec![0.1, -0.4] };
        let z = [0.3, 0.7];
        let fd = fd_gradient(|x| q.eval(x), &z);
        let an = q.grad(&z).unwrap();
        for (a, b) in fd.iter().zip(&an) {
            assert!((a - b).abs() < 1e-9);
        }
        let f = FnObjective(|x: &[f64]| x[0] * x[1]);
        let g = objective_gradient(&f, &[2.0, 3.0]);
        assert!((g[0] - 3.0).abs() < 1e-8 && (g[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn vertex_values() {
        let l = Linear::from_fn(4, |k| (k as f64 - 1.0).powi(2));
        assert_eq!(l.discrete_eval(3), Some(4.0));
        assert_eq!(l.eval(&[0.0, 0.0, 0.0, 1.0]), 4.0);
    }
}
