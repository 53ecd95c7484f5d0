use crate::error::{ensure_len, Error, Result};

/// Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    /// `β₁ = 0.9`, `β₂ = 0.999`, `ε̂ = 1e-8`.
    pub fn new(lr: f64, len: usize) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: vec![0.0; len], v: vec![0.0; len] }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Grows the state for newly added parameters, whose moments start at zero.
    pub fn resize(&mut self, len: usize) {
        if len > self.m.len() {
            self.m.resize(len, 0.0);
            self.v.resize(len, 0.0);
        }
    }

    /// One bias-corrected update. A non-finite gradient rejects the whole step
    /// and leaves both parameters and state untouched.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        ensure_len(self.m.len(), params.len())?;
        ensure_len(self.m.len(), grads.len())?;
        if let Some((index, &value)) = grads.iter().enumerate().find(|(_, g)| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index, value });
        }
        self.step += 1;
        let t = self.step as i32;
        let correct1 = 1.0 - self.beta1.powi(t);
        let correct2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / correct1;
            let v_hat = self.v[i] / correct2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut adam = Adam::new(0.1, 2);
        let mut p = vec![1.0, -2.0];
        adam.step(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [3.0, -0.02] {
            let mut adam = Adam::new(0.01, 1);
            let mut p = vec![0.5];
            adam.step(&mut p, &[g]).unwrap();
            assert!((p[0] - (0.5 - 0.01 * f64::signum(g))).abs() < 1e-8);
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        // Adam moves about lr per step, so 2000 steps of 3e-4 cover 0.6 at most
        // and the approach slows as the second-moment average lags.
        let center = [0.1, -0.05, 0.15];
        let mut adam = Adam::new(3e-4, 3);
        let mut p = vec![0.0; 3];
        for _ in 0..2000 {
            let g: Vec<f64> = p.iter().zip(&center).map(|(x, c)| 2.0 * (x - c)).collect();
            adam.step(&mut p, &g).unwrap();
        }
        for (x, c) in p.iter().zip(&center) {
            assert!((x - c).abs() < 1e-4, "{x} vs {c}");
        }
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut adam = Adam::new(0.1, 2);
        let mut p = vec![1.0, 1.0];
        let err = adam.step(&mut p, &[0.5, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { index: 1, .. }));
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(adam.steps(), 0);
    }
}
