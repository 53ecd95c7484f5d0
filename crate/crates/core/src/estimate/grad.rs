use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};

use super::objective::{objective_gradient, SquaredDistance, TestObjective};
use crate::distributions::{gumbel_noise, igr_sample, IgrParams};
use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::recovery::{recover_pmf_quad, recover_pmf_quad_pullback, DiscretePmf};
use crate::special::log_sum_exp;
use crate::transforms::{self, PlanarGrad};

/// Gradient with respect to IGR parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Planar-layer gradients, for planar specs.
    pub flow: Option<Vec<PlanarGrad>>,
}

impl ParamGrad {
    fn zeros(params: &IgrParams) -> Self {
        let n = params.dim();
        let flow = params.spec().flow_params.as_ref().map(|layers| {
            layers.iter().map(|l| PlanarGrad { w: vec![0.0; l.dim()], u: vec![0.0; l.dim()], b: 0.0 }).collect()
        });
        Self { mu: vec![0.0; n], sigma: vec![0.0; n], flow }
    }

    fn scale(&mut self, s: f64) {
        self.mu.iter_mut().chain(self.sigma.iter_mut()).for_each(|g| *g *= s);
        for layer in self.flow.iter_mut().flatten() {
            layer.w.iter_mut().chain(layer.u.iter_mut()).for_each(|g| *g *= s);
            layer.b *= s;
        }
    }

    /// `(μ, σ)` gradients concatenated.
    pub fn flat(&self) -> Vec<f64> {
        self.mu.iter().chain(&self.sigma).copied().collect()
    }
}

/// Mean objective value and reparameterization gradient over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub grad: ParamGrad,
}

/// `(1/B) Σ_b ∇_{μ,σ} f(g(μ + σ ε_b, τ))`, chaining the objective's gradient
/// through the transform pullback. Planar specs also get flow-parameter
/// gradients.
pub fn reparam_estimate<O, R>(params: &IgrParams, obj: &O, batch: usize, rng: &mut R) -> Result<Estimate>
where
    O: TestObjective + ?Sized,
    R: Rng + ?Sized,
{
    if batch == 0 {
        return Err(Error::InvalidInput("batch must be at least 1".into()));
    }
    let spec = params.spec();
    let tau = params.tau();
    let mut grad = ParamGrad::zeros(params);
    let mut value = 0.0;
    for _ in 0..batch {
        let trace = igr_sample(params, rng)?;
        let completed = trace.z.completed();
        value += obj.eval(&completed);
        let dz = objective_gradient(obj, &completed);
        let dy = transforms::pullback_completed(spec, &trace.y, tau, &dz)?;
        for (k, (d, e)) in dy.iter().zip(&trace.epsilon).enumerate() {
            grad.mu[k] += d;
            grad.sigma[k] += d * e;
        }
        if let Some(flow) = grad.flow.as_mut() {
            let last = dz[trace.y.len()];
            let reduced: Vec<f64> = dz[..trace.y.len()].iter().map(|c| c - last).collect();
            let layer_grads = transforms::flow_param_pullback(spec, &trace.y, tau, &reduced)?;
            for (acc, g) in flow.iter_mut().zip(layer_grads) {
                acc.w.iter_mut().zip(&g.w).for_each(|(a, b)| *a += b);
                acc.u.iter_mut().zip(&g.u).for_each(|(a, b)| *a += b);
                acc.b += g.b;
            }
        }
    }
    let inv = 1.0 / batch as f64;
    grad.scale(inv);
    Ok(Estimate { value: value * inv, grad })
}

/// Reparameterization gradient with respect to `(μ, σ)`.
pub fn reparam_grad<O, R>(params: &IgrParams, obj: &O, batch: usize, rng: &mut R) -> Result<ParamGrad>
where
    O: TestObjective + ?Sized,
    R: Rng + ?Sized,
{
    Ok(reparam_estimate(params, obj, batch, rng)?.grad)
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let norm = log_sum_exp(logits);
    logits.iter().map(|l| (l - norm).exp()).collect()
}

fn discrete_values<O: TestObjective + ?Sized>(obj: &O, categories: usize) -> Result<Vec<f64>> {
    (0..categories)
        .map(|k| {
            obj.discrete_eval(k).ok_or_else(|| Error::Contract("score-function estimator needs discrete_eval".into()))
        })
        .collect()
}

/// Score-function estimate `(1/B) Σ_b f(k_b) ∇ log p(k_b)` for a categorical
/// distribution given by logits.
pub fn score_grad<O, R>(logits: &[f64], obj: &O, batch: usize, rng: &mut R) -> Result<Vec<f64>>
where
    O: TestObjective + ?Sized,
    R: Rng + ?Sized,
{
    ensure_finite("logits", logits)?;
    if batch == 0 {
        return Err(Error::InvalidInput("batch must be at least 1".into()));
    }
    let values = discrete_values(obj, logits.len())?;
    let probs = softmax(logits);
    let index = WeightedIndex::new(&probs).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut grad = vec![0.0; logits.len()];
    for _ in 0..batch {
        let k = index.sample(rng);
        for (j, g) in grad.iter_mut().enumerate() {
            let indicator = if j == k { 1.0 } else { 0.0 };
            *g += values[k] * (indicator - probs[j]);
        }
    }
    grad.iter_mut().for_each(|g| *g /= batch as f64);
    Ok(grad)
}

/// Score-function estimate with respect to `(μ, σ)` for the discrete
/// distribution that a softmax++ relaxation recovers at zero temperature,
/// whose probabilities come from quadrature.
pub fn score_grad_quad<O, R>(mu: &[f64], sigma: &[f64], obj: &O, batch: usize, rng: &mut R) -> Result<ParamGrad>
where
    O: TestObjective + ?Sized,
    R: Rng + ?Sized,
{
    if batch == 0 {
        return Err(Error::InvalidInput("batch must be at least 1".into()));
    }
    let categories = mu.len() + 1;
    let values = discrete_values(obj, categories)?;
    let probs = recover_pmf_quad(mu, sigma)?.pmf.probs;
    let index = WeightedIndex::new(&probs).map_err(|e| Error::InvalidInput(e.to_string()))?;
    // ∇ log P_k for every category, computed once.
    let score: Vec<(Vec<f64>, Vec<f64>)> = (0..categories)
        .map(|k| {
            let mut e = vec![0.0; categories];
            e[k] = 1.0 / probs[k].max(f64::MIN_POSITIVE);
            recover_pmf_quad_pullback(mu, sigma, &e)
        })
        .collect::<Result<_>>()?;
    let mut grad = ParamGrad { mu: vec![0.0; mu.len()], sigma: vec![0.0; mu.len()], flow: None };
    for _ in 0..batch {
        let k = index.sample(rng);
        let (gm, gs) = &score[k];
        for j in 0..mu.len() {
            grad.mu[j] += values[k] * gm[j];
            grad.sigma[j] += values[k] * gs[j];
        }
    }
    grad.scale(1.0 / batch as f64);
    Ok(grad)
}

fn check_target(params: &IgrParams, target: &DiscretePmf) -> Result<()> {
    ensure_len(params.categories(), target.len())
}

/// `(1/B) Σ_b ‖completed(z_b) - p₀‖²`.
pub fn moment_match_loss<R: Rng + ?Sized>(
    params: &IgrParams,
    target: &DiscretePmf,
    batch: usize,
    rng: &mut R,
) -> Result<f64> {
    check_target(params, target)?;
    if batch == 0 {
        return Err(Error::InvalidInput("batch must be at least 1".into()));
    }
    let obj = SquaredDistance { target: target.probs.clone() };
    let mut total = 0.0;
    for _ in 0..batch {
        total += obj.eval(&igr_sample(params, rng)?.z.completed());
    }
    Ok(total / batch as f64)
}

/// Moment-matching loss together with its reparameterization gradient.
pub fn moment_match_grad<R: Rng + ?Sized>(
    params: &IgrParams,
    target: &DiscretePmf,
    batch: usize,
    rng: &mut R,
) -> Result<Estimate> {
    check_target(params, target)?;
    reparam_estimate(params, &SquaredDistance { target: target.probs.clone() }, batch, rng)
}

/// Mean objective and gradient with respect to the logits of a
/// Gumbel-Softmax relaxation, `z = softmax((g + θ) / τ)`.
pub fn gs_reparam_estimate<O, R>(
    logits: &[f64],
    tau: f64,
    obj: &O,
    batch: usize,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)>
where
    O: TestObjective + ?Sized,
    R: Rng + ?Sized,
{
    ensure_finite("logits", logits)?;
    if batch == 0 {
        return Err(Error::InvalidInput("batch must be at least 1".into()));
    }
    let mut grad = vec![0.0; logits.len()];
    let mut value = 0.0;
    for _ in 0..batch {
        let scaled: Vec<f64> = logits.iter().map(|l| (gumbel_noise(rng) + l) / tau).collect();
        let z = softmax(&scaled);
        value += obj.eval(&z);
        let c = objective_gradient(obj, &z);
        let dot: f64 = z.iter().zip(&c).map(|(a, b)| a * b).sum();
        for k in 0..z.len() {
            grad[k] += z[k] * (c[k] - dot) / tau;
        }
    }
    let inv = 1.0 / batch as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    Ok((value * inv, grad))
}
