//! Moment-matching fits of a relaxation to a target pmf.

use std::time::Instant;

use igr::distributions::{gs_sample_log, igr_sample, GsParams, IgrParams};
use igr::estimate::{gs_reparam_estimate, reparam_estimate, Adam, TestObjective};
use igr::infinite::{sample_truncated, truncated_moment_match, GrowableIgrParams};
use igr::recovery::{DiscretePmf, SupportKind};
use igr::special::argmax;
use igr::transforms::{PlanarLayer, TransformKind, TransformSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{Model, RunConfig};
use crate::error::{CliError, Result};
use crate::report::{FitReport, Metrics, RelaxedMean};

/// Standard deviation of the random initial location (and logits).
pub const INIT_STD: f64 = 0.1;

/// Additive smoothing applied before the discrete KL.
pub const KL_EPS: f64 = 1e-12;

/// Stream of the seeded generator reserved for the final recovery draws.
const RECOVERY_STREAM: u64 = 1;

/// `‖pad(z) - p‖²` for a model over `K` categories: coordinates past the
/// model's support are compared against zero, those past the target's
/// against zero target mass.
struct PaddedDistance {
    head: Vec<f64>,
    tail_sq: f64,
}

impl PaddedDistance {
    fn new(target: &[f64], categories: usize) -> Self {
        let mut head = target.to_vec();
        head.resize(categories, 0.0);
        let tail_sq = target.iter().skip(categories).map(|p| p * p).sum();
        Self { head, tail_sq }
    }
}

impl TestObjective for PaddedDistance {
    fn eval(&self, z: &[f64]) -> f64 {
        z.iter().zip(&self.head).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + self.tail_sq
    }
    fn grad(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some(z.iter().zip(&self.head).map(|(a, b)| 2.0 * (a - b)).collect())
    }
}

/// Record of the optimization, shared by every model.
struct Trajectory {
    losses: Vec<f64>,
}

impl Trajectory {
    fn push(&mut self, step: usize, loss: f64) -> Result<()> {
        if !loss.is_finite() {
            return Err(CliError::Diverged { step, trajectory: std::mem::take(&mut self.losses) });
        }
        self.losses.push(loss);
        Ok(())
    }

    fn adam(&mut self, step: usize, adam: &mut Adam, params: &mut [f64], grads: &[f64]) -> Result<()> {
        adam.step(params, grads).map_err(|e| match e {
            igr::Error::NonFiniteGradient { .. } => {
                CliError::Diverged { step, trajectory: std::mem::take(&mut self.losses) }
            }
            other => other.into(),
        })
    }
}

/// Discretized categories and the running mean of the relaxed samples,
/// collected over the same recovery draws.
#[derive(Default)]
struct Recovery {
    counts: Vec<u64>,
    tail: u64,
    sums: Vec<f64>,
    tail_sum: f64,
    draws: usize,
}

impl Recovery {
    /// `relaxed` holds the sample's coordinates; `rest` is the mass beyond them.
    fn add(&mut self, category: Option<usize>, relaxed: &[f64], rest: f64) {
        self.draws += 1;
        if self.sums.len() < relaxed.len() {
            self.sums.resize(relaxed.len(), 0.0);
        }
        self.sums.iter_mut().zip(relaxed).for_each(|(s, z)| *s += z);
        self.tail_sum += rest;
        match category {
            Some(k) => {
                if self.counts.len() <= k {
                    self.counts.resize(k + 1, 0);
                }
                self.counts[k] += 1;
            }
            None => self.tail += 1,
        }
    }

    fn finish(mut self, categories: Option<usize>) -> Result<(DiscretePmf, DiscretePmf)> {
        let kind = match categories {
            Some(k) => {
                self.counts.resize(k, 0);
                self.sums.resize(k, 0.0);
                SupportKind::Finite
            }
            None => {
                self.counts.resize(self.sums.len().max(self.counts.len()), 0);
                SupportKind::TruncatedInfinite
            }
        };
        let discrete = DiscretePmf::from_counts(&self.counts, self.tail, kind)?;
        let n = self.draws as f64;
        let mut probs: Vec<f64> = self.sums.iter().map(|s| s / n).collect();
        let mut tail = self.tail_sum / n;
        // guard the sum-to-one check against accumulated rounding
        let total = probs.iter().sum::<f64>() + tail;
        probs.iter_mut().for_each(|p| *p /= total);
        tail /= total;
        let relaxed = match kind {
            SupportKind::Finite => DiscretePmf::finite(probs)?,
            SupportKind::TruncatedInfinite => DiscretePmf::truncated(probs, tail)?,
        };
        Ok((discrete, relaxed))
    }
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn model_categories(config: &RunConfig, target: &DiscretePmf) -> usize {
    config.k.unwrap_or(target.len()).max(2)
}

/// Runs one fit at `config.tau` and recovers the discrete pmf it ends on.
///
/// With `timing` the wall-clock duration is recorded; otherwise it is left
/// out so that reports are reproducible byte for byte.
pub fn fit(config: &RunConfig, timing: bool) -> Result<FitReport> {
    config.validate()?;
    let start = Instant::now();
    let target = config.target.build()?;
    let mut rng = seeded(config.seed, 0);
    let mut recovery_rng = seeded(config.seed, RECOVERY_STREAM);
    let mut traj = Trajectory { losses: Vec::with_capacity(config.steps) };

    let (recovered, relaxed) = match config.model {
        Model::Gs => fit_gs(config, &target, &mut traj, &mut rng, &mut recovery_rng)?,
        Model::IgrSb if config.is_truncated() => {
            fit_truncated(config, &target, &mut traj, &mut rng, &mut recovery_rng)?
        }
        Model::IgrI | Model::IgrSb | Model::IgrPlanar => {
            fit_finite(config, &target, &mut traj, &mut rng, &mut recovery_rng)?
        }
    };

    let metrics = Metrics {
        tv: target.total_variation(&recovered),
        kl: target.kl_smoothed(&recovered, KL_EPS),
        l2: target.l2(&recovered),
        final_loss: traj.losses.last().copied().unwrap_or(f64::NAN),
    };
    let relaxed_mean = RelaxedMean {
        tv: target.total_variation(&relaxed),
        kl: target.kl_smoothed(&relaxed, KL_EPS),
        l2: target.l2(&relaxed),
        probs: relaxed.probs,
        tail_mass: relaxed.tail_mass,
    };
    let wall_seconds = timing.then(|| start.elapsed().as_secs_f64());
    Ok(FitReport::new(config.clone(), metrics, &recovered, &target, relaxed_mean, traj.losses, wall_seconds))
}

fn init_normal(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// Flat layout `[μ, ξ, (w, u, b) per planar layer]` with `σ = exp(ξ)`.
struct FiniteState {
    dim: usize,
    flat: Vec<f64>,
    depth: usize,
}

impl FiniteState {
    fn params(&self, config: &RunConfig, kind: TransformKind) -> Result<IgrParams> {
        let n = self.dim;
        let mu = self.flat[..n].to_vec();
        let sigma = self.flat[n..2 * n].iter().map(|x| x.exp()).collect();
        let spec = match kind {
            TransformKind::PlanarSoftmaxPp => {
                let layers = self.flat[2 * n..]
                    .chunks(2 * n + 1)
                    .take(self.depth)
                    .map(|c| PlanarLayer { w: c[..n].to_vec(), u: c[n..2 * n].to_vec(), b: c[2 * n] })
                    .collect();
                TransformSpec::planar(config.delta, layers)?
            }
            other => TransformSpec::new(other, config.delta)?,
        };
        Ok(IgrParams::new(mu, sigma, config.tau, spec)?)
    }
}

fn fit_finite(
    config: &RunConfig,
    target: &DiscretePmf,
    traj: &mut Trajectory,
    rng: &mut ChaCha8Rng,
    recovery_rng: &mut ChaCha8Rng,
) -> Result<(DiscretePmf, DiscretePmf)> {
    let categories = model_categories(config, target);
    let dim = categories - 1;
    let kind = match config.model {
        Model::IgrI => TransformKind::SoftmaxPp,
        Model::IgrSb => TransformKind::SbSoftmaxPp,
        _ => TransformKind::PlanarSoftmaxPp,
    };
    let mut flat = init_normal(dim, rng);
    flat.resize(2 * dim, 0.0);
    let mut depth = 0;
    if kind == TransformKind::PlanarSoftmaxPp {
        depth = config.planar_depth;
        let spec = TransformSpec::planar_random(config.delta, dim, depth, rng)?;
        for layer in spec.flow_params.into_iter().flatten() {
            flat.extend(layer.w);
            flat.extend(layer.u);
            flat.push(layer.b);
        }
    }
    let mut state = FiniteState { dim, flat, depth };
    let objective = PaddedDistance::new(&target.probs, categories);
    let mut adam = Adam::new(config.lr, state.flat.len());

    for step in 0..config.steps {
        let params = state.params(config, kind)?;
        let est = reparam_estimate(&params, &objective, config.batch, rng)?;
        traj.push(step, est.value)?;
        let mut grads = est.grad.mu.clone();
        grads.extend(est.grad.sigma.iter().zip(params.sigma()).map(|(g, s)| g * s));
        for layer in est.grad.flow.iter().flatten() {
            grads.extend(&layer.w);
            grads.extend(&layer.u);
            grads.push(layer.b);
        }
        traj.adam(step, &mut adam, &mut state.flat, &grads)?;
    }
    let params = state.params(config, kind)?;
    let mut rec = Recovery::default();
    for _ in 0..config.recovery_samples {
        let trace = igr_sample(&params, recovery_rng)?;
        rec.add(Some(params.spec().discretize(&trace.z)), &trace.z.completed(), 0.0);
    }
    rec.finish(Some(categories))
}

fn fit_gs(
    config: &RunConfig,
    target: &DiscretePmf,
    traj: &mut Trajectory,
    rng: &mut ChaCha8Rng,
    recovery_rng: &mut ChaCha8Rng,
) -> Result<(DiscretePmf, DiscretePmf)> {
    let categories = model_categories(config, target);
    let objective = PaddedDistance::new(&target.probs, categories);
    let mut logits = init_normal(categories, rng);
    let mut adam = Adam::new(config.lr, categories);
    for step in 0..config.steps {
        let (value, grads) = gs_reparam_estimate(&logits, config.tau, &objective, config.batch, rng)?;
        traj.push(step, value)?;
        traj.adam(step, &mut adam, &mut logits, &grads)?;
    }
    // argmax of the sampled vector, the counterpart of discretize
    let params = GsParams::from_logits(&logits, config.tau)?;
    let mut rec = Recovery::default();
    for _ in 0..config.recovery_samples {
        let log_z = gs_sample_log(&params, recovery_rng);
        let z: Vec<f64> = log_z.iter().map(|l| l.exp()).collect();
        rec.add(Some(argmax(&log_z)), &z, 0.0);
    }
    rec.finish(Some(categories))
}

fn fit_truncated(
    config: &RunConfig,
    target: &DiscretePmf,
    traj: &mut Trajectory,
    rng: &mut ChaCha8Rng,
    recovery_rng: &mut ChaCha8Rng,
) -> Result<(DiscretePmf, DiscretePmf)> {
    let spec = TransformSpec::new(TransformKind::SbSoftmaxPp, config.delta)?;
    let mut params = GrowableIgrParams::new(config.tau, config.rho, spec)?;
    let mut mu_adam = Adam::new(config.lr, 0);
    let mut xi_adam = Adam::new(config.lr, 0);
    let mut xi: Vec<f64> = Vec::new();
    for step in 0..config.steps {
        let est = truncated_moment_match(&params, &target.probs, config.batch, rng)?;
        traj.push(step, est.loss)?;
        let len = est.mu.len().max(params.high_water());
        if len > params.high_water() {
            params.materialize(len);
            xi.extend(params.sigma()[xi.len()..].iter().map(|s| s.ln()));
            mu_adam.resize(len);
            xi_adam.resize(len);
        }
        let mut g_mu = est.mu;
        g_mu.resize(len, 0.0);
        let mut g_xi: Vec<f64> = est.sigma.iter().zip(params.sigma()).map(|(g, s)| g * s).collect();
        g_xi.resize(len, 0.0);
        let (mu, sigma) = params.prefix_mut();
        traj.adam(step, &mut mu_adam, mu, &g_mu)?;
        traj.adam(step, &mut xi_adam, &mut xi, &g_xi)?;
        sigma.iter_mut().zip(&xi).for_each(|(s, x)| *s = x.exp());
    }
    // a draw landing on its own remainder counts towards the tail
    let mut rec = Recovery::default();
    for _ in 0..config.recovery_samples {
        let draw = sample_truncated(&params, recovery_rng)?;
        let category = params.spec().discretize(&draw.trace.z);
        let z = &draw.trace.z;
        rec.add((category < draw.k_used).then_some(category), z.coords(), z.remainder());
    }
    rec.finish(None)
}
