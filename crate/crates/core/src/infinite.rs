//! Relaxations over countably infinite supports.
//!
//! Stick-breaking maps an unbounded sequence of Gaussians onto the infinite
//! simplex. A draw stops at the first index whose cumulative mass exceeds the
//! precision `ρ`, so only a random-length prefix of the parameters is read and
//! only that prefix receives gradient.
//!
//! Sampling borrows [`GrowableIgrParams`] immutably and reads coordinates past
//! the materialized prefix from the default initializer, so any number of
//! workers may sample from a shared snapshot with their own random streams.
//! Growing the prefix or applying gradients requires exclusive access.

use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distributions::SampleTrace;
use crate::error::{ensure_positive, Error, Result};
use crate::recovery::{DiscretePmf, SupportKind};
use crate::special::sigmoid;
use crate::transforms::{self, TransformKind, TransformSpec, UNIT_CLAMP};

pub const DEFAULT_MU: f64 = 0.0;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_CAP: usize = 10_000;

/// IGR parameters over an unbounded number of coordinates, of which a prefix
/// (up to the high-water mark) is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GrowableRepr", into = "GrowableRepr")]
pub struct GrowableIgrParams {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    tau: f64,
    rho: f64,
    spec: TransformSpec,
    cap: usize,
}

#[derive(Serialize, Deserialize)]
struct GrowableRepr {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    rho: f64,
    tau: f64,
    high_water: usize,
    kind: TransformKind,
    delta: f64,
    #[serde(default = "default_cap")]
    cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_CAP
}

impl TryFrom<GrowableRepr> for GrowableIgrParams {
    type Error = Error;
    fn try_from(r: GrowableRepr) -> Result<Self> {
        if r.high_water != r.mu.len() {
            return Err(Error::InvalidInput(format!(
                "high_water {} does not match {} stored coordinates",
                r.high_water,
                r.mu.len()
            )));
        }
        let spec = TransformSpec::new(r.kind, r.delta)?;
        Self::with_prefix(r.mu, r.sigma, r.tau, r.rho, spec)?.with_cap(r.cap)
    }
}

impl From<GrowableIgrParams> for GrowableRepr {
    fn from(p: GrowableIgrParams) -> Self {
        GrowableRepr {
            high_water: p.mu.len(),
            mu: p.mu,
            sigma: p.sigma,
            rho: p.rho,
            tau: p.tau,
            kind: p.spec.kind,
            delta: p.spec.delta,
            cap: p.cap,
        }
    }
}

impl GrowableIgrParams {
    /// Empty prefix; `spec` must be `SbSoftmaxPp` or `SbIdentity`.
    pub fn new(tau: f64, rho: f64, spec: TransformSpec) -> Result<Self> {
        Self::with_prefix(Vec::new(), Vec::new(), tau, rho, spec)
    }

    pub fn with_prefix(mu: Vec<f64>, sigma: Vec<f64>, tau: f64, rho: f64, spec: TransformSpec) -> Result<Self> {
        ensure_positive("tau", tau)?;
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidInput(format!("rho must lie in (0, 1), got {rho}")));
        }
        if !matches!(spec.kind, TransformKind::SbSoftmaxPp | TransformKind::SbIdentity) {
            return Err(Error::Contract(format!("{:?} cannot be truncated; use a stick-breaking kind", spec.kind)));
        }
        spec.validate(1)?;
        crate::error::ensure_len(mu.len(), sigma.len())?;
        crate::error::ensure_finite("mu", &mu)?;
        if let Some((i, s)) = sigma.iter().enumerate().find(|(_, s)| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput(format!("sigma[{i}] = {s} must be positive")));
        }
        Ok(Self { mu, sigma, tau, rho, spec, cap: DEFAULT_CAP })
    }

    /// Replaces the runaway-truncation cap.
    pub fn with_cap(mut self, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::InvalidInput("cap must be positive".into()));
        }
        self.cap = cap;
        Ok(self)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn spec(&self) -> &TransformSpec {
        &self.spec
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Number of stored coordinates.
    pub fn high_water(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Mutable access to the stored prefix, for optimizers.
    pub fn prefix_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.mu, &mut self.sigma)
    }

    /// `(μ_k, σ_k)`, from the default initializer past the high-water mark.
    pub fn coordinate(&self, k: usize) -> (f64, f64) {
        match (self.mu.get(k), self.sigma.get(k)) {
            (Some(&m), Some(&s)) => (m, s),
            _ => (DEFAULT_MU, DEFAULT_SIGMA),
        }
    }

    /// Stores default-initialized coordinates up to `len`; never shrinks.
    pub fn materialize(&mut self, len: usize) {
        if len > self.mu.len() {
            self.mu.resize(len, DEFAULT_MU);
            self.sigma.resize(len, DEFAULT_SIGMA);
        }
    }
}

/// A truncated draw: the first `k_used` coordinates and their trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedTrace {
    pub k_used: usize,
    pub trace: SampleTrace,
}

/// Smallest `K` (1-based) with `Σ_{k≤K} c_k > ρ`, given cumulative masses.
pub fn stopping_index(cumulative: &[f64], rho: f64) -> Option<usize> {
    cumulative.iter().position(|&c| c > rho).map(|i| i + 1)
}

/// Running sum in index order; the stopping rule and its checks share it.
pub fn prefix_mass(z: &[f64]) -> f64 {
    z.iter().sum()
}

/// Draws noise coordinate by coordinate, extends the stick-breaking chain and
/// stops at the smallest `K` with `Σ_{k<K} z_k ≤ ρ < Σ_{k≤K} z_k`.
///
/// For `SbSoftmaxPp` the softmax++ normalizer covers the first `K` sticks, so
/// the prefix mass is `S_K / (S_K + δ)` with `S_K = Σ_{k≤K} exp(w_k/τ)`.
pub fn sample_truncated<R: Rng + ?Sized>(params: &GrowableIgrParams, rng: &mut R) -> Result<TruncatedTrace> {
    let tau = params.tau;
    let rho = params.rho;
    let delta = params.spec.delta;
    let mut epsilon = Vec::new();
    let mut y = Vec::new();
    let mut remaining = 1.0;
    let mut stick_mass = 0.0;
    // softmax++ normalizer accumulated with a running max-shift
    let mut shift = 0.0f64;
    let mut scaled_sum = 0.0f64;

    loop {
        let k = y.len();
        if k >= params.cap {
            return Err(Error::RunawayTruncation { cap: params.cap });
        }
        let (m, s) = params.coordinate(k);
        let e: f64 = StandardNormal.sample(rng);
        epsilon.push(e);
        y.push(m + s * e);

        let u = sigmoid(y[k]).clamp(UNIT_CLAMP, 1.0 - UNIT_CLAMP);
        let w = (u * remaining).max(f64::MIN_POSITIVE);
        remaining *= 1.0 - u;

        let candidate = match params.spec.kind {
            TransformKind::SbIdentity => {
                stick_mass += w;
                stick_mass > rho
            }
            _ => {
                let a = w / tau;
                if a > shift {
                    scaled_sum *= (shift - a).exp();
                    shift = a;
                }
                scaled_sum += (a - shift).exp();
                let mass = scaled_sum / (scaled_sum + delta * (-shift).exp());
                mass > rho - 1e-12
            }
        };
        if !candidate {
            continue;
        }
        let out = transforms::forward(&params.spec, &y, tau)?;
        let coords = out.z.coords();
        let total = prefix_mass(coords);
        if total > rho {
            debug_assert!(prefix_mass(&coords[..k]) <= rho);
            let trace = SampleTrace { epsilon, y, w: out.w, z: out.z, log_det_jac: out.log_det_jac };
            return Ok(TruncatedTrace { k_used: k + 1, trace });
        }
    }
}

/// Parameter indices that receive gradient from this draw.
pub fn gradient_coords(trace: &TruncatedTrace) -> Range<usize> {
    0..trace.k_used
}

/// Moment-matching loss and gradient over truncated draws.
///
/// Gradients are sized to the longest draw in the batch; coordinate `k` only
/// accumulates from draws with `k_used > k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedEstimate {
    pub loss: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub mean_k_used: f64,
}

/// Per-draw loss `Σ_{k<K} (z_k - p_k)² + Σ_{k≥K} p_k²`: the unrepresented
/// tail of the draw (mass below `1 - ρ`) is left out of the comparison.
pub fn truncated_moment_match<R: Rng + ?Sized>(
    params: &GrowableIgrParams,
    target: &[f64],
    batch: usize,
    rng: &mut R,
) -> Result<TruncatedEstimate> {
    if batch == 0 {
        return Err(Error::InvalidInput("batch must be at least 1".into()));
    }
    let target_sq: Vec<f64> = {
        // suffix sums of p_k² for the untouched tail
        let mut acc = 0.0;
        let mut out: Vec<f64> = target
            .iter()
            .rev()
            .map(|p| {
                acc += p * p;
                acc
            })
            .collect();
        out.reverse();
        out.push(0.0);
        out
    };
    let mut mu = Vec::new();
    let mut sigma = Vec::new();
    let mut loss = 0.0;
    let mut used = 0usize;
    for _ in 0..batch {
        let draw = sample_truncated(params, rng)?;
        let k_used = draw.k_used;
        used += k_used;
        let z = draw.trace.z.coords();
        let p = |k: usize| target.get(k).copied().unwrap_or(0.0);
        loss += z.iter().enumerate().map(|(k, zk)| (zk - p(k)).powi(2)).sum::<f64>();
        loss += target_sq[k_used.min(target.len())];
        let cotangent: Vec<f64> = z.iter().enumerate().map(|(k, zk)| 2.0 * (zk - p(k))).collect();
        let dy = transforms::pullback(&params.spec, &draw.trace.y, params.tau, &cotangent)?;
        if mu.len() < k_used {
            mu.resize(k_used, 0.0);
            sigma.resize(k_used, 0.0);
        }
        for k in gradient_coords(&draw) {
            mu[k] += dy[k];
            sigma[k] += dy[k] * draw.trace.epsilon[k];
        }
    }
    let inv = 1.0 / batch as f64;
    mu.iter_mut().chain(sigma.iter_mut()).for_each(|g| *g *= inv);
    Ok(TruncatedEstimate { loss: loss * inv, mu, sigma, mean_k_used: used as f64 * inv })
}

/// Monte-Carlo recovered pmf. Each draw contributes its discretized category;
/// a draw landing on its remainder coordinate counts towards `tail_mass`.
pub fn recover_pmf_truncated<R: Rng + ?Sized>(
    params: &GrowableIgrParams,
    n: usize,
    rng: &mut R,
) -> Result<DiscretePmf> {
    if n == 0 {
        return Err(Error::InvalidInput("recovery needs at least one draw".into()));
    }
    let mut counts: Vec<u64> = Vec::new();
    let mut tail = 0u64;
    for _ in 0..n {
        let draw = sample_truncated(params, rng)?;
        if counts.len() < draw.k_used {
            counts.resize(draw.k_used, 0);
        }
        let category = params.spec.discretize(&draw.trace.z);
        if category < draw.k_used {
            counts[category] += 1;
        } else {
            tail += 1;
        }
    }
    DiscretePmf::from_counts(&counts, tail, SupportKind::TruncatedInfinite)
}
