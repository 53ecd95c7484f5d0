//! Recovering the discrete distribution that a relaxation approximates.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{igr_sample, IgrParams, SampleTrace};
use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::simplex::SimplexInterior;
use crate::special::{argmax, normal_cdf, normal_pdf, sigmoid};
use crate::transforms::{TransformKind, TransformSpec};

/// Number of Gauss–Legendre nodes per panel.
pub const QUAD_NODES: usize = 64;
/// Equal-width panels, each integrated with `QUAD_NODES` points.
pub const QUAD_PANELS: usize = 4;
/// Integration range `[0, max μ + QUAD_SPAN_SIGMAS · max σ]`.
pub const QUAD_SPAN_SIGMAS: f64 = 10.0;
/// Raw quadrature sums further than this from one are renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-6;

const PMF_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    #[default]
    Finite,
    TruncatedInfinite,
}

/// A probability vector over categories `0..len`, plus the mass assigned
/// beyond the last category when the support is a truncated infinite one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePmf {
    pub probs: Vec<f64>,
    #[serde(default)]
    pub tail_mass: f64,
    #[serde(default)]
    pub support_kind: SupportKind,
}

impl DiscretePmf {
    pub fn finite(probs: Vec<f64>) -> Result<Self> {
        Self::validated(probs, 0.0, SupportKind::Finite)
    }

    pub fn truncated(probs: Vec<f64>, tail_mass: f64) -> Result<Self> {
        Self::validated(probs, tail_mass, SupportKind::TruncatedInfinite)
    }

    fn validated(probs: Vec<f64>, tail_mass: f64, support_kind: SupportKind) -> Result<Self> {
        ensure_finite("probs", &probs)?;
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| **p < 0.0) {
            return Err(Error::InvalidInput(format!("probs[{i}] = {p} is negative")));
        }
        if tail_mass.is_nan() || tail_mass < 0.0 {
            return Err(Error::InvalidInput(format!("tail mass {tail_mass} is negative")));
        }
        let total = probs.iter().sum::<f64>() + tail_mass;
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs, tail_mass, support_kind })
    }

    /// Normalized empirical frequencies; `tail` counts draws beyond the listed categories.
    pub fn from_counts(counts: &[u64], tail: u64, support_kind: SupportKind) -> Result<Self> {
        let total = counts.iter().sum::<u64>() + tail;
        if total == 0 {
            return Err(Error::InvalidInput("no draws to normalize".into()));
        }
        let n = total as f64;
        let probs = counts.iter().map(|&c| c as f64 / n).collect();
        Self::validated(probs, tail as f64 / n, support_kind)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probabilities padded with zeros to `len`, followed by the tail mass.
    fn aligned(&self, len: usize) -> Vec<f64> {
        let mut out = self.probs.clone();
        out.resize(len, 0.0);
        out.push(self.tail_mass);
        out
    }

    fn paired(&self, other: &Self) -> (Vec<f64>, Vec<f64>) {
        let len = self.len().max(other.len());
        (self.aligned(len), other.aligned(len))
    }

    /// `½ Σ |p - q|`, with the tail masses compared as one extra bin.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let (p, q) = self.paired(other);
        0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    /// `‖p - q‖₂` over the aligned bins.
    pub fn l2(&self, other: &Self) -> f64 {
        let (p, q) = self.paired(other);
        p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }

    /// `Σ p log(p/q)` after adding `eps` to every bin of both and renormalizing.
    pub fn kl_smoothed(&self, other: &Self, eps: f64) -> f64 {
        let (p, q) = self.paired(other);
        let smooth = |v: Vec<f64>| {
            let total: f64 = v.iter().map(|x| x + eps).sum();
            v.into_iter().map(move |x| (x + eps) / total)
        };
        smooth(p).zip(smooth(q)).map(|(a, b)| if a > 0.0 { a * (a / b).ln() } else { 0.0 }).sum::<f64>().max(0.0)
    }

    pub fn mode(&self) -> usize {
        argmax(&self.probs)
    }
}

/// Zero-temperature limit of softmax++: the argmax of `y` if its maximum is
/// positive, otherwise the remainder category `y.len()`. Categories are
/// zero-based and ties go to the lowest index.
pub fn hard_limit(y: &[f64]) -> usize {
    let k = argmax(y);
    if y[k] > 0.0 {
        k
    } else {
        y.len()
    }
}

/// [`hard_limit`] of the softmax++ pre-image of `z`, computed without the
/// inverse: `y_k > 0` exactly when `z_k > remainder / δ`.
pub fn discretize(z: &SimplexInterior, delta: f64) -> usize {
    let k = argmax(z.coords());
    if z.coords()[k] > z.remainder() / delta {
        k
    } else {
        z.dim()
    }
}

/// Straight-through pair: the one-hot discretization of a draw and the
/// continuous completed vector that gradients are routed through (see
/// [`transforms::pullback_completed`]).
pub fn straight_through(spec: &TransformSpec, trace: &SampleTrace) -> (Vec<f64>, Vec<f64>) {
    let surrogate = trace.z.completed();
    let mut hard = vec![0.0; surrogate.len()];
    hard[spec.discretize(&trace.z)] = 1.0;
    (hard, surrogate)
}

/// Monte-Carlo recovered pmf and per-category standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McRecovery {
    pub pmf: DiscretePmf,
    pub std_errors: Vec<f64>,
}

/// Empirical frequencies of the discretized category over `n` draws.
pub fn recover_pmf_mc<R: Rng + ?Sized>(params: &IgrParams, n: usize, rng: &mut R) -> Result<McRecovery> {
    if n == 0 {
        return Err(Error::InvalidInput("recovery needs at least one draw".into()));
    }
    let mut counts = vec![0u64; params.categories()];
    for _ in 0..n {
        let trace = igr_sample(params, rng)?;
        counts[params.spec().discretize(&trace.z)] += 1;
    }
    let pmf = DiscretePmf::from_counts(&counts, 0, SupportKind::Finite)?;
    let std_errors = pmf.probs.iter().map(|p| (p * (1.0 - p) / n as f64).sqrt()).collect();
    Ok(McRecovery { pmf, std_errors })
}

fn legendre_nodes() -> &'static [(f64, f64)] {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(QUAD_NODES.try_into().expect("non-zero"))).as_node_weight_pairs()
}

/// Quadrature-based recovered pmf.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRecovery {
    pub pmf: DiscretePmf,
    /// Sum of the probabilities before any renormalization.
    pub raw_sum: f64,
    pub renormalized: bool,
}

fn check_gaussian(mu: &[f64], sigma: &[f64]) -> Result<()> {
    ensure_len(mu.len(), sigma.len())?;
    ensure_finite("mu", mu)?;
    if mu.is_empty() {
        return Err(Error::InvalidInput("need at least one coordinate".into()));
    }
    if let Some((i, s)) = sigma.iter().enumerate().find(|(_, s)| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidInput(format!("sigma[{i}] = {s} must be positive")));
    }
    Ok(())
}

/// Nodes and weights of `QUAD_PANELS` Gauss–Legendre panels covering
/// `[0, max μ + 10 max σ]`.
fn mapped_nodes(mu: &[f64], sigma: &[f64]) -> Vec<(f64, f64)> {
    let top = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        + QUAD_SPAN_SIGMAS * sigma.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return Vec::new();
    }
    let width = top / QUAD_PANELS as f64;
    let half = 0.5 * width;
    (0..QUAD_PANELS)
        .flat_map(|p| {
            let left = p as f64 * width;
            legendre_nodes().iter().map(move |&(x, w)| (left + half * (x + 1.0), half * w))
        })
        .collect()
}

/// Raw (unnormalized) probabilities for categories `0..K`.
fn raw_probs(mu: &[f64], sigma: &[f64]) -> Vec<f64> {
    let n = mu.len();
    let mut probs = vec![0.0; n + 1];
    for (t, weight) in mapped_nodes(mu, sigma) {
        let std: Vec<f64> = (0..n).map(|j| (t - mu[j]) / sigma[j]).collect();
        let cdf: Vec<f64> = std.iter().map(|&s| normal_cdf(s)).collect();
        for k in 0..n {
            let others: f64 = (0..n).filter(|&j| j != k).map(|j| cdf[j]).product();
            probs[k] += weight * normal_pdf(std[k]) / sigma[k] * others;
        }
    }
    probs[n] = (0..n).map(|j| normal_cdf(-mu[j] / sigma[j])).product();
    probs
}

/// Distribution of the zero-temperature category when `y_k ~ N(μ_k, σ_k²)`
/// feeds softmax++:
///
/// `P(k) = ∫₀^∞ (1/σ_k) φ((t-μ_k)/σ_k) Π_{j≠k} Φ((t-μ_j)/σ_j) dt` for `k < K-1`,
/// and `P(K-1) = Π_j Φ(-μ_j/σ_j)`.
///
/// The integrals use composite 64-point Gauss–Legendre on `[0, max μ + 10 max σ]`.
pub fn recover_pmf_quad(mu: &[f64], sigma: &[f64]) -> Result<QuadRecovery> {
    check_gaussian(mu, sigma)?;
    let raw = raw_probs(mu, sigma);
    let raw_sum: f64 = raw.iter().sum();
    let renormalized = (raw_sum - 1.0).abs() > RENORMALIZE_TOL;
    let probs = if renormalized { raw.iter().map(|p| p / raw_sum).collect() } else { raw };
    let pmf = DiscretePmf { probs, tail_mass: 0.0, support_kind: SupportKind::Finite };
    Ok(QuadRecovery { pmf, raw_sum, renormalized })
}

/// Quadrature recovery for IGR parameters; only defined for the softmax++ map.
pub fn recover_pmf_quad_params(params: &IgrParams) -> Result<QuadRecovery> {
    if params.spec().kind != TransformKind::SoftmaxPp {
        return Err(Error::Contract("quadrature recovery covers the softmax++ map only".into()));
    }
    recover_pmf_quad(params.mu(), params.sigma())
}

/// Gradient of `cᵀ P(μ, σ)` with respect to `(μ, σ)`, differentiating the
/// integrand at fixed nodes. Renormalization, when it applies, is included.
pub fn recover_pmf_quad_pullback(mu: &[f64], sigma: &[f64], cotangent: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_gaussian(mu, sigma)?;
    let n = mu.len();
    ensure_len(n + 1, cotangent.len())?;
    let raw = raw_probs(mu, sigma);
    let raw_sum: f64 = raw.iter().sum();
    let c: Vec<f64> = if (raw_sum - 1.0).abs() > RENORMALIZE_TOL {
        let mean: f64 = cotangent.iter().zip(&raw).map(|(c, r)| c * r).sum::<f64>() / raw_sum;
        cotangent.iter().map(|ck| (ck - mean) / raw_sum).collect()
    } else {
        cotangent.to_vec()
    };

    let mut grad_mu = vec![0.0; n];
    let mut grad_sigma = vec![0.0; n];
    for (t, weight) in mapped_nodes(mu, sigma) {
        let std: Vec<f64> = (0..n).map(|j| (t - mu[j]) / sigma[j]).collect();
        let pdf: Vec<f64> = std.iter().map(|&s| normal_pdf(s)).collect();
        let cdf: Vec<f64> = std.iter().map(|&s| normal_cdf(s)).collect();
        for k in 0..n {
            if c[k] == 0.0 {
                continue;
            }
            let head = pdf[k] / sigma[k];
            let others: f64 = (0..n).filter(|&j| j != k).map(|j| cdf[j]).product();
            let scale = weight * c[k];
            grad_mu[k] += scale * head * std[k] / sigma[k] * others;
            grad_sigma[k] += scale * head * (std[k] * std[k] - 1.0) / sigma[k] * others;
            for j in (0..n).filter(|&j| j != k) {
                let rest: f64 = (0..n).filter(|&i| i != k && i != j).map(|i| cdf[i]).product();
                let d_cdf = -pdf[j] / sigma[j];
                grad_mu[j] += scale * head * d_cdf * rest;
                grad_sigma[j] += scale * head * d_cdf * std[j] * rest;
            }
        }
    }
    let last = c[n];
    if last != 0.0 {
        for j in 0..n {
            let rest: f64 = (0..n).filter(|&i| i != j).map(|i| normal_cdf(-mu[i] / sigma[i])).product();
            let dens = normal_pdf(mu[j] / sigma[j]);
            grad_mu[j] += last * (-dens / sigma[j]) * rest;
            grad_sigma[j] += last * dens * mu[j] / (sigma[j] * sigma[j]) * rest;
        }
    }
    Ok((grad_mu, grad_sigma))
}

/// Unconstrained parameters mapped into a bounded range for the quadrature path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampedParams {
    pub mu_raw: Vec<f64>,
    pub sigma_raw: Vec<f64>,
}

/// `μ = -5 tanh(μ')`, `σ = 0.5 + 2 sigmoid(σ')`.
pub fn clamp_params(raw: &ClampedParams) -> Result<(Vec<f64>, Vec<f64>)> {
    ensure_len(raw.mu_raw.len(), raw.sigma_raw.len())?;
    ensure_finite("mu_raw", &raw.mu_raw)?;
    ensure_finite("sigma_raw", &raw.sigma_raw)?;
    let mu = raw.mu_raw.iter().map(|m| -5.0 * m.tanh()).collect();
    let sigma = raw.sigma_raw.iter().map(|s| 0.5 + 2.0 * sigmoid(*s)).collect();
    Ok((mu, sigma))
}

/// Chains gradients on `(μ, σ)` back to the raw parameters.
pub fn clamp_pullback(raw: &ClampedParams, grad_mu: &[f64], grad_sigma: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    ensure_len(raw.mu_raw.len(), grad_mu.len())?;
    ensure_len(raw.sigma_raw.len(), grad_sigma.len())?;
    let gm = raw
        .mu_raw
        .iter()
        .zip(grad_mu)
        .map(|(m, g)| {
            let t = m.tanh();
            g * -5.0 * (1.0 - t * t)
        })
        .collect();
    let gs = raw
        .sigma_raw
        .iter()
        .zip(grad_sigma)
        .map(|(s, g)| {
            let p = sigmoid(*s);
            g * 2.0 * p * (1.0 - p)
        })
        .collect();
    Ok((gm, gs))
}
