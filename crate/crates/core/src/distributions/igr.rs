use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GaussianDiag;
use crate::error::{ensure_len, ensure_positive, Error, Result};
use crate::simplex::SimplexInterior;
use crate::transforms::{self, TransformSpec};

/// Parameters of an IGR distribution: Gaussian location and scale, a
/// temperature and the map onto the simplex.
///
/// Serializes as `{mu, sigma, tau, kind, delta, flow_params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IgrParamsRepr", into = "IgrParamsRepr")]
pub struct IgrParams {
    gaussian: GaussianDiag,
    tau: f64,
    spec: TransformSpec,
}

#[derive(Serialize, Deserialize)]
struct IgrParamsRepr {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    tau: f64,
    #[serde(flatten)]
    spec: TransformSpec,
}

impl TryFrom<IgrParamsRepr> for IgrParams {
    type Error = Error;
    fn try_from(r: IgrParamsRepr) -> Result<Self> {
        IgrParams::new(r.mu, r.sigma, r.tau, r.spec)
    }
}

impl From<IgrParams> for IgrParamsRepr {
    fn from(p: IgrParams) -> Self {
        IgrParamsRepr { mu: p.gaussian.mean, sigma: p.gaussian.std, tau: p.tau, spec: p.spec }
    }
}

impl IgrParams {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>, tau: f64, spec: TransformSpec) -> Result<Self> {
        ensure_positive("tau", tau)?;
        let gaussian = GaussianDiag::new(mu, sigma)?;
        spec.validate(gaussian.dim())?;
        Ok(Self { gaussian, tau, spec })
    }

    pub fn mu(&self) -> &[f64] {
        &self.gaussian.mean
    }

    pub fn sigma(&self) -> &[f64] {
        &self.gaussian.std
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn spec(&self) -> &TransformSpec {
        &self.spec
    }

    pub fn gaussian(&self) -> &GaussianDiag {
        &self.gaussian
    }

    /// `K - 1`.
    pub fn dim(&self) -> usize {
        self.gaussian.dim()
    }

    pub fn categories(&self) -> usize {
        self.dim() + 1
    }
}

/// One reparameterized draw with every intermediate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTrace {
    pub epsilon: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Option<SimplexInterior>,
    pub z: SimplexInterior,
    pub log_det_jac: f64,
}

/// `ε ~ N(0, I)`, `y = μ + σ ⊙ ε`, `z = g(y, τ)`.
pub fn igr_sample<R: Rng + ?Sized>(params: &IgrParams, rng: &mut R) -> Result<SampleTrace> {
    let (epsilon, y) = params.gaussian.sample_with_noise(rng);
    trace_from(params, epsilon, y)
}

fn trace_from(params: &IgrParams, epsilon: Vec<f64>, y: Vec<f64>) -> Result<SampleTrace> {
    let out = transforms::forward(&params.spec, &y, params.tau)?;
    Ok(SampleTrace { epsilon, y, w: out.w, z: out.z, log_det_jac: out.log_det_jac })
}

/// Log-density through the trace: `log N(y | μ, σ) - log |det J_g(y)|`.
pub fn igr_log_density_trace(params: &IgrParams, trace: &SampleTrace) -> f64 {
    params.gaussian.log_pdf(&trace.y) - trace.log_det_jac
}

/// Change-of-variables log-density at `z`.
///
/// For `SbInterp` below unit temperature the inverse uses the almost-everywhere
/// vertex assignment; the value is exact away from the argmax tie set.
pub fn igr_log_density(params: &IgrParams, z: &SimplexInterior) -> Result<f64> {
    ensure_len(params.dim(), z.dim())?;
    let y = transforms::inverse(&params.spec, z, params.tau)?;
    let out = transforms::forward(&params.spec, &y, params.tau)?;
    Ok(params.gaussian.log_pdf(&y) - out.log_det_jac)
}

/// Closed-form KL between two IGR distributions sharing the same map and
/// temperature, where the Jacobian terms cancel.
pub fn igr_kl_closed(p: &IgrParams, q: &IgrParams) -> Result<f64> {
    ensure_len(p.dim(), q.dim())?;
    if p.spec != q.spec {
        return Err(Error::Contract("closed-form KL needs identical transforms; use igr_kl_mc".into()));
    }
    if p.tau != q.tau {
        return Err(Error::Contract(format!("closed-form KL needs equal temperatures, got {} and {}", p.tau, q.tau)));
    }
    p.gaussian.kl(&q.gaussian)
}

/// Monte-Carlo estimate of `KL(p ‖ q)` and its standard error.
pub fn igr_kl_mc<R: Rng + ?Sized>(p: &IgrParams, q: &IgrParams, n: usize, rng: &mut R) -> Result<(f64, f64)> {
    ensure_len(p.dim(), q.dim())?;
    if n < 2 {
        return Err(Error::InvalidInput("Monte-Carlo KL needs at least two samples".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let trace = igr_sample(p, rng)?;
        let ratio = igr_log_density_trace(p, &trace) - igr_log_density(q, &trace.z)?;
        sum += ratio;
        sum_sq += ratio * ratio;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok((mean, (var / nf).sqrt()))
}
