//! Invertible maps from unconstrained space onto the open simplex.
//!
//! Every stage provides forward evaluation, an inverse, its log-determinant
//! and a vector-Jacobian product. [`forward`], [`inverse`] and [`pullback`]
//! compose the stages selected by a [`TransformSpec`].

mod interp;
mod planar;
mod softmax_pp;
mod stick;

pub use interp::{nearest_vertex, vertex_interp, vertex_interp_inverse, vertex_interp_logdet, vertex_interp_pullback};
pub use planar::{PlanarGrad, PlanarLayer};
pub use softmax_pp::{softmax_pp, softmax_pp_inverse, softmax_pp_logdet, softmax_pp_pullback};
pub use stick::{
    clamped_sigmoid, logit, sigmoid_logdet, sigmoid_pullback, stick_break, stick_break_inverse, stick_break_logdet,
    stick_break_pullback, UNIT_CLAMP,
};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_len, ensure_positive, Error, Result};
use crate::simplex::SimplexInterior;

/// Default number of planar layers in front of softmax++.
pub const DEFAULT_PLANAR_DEPTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    /// softmax++ applied to `y`.
    SoftmaxPp,
    /// sigmoid, stick-breaking, then softmax++.
    SbSoftmaxPp,
    /// sigmoid, stick-breaking, then interpolation towards the nearest vertex.
    SbInterp,
    /// a chain of planar layers, then softmax++.
    PlanarSoftmaxPp,
    /// sigmoid then stick-breaking, with no temperature stage.
    SbIdentity,
}

impl TransformKind {
    pub fn is_stick_breaking(self) -> bool {
        matches!(self, Self::SbSoftmaxPp | Self::SbInterp | Self::SbIdentity)
    }

    /// Whether the last stage is softmax++, in which case discretization
    /// compares coordinates against `remainder / δ`.
    pub fn ends_in_softmax_pp(self) -> bool {
        matches!(self, Self::SoftmaxPp | Self::SbSoftmaxPp | Self::PlanarSoftmaxPp)
    }
}

/// Choice of the map `g(·, τ)` together with its fixed hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub kind: TransformKind,
    /// softmax++ offset.
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_params: Option<Vec<PlanarLayer>>,
}

impl TransformSpec {
    pub fn new(kind: TransformKind, delta: f64) -> Result<Self> {
        if kind == TransformKind::PlanarSoftmaxPp {
            return Err(Error::InvalidInput("planar specs need flow parameters; use TransformSpec::planar".into()));
        }
        ensure_positive("delta", delta)?;
        Ok(Self { kind, delta, flow_params: None })
    }

    pub fn softmax_pp(delta: f64) -> Result<Self> {
        Self::new(TransformKind::SoftmaxPp, delta)
    }

    pub fn planar(delta: f64, layers: Vec<PlanarLayer>) -> Result<Self> {
        ensure_positive("delta", delta)?;
        let dim = layers
            .first()
            .map(PlanarLayer::dim)
            .ok_or_else(|| Error::InvalidInput("planar spec needs at least one layer".into()))?;
        for layer in &layers {
            layer.validate(dim)?;
        }
        Ok(Self { kind: TransformKind::PlanarSoftmaxPp, delta, flow_params: Some(layers) })
    }

    /// Planar chain of `depth` layers with small random parameters.
    pub fn planar_random<R: Rng + ?Sized>(delta: f64, dim: usize, depth: usize, rng: &mut R) -> Result<Self> {
        let normal = Normal::new(0.0, 0.1).expect("valid normal");
        let layers = (0..depth)
            .map(|_| {
                let mut w: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
                w[0] += 0.5;
                let u = (0..dim).map(|_| normal.sample(rng)).collect();
                PlanarLayer { w, u, b: normal.sample(rng) }
            })
            .collect();
        Self::planar(delta, layers)
    }

    /// Checks hyperparameters against the dimension `K - 1` of the input.
    pub fn validate(&self, dim: usize) -> Result<()> {
        ensure_positive("delta", self.delta)?;
        if dim == 0 {
            return Err(Error::InvalidInput("transform needs at least one coordinate".into()));
        }
        match (self.kind, &self.flow_params) {
            (TransformKind::PlanarSoftmaxPp, Some(layers)) if !layers.is_empty() => {
                layers.iter().try_for_each(|l| l.validate(dim))
            }
            (TransformKind::PlanarSoftmaxPp, _) => {
                Err(Error::InvalidInput("planar spec needs at least one layer".into()))
            }
            (_, Some(_)) => Err(Error::InvalidInput("flow parameters given for a non-planar spec".into())),
            _ => Ok(()),
        }
    }

    fn layers(&self) -> &[PlanarLayer] {
        self.flow_params.as_deref().unwrap_or(&[])
    }

    /// Category selected by the zero-temperature limit of this map.
    ///
    /// softmax++ terminals compare the largest coordinate with `remainder / δ`
    /// (equivalent to the sign test on the pre-image); other terminals take the
    /// argmax of the completed vector. Categories are zero-based, `K - 1` being
    /// the remainder.
    pub fn discretize(&self, z: &SimplexInterior) -> usize {
        if self.kind.ends_in_softmax_pp() {
            crate::recovery::discretize(z, self.delta)
        } else {
            nearest_vertex(z)
        }
    }
}

/// Result of pushing one point through a transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    pub z: SimplexInterior,
    /// Stick-breaking intermediate, for stick-breaking kinds.
    pub w: Option<SimplexInterior>,
    pub log_det_jac: f64,
}

fn check_input(spec: &TransformSpec, y: &[f64], tau: f64) -> Result<()> {
    ensure_finite("y", y)?;
    ensure_positive("tau", tau)?;
    spec.validate(y.len())
}

/// Applies `g(y, τ)` and accumulates the log-determinant over all stages.
pub fn forward(spec: &TransformSpec, y: &[f64], tau: f64) -> Result<Transformed> {
    check_input(spec, y, tau)?;
    let delta = spec.delta;
    match spec.kind {
        TransformKind::SoftmaxPp => {
            Ok(Transformed { z: softmax_pp(y, tau, delta)?, w: None, log_det_jac: softmax_pp_logdet(y, tau, delta)? })
        }
        TransformKind::PlanarSoftmaxPp => {
            let mut x = y.to_vec();
            let mut log_det_jac = 0.0;
            for layer in spec.layers() {
                let (next, ld) = layer.forward(&x)?;
                x = next;
                log_det_jac += ld;
            }
            ensure_finite("planar output", &x)?;
            Ok(Transformed {
                z: softmax_pp(&x, tau, delta)?,
                w: None,
                log_det_jac: log_det_jac + softmax_pp_logdet(&x, tau, delta)?,
            })
        }
        TransformKind::SbSoftmaxPp | TransformKind::SbInterp | TransformKind::SbIdentity => {
            let u = clamped_sigmoid(y);
            let w = stick_break(&u)?;
            let chain = sigmoid_logdet(&u) + stick_break_logdet(&u);
            let (z, terminal) = match spec.kind {
                TransformKind::SbSoftmaxPp => {
                    (softmax_pp(w.coords(), tau, delta)?, softmax_pp_logdet(w.coords(), tau, delta)?)
                }
                TransformKind::SbInterp => (vertex_interp(&w, tau)?, vertex_interp_logdet(w.dim(), tau)),
                _ => (w.clone(), 0.0),
            };
            Ok(Transformed { z, w: Some(w), log_det_jac: chain + terminal })
        }
    }
}

/// Log-determinant of the sigmoid → stick-breaking → terminal chain.
pub fn sb_chain_logdet(spec: &TransformSpec, y: &[f64], tau: f64) -> Result<f64> {
    if !spec.kind.is_stick_breaking() {
        return Err(Error::Contract(format!("{:?} is not a stick-breaking transform", spec.kind)));
    }
    Ok(forward(spec, y, tau)?.log_det_jac)
}

/// Inverse map `g⁻¹(z, τ)`.
pub fn inverse(spec: &TransformSpec, z: &SimplexInterior, tau: f64) -> Result<Vec<f64>> {
    ensure_positive("tau", tau)?;
    spec.validate(z.dim())?;
    let delta = spec.delta;
    let stick_inverse = |w: &SimplexInterior| -> Result<Vec<f64>> { logit(&stick_break_inverse(w)?) };
    match spec.kind {
        TransformKind::SoftmaxPp => softmax_pp_inverse(z, tau, delta),
        TransformKind::PlanarSoftmaxPp => {
            let mut x = softmax_pp_inverse(z, tau, delta)?;
            for layer in spec.layers().iter().rev() {
                x = layer.inverse(&x)?;
            }
            Ok(x)
        }
        TransformKind::SbSoftmaxPp => {
            let w = SimplexInterior::new(softmax_pp_inverse(z, tau, delta)?)
                .map_err(|_| Error::Domain("point is outside the image of the stick-breaking chain".into()))?;
            stick_inverse(&w)
        }
        TransformKind::SbInterp => stick_inverse(&vertex_interp_inverse(z, tau)?),
        TransformKind::SbIdentity => stick_inverse(z),
    }
}

/// Vector-Jacobian product `Jᵀ c` of [`forward`] at `y`, with respect to `y`.
pub fn pullback(spec: &TransformSpec, y: &[f64], tau: f64, cotangent: &[f64]) -> Result<Vec<f64>> {
    check_input(spec, y, tau)?;
    ensure_len(y.len(), cotangent.len())?;
    let delta = spec.delta;
    match spec.kind {
        TransformKind::SoftmaxPp => softmax_pp_pullback(y, tau, delta, cotangent),
        TransformKind::PlanarSoftmaxPp => {
            let inputs = planar_inputs(spec, y)?;
            let top = inputs.last().expect("at least the input point");
            let mut grad = softmax_pp_pullback(top, tau, delta, cotangent)?;
            for (layer, x) in spec.layers().iter().zip(&inputs).rev() {
                grad = layer.pullback(x, &grad)?;
            }
            Ok(grad)
        }
        TransformKind::SbSoftmaxPp | TransformKind::SbInterp | TransformKind::SbIdentity => {
            let u = clamped_sigmoid(y);
            let w = stick_break(&u)?;
            let grad_w = match spec.kind {
                TransformKind::SbSoftmaxPp => softmax_pp_pullback(w.coords(), tau, delta, cotangent)?,
                TransformKind::SbInterp => vertex_interp_pullback(tau, cotangent, w.dim())?,
                _ => cotangent.to_vec(),
            };
            let grad_u = stick_break_pullback(&u, &grad_w)?;
            Ok(sigmoid_pullback(&u, &grad_u))
        }
    }
}

/// Pullback for a cotangent on the completed length-`K` vector. The last
/// coordinate is `1 - Σ z`, so its cotangent is subtracted from the others.
pub fn pullback_completed(spec: &TransformSpec, y: &[f64], tau: f64, cotangent: &[f64]) -> Result<Vec<f64>> {
    ensure_len(y.len() + 1, cotangent.len())?;
    let last = cotangent[y.len()];
    let reduced: Vec<f64> = cotangent[..y.len()].iter().map(|c| c - last).collect();
    pullback(spec, y, tau, &reduced)
}

/// Inputs to each planar layer, followed by the chain's output.
fn planar_inputs(spec: &TransformSpec, y: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut inputs = vec![y.to_vec()];
    for layer in spec.layers() {
        let next = layer.forward(inputs.last().expect("non-empty"))?.0;
        inputs.push(next);
    }
    Ok(inputs)
}

/// Gradient of `cᵀ g(y, τ)` with respect to each planar layer's parameters.
pub fn flow_param_pullback(spec: &TransformSpec, y: &[f64], tau: f64, cotangent: &[f64]) -> Result<Vec<PlanarGrad>> {
    check_input(spec, y, tau)?;
    ensure_len(y.len(), cotangent.len())?;
    if spec.kind != TransformKind::PlanarSoftmaxPp {
        return Err(Error::Contract(format!("{:?} has no flow parameters", spec.kind)));
    }
    let inputs = planar_inputs(spec, y)?;
    let mut grad = softmax_pp_pullback(inputs.last().expect("non-empty"), tau, spec.delta, cotangent)?;
    let mut out = Vec::with_capacity(spec.layers().len());
    for (layer, x) in spec.layers().iter().zip(&inputs).rev() {
        out.push(layer.param_pullback(x, &grad)?);
        grad = layer.pullback(x, &grad)?;
    }
    out.reverse();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sb_identity_logdet_at_origin() {
        let spec = TransformSpec::new(TransformKind::SbIdentity, 1.0).unwrap();
        let ld = sb_chain_logdet(&spec, &[0.0, 0.0], 1.0).unwrap();
        assert!((ld - (0.25f64 * 0.25 * 0.5).ln()).abs() < 1e-14);
    }

    #[test]
    fn sb_softmax_adds_terminal_logdet() {
        let y = [0.3, -1.1, 0.8];
        let sb = TransformSpec::new(TransformKind::SbIdentity, 1.0).unwrap();
        let full = TransformSpec::new(TransformKind::SbSoftmaxPp, 1.0).unwrap();
        let base = forward(&sb, &y, 0.4).unwrap();
        let composed = forward(&full, &y, 0.4).unwrap();
        let w = base.w.unwrap();
        let terminal = softmax_pp_logdet(w.coords(), 0.4, 1.0).unwrap();
        assert_eq!(composed.log_det_jac, base.log_det_jac + terminal);
    }

    #[test]
    fn sb_softmax_at_origin_composes_stages() {
        let spec = TransformSpec::new(TransformKind::SbSoftmaxPp, 1.0).unwrap();
        let out = forward(&spec, &[0.0, 0.0], 1.0).unwrap();
        assert_eq!(out.w.as_ref().unwrap().coords(), &[0.5, 0.25]);
        assert_eq!(out.z, softmax_pp(&[0.5, 0.25], 1.0, 1.0).unwrap());
    }

    #[test]
    fn softmax_pp_spec_is_single_stage() {
        let spec = TransformSpec::softmax_pp(1.0).unwrap();
        let y = [0.2, -0.7];
        let out = forward(&spec, &y, 0.3).unwrap();
        assert_eq!(out.z, softmax_pp(&y, 0.3, 1.0).unwrap());
        assert_eq!(out.log_det_jac, softmax_pp_logdet(&y, 0.3, 1.0).unwrap());
    }

    #[test]
    fn identity_planar_layers_reduce_to_softmax_pp() {
        let spec = TransformSpec::planar(1.0, vec![PlanarLayer::identity(2), PlanarLayer::identity(2)]).unwrap();
        let plain = TransformSpec::softmax_pp(1.0).unwrap();
        let y = [0.4, -0.9];
        assert_eq!(forward(&spec, &y, 0.5).unwrap(), forward(&plain, &y, 0.5).unwrap());
    }

    #[test]
    fn zero_cotangent_gives_zero_gradient() {
        let spec = TransformSpec::new(TransformKind::SbSoftmaxPp, 1.0).unwrap();
        let g = pullback(&spec, &[0.1, 0.2, 0.3], 0.5, &[0.0; 3]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pullback_dimension_mismatch() {
        let spec = TransformSpec::softmax_pp(1.0).unwrap();
        assert!(matches!(
            pullback(&spec, &[0.0, 0.0], 1.0, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn planar_spec_needs_layers() {
        assert!(TransformSpec::new(TransformKind::PlanarSoftmaxPp, 1.0).is_err());
        assert!(TransformSpec::planar(1.0, vec![]).is_err());
        let spec = TransformSpec::planar(1.0, vec![PlanarLayer::identity(3)]).unwrap();
        assert!(forward(&spec, &[0.0, 0.0], 1.0).is_err());
    }
}
