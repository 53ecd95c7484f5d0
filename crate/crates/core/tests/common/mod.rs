//! Oracles shared by the integration tests.
#![allow(dead_code)]

use gauss_quad::GaussLegendre;
use igr::transforms::{TransformKind, TransformSpec, DEFAULT_PLANAR_DEPTH};
use nalgebra::DMatrix;
use rand::{Rng, RngExt};

pub const ALL_KINDS: [TransformKind; 5] = [
    TransformKind::SoftmaxPp,
    TransformKind::SbSoftmaxPp,
    TransformKind::SbInterp,
    TransformKind::PlanarSoftmaxPp,
    TransformKind::SbIdentity,
];

/// A spec of the given kind with random δ (and random planar layers).
pub fn random_spec<R: Rng>(kind: TransformKind, dim: usize, rng: &mut R) -> TransformSpec {
    let delta = rng.random_range(0.5..2.0);
    match kind {
        TransformKind::PlanarSoftmaxPp => TransformSpec::planar_random(delta, dim, DEFAULT_PLANAR_DEPTH, rng).unwrap(),
        _ => TransformSpec::new(kind, delta).unwrap(),
    }
}

/// Temperature valid for every kind (vertex interpolation needs τ ≤ 1).
pub fn random_tau<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(0.5..1.0)
}

pub fn uniform_vec<R: Rng>(rng: &mut R, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// `log |det J|` of a square Jacobian given row-wise.
pub fn log_abs_det(jac: &[Vec<f64>]) -> f64 {
    let n = jac.len();
    let m = DMatrix::from_fn(n, n, |i, j| jac[i][j]);
    m.determinant().abs().ln()
}

/// Composite Gauss–Legendre nodes and weights on `[a, b]`.
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(order.try_into().unwrap());
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let left = a + p as f64 * width;
        for &(x, w) in rule.as_node_weight_pairs() {
            out.push((left + 0.5 * width * (x + 1.0), 0.5 * width * w));
        }
    }
    out
}

/// `∫₀¹ f(t) dt`.
pub fn integrate_unit<F: FnMut(f64) -> f64>(mut f: F, panels: usize, order: usize) -> f64 {
    composite_rule(0.0, 1.0, panels, order).into_iter().map(|(x, w)| w * f(x)).sum()
}

/// Integral over the open triangle `{z₁, z₂ > 0, z₁ + z₂ < 1}` through the
/// collapsed coordinates `z₁ = s`, `z₂ = (1 - s) t`.
pub fn integrate_triangle<F: FnMut(f64, f64) -> f64>(mut f: F, panels: usize, order: usize) -> f64 {
    let rule = composite_rule(0.0, 1.0, panels, order);
    let mut total = 0.0;
    for &(s, ws) in &rule {
        for &(t, wt) in &rule {
            total += ws * wt * (1.0 - s) * f(s, (1.0 - s) * t);
        }
    }
    total
}

/// Kolmogorov–Smirnov statistic of `sample` against the continuous `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the one-sample KS statistic with Stephens' correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let sum: f64 = (1..=100)
        .map(|j| {
            let j = j as f64;
            let sign = if j as u64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * j * j * lambda * lambda).exp()
        })
        .sum();
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `log |det J|` of `forward(spec, ·, τ)` at `y` from finite-difference
/// Jacobians of each stage. The determinant of a composition is the product
/// of the stage determinants; differencing stage by stage avoids the
/// conditioning loss of differencing the whole chain when the stick-breaking
/// diagonal spans many orders of magnitude.
pub fn fd_log_det(spec: &TransformSpec, y: &[f64], tau: f64) -> f64 {
    use igr::estimate::fd_jacobian;
    use igr::transforms::{clamped_sigmoid, softmax_pp, stick_break, vertex_interp};
    use igr::SimplexInterior;

    let delta = spec.delta;
    let softmax_stage =
        |x: &[f64]| log_abs_det(&fd_jacobian(|p: &[f64]| softmax_pp(p, tau, delta).unwrap().coords().to_vec(), x));
    match spec.kind {
        TransformKind::SoftmaxPp => softmax_stage(y),
        TransformKind::PlanarSoftmaxPp => {
            let mut x = y.to_vec();
            let mut total = 0.0;
            for layer in spec.flow_params.as_ref().unwrap() {
                total += log_abs_det(&fd_jacobian(|p: &[f64]| layer.forward(p).unwrap().0, &x));
                x = layer.forward(&x).unwrap().0;
            }
            total + softmax_stage(&x)
        }
        _ => {
            let chain = |p: &[f64]| stick_break(&clamped_sigmoid(p)).unwrap().coords().to_vec();
            let w = chain(y);
            let head = log_abs_det(&fd_jacobian(chain, y));
            let tail = match spec.kind {
                TransformKind::SbSoftmaxPp => softmax_stage(&w),
                TransformKind::SbInterp => {
                    // piecewise affine: any step that stays inside the simplex is exact
                    let remainder = 1.0 - w.iter().sum::<f64>();
                    let h = 0.25 * w.iter().copied().fold(remainder, f64::min).min(1e-5);
                    let interp = |p: &[f64]| vertex_interp(&SimplexInterior::new(p.to_vec()).unwrap(), tau).unwrap();
                    let columns: Vec<Vec<f64>> = (0..w.len())
                        .map(|j| {
                            let (mut up, mut down) = (w.clone(), w.clone());
                            up[j] += h;
                            down[j] -= h;
                            let (a, b) = (interp(&up), interp(&down));
                            a.coords().iter().zip(b.coords()).map(|(x, y)| (x - y) / (2.0 * h)).collect()
                        })
                        .collect();
                    let rows: Vec<Vec<f64>> = (0..w.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
                    log_abs_det(&rows)
                }
                _ => 0.0,
            };
            head + tail
        }
    }
}
