//! Registry of every hand-written pullback, each checked against central
//! differences at random points.

use igr::distributions::IgrParams;
use igr::estimate::{fd_check, gs_reparam_estimate, moment_match_grad, moment_match_loss, Quadratic};
use igr::recovery::{
    clamp_params, clamp_pullback, recover_pmf_quad, recover_pmf_quad_pullback, ClampedParams, DiscretePmf,
};
use igr::transforms::{
    self, clamped_sigmoid, sigmoid_pullback, softmax_pp, softmax_pp_pullback, stick_break, stick_break_pullback,
    vertex_interp, vertex_interp_pullback, PlanarLayer, TransformKind, TransformSpec,
};
use igr::SimplexInterior;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Largest relative error tolerated by the oracle.
pub const GRAD_TOL: f64 = 1e-5;

/// Random points per registered pullback.
pub const POINTS: usize = 20;

type Check = fn(&mut ChaCha8Rng) -> f64;

/// Name and checker of every registered pullback. Each checker returns the
/// worst relative error over [`POINTS`] random points.
pub const REGISTRY: &[(&str, Check)] = &[
    ("softmax_pp", check_softmax_pp),
    ("sigmoid_stick_break", check_sigmoid_stick_break),
    ("vertex_interp", check_vertex_interp),
    ("planar_layer_input", check_planar_input),
    ("planar_layer_params", check_planar_params),
    ("transform_chain", check_transform_chain),
    ("clamp", check_clamp),
    ("quadrature_recovery", check_quadrature),
    ("moment_match_loss", check_moment_match),
    ("gumbel_softmax_estimate", check_gumbel_softmax),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Runs the whole registry from one seed.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    REGISTRY
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let max_rel_error = check(&mut rng);
            CheckResult { name: name.to_string(), max_rel_error, passed: max_rel_error <= GRAD_TOL }
        })
        .collect()
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn worst(rng: &mut ChaCha8Rng, mut one: impl FnMut(&mut ChaCha8Rng) -> f64) -> f64 {
    (0..POINTS).map(|_| one(rng)).fold(0.0, f64::max)
}

fn check_softmax_pp(rng: &mut ChaCha8Rng) -> f64 {
    worst(rng, |rng| {
        let dim = rng.random_range(1..10);
        let (tau, delta) = (rng.random_range(0.2..1.5), rng.random_range(0.5..2.0));
        let y = uniform(rng, dim, -2.0, 2.0);
        let c = uniform(rng, dim, -1.0, 1.0);
        fd_check(
            |y| softmax_pp(y, tau, delta).unwrap().into_coords(),
            &y,
            &c,
            |y, c| softmax_pp_pullback(y, tau, delta, c).unwrap(),
        )
    })
}

fn check_sigmoid_stick_break(rng: &mut ChaCha8Rng) -> f64 {
    worst(rng, |rng| {
        let dim = rng.random_range(1..10);
        let y = uniform(rng, dim, -3.0, 3.0);
        let c = uniform(rng, dim, -1.0, 1.0);
        fd_check(
            |y| stick_break(&clamped_sigmoid(y)).unwrap().into_coords(),
            &y,
            &c,
            |y, c| {
                let u = clamped_sigmoid(y);
                sigmoid_pullback(&u, &stick_break_pullback(&u, c).unwrap())
            },
        )
    })
}

fn check_vertex_interp(rng: &mut ChaCha8Rng) -> f64 {
    worst(rng, |rng| {
        let dim = rng.random_range(1..10);
        let tau = rng.random_range(0.1..1.0);
        // interior point with a clear nearest vertex, so the map is affine nearby
        let w = loop {
            let raw = uniform(rng, dim + 1, 0.1, 1.0);
            let total: f64 = raw.iter().sum();
            let mut sorted: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let w = sorted[..dim].to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            if sorted[0] - sorted[1] > 1e-3 {
                break w;
            }
        };
        let c = uniform(rng, dim, -1.0, 1.0);
        fd_check(
            |w| vertex_interp(&SimplexInterior::new(w.to_vec()).unwrap(), tau).unwrap().into_coords(),
            &w,
            &c,
            |_, c| vertex_interp_pullback(tau, c, dim).unwrap(),
        )
    })
}

fn random_layer(rng: &mut ChaCha8Rng, dim: usize) -> PlanarLayer {
    PlanarLayer { w: uniform(rng, dim, -1.0, 1.0), u: uniform(rng, dim, -1.5, 1.5), b: rng.random_range(-0.5..0.5) }
}

fn check_planar_input(rng: &mut ChaCha8Rng) -> f64 {
    worst(rng, |rng| {
        let dim = rng.random_range(1..8);
        let layer = random_layer(rng, dim);
        let y = uniform(rng, dim, -2.0, 2.0);
        let c = uniform(rng, dim, -1.0, 1.0);
        fd_check(|y| layer.forward(y).unwrap().0, &y, &c, |y, c| layer.pullback(y, c).unwrap())
    })
}

fn check_planar_params(rng: &mut ChaCha8Rng) -> f64 {
    worst(rng, |rng| {
        let dim = rng.random_range(1..8);
        let layer = random_layer(rng, dim);
        let y = uniform(rng, dim, -2.0, 2.0);
        let c = uniform(rng, dim, -1.0, 1.0);
        let unflatten = |p: &[f64]| PlanarLayer { w: p[..dim].to_vec(), u: p[dim..2 * dim].to_vec(), b: p[2 * dim] };
        let flat: Vec<f64> = layer.w.iter().chain(&layer.u).copied().chain([layer.b]).collect();
        fd_check(
            |p| unflatten(p).forward(&y).unwrap().0,
            &flat,
            &c,
            |p, c| {
                let g = unflatten(p).param_pullback(&y, c).unwrap();
                g.w.into_iter().chain(g.u).chain([g.b]).collect()
            },
        )
    })
}

/// Whole `g(·, τ)` for every kind whose map is smooth.
fn check_transform_chain(rng: &mut ChaCha8Rng) -> f64 {
    let kinds = [
        TransformKind::SoftmaxPp,
        TransformKind::SbSoftmaxPp,
        TransformKind::SbIdentity,
        TransformKind::PlanarSoftmaxPp,
    ];
    kinds
        .iter()
        .map(|&kind| {
            worst(rng, |rng| {
                let dim = rng.random_range(1..8);
                let delta = rng.random_range(0.5..2.0);
                let spec = if kind == TransformKind::PlanarSoftmaxPp {
                    TransformSpec::planar(delta, vec![random_layer(rng, dim), random_layer(rng, dim)]).unwrap()
                } else {
                    TransformSpec::new(kind, delta).unwrap()
                };
                let tau = rng.random_range(0.3..1.5);
                let y = uniform(rng, dim, -1.5, 1.5);
                let c = uniform(rng, dim, -1.0, 1.0);
                fd_check(
                    |y| transforms::forward(&spec, y, tau).unwrap().z.into_coords(),
                    &y,
                    &c,
                    |y, c| transforms::pullback(&spec, y, tau, c).unwrap(),
                )
            })
        })
        .fold(0.0, f64::max)
}

fn check_clamp(rng: &mut ChaCha8Rng) -> f64 {
    worst(rng, |rng| {
        let dim = rng.random_range(1..8);
        let point = uniform(rng, 2 * dim, -2.0, 2.0);
        let c = uniform(rng, 2 * dim, -1.0, 1.0);
        let split = |p: &[f64]| ClampedParams { mu_raw: p[..dim].to_vec(), sigma_raw: p[dim..].to_vec() };
        fd_check(
            |p| {
                let (m, s) = clamp_params(&split(p)).unwrap();
                m.into_iter().chain(s).collect()
            },
            &point,
            &c,
            |p, c| {
                let (gm, gs) = clamp_pullback(&split(p), &c[..dim], &c[dim..]).unwrap();
                gm.into_iter().chain(gs).collect()
            },
        )
    })
}

fn check_quadrature(rng: &mut ChaCha8Rng) -> f64 {
    worst(rng, |rng| {
        let dim = rng.random_range(1..6);
        let raw = ClampedParams { mu_raw: uniform(rng, dim, -1.5, 1.5), sigma_raw: uniform(rng, dim, -3.0, 3.0) };
        let (mu, sigma) = clamp_params(&raw).unwrap();
        let point: Vec<f64> = mu.into_iter().chain(sigma).collect();
        let c = uniform(rng, dim + 1, -1.0, 1.0);
        fd_check(
            |p| recover_pmf_quad(&p[..dim], &p[dim..]).unwrap().pmf.probs,
            &point,
            &c,
            |p, c| {
                let (gm, gs) = recover_pmf_quad_pullback(&p[..dim], &p[dim..], c).unwrap();
                gm.into_iter().chain(gs).collect()
            },
        )
    })
}

/// The loss is differentiated with its noise held fixed (same seed on both sides).
fn check_moment_match(rng: &mut ChaCha8Rng) -> f64 {
    let target = DiscretePmf::finite(vec![0.1, 0.2, 0.4, 0.2, 0.1]).unwrap();
    let kinds = [TransformKind::SoftmaxPp, TransformKind::SbSoftmaxPp, TransformKind::SbIdentity];
    worst(rng, |rng| {
        let kind = kinds[rng.random_range(0..kinds.len())];
        let spec = TransformSpec::new(kind, rng.random_range(0.5..2.0)).unwrap();
        let point: Vec<f64> = uniform(rng, 4, -1.0, 1.0).into_iter().chain(uniform(rng, 4, 0.5, 1.5)).collect();
        let seed: u64 = rng.random();
        let build = |p: &[f64]| IgrParams::new(p[..4].to_vec(), p[4..].to_vec(), 0.7, spec.clone()).unwrap();
        fd_check(
            |p| vec![moment_match_loss(&build(p), &target, 8, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()],
            &point,
            &[1.0],
            |p, _| moment_match_grad(&build(p), &target, 8, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().grad.flat(),
        )
    })
}

fn check_gumbel_softmax(rng: &mut ChaCha8Rng) -> f64 {
    let f =
        Quadratic { a: vec![vec![1.0, 0.2, 0.0], vec![0.2, -0.5, 0.3], vec![0.0, 0.3, 2.0]], b: vec![0.1, 0.0, -0.3] };
    worst(rng, |rng| {
        let logits = uniform(rng, 3, -1.0, 1.0);
        let seed: u64 = rng.random();
        let run = |p: &[f64]| gs_reparam_estimate(p, 0.7, &f, 4, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        fd_check(|p| vec![run(p).0], &logits, &[1.0], |p, _| run(p).1)
    })
}
