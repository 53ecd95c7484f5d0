mod common;

use common::*;
use igr::distributions::{igr_sample, IgrParams};
use igr::estimate::fd_check;
use igr::recovery::{
    clamp_params, clamp_pullback, discretize, hard_limit, recover_pmf_mc, recover_pmf_quad, recover_pmf_quad_params,
    recover_pmf_quad_pullback, ClampedParams, DiscretePmf, SupportKind,
};
use igr::special::normal_cdf;
use igr::transforms::{TransformKind, TransformSpec};
use igr::Error;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_clamped(rng: &mut ChaCha8Rng, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let raw = ClampedParams { mu_raw: uniform_vec(rng, dim, -1.5, 1.5), sigma_raw: uniform_vec(rng, dim, -3.0, 3.0) };
    clamp_params(&raw).unwrap()
}

#[test]
fn quadrature_agrees_with_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let dim = rng.random_range(1..10);
        let (mu, sigma) = random_clamped(&mut rng, dim);
        let delta = rng.random_range(0.5..2.0);
        let params = IgrParams::new(mu.clone(), sigma.clone(), 0.1, TransformSpec::softmax_pp(delta).unwrap()).unwrap();
        let quad = recover_pmf_quad_params(&params).unwrap();
        let mc = recover_pmf_mc(&params, 100_000, &mut rng).unwrap();
        for k in 0..=dim {
            let gap = (quad.pmf.probs[k] - mc.pmf.probs[k]).abs();
            assert!(gap <= 3.0 * mc.std_errors[k] + 1e-3, "k={k}: {} vs {}", quad.pmf.probs[k], mc.pmf.probs[k]);
        }
    }
}

#[test]
fn raw_quadrature_mass_is_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..500 {
        let dim = rng.random_range(1..10);
        let mu = uniform_vec(&mut rng, dim, -5.0, 5.0);
        let sigma = uniform_vec(&mut rng, dim, 0.5, 2.5);
        let quad = recover_pmf_quad(&mu, &sigma).unwrap();
        assert!((quad.raw_sum - 1.0).abs() <= 1e-6, "{}", quad.raw_sum);
        assert!(!quad.renormalized);
    }
}

#[test]
fn two_categories_are_gaussian_orthants() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..100 {
        let mu = rng.random_range(-5.0..5.0);
        let sigma = rng.random_range(0.5..2.5);
        let probs = recover_pmf_quad(&[mu], &[sigma]).unwrap().pmf.probs;
        assert!((probs[0] - normal_cdf(mu / sigma)).abs() <= 1e-6);
        assert!((probs[1] - normal_cdf(-mu / sigma)).abs() <= 1e-6);
    }
}

#[test]
fn symmetric_three_categories() {
    let quad = recover_pmf_quad(&[0.0, 0.0], &[1.0, 1.0]).unwrap().pmf.probs;
    let params = IgrParams::new(vec![0.0; 2], vec![1.0; 2], 0.5, TransformSpec::softmax_pp(1.0).unwrap()).unwrap();
    let mc = recover_pmf_mc(&params, 100_000, &mut ChaCha8Rng::seed_from_u64(34)).unwrap();
    for (k, expected) in [0.375, 0.375, 0.25].into_iter().enumerate() {
        assert!((quad[k] - expected).abs() <= 1e-9);
        assert!((mc.pmf.probs[k] - expected).abs() <= 3.0 * mc.std_errors[k] + 1e-3);
    }
}

#[test]
fn recovered_category_does_not_depend_on_temperature() {
    let mu = vec![0.3, -0.4, 0.1, 0.0];
    let sigma = vec![1.0, 0.7, 1.4, 0.9];
    let pmfs: Vec<_> = [0.01, 0.1, 1.0]
        .into_iter()
        .map(|tau| {
            let params =
                IgrParams::new(mu.clone(), sigma.clone(), tau, TransformSpec::softmax_pp(1.7).unwrap()).unwrap();
            recover_pmf_mc(&params, 20_000, &mut ChaCha8Rng::seed_from_u64(35)).unwrap()
        })
        .collect();
    for other in &pmfs[1..] {
        for k in 0..5 {
            let se = (pmfs[0].std_errors[k].powi(2) + other.std_errors[k].powi(2)).sqrt();
            assert!((pmfs[0].pmf.probs[k] - other.pmf.probs[k]).abs() <= 3.0 * se);
        }
    }
}

#[test]
fn discretize_agrees_with_the_pre_image_sign_test() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for _ in 0..2000 {
        let dim = rng.random_range(1..8);
        let delta = rng.random_range(0.2..5.0);
        let tau = rng.random_range(0.05..2.0);
        let params =
            IgrParams::new(vec![0.0; dim], vec![2.0; dim], tau, TransformSpec::softmax_pp(delta).unwrap()).unwrap();
        let trace = igr_sample(&params, &mut rng).unwrap();
        assert_eq!(discretize(&trace.z, delta), hard_limit(&trace.y));
    }
}

#[test]
fn quadrature_pullback_matches_fd() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..20 {
        let dim = rng.random_range(1..6);
        let (mu, sigma) = random_clamped(&mut rng, dim);
        let point: Vec<f64> = mu.iter().chain(&sigma).copied().collect();
        let cot = uniform_vec(&mut rng, dim + 1, -1.0, 1.0);
        let f = |p: &[f64]| recover_pmf_quad(&p[..dim], &p[dim..]).unwrap().pmf.probs;
        let err = fd_check(f, &point, &cot, |p, c| {
            let (gm, gs) = recover_pmf_quad_pullback(&p[..dim], &p[dim..], c).unwrap();
            gm.into_iter().chain(gs).collect()
        });
        assert!(err <= 1e-5, "{err}");
    }
}

#[test]
fn clamp_pullback_matches_fd() {
    let mut rng = ChaCha8Rng::seed_from_u64(38);
    for _ in 0..20 {
        let dim = rng.random_range(1..6);
        let point = uniform_vec(&mut rng, 2 * dim, -2.0, 2.0);
        let split = |p: &[f64]| ClampedParams { mu_raw: p[..dim].to_vec(), sigma_raw: p[dim..].to_vec() };
        let cot = uniform_vec(&mut rng, 2 * dim, -1.0, 1.0);
        let f = |p: &[f64]| {
            let (m, s) = clamp_params(&split(p)).unwrap();
            m.into_iter().chain(s).collect()
        };
        let err = fd_check(f, &point, &cot, |p, c| {
            let (gm, gs) = clamp_pullback(&split(p), &c[..dim], &c[dim..]).unwrap();
            gm.into_iter().chain(gs).collect()
        });
        assert!(err <= 1e-5, "{err}");
    }
}

#[test]
fn clamped_ranges() {
    let (mu, sigma) = clamp_params(&ClampedParams { mu_raw: vec![-50.0, 50.0], sigma_raw: vec![-50.0, 50.0] }).unwrap();
    assert!(mu.iter().all(|m| m.abs() <= 5.0));
    assert!(sigma.iter().all(|s| (0.5..=2.5).contains(s)));
}

#[test]
fn quadrature_is_only_for_softmax_pp() {
    let spec = TransformSpec::new(TransformKind::SbSoftmaxPp, 1.0).unwrap();
    let params = IgrParams::new(vec![0.0], vec![1.0], 0.5, spec).unwrap();
    assert!(matches!(recover_pmf_quad_params(&params), Err(Error::Contract(_))));
}

#[test]
fn counts_partition_the_draws() {
    let pmf = DiscretePmf::from_counts(&[3, 0, 5], 2, SupportKind::TruncatedInfinite).unwrap();
    assert_eq!(pmf.probs, vec![0.3, 0.0, 0.5]);
    assert_eq!(pmf.tail_mass, 0.2);
}

proptest! {
    #[test]
    fn permuting_parameters_permutes_the_pmf(
        mu in prop::collection::vec(-3.0f64..3.0, 2..7),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = uniform_vec(&mut rng, mu.len(), 0.5, 2.5);
        let mut order: Vec<usize> = (0..mu.len()).collect();
        order.reverse();
        order.rotate_left(seed as usize % mu.len());
        let base = recover_pmf_quad(&mu, &sigma).unwrap().pmf.probs;
        let pm: Vec<f64> = order.iter().map(|&i| mu[i]).collect();
        let ps: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
        let permuted = recover_pmf_quad(&pm, &ps).unwrap().pmf.probs;
        for (j, &i) in order.iter().enumerate() {
            prop_assert!((permuted[j] - base[i]).abs() <= 1e-12);
        }
        prop_assert!((permuted[mu.len()] - base[mu.len()]).abs() <= 1e-12);
    }

    #[test]
    fn distances_are_metrics_on_pmfs(
        a in prop::collection::vec(0.01f64..1.0, 4),
        b in prop::collection::vec(0.01f64..1.0, 4),
    ) {
        let norm = |v: &[f64]| { let s: f64 = v.iter().sum(); v.iter().map(|x| x / s).collect::<Vec<_>>() };
        let p = DiscretePmf::finite(norm(&a)).unwrap();
        let q = DiscretePmf::finite(norm(&b)).unwrap();
        let tv = p.total_variation(&q);
        prop_assert!((0.0..=1.0).contains(&tv));
        prop_assert!((tv - q.total_variation(&p)).abs() < 1e-15);
        prop_assert!(p.total_variation(&p) == 0.0);
        prop_assert!(p.kl_smoothed(&q, 1e-12) >= -1e-12);
        prop_assert!(p.l2(&q) >= 0.0);
    }
}
