mod common;

use common::mean_se;
use geocsi::filter::{
    estimate, init_uniform, predict, resample_regularized, update, MotionModel, ParticleSet, Regularization,
    SceneState, Spread,
};
use geocsi::rng::stream;
use nalgebra::{DMatrix, Vector2, Vector3};
use proptest::prelude::*;
use rand::Rng;

fn st(p: [f64; 3], v: [f64; 2], mva: [f64; 3]) -> SceneState {
    SceneState::new(Vector3::from(p), Vector2::from(v), &[Vector3::from(mva)])
}

#[test]
fn uniform_init_is_centred_on_the_box() {
    let lo = st([4.0, -4.0, 0.0], [-1.0, -1.0], [0.0, 5.0, -1.0]);
    let hi = st([12.0, 0.0, 3.0], [1.0, 1.0], [1.0, 7.0, 1.0]);
    let ps = init_uniform(&lo, &hi, 100_000, 5).unwrap();
    assert!((ps.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    for d in 0..lo.dim() {
        let xs: Vec<f64> = ps.states.iter().map(|s| s.as_vector()[d]).collect();
        assert!(xs.iter().all(|&x| x >= lo.as_vector()[d] && x <= hi.as_vector()[d]));
        let (m, se) = mean_se(&xs);
        let centre = 0.5 * (lo.as_vector()[d] + hi.as_vector()[d]);
        assert!((m - centre).abs() < 3.0 * se, "dim {d}: {m} vs {centre} (se {se})");
    }
}

#[test]
fn inverted_box_is_rejected() {
    let lo = st([0.0; 3], [0.0; 2], [0.0, 1.0, 0.0]);
    let hi = st([1.0, -1.0, 1.0], [0.0; 2], [0.0, 1.0, 0.0]);
    assert!(init_uniform(&lo, &hi, 10, 0).is_err());
}

#[test]
fn prediction_noise_matches_process_covariance() {
    let motion = MotionModel::default();
    let x0 = st([1.0, 2.0, 1.0], [0.3, -0.2], [0.0, 4.0, 0.0]);
    let n = 100_000;
    let mut ps = ParticleSet::uniform(vec![x0.clone(); n]);
    predict(&mut ps, &motion, 9, 1);
    let mean = motion.propagate_mean(&x0);
    let q = motion.process_cov(x0.dim());
    let mut cov = DMatrix::<f64>::zeros(x0.dim(), x0.dim());
    for s in &ps.states {
        let d = s.as_vector() - mean.as_vector();
        cov += &d * d.transpose();
    }
    cov /= n as f64;
    for i in 0..x0.dim() {
        for j in 0..x0.dim() {
            let scale = (q[(i, i)] * q[(j, j)]).sqrt();
            assert!((cov[(i, j)] - q[(i, j)]).abs() <= 0.05 * scale, "Q[{i},{j}]");
        }
    }
}

#[test]
fn noiseless_motion_is_linear_in_time() {
    let one = MotionModel {
        sigma_p: 0.0,
        sigma_v: 0.0,
        sigma_mva: 0.0,
        dt: 0.5,
    };
    let two = MotionModel { dt: 1.0, ..one };
    let x = st([1.0, 2.0, 3.0], [1.0, 0.0], [0.0, 5.0, 0.0]);
    let a = one.propagate_mean(&one.propagate_mean(&x));
    let b = two.propagate_mean(&x);
    assert!((a.as_vector() - b.as_vector()).abs().max() < 1e-15);
    let mut ps = ParticleSet::uniform(vec![x.clone()]);
    predict(&mut ps, &two, 3, 1);
    assert_eq!(ps.states[0].position(), Vector3::new(2.0, 2.0, 3.0));
    assert_eq!(ps.states[0].mva(0), x.mva(0));
}

#[test]
fn particle_at_truth_takes_the_weight() {
    // Log-likelihood ratio of a noiseless observation is enormous; the
    // truth particle ends up with all of the mass.
    let truth = st([0.0; 3], [0.0; 2], [0.0, 3.0, 0.0]);
    let wrong = st([0.3, 0.0, 0.0], [0.0; 2], [0.0, 3.0, 0.0]);
    let mut ps = ParticleSet::uniform(vec![wrong, truth.clone()]);
    let ll = |s: &SceneState| -1e4 * (s.position() - truth.position()).norm_squared();
    update(&mut ps, ll);
    let w = ps.weights();
    let want = 1.0 / (1.0 + (-900.0f64).exp());
    assert!((w[1] - want).abs() < 1e-15);
}

#[test]
fn resampling_preserves_the_mean() {
    let mut rng = stream(31, &[]);
    let n = 5000;
    let states = (0..n)
        .map(|_| {
            st(
                [rng.random_range(0.0..2.0), rng.random_range(-1.0..1.0), 1.0],
                [0.0, 0.0],
                [0.0, rng.random_range(2.5..3.5), 0.0],
            )
        })
        .collect();
    let mut ps = ParticleSet::uniform(states);
    update(&mut ps, |s| -4.0 * (s.position() - Vector3::new(1.5, 0.0, 1.0)).norm_squared());
    let before = estimate(&ps).0;
    let rule = Regularization::default();
    let bw = rule.bandwidths(&ps);
    let rep = resample_regularized(&mut ps, &rule, 0.99, 4, 1);
    assert!(rep.resampled);
    let after = estimate(&ps).0;
    for d in 0..before.dim() {
        // Systematic resampling adds its own (small) error on top of the jitter.
        let tol = 3.0 * bw[d].max(1e-12) / (n as f64).sqrt() + 0.01;
        assert!((after.as_vector()[d] - before.as_vector()[d]).abs() <= tol, "dim {d}");
    }
}

#[test]
fn weighted_spread_gives_exact_copies_of_a_lone_particle() {
    let a = st([1.0, 1.0, 1.0], [0.0; 2], [0.0, 3.0, 0.0]);
    let b = st([5.0, 1.0, 1.0], [0.0; 2], [0.0, 3.0, 0.0]);
    let mut ps = ParticleSet::uniform(vec![a.clone(), b]);
    ps.log_weights = vec![0.0, f64::NEG_INFINITY];
    let rule = Regularization {
        spread: Spread::Weighted,
        ..Regularization::default()
    };
    assert!(resample_regularized(&mut ps, &rule, 0.9, 1, 1).resampled);
    assert!(ps.states.iter().all(|s| *s == a));
}

fn explicit_estimate(ps: &ParticleSet) -> (Vec<f64>, Vec<Vec<f64>>) {
    let w = ps.weights();
    let dim = ps.states[0].dim();
    let mut mean = vec![0.0; dim];
    for (s, wi) in ps.states.iter().zip(&w) {
        for d in 0..dim {
            mean[d] += wi * s.as_vector()[d];
        }
    }
    let mut cov = vec![vec![0.0; dim]; dim];
    for (s, wi) in ps.states.iter().zip(&w) {
        for i in 0..dim {
            for j in 0..dim {
                cov[i][j] += wi * (s.as_vector()[i] - mean[i]) * (s.as_vector()[j] - mean[j]);
            }
        }
    }
    (mean, cov)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_stay_on_the_simplex(
        lls in prop::collection::vec(-1e3..1e3f64, 1..50), seed in 0u64..1000,
    ) {
        let n = lls.len();
        let states: Vec<_> = (0..n).map(|i| st([i as f64, 0.0, 0.0], [0.0; 2], [0.0, 3.0, 0.0])).collect();
        let mut ps = ParticleSet::uniform(states);
        update(&mut ps, |s| lls[s.position().x as usize]);
        prop_assert!((ps.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        resample_regularized(&mut ps, &Regularization::default(), 0.5, seed, 1);
        prop_assert!((ps.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert_eq!(ps.len(), n);
    }

    #[test]
    fn estimate_matches_explicit_loops(
        xs in prop::collection::vec((prop::array::uniform3(-5.0..5.0f64), -3.0..3.0f64), 1..20),
    ) {
        let states: Vec<_> = xs.iter().map(|(p, _)| st(*p, [p[0], -p[1]], [0.0, 3.0 + p[2], 0.0])).collect();
        let mut ps = ParticleSet::uniform(states);
        let lls: Vec<f64> = xs.iter().map(|(_, l)| *l).collect();
        ps.log_weights = lls.iter().map(|l| l - lls.iter().map(|v| v.exp()).sum::<f64>().ln()).collect();
        let (mean, cov) = estimate(&ps);
        let (m2, c2) = explicit_estimate(&ps);
        for i in 0..mean.dim() {
            prop_assert!((mean.as_vector()[i] - m2[i]).abs() < 1e-10);
            for j in 0..mean.dim() {
                prop_assert!((cov[(i, j)] - c2[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fixed_seeds_repeat_bit_for_bit(seed in 0u64..10_000) {
        let lo = st([0.0; 3], [-1.0; 2], [0.0, 2.0, 0.0]);
        let hi = st([1.0; 3], [1.0; 2], [0.5, 3.0, 0.5]);
        let run = || {
            let mut ps = init_uniform(&lo, &hi, 64, seed).unwrap();
            predict(&mut ps, &MotionModel::default(), seed, 1);
            update(&mut ps, |s| -s.position().norm_squared() * 50.0);
            resample_regularized(&mut ps, &Regularization::default(), 0.9, seed, 1);
            ps
        };
        prop_assert_eq!(run(), run());
    }
}
