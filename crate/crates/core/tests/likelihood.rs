mod common;

use common::{cmatrix, cvector, det_gauss, hpsd, inv_gauss_jordan, max_abs};
use geocsi::channel::{Anchor, PathMask, RadioConfig};
use geocsi::geometry::{rotation_zyx, ura_template, MvaPoint};
use geocsi::likelihood::kernels::{log_det_sylvester, trace_noise_projection, woodbury_inverse};
use geocsi::likelihood::{
    concentrate_amplitudes, concentrate_noise_det, concentrate_noise_sto, concentrate_source_cov, Concentrator,
    InferenceModel, LikelihoodKind, SceneHypothesis,
};
use geocsi::rng::stream;
use geocsi::{CMatrix, CVector, C64};
use nalgebra::Vector3;
use rand::Rng;

/// `I - Psi (Psi^H Psi)^{-1} Psi^H`, formed densely.
fn projector_perp(psi: &CMatrix) -> CMatrix {
    let n = psi.nrows();
    let g_inv = inv_gauss_jordan(&psi.ad_mul(psi));
    CMatrix::identity(n, n) - psi * g_inv * psi.adjoint()
}

#[test]
fn kernels_match_dense_oracles() {
    let mut rng = stream(11, &[]);
    for case in 0..100 {
        let n = rng.random_range(6..=16);
        let k = rng.random_range(1..=5.min(n - 1));
        let psi = cmatrix(&mut rng, n, k);
        let y = cvector(&mut rng, n);
        let rank = rng.random_range(1..=k);
        let p = hpsd(&mut rng, k, rank);
        let sigma2 = rng.random_range(0.05..3.0);
        let gram = psi.ad_mul(&psi);

        let r = CMatrix::identity(n, n).scale(sigma2) + &psi * &p * psi.adjoint();
        let want_ld = det_gauss(&r).norm().ln();
        let got_ld = log_det_sylvester(&gram, &p, sigma2, n).unwrap();
        assert!((got_ld - want_ld).abs() <= 1e-8 * want_ld.abs().max(1.0), "case {case}: {got_ld} vs {want_ld}");

        let want_inv = inv_gauss_jordan(&r);
        let got_inv = woodbury_inverse(&psi, &p, &gram, sigma2).unwrap();
        assert!(max_abs(&(&got_inv - &want_inv)) <= 1e-8 * max_abs(&want_inv), "case {case}");

        let alpha = concentrate_amplitudes(&psi, &y).unwrap();
        let want_tr = (projector_perp(&psi) * &y * y.adjoint()).trace().re;
        let got_tr = trace_noise_projection(&psi, &y, &alpha);
        assert!((got_tr - want_tr).abs() <= 1e-8 * want_tr.abs().max(1e-300), "case {case}");
    }
}

#[test]
fn source_cov_matches_explicit_sample_covariance() {
    let mut rng = stream(12, &[]);
    for _ in 0..20 {
        let psi = cmatrix(&mut rng, 12, 5);
        let y = cvector(&mut rng, 12);
        let sigma2 = concentrate_noise_sto(&psi, &y).unwrap();
        let pinv = inv_gauss_jordan(&psi.ad_mul(&psi)) * psi.adjoint();
        let r_hat = &y * y.adjoint() - CMatrix::identity(12, 12).scale(sigma2);
        let want = &pinv * r_hat * pinv.adjoint();
        let got = concentrate_source_cov(&psi, &y, sigma2).unwrap();
        assert!(max_abs(&(&got - &want)) <= 1e-9 * max_abs(&want));
        assert!(max_abs(&(&got - got.adjoint())) <= 1e-10);
    }
}

#[test]
fn noise_estimators_ratio_at_full_size() {
    let mut rng = stream(13, &[]);
    let psi = cmatrix(&mut rng, 384, 5);
    let y = cvector(&mut rng, 384);
    let det = concentrate_noise_det(&psi, &y).unwrap();
    let sto = concentrate_noise_sto(&psi, &y).unwrap();
    assert!((sto / det - 384.0 / 379.0).abs() < 1e-12);
}

#[test]
fn orthonormal_columns_and_orthogonal_unit_observation() {
    let mut psi = CMatrix::zeros(6, 2);
    psi[(0, 0)] = C64::new(0.6, 0.0);
    psi[(1, 0)] = C64::new(0.0, 0.8);
    psi[(2, 1)] = C64::new(1.0, 0.0);
    let mut y = CVector::zeros(6);
    y[4] = C64::new(0.0, 1.0);
    let c = Concentrator::new(&psi, &y).unwrap();
    assert!((c.noise_subspace_energy() - 1.0).abs() < 1e-14);
}

/// Dense complex Gaussian log-density with mean `mu` and covariance `r`.
fn dense_log_density(y: &CVector, mu: &CVector, r: &CMatrix) -> f64 {
    let n = y.len() as f64;
    let d = y - mu;
    let q = d.dotc(&(inv_gauss_jordan(r) * &d)).re;
    -n * std::f64::consts::PI.ln() - det_gauss(r).norm().ln() - q
}

#[test]
fn stochastic_loglik_is_the_dense_density_at_the_estimates() {
    let mut rng = stream(14, &[]);
    for _ in 0..30 {
        let n = rng.random_range(8..=16);
        let k = rng.random_range(1..=4);
        let psi = cmatrix(&mut rng, n, k);
        let alpha = cvector(&mut rng, k).scale(2.0);
        let y = &psi * &alpha + cvector(&mut rng, n).scale(0.5);
        let c = Concentrator::new(&psi, &y).unwrap();
        let est = c.stochastic_estimates().unwrap();
        let r = CMatrix::identity(n, n).scale(est.sigma2_hat) + &psi * &est.p_hat * psi.adjoint();
        let want = dense_log_density(&y, &(&psi * &est.alpha_hat), &r);
        let (got, _) = c.loglik_stochastic().unwrap();
        assert!((got - want).abs() <= 1e-9 * want.abs());
    }
}

#[test]
fn deterministic_loglik_is_the_dense_white_density() {
    // One orthonormal column in C^4 and a hand-made observation.
    let psi = CMatrix::from_column_slice(4, 1, &[C64::new(0.5, 0.0); 4]);
    let y = CVector::from_vec(vec![
        C64::new(1.0, 0.5),
        C64::new(0.5, -0.5),
        C64::new(-0.25, 1.0),
        C64::new(0.0, 0.0),
    ]);
    let c = Concentrator::new(&psi, &y).unwrap();
    let alpha = psi.ad_mul(&y);
    let sigma2 = (&y - &psi * &alpha).norm_squared() / 4.0;
    let want = dense_log_density(&y, &(&psi * alpha), &CMatrix::identity(4, 4).scale(sigma2));
    assert!((c.loglik_deterministic().unwrap() - want).abs() < 1e-12);
    assert!((want - (-4.0 * (std::f64::consts::PI * sigma2).ln() - 4.0)).abs() < 1e-12);
}

#[test]
fn zero_source_covariance_gives_the_white_density() {
    let mut rng = stream(15, &[]);
    let psi = cmatrix(&mut rng, 10, 3);
    let gram = psi.ad_mul(&psi);
    let p = CMatrix::zeros(3, 3);
    assert!((log_det_sylvester(&gram, &p, 0.7, 10).unwrap() - 10.0 * 0.7f64.ln()).abs() < 1e-12);
    let inv = woodbury_inverse(&psi, &p, &gram, 0.7).unwrap();
    assert!(max_abs(&(inv - CMatrix::identity(10, 10).unscale(0.7))) < 1e-14);
}

fn small_model() -> (InferenceModel, Vec<MvaPoint>) {
    let anchors = vec![
        Anchor {
            center: Vector3::new(-3.0, 1.0, 2.0),
            rotation: rotation_zyx(-1.2, 0.0, 0.0),
        },
        Anchor {
            center: Vector3::new(3.0, 1.0, 2.0),
            rotation: rotation_zyx(-2.0, 0.0, 0.0),
        },
    ];
    let model = InferenceModel {
        radio: RadioConfig {
            n_freq: 3,
            ..RadioConfig::default()
        },
        anchors,
        template: ura_template(2, 2, 0.0243),
        mask: PathMask::default(),
    };
    (model, vec![MvaPoint::new(Vector3::new(0.0, 3.0, 0.0)).unwrap()])
}

fn observe(model: &InferenceModel, hyp: &SceneHypothesis, alpha: &[C64], noise: f64, seed: u64) -> Vec<geocsi::channel::Observation> {
    let mut rng = stream(seed, &[]);
    (0..model.anchors.len())
        .map(|j| {
            let psi = model.dictionary(hyp, j).unwrap();
            let n = psi.nrows();
            let y = psi * CVector::from_column_slice(alpha) + cvector(&mut rng, n).scale(noise.sqrt());
            geocsi::channel::Observation {
                y,
                anchor_id: j,
                time_index: 0,
            }
        })
        .collect()
}

#[test]
fn anchor_terms_add_up() {
    let (model, mvas) = small_model();
    let hyp = SceneHypothesis {
        position: Vector3::new(0.2, -0.1, 1.1),
        mvas,
    };
    let obs = observe(&model, &hyp, &[C64::new(1.0, 0.0), C64::new(0.3, 0.2)], 0.5, 3);
    for kind in [LikelihoodKind::Deterministic, LikelihoodKind::Stochastic] {
        let all = model.loglik(kind, &hyp, &obs).unwrap().value;
        let sum: f64 = obs
            .iter()
            .map(|o| model.loglik(kind, &hyp, std::slice::from_ref(o)).unwrap().value)
            .sum();
        assert!((all - sum).abs() <= 1e-12 * all.abs());
    }
}

#[test]
fn noiseless_peak_is_at_the_truth() {
    let (model, mvas) = small_model();
    let truth = Vector3::new(0.2, -0.1, 1.1);
    let hyp = SceneHypothesis {
        position: truth,
        mvas: mvas.clone(),
    };
    let obs = observe(&model, &hyp, &[C64::new(1.0, 0.0), C64::new(0.3, 0.2)], 0.0, 0);
    for kind in [LikelihoodKind::Deterministic, LikelihoodKind::Stochastic] {
        let mut best = (f64::NEG_INFINITY, Vector3::zeros());
        for i in -5..=5 {
            for j in -5..=5 {
                for k in -5..=5 {
                    let p = truth + Vector3::new(i as f64, j as f64, k as f64) * 0.05;
                    let h = SceneHypothesis {
                        position: p,
                        mvas: mvas.clone(),
                    };
                    let v = model.loglik(kind, &h, &obs).unwrap().value;
                    if v > best.0 {
                        best = (v, p);
                    }
                }
            }
        }
        assert!((best.1 - truth).norm() < 1e-12, "{kind:?} peak at {}", best.1);
    }
}

#[test]
fn truth_beats_half_metre_offset_at_zero_db() {
    let (model, mvas) = small_model();
    let truth = Vector3::new(0.2, -0.1, 1.1);
    let hyp = SceneHypothesis {
        position: truth,
        mvas: mvas.clone(),
    };
    let off = SceneHypothesis {
        position: truth + Vector3::new(0.5, 0.0, 0.0),
        mvas,
    };
    let alpha = [C64::new(1.0, 0.0), C64::new(0.3, 0.2)];
    // Unit amplitude dominates; noise variance 1 puts the channel SNR near 0 dB.
    let mut diffs: Vec<f64> = (0..100)
        .map(|s| {
            let obs = observe(&model, &hyp, &alpha, 1.0, 100 + s);
            model.loglik(LikelihoodKind::Stochastic, &hyp, &obs).unwrap().value
                - model.loglik(LikelihoodKind::Stochastic, &off, &obs).unwrap().value
        })
        .collect();
    diffs.sort_by(f64::total_cmp);
    assert!(diffs[50] > 0.0);
}
