//! Browser bindings for the desk scene.
//!
//! Each exported function returns flat `f64` arrays so the page can draw them
//! straight onto a canvas. The plain-Rust versions (suffix-free, returning
//! `Result<_, String>`) are what the native tests exercise.

use geocsi::beamform::{expected_reciprocity_loss, path_gain, perfect_path_gain, to_db};
use geocsi::channel::{complex_noise, manifold_column, RadioConfig};
use geocsi::harness::presets::{desk, DeskOptions};
use geocsi::harness::{run_tracking, RunSeeds, Scenario};
use geocsi::likelihood::{LikelihoodKind, SceneHypothesis};
use geocsi::rng::stream;
use nalgebra::Vector3;
use wasm_bindgen::prelude::*;

fn scenario(snr_db: f64, n_steps: usize, n_particles: usize) -> Result<Scenario, String> {
    if !(1..=200).contains(&n_steps) || !(10..=5000).contains(&n_particles) {
        return Err("steps must be in 1..=200 and particles in 10..=5000".into());
    }
    Scenario::new(&desk(DeskOptions {
        snr_db,
        n_steps,
        n_particles,
        ..DeskOptions::default()
    }))
    .map_err(|e| e.to_string())
}

/// Stochastic log-likelihood of the first desk observation on an
/// `n x n` horizontal grid of half-width `half_width` metres around the
/// true start, row-major with y varying slowest. The wall MVA is shifted by
/// `mva_shift` metres along y to show how a wrong map distorts the surface.
pub fn likelihood_grid(snr_db: f64, seed: u64, n: usize, half_width: f64, mva_shift: f64) -> Result<Vec<f64>, String> {
    if !(2..=121).contains(&n) || half_width <= 0.0 {
        return Err("grid size must be in 2..=121 and half-width positive".into());
    }
    let sc = scenario(snr_db, 1, 10)?;
    let obs = sc.observe(0, seed).map_err(|e| e.to_string())?;
    let truth = sc.truth_state(0);
    let mut mvas = truth.hypothesis().map_err(|e| e.to_string())?.mvas;
    for m in &mut mvas {
        *m = geocsi::geometry::MvaPoint::new(m.position() + Vector3::new(0.0, mva_shift, 0.0)).map_err(|e| e.to_string())?;
    }
    let p0 = truth.position();
    let step = 2.0 * half_width / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            let hyp = SceneHypothesis {
                position: p0 + Vector3::new(-half_width + ix as f64 * step, -half_width + iy as f64 * step, 0.0),
                mvas: mvas.clone(),
            };
            let ll = sc
                .inference
                .loglik(LikelihoodKind::Stochastic, &hyp, &obs)
                .map_or(f64::NEG_INFINITY, |l| l.value);
            out.push(ll);
        }
    }
    Ok(out)
}

/// Simulated mean reciprocity efficiency (dB) of one `m`-antenna array at
/// each SNR in `snr_db`, followed by the large-array law at the same SNRs.
pub fn reciprocity(m: usize, snr_db: &[f64], draws: usize, seed: u64) -> Result<Vec<f64>, String> {
    if m == 0 || draws == 0 {
        return Err("need at least one antenna and one draw".into());
    }
    let radio = RadioConfig::default().carrier_only();
    let mut rng = stream(seed, &[]);
    // Spread-out path lengths give a unit-modulus channel with scrambled phases.
    let lengths: Vec<f64> = (0..m).map(|i| 3.0 + 0.0137 * (i * i) as f64).collect();
    let h = manifold_column(&radio, &lengths);
    let ceiling = perfect_path_gain(std::slice::from_ref(&h));
    let mut sim = Vec::with_capacity(snr_db.len());
    for &db in snr_db {
        let var = 10f64.powf(-db / 10.0);
        let mean = (0..draws)
            .map(|_| {
                let noisy = &h + complex_noise(&mut rng, m, var);
                path_gain(&[noisy], std::slice::from_ref(&h)) / ceiling
            })
            .sum::<f64>()
            / draws as f64;
        sim.push(to_db(mean));
    }
    sim.extend(snr_db.iter().map(|db| to_db(expected_reciprocity_loss(10f64.powf(db / 10.0)))));
    Ok(sim)
}

/// One desk tracking run. Per step: true x, y, estimated x, y, and the
/// measured, predicted and fused gains relative to perfect CSI in dB.
pub fn track(snr_db: f64, seed: u64, n_steps: usize, n_particles: usize) -> Result<Vec<f64>, String> {
    let sc = scenario(snr_db, n_steps, n_particles)?;
    let rec = run_tracking(&sc, 0, RunSeeds::for_run(seed, seed.wrapping_add(1), 0)).map_err(|e| e.to_string())?;
    Ok(rec
        .steps
        .iter()
        .flat_map(|s| {
            let (t, x, e) = (s.truth.position(), s.estimate.position(), &s.efficiency);
            [
                t.x,
                t.y,
                x.x,
                x.y,
                e.relative_db(e.pg_measured),
                e.relative_db(e.pg_predicted),
                e.relative_db(e.pg_fused),
            ]
        })
        .collect())
}

#[wasm_bindgen(js_name = likelihoodGrid)]
pub fn likelihood_grid_js(snr_db: f64, seed: u32, n: usize, half_width: f64, mva_shift: f64) -> Result<Vec<f64>, JsError> {
    likelihood_grid(snr_db, seed.into(), n, half_width, mva_shift).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = reciprocityCurve)]
pub fn reciprocity_js(m: usize, snr_db: Vec<f64>, draws: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    reciprocity(m, &snr_db, draws, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trackDesk)]
pub fn track_js(snr_db: f64, seed: u32, n_steps: usize, n_particles: usize) -> Result<Vec<f64>, JsError> {
    track(snr_db, seed.into(), n_steps, n_particles).map_err(|e| JsError::new(&e))
}
