//! Conjugate-beamforming efficiency for coherent joint transmission.
//!
//! The path gain of a set of per-anchor CSI estimates `h_hat_j` applied to
//! the true channels `h_j` is `|sum_j h_hat_j^H h_j / |h_hat_j||^2`; with
//! perfect CSI it reaches `(sum_j |h_j|)^2`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_noise, true_channel, AmplitudeModel, RadioConfig, Scene};
use crate::csi::csi_triple;
use crate::filter::{MotionModel, SceneState};
use crate::likelihood::{Concentrator, InferenceModel};
use crate::rng::{stream, TAG_CARRIER};
use crate::{CVector, Result, C64};

pub fn path_gain(weights: &[CVector], truth: &[CVector]) -> f64 {
    weights
        .iter()
        .zip(truth)
        .filter_map(|(w, h)| {
            let n = w.norm();
            (n > 0.0).then(|| w.dotc(h) / n)
        })
        .sum::<C64>()
        .norm_sqr()
}

/// `(sum_j |h_j|)^2`, the Cauchy-Schwarz ceiling of [`path_gain`].
pub fn perfect_path_gain(truth: &[CVector]) -> f64 {
    truth.iter().map(|h| h.norm()).sum::<f64>().powi(2)
}

/// Large-array efficiency of reciprocity beamforming on noisy CSI relative
/// to perfect CSI, `snr / (1 + snr)`.
pub fn expected_reciprocity_loss(snr: f64) -> f64 {
    if snr.is_infinite() {
        return 1.0;
    }
    snr / (1.0 + snr)
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Path gains of all CSI flavours at one time step (linear).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub time_index: usize,
    pub pg_perfect: f64,
    pub pg_measured: f64,
    pub pg_predicted: f64,
    pub pg_fused: f64,
    /// Previous step's measurement applied now; absent at the first step.
    pub pg_outdated: Option<f64>,
    /// Previous state estimate propagated one step; absent at the first step.
    pub pg_future_predicted: Option<f64>,
    pub snr: f64,
}

impl EfficiencyReport {
    /// Gain relative to perfect CSI in dB.
    pub fn relative_db(&self, pg: f64) -> f64 {
        to_db(pg / self.pg_perfect)
    }
}

/// Everything needed to synthesize and evaluate carrier-frequency CSI.
#[derive(Debug, Clone, Copy)]
pub struct CarrierSetup<'a> {
    pub truth: &'a Scene,
    pub amps: &'a AmplitudeModel,
    pub noise_vars: &'a [f64],
    /// Inference model with a carrier-only radio.
    pub model: &'a InferenceModel,
    pub motion: &'a MotionModel,
}

/// True and measured carrier CSI of all anchors at one step.
#[derive(Debug, Clone)]
pub struct CarrierSnapshot {
    pub truth: Vec<CVector>,
    pub measured: Vec<CVector>,
}

impl CarrierSetup<'_> {
    fn radio(&self) -> &RadioConfig {
        &self.model.radio
    }

    pub fn observe(&self, agent: &Vector3<f64>, step: usize, seed: u64) -> Result<CarrierSnapshot> {
        let mut truth = Vec::new();
        let mut measured = Vec::new();
        for j in 0..self.truth.anchors.len() {
            let h = true_channel(self.radio(), self.truth, agent, j, self.amps)?;
            let mut rng = stream(seed, &[TAG_CARRIER, step as u64, j as u64]);
            let w = complex_noise(&mut rng, h.len(), self.noise_vars[j]);
            measured.push(&h + w);
            truth.push(h);
        }
        Ok(CarrierSnapshot { truth, measured })
    }

    /// Efficiency of measured, predicted, fused, outdated and future
    /// predicted CSI at one step. `previous` holds the previous step's
    /// snapshot and state estimate.
    pub fn evaluate(
        &self,
        step: usize,
        now: &CarrierSnapshot,
        estimate: &SceneState,
        previous: Option<(&CarrierSnapshot, &SceneState)>,
    ) -> Result<EfficiencyReport> {
        let j_count = now.truth.len();
        let mut predicted = Vec::with_capacity(j_count);
        let mut fused = Vec::with_capacity(j_count);
        for (j, h_meas) in now.measured.iter().enumerate() {
            // Anchors whose dictionary is unusable at the estimate contribute
            // nothing rather than aborting the step.
            match csi_triple(self.model, estimate, j, h_meas) {
                Ok(t) => {
                    predicted.push(t.predicted);
                    fused.push(t.fused);
                }
                Err(_) => {
                    predicted.push(CVector::zeros(h_meas.len()));
                    fused.push(h_meas.clone());
                }
            }
        }
        let (pg_outdated, pg_future_predicted) = match previous {
            Some((prev, prev_est)) => {
                let future = self.future_csi(prev, prev_est);
                (
                    Some(path_gain(&prev.measured, &now.truth)),
                    Some(path_gain(&future, &now.truth)),
                )
            }
            None => (None, None),
        };
        let m = now.truth.first().map_or(1, |h| h.len()) as f64;
        let snr = now
            .truth
            .iter()
            .zip(self.noise_vars)
            .map(|(h, v)| h.norm_squared() / m / v)
            .sum::<f64>()
            / j_count as f64;
        Ok(EfficiencyReport {
            time_index: step,
            pg_perfect: perfect_path_gain(&now.truth),
            pg_measured: path_gain(&now.measured, &now.truth),
            pg_predicted: path_gain(&predicted, &now.truth),
            pg_fused: path_gain(&fused, &now.truth),
            pg_outdated,
            pg_future_predicted,
            snr,
        })
    }

    /// CSI predicted for the next step: amplitudes concentrated at the
    /// previous estimate, dictionary at the mean-propagated state.
    pub fn future_csi(&self, prev: &CarrierSnapshot, prev_est: &SceneState) -> Vec<CVector> {
        let next = self.motion.propagate_mean(prev_est);
        prev.measured
            .iter()
            .enumerate()
            .map(|(j, h)| {
                let run = || -> Result<CVector> {
                    let alpha = {
                        let psi = self.model.dictionary(&prev_est.hypothesis()?, j)?;
                        Concentrator::new(&psi, h)?.alpha_hat().clone()
                    };
                    let psi_next = self.model.dictionary(&next.hypothesis()?, j)?;
                    Ok(psi_next * alpha)
                };
                run().unwrap_or_else(|_| CVector::zeros(h.len()))
            })
            .collect()
    }
}

/// Efficiency of every CSI flavour along a trajectory, given the filter
/// estimate at each step. Returns one report per step (1-based
/// `time_index`); the first carries no aging figures.
pub fn aging_comparison(
    setup: &CarrierSetup<'_>,
    truth_positions: &[Vector3<f64>],
    estimates: &[SceneState],
    seed: u64,
) -> Result<Vec<EfficiencyReport>> {
    let mut out = Vec::with_capacity(truth_positions.len());
    let mut prev: Option<(CarrierSnapshot, &SceneState)> = None;
    for (n, (p, est)) in truth_positions.iter().zip(estimates).enumerate() {
        let snap = setup.observe(p, n, seed)?;
        let report = setup.evaluate(n + 1, &snap, est, prev.as_ref().map(|(s, e)| (s, *e)))?;
        out.push(report);
        prev = Some((snap, est));
    }
    Ok(out)
}
