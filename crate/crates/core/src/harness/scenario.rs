//! Materialized scenario: truth scene, trajectory, noise levels and the
//! inference models derived from a [`ScenarioConfig`].

use nalgebra::{Vector2, Vector3};

use super::config::ScenarioConfig;
use crate::beamform::CarrierSetup;
use crate::channel::{true_channel, channel_snr, Anchor, Observation, PathMask, Scene};
use crate::filter::SceneState;
use crate::geometry::{ura_template, MvaPoint};
use crate::likelihood::InferenceModel;
use crate::Result;

/// Agent ground truth at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthPoint {
    pub position: Vector3<f64>,
    pub velocity: Vector2<f64>,
}

/// Samples a piecewise-linear polyline at constant speed every `dt`
/// seconds. The agent stops at the last waypoint.
pub fn sample_trajectory(waypoints: &[Vector3<f64>], speed: f64, dt: f64, n_steps: usize) -> Vec<TruthPoint> {
    let seg_len: Vec<f64> = waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let total: f64 = seg_len.iter().sum();
    (0..n_steps)
        .map(|n| {
            let mut s = (n as f64 * dt * speed).min(total);
            for (i, &len) in seg_len.iter().enumerate() {
                let last = i + 1 == seg_len.len();
                if s <= len || last {
                    if len == 0.0 {
                        continue;
                    }
                    let dir = (waypoints[i + 1] - waypoints[i]) / len;
                    let moving = (n as f64 * dt * speed) < total;
                    let v = if moving { dir * speed } else { Vector3::zeros() };
                    return TruthPoint {
                        position: waypoints[i] + dir * s.min(len),
                        velocity: Vector2::new(v.x, v.y),
                    };
                }
                s -= len;
            }
            TruthPoint {
                position: *waypoints.last().expect("non-empty waypoints"),
                velocity: Vector2::zeros(),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub truth_scene: Scene,
    pub trajectory: Vec<TruthPoint>,
    pub noise_vars: Vec<f64>,
    /// Multi-subcarrier model used by the particle filter.
    pub inference: InferenceModel,
    /// Carrier-only model used for CSI prediction and fusion.
    pub carrier: InferenceModel,
    /// Surfaces tracked by the filter (zero for a LoS-only model).
    pub tracked_surfaces: usize,
}

impl Scenario {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let template = ura_template(config.array.ny, config.array.nz, config.spacing());
        let anchors: Vec<Anchor> = config
            .anchors
            .iter()
            .map(|a| Anchor {
                center: Vector3::from(a.center),
                rotation: a.rotation_matrix(),
            })
            .collect();
        let mvas = config
            .surfaces
            .iter()
            .map(|s| MvaPoint::new(Vector3::from(s.mva)))
            .collect::<Result<Vec<_>>>()?;
        let truth_scene = Scene {
            anchors: anchors.clone(),
            template: template.clone(),
            mvas,
        };
        let waypoints: Vec<Vector3<f64>> = config.trajectory.waypoints.iter().map(|w| Vector3::from(*w)).collect();
        let trajectory = sample_trajectory(&waypoints, config.trajectory.speed, config.motion.dt, config.n_steps);

        let carrier_radio = config.radio.carrier_only();
        let first: Vec<_> = (0..anchors.len())
            .map(|j| true_channel(&carrier_radio, &truth_scene, &trajectory[0].position, j, &config.amplitude))
            .collect::<Result<_>>()?;
        let snr0 = channel_snr(&first, &vec![1.0; anchors.len()])?;
        let noise = snr0 / 10f64.powf(config.snr_at_start_db / 10.0);
        let noise_vars = vec![noise; anchors.len()];

        let mask = if config.los_only {
            PathMask::default()
        } else {
            config
                .disabled_paths()
                .into_iter()
                .fold(PathMask::default(), PathMask::disable)
        };
        let inference = InferenceModel {
            radio: config.radio.clone(),
            anchors,
            template,
            mask,
        };
        let carrier = InferenceModel {
            radio: carrier_radio,
            ..inference.clone()
        };
        Ok(Self {
            config: config.clone(),
            truth_scene,
            trajectory,
            noise_vars,
            inference,
            carrier,
            tracked_surfaces: if config.los_only { 0 } else { config.surfaces.len() },
        })
    }

    pub fn n_anchors(&self) -> usize {
        self.truth_scene.anchors.len()
    }

    pub fn truth_state(&self, step: usize) -> SceneState {
        let t = &self.trajectory[step];
        let mvas: Vec<Vector3<f64>> = self.truth_scene.mvas[..self.tracked_surfaces]
            .iter()
            .map(|m| *m.position())
            .collect();
        SceneState::new(t.position, t.velocity, &mvas)
    }

    /// Bounds of the uniform particle initialization.
    pub fn init_bounds(&self) -> (SceneState, SceneState) {
        let f = &self.config.filter;
        let surfaces = &self.config.surfaces[..self.tracked_surfaces];
        let lo: Vec<Vector3<f64>> = surfaces.iter().map(|s| Vector3::from(s.init_min)).collect();
        let hi: Vec<Vector3<f64>> = surfaces.iter().map(|s| Vector3::from(s.init_max)).collect();
        (
            SceneState::new(Vector3::from(f.position_min), Vector2::from(f.velocity_min), &lo),
            SceneState::new(Vector3::from(f.position_max), Vector2::from(f.velocity_max), &hi),
        )
    }

    /// Noisy multi-subcarrier observations of every anchor at `step`.
    pub fn observe(&self, step: usize, seed: u64) -> Result<Vec<Observation>> {
        (0..self.n_anchors())
            .map(|j| {
                crate::channel::synthesize_observation_seeded(
                    &self.inference.radio,
                    &self.truth_scene,
                    &self.trajectory[step].position,
                    j,
                    &self.config.amplitude,
                    self.noise_vars[j],
                    seed,
                    step,
                )
            })
            .collect()
    }

    pub fn carrier_setup(&self) -> CarrierSetup<'_> {
        CarrierSetup {
            truth: &self.truth_scene,
            amps: &self.config.amplitude,
            noise_vars: &self.noise_vars,
            model: &self.carrier,
            motion: &self.config.motion,
        }
    }
}
