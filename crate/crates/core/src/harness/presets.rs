//! Built-in scenarios.
//!
//! `desk` is a small single-wall scene that runs in seconds; `hallway` is a
//! full-size scene with fifteen 8x8 arrays and two parallel walls.

use super::config::{
    AnchorConfig, ArrayConfig, FilterConfig, InferenceConfig, MetricsConfig, ScenarioConfig, SeedConfig,
    SurfaceConfig, TrajectoryConfig,
};
use crate::channel::{Aabb, AmplitudeModel, RadioConfig};
use crate::filter::{MotionModel, Regularization};
use crate::likelihood::LikelihoodKind;

/// Knobs of the desk scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeskOptions {
    pub snr_db: f64,
    pub n_steps: usize,
    pub n_particles: usize,
    /// Block the direct path to every anchor from this 1-based step on.
    pub block_from_step: Option<usize>,
    pub los_only: bool,
    /// Agent speed in m/s (one step is one second).
    pub speed: f64,
}

impl Default for DeskOptions {
    fn default() -> Self {
        Self {
            snr_db: 0.0,
            n_steps: 50,
            n_particles: 500,
            block_from_step: None,
            los_only: false,
            speed: 0.12,
        }
    }
}

const DESK_START: [f64; 3] = [-3.0, 0.0, 1.2];

/// Five 4x4 arrays, one wall at `y = 1.5`, four subcarriers, an agent walking
/// 6 m along +x through the origin. Three arrays hang between the walking
/// line and the wall, two look along the line from its ends.
///
/// The origin sits on the trajectory: MVA coordinates are relative to it,
/// and a far-away origin turns small MVA errors into large wall tilts.
pub fn desk(opts: DeskOptions) -> ScenarioConfig {
    let yaw = |center: [f64; 3], deg: f64| AnchorConfig {
        center,
        rotation: None,
        yaw_deg: Some(deg),
    };
    let [x0, y0, z0] = DESK_START;
    let length = opts.speed * opts.n_steps as f64;
    let obstacles = opts
        .block_from_step
        .map(|from| {
            // A box around the remaining trajectory shadows every direct path.
            let x_from = x0 + opts.speed * (from as f64 - 1.5);
            vec![Aabb {
                min: [x_from, y0 - 0.3, z0 - 0.3],
                max: [x0 + length, y0 + 0.3, z0 + 0.3],
            }]
        })
        .unwrap_or_default();
    ScenarioConfig {
        name: "desk".into(),
        n_steps: opts.n_steps,
        snr_at_start_db: opts.snr_db,
        likelihood: LikelihoodKind::Stochastic,
        los_only: opts.los_only,
        radio: RadioConfig {
            n_freq: 4,
            ..RadioConfig::default()
        },
        array: ArrayConfig {
            ny: 4,
            nz: 4,
            spacing_m: None,
        },
        anchors: vec![
            yaw([-4.0, 1.0, 2.0], -90.0),
            yaw([0.0, 1.0, 2.0], -90.0),
            yaw([4.0, 1.0, 2.0], -90.0),
            yaw([-6.5, 0.0, 2.0], 0.0),
            yaw([6.5, 0.0, 2.0], 180.0),
        ],
        surfaces: vec![SurfaceConfig {
            mva: [0.0, 3.0, 0.0],
            init_min: [-0.5, 2.5, -0.5],
            init_max: [0.5, 3.5, 0.5],
        }],
        amplitude: AmplitudeModel {
            obstacles,
            ..AmplitudeModel::default()
        },
        trajectory: TrajectoryConfig {
            waypoints: vec![DESK_START, [x0 + length, y0, z0]],
            speed: opts.speed,
        },
        filter: FilterConfig {
            n_particles: opts.n_particles,
            ess_threshold: 0.5,
            regularization: Regularization {
                bandwidth_scale: 0.7,
                ..Regularization::default()
            },
            position_min: [x0 - 1.0, y0 - 1.0, z0 - 0.5],
            position_max: [x0 + 1.0, y0 + 1.0, z0 + 0.5],
            velocity_min: [-0.3, -0.3],
            velocity_max: [0.3, 0.3],
        },
        motion: MotionModel {
            sigma_mva: 0.006,
            ..MotionModel::default()
        },
        inference: InferenceConfig::default(),
        metrics: MetricsConfig::default(),
        seeds: SeedConfig::default(),
    }
}

/// Fifteen 8x8 arrays along both walls of a 3 m wide corridor, six
/// subcarriers, SNR -6 dB at the first step, the agent walking a loop
/// around a shelf. An obstacle shadows the direct paths during the final
/// third of the loop. The double bounce (2,2) is left out of the inference
/// model.
pub fn hallway() -> ScenarioConfig {
    let mut anchors = Vec::new();
    for i in 0..8 {
        anchors.push(AnchorConfig {
            center: [1.0 + 2.0 * i as f64, 1.3, 2.2],
            rotation: None,
            yaw_deg: Some(-90.0),
        });
    }
    for i in 0..7 {
        anchors.push(AnchorConfig {
            center: [2.0 + 2.0 * i as f64, -1.3, 2.2],
            rotation: None,
            yaw_deg: Some(90.0),
        });
    }
    let z = 1.2;
    let waypoints = vec![
        [3.0, -0.6, z],
        [12.0, -0.6, z],
        [12.0, 0.6, z],
        [3.0, 0.6, z],
        [3.0, -0.6, z],
    ];
    ScenarioConfig {
        name: "hallway".into(),
        n_steps: 100,
        snr_at_start_db: -6.0,
        likelihood: LikelihoodKind::Stochastic,
        los_only: false,
        radio: RadioConfig::default(),
        array: ArrayConfig {
            ny: 8,
            nz: 8,
            spacing_m: None,
        },
        anchors,
        surfaces: vec![
            SurfaceConfig {
                mva: [0.0, 3.0, 0.0],
                init_min: [-0.3, 2.7, -0.3],
                init_max: [0.3, 3.3, 0.3],
            },
            SurfaceConfig {
                mva: [0.0, -3.0, 0.0],
                init_min: [-0.3, -3.3, -0.3],
                init_max: [0.3, -2.7, 0.3],
            },
        ],
        amplitude: AmplitudeModel {
            // Covers the last third of the loop (the return leg along y = 0.6
            // after x = 9 and the closing segment).
            obstacles: vec![Aabb {
                min: [2.8, 0.3, 0.9],
                max: [8.6, 0.9, 1.5],
            }],
            ..AmplitudeModel::default()
        },
        trajectory: TrajectoryConfig {
            waypoints,
            speed: 0.2,
        },
        filter: FilterConfig {
            n_particles: 1000,
            ess_threshold: 0.5,
            regularization: Regularization::default(),
            position_min: [2.0, -1.2, 0.8],
            position_max: [4.0, 0.0, 1.6],
            velocity_min: [-0.3, -0.3],
            velocity_max: [0.3, 0.3],
        },
        motion: MotionModel::default(),
        inference: InferenceConfig {
            disabled_paths: vec![[2, 2]],
        },
        metrics: MetricsConfig::default(),
        seeds: SeedConfig::default(),
    }
}
