//! Scenario configuration (TOML, SI units).

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::channel::{Aabb, AmplitudeModel, RadioConfig};
use crate::filter::{MotionModel, Regularization};
use crate::geometry::{rotation_zyx, PathId};
use crate::likelihood::LikelihoodKind;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub n_steps: usize,
    /// Channel SNR at the first step; fixes the (time-constant) noise
    /// variance of every anchor.
    pub snr_at_start_db: f64,
    #[serde(default)]
    pub likelihood: LikelihoodKind,
    /// Infer with a LoS-only dictionary and no map.
    #[serde(default)]
    pub los_only: bool,
    pub radio: RadioConfig,
    pub array: ArrayConfig,
    pub anchors: Vec<AnchorConfig>,
    #[serde(default)]
    pub surfaces: Vec<SurfaceConfig>,
    #[serde(default)]
    pub amplitude: AmplitudeModel,
    pub trajectory: TrajectoryConfig,
    pub filter: FilterConfig,
    #[serde(default)]
    pub motion: MotionModel,
    #[serde(default)]
    pub inference: InferenceConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub seeds: SeedConfig,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub ny: usize,
    pub nz: usize,
    /// Element spacing in meters; half the carrier wavelength when absent.
    #[serde(default)]
    pub spacing_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorConfig {
    pub center: [f64; 3],
    /// Row-major 3x3 rotation. Takes precedence over `yaw_deg`.
    #[serde(default)]
    pub rotation: Option<[f64; 9]>,
    /// Rotation about +z in degrees (0 means broadside along +x).
    #[serde(default)]
    pub yaw_deg: Option<f64>,
}

impl AnchorConfig {
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        match (self.rotation, self.yaw_deg) {
            (Some(r), _) => Matrix3::from_row_slice(&r),
            (None, Some(yaw)) => rotation_zyx(yaw.to_radians(), 0.0, 0.0),
            (None, None) => Matrix3::identity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    /// True MVA position (mirror image of the origin).
    pub mva: [f64; 3],
    /// Initial particle box for this MVA.
    pub init_min: [f64; 3],
    pub init_max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub waypoints: Vec<[f64; 3]>,
    /// Constant speed along the polyline, m/s.
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub n_particles: usize,
    #[serde(default = "default_ess")]
    pub ess_threshold: f64,
    #[serde(default)]
    pub regularization: Regularization,
    pub position_min: [f64; 3],
    pub position_max: [f64; 3],
    pub velocity_min: [f64; 2],
    pub velocity_max: [f64; 2],
}

fn default_ess() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceConfig {
    /// Paths removed from the inference dictionary, as `[s, s']` pairs.
    #[serde(default)]
    pub disabled_paths: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// Leading fraction of steps excluded from the RMSE.
    pub convergence_fraction: f64,
    /// Error-CDF bin width in meters.
    pub cdf_resolution_m: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            convergence_fraction: 0.2,
            cdf_resolution_m: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub tracking: u64,
    pub evaluation: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            tracking: 1,
            evaluation: 2,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::config("toml", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn spacing(&self) -> f64 {
        self.array
            .spacing_m
            .unwrap_or_else(|| self.radio.wavelength() / 2.0)
    }

    pub fn disabled_paths(&self) -> Vec<PathId> {
        self.inference
            .disabled_paths
            .iter()
            .map(|&[s, t]| PathId::new(s, t))
            .collect()
    }

    pub fn obstacles(&self) -> &[Aabb] {
        &self.amplitude.obstacles
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive, got {v}")))
            }
        };
        if self.n_steps == 0 {
            return Err(Error::config("n_steps", "must be at least 1"));
        }
        if !self.snr_at_start_db.is_finite() {
            return Err(Error::config("snr_at_start_db", "must be finite"));
        }
        positive("radio.carrier_hz", self.radio.carrier_hz)?;
        positive("radio.bandwidth_hz", self.radio.bandwidth_hz)?;
        positive("radio.speed_of_light", self.radio.speed_of_light)?;
        if self.radio.n_freq == 0 {
            return Err(Error::config("radio.n_freq", "must be at least 1"));
        }
        if self.array.ny == 0 || self.array.nz == 0 {
            return Err(Error::config("array", "ny and nz must be at least 1"));
        }
        positive("array.spacing_m", self.spacing())?;
        if self.anchors.is_empty() {
            return Err(Error::config("anchors", "at least one anchor is required"));
        }
        for (i, a) in self.anchors.iter().enumerate() {
            let r = a.rotation_matrix();
            if (r.transpose() * r - Matrix3::identity()).abs().max() > 1e-6 {
                return Err(Error::config(format!("anchors[{i}].rotation"), "not orthogonal"));
            }
        }
        for (i, s) in self.surfaces.iter().enumerate() {
            if Vector3::from(s.mva).norm() < crate::geometry::MVA_MIN_NORM {
                return Err(Error::config(format!("surfaces[{i}].mva"), "degenerate MVA"));
            }
            if (0..3).any(|d| !(s.init_min[d] <= s.init_max[d])) {
                return Err(Error::config(format!("surfaces[{i}].init_min"), "exceeds init_max"));
            }
        }
        let s_count = self.surfaces.len();
        for (i, &[s, t]) in self.inference.disabled_paths.iter().enumerate() {
            let valid = (s == 0 && t == 0) || (1..=s_count).contains(&s) && (1..=s_count).contains(&t);
            if !valid {
                return Err(Error::config(
                    format!("inference.disabled_paths[{i}]"),
                    format!("path ({s},{t}) does not exist with {s_count} surfaces"),
                ));
            }
        }
        if self.trajectory.waypoints.is_empty() {
            return Err(Error::config("trajectory.waypoints", "at least one waypoint is required"));
        }
        if !(self.trajectory.speed >= 0.0) {
            return Err(Error::config("trajectory.speed", "must be non-negative"));
        }
        if self.filter.n_particles == 0 {
            return Err(Error::config("filter.n_particles", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.filter.ess_threshold) {
            return Err(Error::config("filter.ess_threshold", "must lie in [0, 1]"));
        }
        if (0..3).any(|d| !(self.filter.position_min[d] <= self.filter.position_max[d]))
            || (0..2).any(|d| !(self.filter.velocity_min[d] <= self.filter.velocity_max[d]))
        {
            return Err(Error::config("filter", "empty initialization box"));
        }
        positive("motion.dt", self.motion.dt)?;
        if ![self.motion.sigma_p, self.motion.sigma_v, self.motion.sigma_mva]
            .iter()
            .all(|s| *s >= 0.0)
        {
            return Err(Error::config("motion", "noise standard deviations must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.metrics.convergence_fraction) {
            return Err(Error::config("metrics.convergence_fraction", "must lie in [0, 1)"));
        }
        positive("metrics.cdf_resolution_m", self.metrics.cdf_resolution_m)?;
        if !(self.amplitude.reflection_loss > 0.0 && self.amplitude.reflection_loss <= 1.0) {
            return Err(Error::config("amplitude.reflection_loss", "must lie in (0, 1]"));
        }
        Ok(())
    }
}
