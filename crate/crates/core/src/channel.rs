//! Spatiotemporal array manifold, per-anchor dictionaries, and synthetic
//! observations.
//!
//! Observations and dictionary columns are vectorized frequency-fastest:
//! element `m * n_freq + k` holds antenna `m` at subcarrier `k`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix3xX, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{build_layout, path_lengths, MvaPoint, PathId};
use crate::{CMatrix, CVector, Error, Result, C64, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n_freq: usize,
    #[serde(default = "default_c")]
    pub speed_of_light: f64,
}

fn default_c() -> f64 {
    SPEED_OF_LIGHT
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 6.175e9,
            bandwidth_hz: 500e6,
            n_freq: 6,
            speed_of_light: SPEED_OF_LIGHT,
        }
    }
}

impl RadioConfig {
    pub fn wavelength(&self) -> f64 {
        self.speed_of_light / self.carrier_hz
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth_hz / self.n_freq as f64
    }

    /// Baseband offsets `df * k` for `k = -(K-1)/2 ..= (K-1)/2`.
    pub fn freq_offsets(&self) -> Vec<f64> {
        let df = self.subcarrier_spacing();
        let center = (self.n_freq as f64 - 1.0) / 2.0;
        (0..self.n_freq)
            .map(|k| df * (k as f64 - center))
            .collect()
    }

    /// Same radio restricted to the carrier frequency only.
    pub fn carrier_only(&self) -> Self {
        Self {
            n_freq: 1,
            ..self.clone()
        }
    }

    pub fn with_subcarriers(&self, n_freq: usize) -> Self {
        Self {
            n_freq,
            ..self.clone()
        }
    }
}

/// Dictionary column for one path: unit-modulus phasors parameterized by the
/// per-antenna path lengths.
pub fn manifold_column(radio: &RadioConfig, lengths: &[f64]) -> CVector {
    let freqs: Vec<f64> = radio
        .freq_offsets()
        .into_iter()
        .map(|df| -2.0 * PI / radio.speed_of_light * (radio.carrier_hz + df))
        .collect();
    let kf = freqs.len();
    CVector::from_fn(kf * lengths.len(), |i, _| {
        let (m, k) = (i / kf, i % kf);
        C64::from_polar(1.0, freqs[k] * lengths[m])
    })
}

/// Paths excluded from inference, e.g. a single bounce at a surface of
/// limited extent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathMask {
    disabled: BTreeSet<(usize, usize)>,
}

impl PathMask {
    pub fn disable(mut self, path: PathId) -> Self {
        self.disabled.insert((path.s, path.s_prime));
        self
    }

    pub fn is_enabled(&self, path: PathId) -> bool {
        !self.disabled.contains(&(path.s, path.s_prime))
    }
}

/// A physical anchor: phase center and orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub center: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

/// Anchors, shared array template and surfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub anchors: Vec<Anchor>,
    pub template: Matrix3xX<f64>,
    pub mvas: Vec<MvaPoint>,
}

impl Scene {
    pub fn n_antennas(&self) -> usize {
        self.template.ncols()
    }

    pub fn n_surfaces(&self) -> usize {
        self.mvas.len()
    }

    pub fn build_dictionary(
        &self,
        radio: &RadioConfig,
        agent: &Vector3<f64>,
        anchor_id: usize,
        mask: &PathMask,
    ) -> Result<Dictionary> {
        let anchor = self.anchor(anchor_id)?;
        build_dictionary(radio, anchor, &self.template, &self.mvas, agent, mask)
    }

    fn anchor(&self, anchor_id: usize) -> Result<&Anchor> {
        self.anchors
            .get(anchor_id)
            .ok_or_else(|| Error::Dimension(format!("anchor {anchor_id} out of range")))
    }
}

/// Stacked manifold columns of all paths of one anchor.
#[derive(Debug, Clone)]
pub struct Dictionary {
    pub columns: CMatrix,
    pub path_ids: Vec<PathId>,
    pub enabled: Vec<bool>,
}

impl Dictionary {
    pub fn n_rows(&self) -> usize {
        self.columns.nrows()
    }

    pub fn n_enabled(&self) -> usize {
        self.enabled.iter().filter(|&&e| e).count()
    }

    /// Matrix of the enabled columns, in dictionary order.
    pub fn active(&self) -> CMatrix {
        if self.n_enabled() == self.columns.ncols() {
            return self.columns.clone();
        }
        let idx: Vec<usize> = (0..self.columns.ncols()).filter(|&k| self.enabled[k]).collect();
        self.columns.select_columns(idx.iter())
    }

    pub fn active_paths(&self) -> Vec<PathId> {
        self.path_ids
            .iter()
            .zip(&self.enabled)
            .filter(|(_, &e)| e)
            .map(|(p, _)| *p)
            .collect()
    }
}

/// Builds the `S^2 + 1` column dictionary of one anchor for an agent
/// position and MVA hypothesis.
pub fn build_dictionary(
    radio: &RadioConfig,
    anchor: &Anchor,
    template: &Matrix3xX<f64>,
    mvas: &[MvaPoint],
    agent: &Vector3<f64>,
    mask: &PathMask,
) -> Result<Dictionary> {
    let path_ids = PathId::enumerate(mvas.len());
    let rows = radio.n_freq * template.ncols();
    let mut columns = CMatrix::zeros(rows, path_ids.len());
    for (k, &path) in path_ids.iter().enumerate() {
        let layout = build_layout(&anchor.center, &anchor.rotation, template, path, mvas)?;
        columns.set_column(k, &manifold_column(radio, &path_lengths(&layout, agent)));
    }
    let enabled = path_ids.iter().map(|&p| mask.is_enabled(p)).collect();
    Ok(Dictionary {
        columns,
        path_ids,
        enabled,
    })
}

/// Axis-aligned box that blocks the direct path when the segment from the
/// agent to an anchor passes through it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Slab test for the closed segment `a -> b`.
    pub fn intersects_segment(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
        let d = b - a;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for i in 0..3 {
            if d[i].abs() < 1e-15 {
                if a[i] < self.min[i] || a[i] > self.max[i] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / d[i];
            let mut ta = (self.min[i] - a[i]) * inv;
            let mut tb = (self.max[i] - a[i]) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

/// Generative amplitude law for synthetic data: free-space `1/d` decay from
/// the (virtual) anchor center, a constant linear loss per bounce, and LoS
/// blocking by box obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeModel {
    pub reflection_loss: f64,
    pub reference_gain: f64,
    #[serde(default)]
    pub obstacles: Vec<Aabb>,
}

impl Default for AmplitudeModel {
    fn default() -> Self {
        Self {
            reflection_loss: 0.5,
            reference_gain: 1.0,
            obstacles: Vec::new(),
        }
    }
}

impl AmplitudeModel {
    pub fn los_blocked(&self, agent: &Vector3<f64>, anchor_center: &Vector3<f64>) -> bool {
        self.obstacles
            .iter()
            .any(|b| b.intersects_segment(agent, anchor_center))
    }

    /// Amplitudes of all `S^2 + 1` paths of `anchor` in dictionary order.
    pub fn amplitudes(
        &self,
        anchor: &Anchor,
        template: &Matrix3xX<f64>,
        mvas: &[MvaPoint],
        agent: &Vector3<f64>,
    ) -> Result<Vec<C64>> {
        PathId::enumerate(mvas.len())
            .into_iter()
            .map(|path| {
                if path.is_los() && self.los_blocked(agent, &anchor.center) {
                    return Ok(C64::new(0.0, 0.0));
                }
                let layout = build_layout(&anchor.center, &anchor.rotation, template, path, mvas)?;
                let d = (layout.center - agent).norm().max(1e-3);
                let gain = self.reference_gain / d * self.reflection_loss.powi(path.bounces() as i32);
                Ok(C64::new(gain, 0.0))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: CVector,
    pub anchor_id: usize,
    pub time_index: usize,
}

/// Noise-free channel `Psi alpha` of one anchor (all paths, no mask).
pub fn true_channel(
    radio: &RadioConfig,
    scene: &Scene,
    agent: &Vector3<f64>,
    anchor_id: usize,
    amps: &AmplitudeModel,
) -> Result<CVector> {
    let dict = scene.build_dictionary(radio, agent, anchor_id, &PathMask::default())?;
    let alpha = amps.amplitudes(scene.anchor(anchor_id)?, &scene.template, &scene.mvas, agent)?;
    Ok(&dict.columns * CVector::from_vec(alpha))
}

/// Draws a circularly-symmetric complex Gaussian vector with per-element
/// variance `var`.
pub fn complex_noise<R: Rng + ?Sized>(rng: &mut R, len: usize, var: f64) -> CVector {
    let s = (var / 2.0).sqrt();
    CVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(s * re, s * im)
    })
}

/// `y = Psi alpha + w` for one anchor with `w ~ CN(0, noise_var I)`.
pub fn synthesize_observation<R: Rng + ?Sized>(
    radio: &RadioConfig,
    scene: &Scene,
    agent: &Vector3<f64>,
    anchor_id: usize,
    amps: &AmplitudeModel,
    noise_var: f64,
    rng: &mut R,
) -> Result<CVector> {
    if !(noise_var >= 0.0) {
        return Err(Error::Dimension(format!("negative noise variance {noise_var}")));
    }
    let h = true_channel(radio, scene, agent, anchor_id, amps)?;
    if noise_var == 0.0 {
        return Ok(h);
    }
    let n = h.len();
    Ok(h + complex_noise(rng, n, noise_var))
}

/// Seeded wrapper around [`synthesize_observation`].
#[allow(clippy::too_many_arguments)]
pub fn synthesize_observation_seeded(
    radio: &RadioConfig,
    scene: &Scene,
    agent: &Vector3<f64>,
    anchor_id: usize,
    amps: &AmplitudeModel,
    noise_var: f64,
    seed: u64,
    time_index: usize,
) -> Result<Observation> {
    let mut rng = crate::rng::stream(
        seed,
        &[crate::rng::TAG_OBSERVATION, time_index as u64, anchor_id as u64],
    );
    let y = synthesize_observation(radio, scene, agent, anchor_id, amps, noise_var, &mut rng)?;
    Ok(Observation {
        y,
        anchor_id,
        time_index,
    })
}

/// Channel SNR averaged over anchors: mean of `(|h_j|^2 / M) / noise_j`.
/// `M` is the length of each channel vector.
pub fn channel_snr(truth: &[CVector], noise_vars: &[f64]) -> Result<f64> {
    if truth.len() != noise_vars.len() || truth.is_empty() {
        return Err(Error::Dimension(format!(
            "{} channels vs {} noise variances",
            truth.len(),
            noise_vars.len()
        )));
    }
    let sum: f64 = truth
        .iter()
        .zip(noise_vars)
        .map(|(h, &v)| crate::linalg::norm_sqr(h) / h.len() as f64 / v)
        .sum();
    Ok(sum / truth.len() as f64)
}
