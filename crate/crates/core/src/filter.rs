//! Regularized particle filter over the joint agent + MVA state.
//!
//! State layout: `[p_x, p_y, p_z, v_x, v_y, mva_1 (3), ..., mva_S (3)]`.
//! Log-weights are kept normalized so that `logsumexp(log_weights) == 0`.

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::MvaPoint;
use crate::likelihood::SceneHypothesis;
use crate::rng::{stream, TAG_INIT, TAG_PREDICT, TAG_RESAMPLE};
use crate::{Error, Result};

pub const AGENT_DIM: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneState {
    x: DVector<f64>,
}

impl SceneState {
    pub fn new(position: Vector3<f64>, velocity: Vector2<f64>, mvas: &[Vector3<f64>]) -> Self {
        let mut x = DVector::zeros(AGENT_DIM + 3 * mvas.len());
        x.fixed_rows_mut::<3>(0).copy_from(&position);
        x.fixed_rows_mut::<2>(3).copy_from(&velocity);
        for (s, m) in mvas.iter().enumerate() {
            x.fixed_rows_mut::<3>(AGENT_DIM + 3 * s).copy_from(m);
        }
        Self { x }
    }

    pub fn from_vector(x: DVector<f64>) -> Result<Self> {
        if x.len() < AGENT_DIM || (x.len() - AGENT_DIM) % 3 != 0 {
            return Err(Error::Dimension(format!("state length {} is not 5 + 3S", x.len())));
        }
        Ok(Self { x })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn n_surfaces(&self) -> usize {
        (self.x.len() - AGENT_DIM) / 3
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn position(&self) -> Vector3<f64> {
        self.x.fixed_rows::<3>(0).into_owned()
    }

    pub fn velocity(&self) -> Vector2<f64> {
        self.x.fixed_rows::<2>(3).into_owned()
    }

    /// MVA of surface `s` (0-based).
    pub fn mva(&self, s: usize) -> Vector3<f64> {
        self.x.fixed_rows::<3>(AGENT_DIM + 3 * s).into_owned()
    }

    pub fn mvas(&self) -> Vec<Vector3<f64>> {
        (0..self.n_surfaces()).map(|s| self.mva(s)).collect()
    }

    pub fn hypothesis(&self) -> Result<SceneHypothesis> {
        Ok(SceneHypothesis {
            position: self.position(),
            mvas: self
                .mvas()
                .into_iter()
                .map(MvaPoint::new)
                .collect::<Result<Vec<_>>>()?,
        })
    }
}

/// Constant-velocity model for the horizontal agent motion with a random
/// walk on the vertical position and the MVAs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    pub dt: f64,
    pub sigma_p: f64,
    pub sigma_v: f64,
    pub sigma_mva: f64,
}

impl Default for MotionModel {
    fn default() -> Self {
        Self {
            dt: 1.0,
            sigma_p: 0.01,
            sigma_v: 0.05,
            sigma_mva: 0.001,
        }
    }
}

impl MotionModel {
    pub fn transition(&self, dim: usize) -> DMatrix<f64> {
        let mut f = DMatrix::identity(dim, dim);
        f[(0, 3)] = self.dt;
        f[(1, 4)] = self.dt;
        f
    }

    pub fn process_std(&self, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|i| match i {
                0..=2 => self.sigma_p,
                3 | 4 => self.sigma_v,
                _ => self.sigma_mva,
            })
            .collect()
    }

    pub fn process_cov(&self, dim: usize) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            dim,
            self.process_std(dim).into_iter().map(|s| s * s),
        ))
    }

    /// `F x` without forming `F`.
    pub fn propagate_mean(&self, state: &SceneState) -> SceneState {
        let mut x = state.x.clone();
        x[0] += self.dt * state.x[3];
        x[1] += self.dt * state.x[4];
        SceneState { x }
    }

    /// `F x + q` with `q ~ N(0, Q)`.
    pub fn sample<R: Rng + ?Sized>(&self, state: &SceneState, rng: &mut R) -> SceneState {
        let mut next = self.propagate_mean(state);
        for (i, s) in self.process_std(state.dim()).into_iter().enumerate() {
            if s > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                next.x[i] += s * z;
            }
        }
        next
    }
}

/// Weighted random measure approximating the state posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub states: Vec<SceneState>,
    pub log_weights: Vec<f64>,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn uniform(states: Vec<SceneState>) -> Self {
        let lw = -(states.len() as f64).ln();
        let n = states.len();
        Self {
            states,
            log_weights: vec![lw; n],
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    /// Effective sample size `1 / sum w^2`.
    pub fn ess(&self) -> f64 {
        1.0 / self.weights().iter().map(|w| w * w).sum::<f64>()
    }

    fn normalize(&mut self) -> bool {
        let max = self
            .log_weights
            .iter()
            .copied()
            .filter(|l| l.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            let lw = -(self.len() as f64).ln();
            self.log_weights.iter_mut().for_each(|l| *l = lw);
            return false;
        }
        let lse = max
            + self
                .log_weights
                .iter()
                .map(|&l| if l.is_finite() { (l - max).exp() } else { 0.0 })
                .sum::<f64>()
                .ln();
        for l in &mut self.log_weights {
            *l = if l.is_finite() { *l - lse } else { f64::NEG_INFINITY };
        }
        true
    }
}

/// Draws `n` particles uniformly from the box `[min, max]` with equal
/// weights.
pub fn init_uniform(min: &SceneState, max: &SceneState, n: usize, seed: u64) -> Result<ParticleSet> {
    if min.dim() != max.dim() {
        return Err(Error::Dimension("bounds have different dimensions".into()));
    }
    if let Some(dim) = (0..min.dim()).find(|&i| !(min.x[i] <= max.x[i])) {
        return Err(Error::EmptyBox { dim });
    }
    let mut rng = stream(seed, &[TAG_INIT]);
    let states = (0..n)
        .map(|_| {
            let x = DVector::from_fn(min.dim(), |i, _| {
                let u: f64 = rng.random();
                min.x[i] + u * (max.x[i] - min.x[i])
            });
            SceneState { x }
        })
        .collect();
    Ok(ParticleSet::uniform(states))
}

/// Propagates every particle through the motion model. Weights are
/// untouched; particle `i` at `step` draws from its own RNG stream.
pub fn predict(ps: &mut ParticleSet, motion: &MotionModel, seed: u64, step: usize) {
    ps.states.par_iter_mut().enumerate().for_each(|(i, s)| {
        let mut rng = stream(seed, &[TAG_PREDICT, step as u64, i as u64]);
        *s = motion.sample(s, &mut rng);
    });
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateReport {
    /// No particle had a finite likelihood; weights were reset to uniform.
    pub degenerate: bool,
    pub max_loglik: f64,
}

/// Bayes update: adds per-particle log-likelihoods to the log-weights and
/// renormalizes. Non-finite log-likelihoods give zero weight.
pub fn update<F>(ps: &mut ParticleSet, loglik: F) -> UpdateReport
where
    F: Fn(&SceneState) -> f64 + Sync,
{
    let ll: Vec<f64> = ps.states.par_iter().map(|s| loglik(s)).collect();
    let max_loglik = ll
        .iter()
        .copied()
        .filter(|l| l.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    for (w, l) in ps.log_weights.iter_mut().zip(&ll) {
        *w = if l.is_finite() { *w + l } else { f64::NEG_INFINITY };
    }
    let ok = ps.normalize();
    UpdateReport {
        degenerate: !ok,
        max_loglik,
    }
}

/// Which spread of the particle cloud scales the jitter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spread {
    /// Unweighted std of the cloud before resampling. Keeps exploring in
    /// directions the likelihood barely constrains, e.g. the MVAs right
    /// after the first update has collapsed the weights onto one particle.
    #[default]
    Cloud,
    /// Weighted (posterior) std; shrinks to zero when the ESS collapses.
    Weighted,
}

/// Kernel bandwidth rule for the regularization jitter: Silverman's factor
/// times a per-dimension spread of the particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    /// Multiplier on the Silverman bandwidth.
    pub bandwidth_scale: f64,
    #[serde(default)]
    pub spread: Spread,
}

impl Default for Regularization {
    fn default() -> Self {
        Self {
            bandwidth_scale: 1.0,
            spread: Spread::Cloud,
        }
    }
}

impl Regularization {
    /// Silverman's rule for a Gaussian kernel in `dim` dimensions.
    pub fn silverman_factor(dim: usize, n: usize) -> f64 {
        let d = dim as f64;
        (4.0 / (n as f64 * (d + 2.0))).powf(1.0 / (d + 4.0))
    }

    /// Per-dimension jitter standard deviations.
    pub fn bandwidths(&self, ps: &ParticleSet) -> Vec<f64> {
        let cov = match self.spread {
            Spread::Cloud => estimate(&ParticleSet::uniform(ps.states.clone())).1,
            Spread::Weighted => estimate(ps).1,
        };
        let h = self.bandwidth_scale * Self::silverman_factor(cov.nrows(), ps.len());
        cov.diagonal().iter().map(|v| h * v.max(0.0).sqrt()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleReport {
    pub ess: f64,
    pub resampled: bool,
}

/// Systematic resampling followed by Gaussian kernel jitter, triggered when
/// the ESS drops below `ess_threshold * N`.
pub fn resample_regularized(
    ps: &mut ParticleSet,
    rule: &Regularization,
    ess_threshold: f64,
    seed: u64,
    step: usize,
) -> ResampleReport {
    let n = ps.len();
    let ess = ps.ess();
    if n == 0 || ess >= ess_threshold * n as f64 {
        return ResampleReport {
            ess,
            resampled: false,
        };
    }
    let bw = rule.bandwidths(ps);
    let weights = ps.weights();
    let mut rng = stream(seed, &[TAG_RESAMPLE, step as u64]);
    let u0: f64 = rng.random::<f64>() / n as f64;
    let mut picks = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut j = 0;
    for i in 0..n {
        let u = u0 + i as f64 / n as f64;
        while u > cum && j + 1 < n {
            j += 1;
            cum += weights[j];
        }
        picks.push(j);
    }
    let states: Vec<SceneState> = picks
        .par_iter()
        .enumerate()
        .map(|(i, &j)| {
            let mut rng = stream(seed, &[TAG_RESAMPLE, step as u64, i as u64]);
            let mut x = ps.states[j].x.clone();
            for (d, &b) in bw.iter().enumerate() {
                if b > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    x[d] += b * z;
                }
            }
            SceneState { x }
        })
        .collect();
    *ps = ParticleSet::uniform(states);
    ResampleReport {
        ess,
        resampled: true,
    }
}

/// Weighted mean (MMSE estimate) and weighted covariance of the particles.
pub fn estimate(ps: &ParticleSet) -> (SceneState, DMatrix<f64>) {
    let dim = ps.states.first().map_or(AGENT_DIM, SceneState::dim);
    let weights = ps.weights();
    let mut mean = DVector::zeros(dim);
    for (s, &w) in ps.states.iter().zip(&weights) {
        mean.axpy(w, &s.x, 1.0);
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for (s, &w) in ps.states.iter().zip(&weights) {
        if w > 0.0 {
            let d = &s.x - &mean;
            cov.ger(w, &d, &d, 1.0);
        }
    }
    (SceneState { x: mean }, cov)
}

/// Per-step filter diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub ess: f64,
    pub estimate: SceneState,
    pub cov_diag: Vec<f64>,
}
