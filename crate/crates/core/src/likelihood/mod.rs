//! Concentrated (profile) likelihoods of anchor observations given a scene
//! hypothesis.
//!
//! Nuisance parameters (path amplitudes, noise variance, and for the
//! stochastic model the source covariance) are replaced by their conditional
//! ML estimates. All densities are returned in the natural-log domain and
//! multi-anchor products become sums.

pub mod kernels;

use nalgebra::{Matrix3xX, Vector3};
use serde::{Deserialize, Serialize};

use crate::channel::{build_dictionary, Anchor, Observation, PathMask, RadioConfig};
use crate::geometry::MvaPoint;
use crate::linalg::{clamp_psd, hermitize, outer, Pinv};
use crate::{CMatrix, CVector, Error, Result};

/// Relative floor applied to noise-variance estimates, as a fraction of the
/// per-element observation power.
pub const SIGMA2_RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LikelihoodKind {
    #[serde(rename = "det")]
    Deterministic,
    #[default]
    #[serde(rename = "sto")]
    Stochastic,
}

impl std::str::FromStr for LikelihoodKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "det" | "deterministic" => Ok(Self::Deterministic),
            "sto" | "stochastic" => Ok(Self::Stochastic),
            other => Err(Error::config("likelihood", format!("unknown kind {other:?}"))),
        }
    }
}

/// Conditional ML estimates of the nuisance parameters.
#[derive(Debug, Clone)]
pub struct ConcentratedEstimates {
    pub alpha_hat: CVector,
    pub sigma2_hat: f64,
    pub p_hat: CMatrix,
    /// Set when negative eigenvalues of `p_hat` were floored at zero.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    /// Number of anchors whose source covariance needed eigenvalue flooring.
    pub clamped: usize,
}

/// Per-anchor concentration state: the pseudoinverse and `Psi^dagger y`
/// computed once and shared by every estimator.
#[derive(Debug, Clone)]
pub struct Concentrator<'a> {
    psi: &'a CMatrix,
    y: &'a CVector,
    pinv: Pinv,
    alpha_hat: CVector,
    energy: f64,
}

impl<'a> Concentrator<'a> {
    pub fn new(psi: &'a CMatrix, y: &'a CVector) -> Result<Self> {
        if psi.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "dictionary has {} rows, observation {}",
                psi.nrows(),
                y.len()
            )));
        }
        let pinv = Pinv::new(psi)?;
        let alpha_hat = &pinv.pinv * y;
        let energy = kernels::trace_noise_projection(psi, y, &alpha_hat);
        Ok(Self {
            psi,
            y,
            pinv,
            alpha_hat,
            energy,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.psi.nrows()
    }

    pub fn n_paths(&self) -> usize {
        self.psi.ncols()
    }

    pub fn alpha_hat(&self) -> &CVector {
        &self.alpha_hat
    }

    pub fn gram(&self) -> &CMatrix {
        &self.pinv.gram
    }

    pub fn noise_subspace_energy(&self) -> f64 {
        self.energy
    }

    fn guard(&self) -> Result<()> {
        if self.n_rows() <= self.n_paths() {
            return Err(Error::DivisionGuard {
                rows: self.n_rows(),
                paths: self.n_paths(),
            });
        }
        Ok(())
    }

    pub fn sigma2_deterministic(&self) -> Result<f64> {
        self.guard()?;
        Ok(self.energy / self.n_rows() as f64)
    }

    pub fn sigma2_stochastic(&self) -> Result<f64> {
        self.guard()?;
        Ok(self.energy / (self.n_rows() - self.n_paths()) as f64)
    }

    /// Floor that keeps a noise-variance estimate strictly positive.
    pub fn sigma2_floor(&self) -> f64 {
        let y_norm2: f64 = self.y.iter().map(|z| z.norm_sqr()).sum();
        (SIGMA2_RELATIVE_FLOOR * y_norm2 / self.n_rows() as f64).max(f64::MIN_POSITIVE)
    }

    /// `Psi^dagger (y y^H - sigma2 I) Psi^dagger^H`, evaluated as
    /// `alpha alpha^H - sigma2 (Psi^H Psi)^{-1}`.
    pub fn source_cov(&self, sigma2: f64) -> CMatrix {
        hermitize(&(outer(&self.alpha_hat, &self.alpha_hat) - self.pinv.gram_inv.scale(sigma2)))
    }

    /// Stochastic-model estimates with `p_hat` floored to PSD and
    /// `sigma2_hat` floored away from zero.
    pub fn stochastic_estimates(&self) -> Result<ConcentratedEstimates> {
        let sigma2_hat = self.sigma2_stochastic()?.max(self.sigma2_floor());
        let (p_hat, clamped) = clamp_psd(&self.source_cov(sigma2_hat));
        Ok(ConcentratedEstimates {
            alpha_hat: self.alpha_hat.clone(),
            sigma2_hat,
            p_hat,
            clamped,
        })
    }

    /// Deterministic profile log-density of this anchor.
    pub fn loglik_deterministic(&self) -> Result<f64> {
        let n = self.n_rows() as f64;
        let sigma2 = self.sigma2_deterministic()?.max(self.sigma2_floor());
        Ok(-n * (std::f64::consts::PI * sigma2).ln() - self.energy / sigma2)
    }

    /// Stochastic profile log-density of this anchor, with the determinant
    /// and the inverse evaluated through the `K x K` kernels.
    pub fn loglik_stochastic(&self) -> Result<(f64, bool)> {
        let est = self.stochastic_estimates()?;
        let n = self.n_rows();
        let log_det = kernels::log_det_sylvester(self.gram(), &est.p_hat, est.sigma2_hat, n)?;
        let residual = self.y - self.psi * &est.alpha_hat;
        let whitened = kernels::woodbury_apply(self.psi, &est.p_hat, self.gram(), est.sigma2_hat, &residual)?;
        let quad = residual.dotc(&whitened).re;
        let value = -(n as f64) * std::f64::consts::PI.ln() - log_det - quad;
        Ok((value, est.clamped))
    }

    pub fn loglik(&self, kind: LikelihoodKind) -> Result<(f64, bool)> {
        match kind {
            LikelihoodKind::Deterministic => Ok((self.loglik_deterministic()?, false)),
            LikelihoodKind::Stochastic => self.loglik_stochastic(),
        }
    }
}

/// `Psi^dagger y`.
pub fn concentrate_amplitudes(psi: &CMatrix, y: &CVector) -> Result<CVector> {
    Ok(Concentrator::new(psi, y)?.alpha_hat)
}

/// `tr(Pi_perp y y^H)` without forming the projector.
pub fn noise_subspace_energy(psi: &CMatrix, y: &CVector) -> Result<f64> {
    Ok(Concentrator::new(psi, y)?.energy)
}

/// Deterministic-model noise variance, `tr(Pi_perp R) / N`.
pub fn concentrate_noise_det(psi: &CMatrix, y: &CVector) -> Result<f64> {
    Concentrator::new(psi, y)?.sigma2_deterministic()
}

/// Stochastic-model noise variance, `tr(Pi_perp R) / (N - K)`.
pub fn concentrate_noise_sto(psi: &CMatrix, y: &CVector) -> Result<f64> {
    Concentrator::new(psi, y)?.sigma2_stochastic()
}

/// Unclamped source covariance estimate.
pub fn concentrate_source_cov(psi: &CMatrix, y: &CVector, sigma2_hat: f64) -> Result<CMatrix> {
    Ok(Concentrator::new(psi, y)?.source_cov(sigma2_hat))
}

/// Known infrastructure and radio settings used to evaluate hypotheses.
#[derive(Debug, Clone)]
pub struct InferenceModel {
    pub radio: RadioConfig,
    pub anchors: Vec<Anchor>,
    pub template: Matrix3xX<f64>,
    pub mask: PathMask,
}

/// Agent position plus surface map, i.e. everything a dictionary depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneHypothesis {
    pub position: Vector3<f64>,
    pub mvas: Vec<MvaPoint>,
}

impl InferenceModel {
    pub fn dictionary(&self, hyp: &SceneHypothesis, anchor_id: usize) -> Result<CMatrix> {
        let anchor = self
            .anchors
            .get(anchor_id)
            .ok_or_else(|| Error::Dimension(format!("anchor {anchor_id} out of range")))?;
        Ok(build_dictionary(&self.radio, anchor, &self.template, &hyp.mvas, &hyp.position, &self.mask)?.active())
    }

    /// Sum of per-anchor concentrated log-likelihoods.
    pub fn loglik(
        &self,
        kind: LikelihoodKind,
        hyp: &SceneHypothesis,
        observations: &[Observation],
    ) -> Result<LogLikelihood> {
        let mut total = LogLikelihood {
            value: 0.0,
            clamped: 0,
        };
        for obs in observations {
            let psi = self.dictionary(hyp, obs.anchor_id)?;
            let (v, c) = Concentrator::new(&psi, &obs.y)?.loglik(kind)?;
            total.value += v;
            total.clamped += usize::from(c);
        }
        Ok(total)
    }
}

pub fn loglik_deterministic(
    model: &InferenceModel,
    hyp: &SceneHypothesis,
    observations: &[Observation],
) -> Result<LogLikelihood> {
    model.loglik(LikelihoodKind::Deterministic, hyp, observations)
}

pub fn loglik_stochastic(
    model: &InferenceModel,
    hyp: &SceneHypothesis,
    observations: &[Observation],
) -> Result<LogLikelihood> {
    model.loglik(LikelihoodKind::Stochastic, hyp, observations)
}
