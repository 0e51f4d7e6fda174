//! Estimated, predicted and fused CSI at the carrier frequency.
//!
//! Predicted CSI re-synthesizes the channel from the state estimate and the
//! concentrated amplitudes; fused CSI combines it with the measurement in the
//! LMMSE form `h_p + R_p (sigma2 I + R_p)^{-1} (h_m - h_p)`, which never
//! inverts the rank-deficient prediction covariance `R_p = Psi P Psi^H`.

use crate::likelihood::{Concentrator, InferenceModel};
use crate::linalg::norm_sqr;
use crate::filter::SceneState;
use crate::{CMatrix, CVector, Error, Result};

#[derive(Debug, Clone)]
pub struct CsiTriple {
    pub measured: CVector,
    pub predicted: CVector,
    pub fused: CVector,
    pub r_meas_var: f64,
    /// Dictionary at the state estimate, carrier only.
    pub psi: CMatrix,
    /// Source covariance, so that `R_p = psi p_hat psi^H`.
    pub p_hat: CMatrix,
    pub alpha_hat: CVector,
    pub clamped: bool,
}

impl CsiTriple {
    /// Dense `R_p`.
    pub fn r_pred(&self) -> CMatrix {
        &self.psi * &self.p_hat * self.psi.adjoint()
    }
}

/// `Psi(x) alpha_hat` where `alpha_hat` is concentrated from the carrier
/// observation `measured`. `model.radio` must be carrier-only.
pub fn predict_csi(model: &InferenceModel, state: &SceneState, anchor_id: usize, measured: &CVector) -> Result<CVector> {
    let psi = model.dictionary(&state.hypothesis()?, anchor_id)?;
    let k = Concentrator::new(&psi, measured)?;
    Ok(&psi * k.alpha_hat())
}

/// LMMSE fusion of measured and predicted CSI.
pub fn fuse_csi(
    measured: &CVector,
    predicted: &CVector,
    psi: &CMatrix,
    p_hat: &CMatrix,
    sigma2: f64,
) -> Result<CVector> {
    let innovation = measured - predicted;
    if sigma2 > 0.0 {
        // h_f = h_p + R_p (sigma2 I + R_p)^{-1} r = h_m - sigma2 (sigma2 I + R_p)^{-1} r,
        // and sigma2 (sigma2 I + R_p)^{-1} r = r - Psi P (sigma2 I_K + G P)^{-1} Psi^H r.
        // This form never divides by sigma2 and stays accurate as it vanishes.
        let k = psi.ncols();
        if k == 0 {
            return Ok(predicted.clone());
        }
        let core = CMatrix::identity(k, k).scale(sigma2) + psi.ad_mul(psi) * p_hat;
        let z = core.lu().solve(&psi.ad_mul(&innovation)).ok_or(Error::BothDegenerate)?;
        return Ok(measured - (innovation - psi * (p_hat * z)));
    }
    // Noiseless measurement: defined only for invertible R_p, where
    // R_p R_p^{-1} = I and the measurement is returned unchanged.
    if sigma2 == 0.0 {
        // R_p has rank at most K, so it can only be invertible when K >= M.
        let r_p = psi * p_hat * psi.adjoint();
        let sv = r_p.singular_values();
        let full_rank = psi.ncols() >= psi.nrows() && sv.len() > 0 && sv.min() > 1e-12 * sv.max();
        if full_rank {
            return Ok(measured.clone());
        }
    }
    Err(Error::BothDegenerate)
}

/// Measured, predicted and fused CSI of one anchor given the carrier
/// observation and a state estimate.
pub fn csi_triple(model: &InferenceModel, state: &SceneState, anchor_id: usize, measured: &CVector) -> Result<CsiTriple> {
    let psi = model.dictionary(&state.hypothesis()?, anchor_id)?;
    let conc = Concentrator::new(&psi, measured)?;
    let est = conc.stochastic_estimates()?;
    let predicted = &psi * &est.alpha_hat;
    let fused = fuse_csi(measured, &predicted, &psi, &est.p_hat, est.sigma2_hat)?;
    Ok(CsiTriple {
        measured: measured.clone(),
        predicted,
        fused,
        r_meas_var: est.sigma2_hat,
        psi,
        p_hat: est.p_hat,
        alpha_hat: est.alpha_hat,
        clamped: est.clamped,
    })
}

/// Relative squared error `|a - b|^2 / |b|^2`.
pub fn relative_error(a: &CVector, b: &CVector) -> f64 {
    norm_sqr(&(a - b)) / norm_sqr(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use approx::assert_relative_eq;

    #[test]
    fn zero_prediction_covariance_keeps_prediction() {
        let psi = CMatrix::from_fn(3, 1, |r, _| C64::from_polar(1.0, r as f64));
        let hp = CVector::from_element(3, C64::new(1.0, 0.0));
        let hm = CVector::from_element(3, C64::new(0.0, 2.0));
        let f = fuse_csi(&hm, &hp, &psi, &CMatrix::zeros(1, 1), 0.5).unwrap();
        assert_relative_eq!((f - hp).norm(), 0.0);
    }

    #[test]
    fn scalar_convex_combination() {
        let psi = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let p = CMatrix::from_element(1, 1, C64::new(3.0, 0.0));
        let hm = CVector::from_element(1, C64::new(2.0, 1.0));
        let hp = CVector::from_element(1, C64::new(-1.0, 0.5));
        let s2 = 0.7;
        let f = fuse_csi(&hm, &hp, &psi, &p, s2).unwrap();
        let expect = (hm[0] * 3.0 + hp[0] * s2) / (3.0 + s2);
        assert_relative_eq!(f[0].re, expect.re, epsilon = 1e-14);
        assert_relative_eq!(f[0].im, expect.im, epsilon = 1e-14);
    }

    #[test]
    fn noiseless_measurement_dominates() {
        let psi = CMatrix::identity(2, 2);
        let p = CMatrix::identity(2, 2);
        let hm = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let hp = CVector::zeros(2);
        let f = fuse_csi(&hm, &hp, &psi, &p, 1e-9).unwrap();
        assert!((f - &hm).norm() < 1e-6);
        let exact = fuse_csi(&hm, &hp, &psi, &p, 0.0).unwrap();
        assert_eq!(exact, hm);
        let low_rank = CMatrix::from_element(2, 1, C64::new(1.0, 0.0));
        assert!(matches!(
            fuse_csi(&hm, &hp, &low_rank, &CMatrix::identity(1, 1), 0.0),
            Err(Error::BothDegenerate)
        ));
    }
}
