//! Low-rank kernels for the `N x N` spatiotemporal covariance
//! `R = sigma2 I + Psi P Psi^H`, where `N = K_f M` is large and the number
//! of paths `K` is small. Nothing here forms an `N x N` matrix except
//! [`woodbury_inverse`], which exists for diagnostics and tests.

use crate::linalg::{hermitize, log_det_hpd};
use crate::{CMatrix, CVector, Error, Result, C64};

/// `tr(Pi_perp y y^H) = |y|^2 - (y^H Psi)(Psi^dagger y)`.
///
/// `alpha_hat` must be `Psi^dagger y`. The result is clamped at zero to
/// absorb rounding when `y` lies in the column space.
pub fn trace_noise_projection(psi: &CMatrix, y: &CVector, alpha_hat: &CVector) -> f64 {
    let y_norm2: f64 = y.iter().map(|z| z.norm_sqr()).sum();
    let proj: C64 = psi.ad_mul(y).dotc(alpha_hat);
    (y_norm2 - proj.re).max(0.0)
}

/// `ln |sigma2 I_N + Psi P Psi^H|` through the `K x K` determinant
/// `|I_K + P G / sigma2|` with `G = Psi^H Psi`.
///
/// Evaluated in the Hermitian form `|I_K + L^H P L / sigma2|` with
/// `G = L L^H`, which has the same determinant.
pub fn log_det_sylvester(gram: &CMatrix, p: &CMatrix, sigma2: f64, n: usize) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::BothDegenerate);
    }
    let k = gram.nrows();
    let base = n as f64 * sigma2.ln();
    if k == 0 {
        return Ok(base);
    }
    let l = gram
        .clone()
        .cholesky()
        .ok_or(Error::RankDeficientDictionary { ratio: 0.0 })?
        .l();
    let core = CMatrix::identity(k, k) + hermitize(&(l.adjoint() * p * &l)).unscale(sigma2);
    let ld = log_det_hpd(&core).ok_or(Error::BothDegenerate)?;
    Ok(base + ld)
}

/// `(sigma2 I_N + Psi P Psi^H)^{-1} r` using the push-through form of the
/// matrix inversion lemma,
/// `(1/sigma2) [r - Psi P (sigma2 I_K + G P)^{-1} Psi^H r]`,
/// which stays valid for singular `P`.
pub fn woodbury_apply(
    psi: &CMatrix,
    p: &CMatrix,
    gram: &CMatrix,
    sigma2: f64,
    r: &CVector,
) -> Result<CVector> {
    if !(sigma2 > 0.0) {
        return Err(Error::BothDegenerate);
    }
    let k = gram.nrows();
    if k == 0 {
        return Ok(r.unscale(sigma2));
    }
    let core = CMatrix::identity(k, k).scale(sigma2) + gram * p;
    let lu = core.lu();
    let rhs = psi.ad_mul(r);
    let z = lu.solve(&rhs).ok_or(Error::BothDegenerate)?;
    Ok((r - psi * (p * z)).unscale(sigma2))
}

/// Dense `N x N` inverse assembled from the low-rank form.
pub fn woodbury_inverse(psi: &CMatrix, p: &CMatrix, gram: &CMatrix, sigma2: f64) -> Result<CMatrix> {
    if !(sigma2 > 0.0) {
        return Err(Error::BothDegenerate);
    }
    let n = psi.nrows();
    let k = gram.nrows();
    let eye = CMatrix::identity(n, n);
    if k == 0 {
        return Ok(eye.unscale(sigma2));
    }
    let core = CMatrix::identity(k, k).scale(sigma2) + gram * p;
    let inner = core.try_inverse().ok_or(Error::BothDegenerate)?;
    Ok((eye - psi * p * inner * psi.adjoint()).unscale(sigma2))
}
