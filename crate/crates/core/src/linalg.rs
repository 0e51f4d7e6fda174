//! Small complex linear-algebra helpers shared by the likelihood and CSI code.

use nalgebra::{DMatrix, DVector};

use crate::{CMatrix, CVector, Error, Result, C64};

/// Relative singular-value threshold below which a dictionary is treated as
/// rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Thin SVD based pseudoinverse of a tall matrix with full column rank.
///
/// Only the `K x K` Gram inverse and `K`-length products are ever formed,
/// never an `N x N` projector.
#[derive(Debug, Clone)]
pub struct Pinv {
    /// `Psi^dagger`, shape `K x N`.
    pub pinv: CMatrix,
    /// `(Psi^H Psi)^{-1} = Psi^dagger Psi^dagger^H`, shape `K x K`.
    pub gram_inv: CMatrix,
    /// `Psi^H Psi`, shape `K x K`.
    pub gram: CMatrix,
}

impl Pinv {
    pub fn new(psi: &CMatrix) -> Result<Self> {
        let k = psi.ncols();
        if k == 0 {
            return Ok(Self {
                pinv: CMatrix::zeros(0, psi.nrows()),
                gram_inv: CMatrix::zeros(0, 0),
                gram: CMatrix::zeros(0, 0),
            });
        }
        let svd = psi.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smax > 0.0) || !(smin > RANK_TOLERANCE * smax) {
            return Err(Error::RankDeficientDictionary {
                ratio: if smax > 0.0 { smin / smax } else { 0.0 },
            });
        }
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let v = v_t.adjoint();
        let mut v_scaled = v.clone();
        let mut v_scaled2 = v.clone();
        for (c, &s) in svd.singular_values.iter().enumerate() {
            v_scaled.column_mut(c).scale_mut(1.0 / s);
            v_scaled2.column_mut(c).scale_mut(1.0 / (s * s));
        }
        let pinv = &v_scaled * u.adjoint();
        let gram_inv = hermitize(&(&v_scaled2 * &v_t));
        let gram = hermitize(&psi.ad_mul(psi));
        Ok(Self {
            pinv,
            gram_inv,
            gram,
        })
    }
}

pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Outer product `a b^H`.
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// Natural log of the determinant of a Hermitian positive definite matrix,
/// via Cholesky.
pub fn log_det_hpd(a: &CMatrix) -> Option<f64> {
    let chol = a.clone().cholesky()?;
    Some(
        chol.l_dirty()
            .diagonal()
            .iter()
            .map(|d| 2.0 * d.re.ln())
            .sum(),
    )
}

/// Floors the eigenvalues of a Hermitian matrix at zero. Returns the clamped
/// matrix and whether any eigenvalue had to be raised.
pub fn clamp_psd(a: &CMatrix) -> (CMatrix, bool) {
    if a.nrows() == 0 {
        return (a.clone(), false);
    }
    let eig = hermitize(a).symmetric_eigen();
    let mut clamped = false;
    let vals: DVector<f64> = eig.eigenvalues.map(|l| {
        if l < 0.0 {
            clamped = true;
            0.0
        } else {
            l
        }
    });
    if !clamped {
        return (hermitize(a), false);
    }
    let q = &eig.eigenvectors;
    let mut qd = q.clone();
    for (c, &l) in vals.iter().enumerate() {
        qd.column_mut(c).scale_mut(l);
    }
    (hermitize(&(qd * q.adjoint())), true)
}

pub fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| C64::new(x, 0.0))
}
