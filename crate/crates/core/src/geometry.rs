//! Mirror-virtual-anchor (MVA) scene geometry.
//!
//! A planar surface is described by a single point: the mirror image of the
//! coordinate origin across that surface. Physical anchors (PAs) are mirrored
//! across one or two surfaces to obtain the virtual anchors (VAs) that act as
//! LoS sources for the specular paths.

use nalgebra::{Matrix3, Matrix3xX, Vector3};

use crate::{Error, Result};

/// MVAs closer to the origin than this are rejected; the reflection formulas
/// divide by the MVA norm.
pub const MVA_MIN_NORM: f64 = 1e-9;

/// Mirror image of the origin across a planar surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvaPoint {
    position: Vector3<f64>,
}

impl MvaPoint {
    pub fn new(position: Vector3<f64>) -> Result<Self> {
        let norm = position.norm();
        if !(norm >= MVA_MIN_NORM) {
            return Err(Error::DegenerateMva {
                norm,
                threshold: MVA_MIN_NORM,
            });
        }
        Ok(Self { position })
    }

    /// Builds the MVA of the plane through `point` with the given normal.
    pub fn from_plane(point: Vector3<f64>, normal: Vector3<f64>) -> Result<Self> {
        let n = normal.normalize();
        Self::new(2.0 * n.dot(&point) * n)
    }

    pub fn position(&self) -> &Vector3<f64> {
        &self.position
    }

    pub fn surface(&self) -> Surface {
        Surface {
            wall_point: 0.5 * self.position,
            normal: self.position / self.position.norm(),
        }
    }
}

/// Point-normal representation of the plane encoded by an [`MvaPoint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Surface {
    pub wall_point: Vector3<f64>,
    pub normal: Vector3<f64>,
}

impl Surface {
    pub fn signed_distance(&self, x: &Vector3<f64>) -> f64 {
        self.normal.dot(&(x - self.wall_point))
    }
}

/// Reflects `p` across the surface encoded by `mva`.
pub fn mirror_point(p: &Vector3<f64>, mva: &MvaPoint) -> Vector3<f64> {
    let m = mva.position();
    let scale = 2.0 * p.dot(m) / m.norm_squared() - 1.0;
    p - scale * m
}

/// Householder reflection matrix of the surface encoded by `mva`.
pub fn householder(mva: &MvaPoint) -> Matrix3<f64> {
    let m = mva.position();
    Matrix3::identity() - 2.0 * (m * m.transpose()) / m.norm_squared()
}

/// Propagation path: `(0, 0)` is LoS, `(s, s)` a single bounce at surface
/// `s`, and `(s, s')` with `s != s'` a double bounce, first at `s` then at
/// `s'`. Surface indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathId {
    pub s: usize,
    pub s_prime: usize,
}

impl PathId {
    pub const LOS: PathId = PathId { s: 0, s_prime: 0 };

    pub fn new(s: usize, s_prime: usize) -> Self {
        Self { s, s_prime }
    }

    pub fn is_los(&self) -> bool {
        self.s == 0 && self.s_prime == 0
    }

    pub fn bounces(&self) -> u32 {
        match (self.s, self.s_prime) {
            (0, 0) => 0,
            (s, t) if s == t => 1,
            _ => 2,
        }
    }

    /// All `S^2 + 1` paths in dictionary order: LoS first, then `s` outer
    /// and `s'` inner.
    pub fn enumerate(n_surfaces: usize) -> Vec<PathId> {
        let mut out = Vec::with_capacity(n_surfaces * n_surfaces + 1);
        out.push(PathId::LOS);
        for s in 1..=n_surfaces {
            for t in 1..=n_surfaces {
                out.push(PathId::new(s, t));
            }
        }
        out
    }
}

impl std::fmt::Display for PathId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.s, self.s_prime)
    }
}

/// Antenna positions of a uniform rectangular array in its local frame.
///
/// The array lies in the local y-z plane and is centered on the origin, so
/// with identity rotation its broadside points along +x.
pub fn ura_template(ny: usize, nz: usize, spacing: f64) -> Matrix3xX<f64> {
    let mut t = Matrix3xX::zeros(ny * nz);
    let cy = (ny as f64 - 1.0) / 2.0;
    let cz = (nz as f64 - 1.0) / 2.0;
    for iz in 0..nz {
        for iy in 0..ny {
            let m = iz * ny + iy;
            t[(1, m)] = (iy as f64 - cy) * spacing;
            t[(2, m)] = (iz as f64 - cz) * spacing;
        }
    }
    t
}

/// Global layout of a physical or virtual anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorArray {
    pub center: Vector3<f64>,
    pub orientation: Matrix3<f64>,
    pub layout: Matrix3xX<f64>,
}

impl AnchorArray {
    pub fn n_antennas(&self) -> usize {
        self.layout.ncols()
    }
}

/// Computes the array layout seen along `path`.
///
/// `mvas[s - 1]` is the MVA of surface `s`.
pub fn build_layout(
    pa_center: &Vector3<f64>,
    pa_rotation: &Matrix3<f64>,
    template: &Matrix3xX<f64>,
    path: PathId,
    mvas: &[MvaPoint],
) -> Result<AnchorArray> {
    let lookup = |s: usize| {
        mvas.get(s.wrapping_sub(1))
            .ok_or_else(|| Error::Dimension(format!("path {path} references missing surface {s}")))
    };
    let (center, orientation) = match path.bounces() {
        0 => (*pa_center, *pa_rotation),
        1 => {
            let m = lookup(path.s)?;
            (mirror_point(pa_center, m), householder(m) * pa_rotation)
        }
        _ => {
            let m1 = lookup(path.s)?;
            let m2 = lookup(path.s_prime)?;
            let c = mirror_point(&mirror_point(pa_center, m1), m2);
            (c, householder(m2) * householder(m1) * pa_rotation)
        }
    };
    let mut layout = orientation * template;
    for mut col in layout.column_iter_mut() {
        col += center;
    }
    Ok(AnchorArray {
        center,
        orientation,
        layout,
    })
}

/// Distance from the agent to every antenna of `layout`.
pub fn path_lengths(layout: &AnchorArray, agent: &Vector3<f64>) -> Vec<f64> {
    layout
        .layout
        .column_iter()
        .map(|p| (p - agent).norm())
        .collect()
}

/// Proper rotation from yaw (about z), pitch (about y) and roll (about x),
/// applied in that order.
pub fn rotation_zyx(yaw: f64, pitch: f64, roll: f64) -> Matrix3<f64> {
    nalgebra::Rotation3::from_euler_angles(roll, pitch, yaw).into_inner()
}
