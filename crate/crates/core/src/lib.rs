//! Geometry-based radio channel engine.
//!
//! The crate covers three stages of a coherent joint-transmission pipeline:
//!
//! * a forward model that turns a scene of physical anchors and specular
//!   surfaces (encoded as mirrored virtual anchors, MVAs) into multi-antenna,
//!   multi-frequency channel observations ([`geometry`], [`channel`]);
//! * an inverse model that tracks the agent position and the MVA map with a
//!   regularized particle filter driven by concentrated likelihoods
//!   ([`likelihood`], [`filter`]);
//! * CSI prediction and LMMSE fusion on the downlink and the resulting
//!   conjugate-beamforming efficiency ([`csi`], [`beamform`]).
//!
//! [`harness`] ties everything together into reproducible Monte Carlo
//! campaigns and is what the `geocsi` binary drives.

pub mod beamform;
pub mod channel;
pub mod csi;
pub mod error;
pub mod filter;
pub mod geometry;
pub mod harness;
pub mod likelihood;
pub mod linalg;
pub mod rng;

pub use error::{Error, Result};

/// Complex baseband sample.
pub type C64 = num_complex::Complex64;
pub type CVector = nalgebra::DVector<C64>;
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
