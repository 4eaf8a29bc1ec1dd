//! Lateral Casimir force between sinusoidally corrugated metal plates,
//! computed to second order in the corrugation amplitudes from the
//! scattering kernel, and its deviation from the proximity force
//! approximation (PFA).
//!
//! The crate is layered bottom-up:
//!
//! * [`quadrature`] adaptive Gauss–Kronrod integration (finite,
//!   semi-infinite and nested domains)
//! * [`optics`] plasma-model and perfect-mirror reflection amplitudes and
//!   the nonspecular cross kernel
//! * [`plane_plane`] Casimir energy, force and curvature between flat
//!   plates, the lateral response function and the PFA ratio `ρ`
//! * [`perfect`] perfect-reflector reduction, high-`k_C L` asymptotics and
//!   the rugged-corrugation diagnostics
//! * [`plane_sphere`] sphere-plane coefficients via the PFA over the sphere
//!   curvature only
//! * [`validation`] the reproducibility checks run by `lcasimir validate`
//!
//! Internally every quantity is dimensionless, with lengths in units of the
//! mean separation `L`; SI values are produced at the edges through
//! [`units::HBAR_C`].

// Rule constants are kept at their published precision, and `!(x > 0.0)`
// is the NaN-rejecting form of the input checks.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod optics;
pub mod perfect;
pub mod plane_plane;
pub mod plane_sphere;
pub mod quadrature;
pub mod search;
pub mod units;
pub mod validation;

use thiserror::Error;

pub use optics::{MirrorKind, MirrorModel, ModePoint, Polarization};
pub use quadrature::{QuadResult, QuadSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Quad(#[from] quadrature::QuadError),
    #[error(transparent)]
    Optics(#[from] optics::OpticsError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("not converged: {0}")]
    NotConverged(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
