//! Polarization mode dispersion (PMD) toolkit.
//!
//! Emulates random-birefringence fibers as concatenated waveplates, follows
//! output polarization trajectories across a spectral band, and turns them
//! into the measurement-error probability (infidelity) seen by a
//! polarization-encoded entanglement link. Also included: Mueller Matrix
//! Method DGD extraction from polarimeter scans, and measurement-basis
//! geometry studies for BB84/BBM92 and six-state protocols.
//!
//! Module map:
//!
//! - [`polarization`]: Jones/Stokes states, density matrices, SU(2) and SO(3) maps.
//! - [`fiber`]: fiber synthesis, transfer unitaries, trajectories, PMD vectors.
//! - [`infidelity`]: closed-form, small-angle and trajectory-integrated infidelity.
//! - [`ensemble`]: seeded Monte Carlo over fiber realizations.
//! - [`mmm`]: polarimeter scan parsing and Mueller Matrix Method analysis.
//! - [`protocol`]: basis orientation, error budgets, alignment unitaries.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod fiber;
pub mod infidelity;
pub mod mmm;
pub mod polarization;
pub mod protocol;
pub mod stats;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("vector has zero length")]
    ZeroVector,

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not a proper rotation (deviation {0:.3e})")]
    NotRotation(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid spectral grid: {0}")]
    InvalidGrid(String),

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("trajectory is not uniformly sampled near {wavelength_nm} nm")]
    NonUniformGrid { wavelength_nm: f64 },

    #[error("rotation between {from_nm} nm and {to_nm} nm is too close to pi; grid is too coarse")]
    Aliasing { from_nm: f64, to_nm: f64 },

    #[error("window of {window_nm} nm does not fit: {reason}")]
    Window { window_nm: f64, reason: String },

    #[error("degenerate output frame at {wavelength_nm} nm: output states {angle_deg:.2} deg apart")]
    DegenerateFrame { wavelength_nm: f64, angle_deg: f64 },

    #[error("principal states undefined at {wavelength_nm} nm (DGD {dgd_ps:.3e} ps)")]
    UndefinedPsp { wavelength_nm: f64, dgd_ps: f64 },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("scan: {0}")]
    Scan(String),

    #[error("geometry does not match protocol: {0}")]
    GeometryMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub use fiber::{FiberRealization, FiberSpec, PmdVectorSample, SpectralGrid, TrajectorySample};
pub use infidelity::{ArcParams, BandSpec};
pub use polarization::{DensityMatrix, JonesUnitary, JonesVector, PolRotation, StokesVector};
