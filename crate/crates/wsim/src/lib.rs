//! Desk-scale simulator for deterministic W-class entangled-state generation
//! among N two-level atoms held in separate single-mode cavities whose output
//! ports meet a 1xN fiber star coupler.
//!
//! The crate works in the single-excitation sector (dimension 2N+2 including
//! the shared vacuum reached by decay). It provides:
//!
//! * the full atom-field Hamiltonian, in a static rotating frame and in the
//!   interaction picture ([`hamiltonian`]),
//! * the delocalized-mode transform that diagonalizes the photonic coupling
//!   ([`normal_modes`]),
//! * the second-order effective atom-only Hamiltonian and its closed-form
//!   single-excitation dynamics ([`analytic`]),
//! * fixed-step RK4 propagation of the Schrodinger and Lindblad equations
//!   with conservation monitoring ([`dynamics`]),
//! * named scenarios, parameter sweeps, and file output ([`experiments`]).
//!
//! Units: hbar = 1; every rate is an angular frequency expressed as a
//! multiple of the atom-cavity coupling f, and times are in units of 1/f.

pub mod analytic;
pub mod dynamics;
pub mod experiments;
pub mod hamiltonian;
pub mod model;
pub mod normal_modes;

pub use model::{BasisLabel, DensityMatrix, StateVector, SystemParams, C64};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("basis label out of range: {0}")]
    LabelOutOfRange(String),
    #[error("singular coupling point: {0}")]
    Singular(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dimension cap exceeded: {0}")]
    DimensionCap(String),
    #[error("integrator abort: {0}")]
    IntegratorAbort(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
