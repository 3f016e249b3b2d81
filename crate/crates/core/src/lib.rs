//! Simulator for adiabatic quantum memories built from a qubit coupled
//! ultrastrongly to a resonator.
//!
//! The numerical core (`fock` through `protocols`) is generic over the real
//! scalar type; [`experiment`] is the `f64` orchestration layer used by the
//! command-line tool. Basis ordering inside a cell is `q·n_fock + n` with
//! `q = 0` for `|g⟩`, and two-cell states are stored with cell 1 slowest.

// `!(x > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod closed;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod expm;
pub mod fock;
pub mod matrix;
pub mod open;
pub mod protocols;
pub mod rabi;
pub mod scalar;
pub mod spectral;

pub use closed::{propagate, round_trip, PropagatorConfig, QubitInput, ThetaHandling, Trajectory};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentKind, ExperimentSpec, ResultBundle};
pub use fock::{Axis, HilbertDims, Qubit, StateVector};
pub use matrix::ComplexMatrix;
pub use open::{evolve_master, DensityMatrix, NoiseRates};
pub use rabi::{CouplingSchedule, ModelParams};
pub use scalar::Real;
pub use spectral::{eigendecompose, Spectrum};

pub type ComplexMatrix64 = matrix::ComplexMatrix<f64>;
pub type ComplexMatrix32 = matrix::ComplexMatrix<f32>;
pub type StateVector64 = fock::StateVector<f64>;
pub type StateVector32 = fock::StateVector<f32>;
pub type DensityMatrix64 = open::DensityMatrix<f64>;
pub type DensityMatrix32 = open::DensityMatrix<f32>;
pub type ModelParams64 = rabi::ModelParams<f64>;
pub type ModelParams32 = rabi::ModelParams<f32>;
pub type Spectrum64 = spectral::Spectrum<f64>;
pub type Spectrum32 = spectral::Spectrum<f32>;
