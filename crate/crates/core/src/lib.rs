//! Long-distance thermal entanglement between two probe qubits attached to
//! the ends of an open bilinear-biquadratic spin-1 chain.
//!
//! The pipeline runs bottom-up:
//!
//! - [`spin`], [`basis`], [`sparse`]: spin algebra and total-S^z sector bases.
//! - [`chain`]: sector Hamiltonians, dense/Krylov diagonalization, the
//!   singlet-triplet low spectrum and truncated thermal weights.
//! - [`coupling`]: second-order effective probe-probe coupling `J_eff(T)`,
//!   the closed-form dimer value, a full-system oracle and the finite-size fit.
//! - [`open_system`]: thermal pair states, generalized amplitude damping and
//!   the two-qubit Lindblad equation.
//! - [`entanglement`], [`teleport`]: concurrence and teleportation fidelity.
//!
//! Everything numerical is generic over a [`Real`] scalar (`f32` or `f64`).
//! The `*F64` aliases at the crate root fix the scalar for callers that do
//! not care.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod basis;
pub mod cache;
pub mod chain;
pub mod coupling;
pub mod entanglement;
mod error;
pub mod fit;
pub mod linalg;
pub mod ode;
pub mod open_system;
pub mod quadrature;
pub mod sparse;
pub mod spin;
pub mod teleport;

pub use error::{Error, Result};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type the numerical core is written against.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Complex<T> = nalgebra::Complex<T>;

pub type SpinOpsF64 = spin::SpinOps<f64>;
pub type SparseOperatorF64 = sparse::SparseOperator<f64>;
pub type ChainSpecF64 = chain::ChainSpec<f64>;
pub type SectorSpectrumF64 = chain::SectorSpectrum<f64>;
pub type LowSpectrumF64 = chain::LowSpectrum<f64>;
pub type ThermalWeightsF64 = chain::ThermalWeights<f64>;
pub type OmegaSumF64 = coupling::OmegaSum<f64>;
pub type EffectiveCouplingF64 = coupling::EffectiveCoupling<f64>;
pub type CouplingInputsF64 = coupling::CouplingInputs<f64>;
pub type SaturationFitF64 = fit::SaturationFit<f64>;
pub type TwoQubitStateF64 = open_system::TwoQubitState<f64>;
pub type TwoQubitXStateF64 = open_system::TwoQubitXState<f64>;
pub type NoiseParamsF64 = open_system::NoiseParams<f64>;
pub type InputQubitF64 = teleport::InputQubit<f64>;
pub type FidelityReportF64 = teleport::FidelityReport<f64>;

pub type SpinOpsF32 = spin::SpinOps<f32>;
pub type ChainSpecF32 = chain::ChainSpec<f32>;
pub type TwoQubitXStateF32 = open_system::TwoQubitXState<f32>;
