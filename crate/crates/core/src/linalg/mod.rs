//! Eigensolvers and linear solvers for real symmetric sector operators.

mod cg;
mod dense;
mod lanczos;

pub use cg::{conjugate_gradient, CgOutcome};
pub use dense::{sorted_symmetric_eigen, DenseEigen};
pub use lanczos::{lanczos_lowest, LanczosConfig, LanczosOutcome};

use nalgebra::DVector;

use crate::Real;

/// Removes the components of `v` along each (orthonormal) vector of `basis`.
pub fn project_out<T: Real>(v: &mut DVector<T>, basis: &[DVector<T>]) {
    for b in basis {
        let c = b.dot(v);
        v.axpy(-c, b, T::one());
    }
}
