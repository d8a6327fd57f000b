//! Wootters concurrence, general and for symmetric X states.

use nalgebra::Matrix4;

use crate::open_system::{kron2, thermal_pair_state, Mat2, Mat4, TwoQubitState, TwoQubitXState};
use crate::{Complex, Error, Real, Result};

/// Negative eigenvalues above this are clipped to zero; below it the input
/// is rejected.
pub const EIGEN_FLOOR: f64 = -1e-10;

fn sigma_y_pair<T: Real>() -> Mat4<T> {
    let (z, i) = (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::one()));
    let sy = Mat2::new(z, -i, i, z);
    kron2(&sy, &sy)
}

/// `max(0, λ1 - λ2 - λ3 - λ4)` with `λ` the descending square roots of the
/// eigenvalues of `ρ (σy⊗σy) ρ* (σy⊗σy)`.
pub fn concurrence_wootters<T: Real>(state: &TwoQubitState<T>) -> Result<T> {
    let rho = (state.rho + state.rho.adjoint()) * Complex::new(T::lit(0.5), T::zero());
    let eig = rho.symmetric_eigen();
    let floor = T::lit(EIGEN_FLOOR);
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&e| e < floor) {
        return Err(Error::Domain(format!("state has eigenvalue {bad}, not a density matrix")));
    }
    let roots = eig.eigenvalues.map(|e| Complex::new(e.max(T::zero()).sqrt(), T::zero()));
    let sqrt_rho = eig.eigenvectors * Matrix4::from_diagonal(&roots) * eig.eigenvectors.adjoint();
    let yy = sigma_y_pair::<T>();
    let tilde = yy * rho.conjugate() * yy;
    let r = sqrt_rho * tilde * sqrt_rho;
    let r = (r + r.adjoint()) * Complex::new(T::lit(0.5), T::zero());
    let mut lambdas: Vec<T> = r.symmetric_eigenvalues().iter().map(|&e| e.max(T::zero()).sqrt()).collect();
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let c = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    Ok(c.max(T::zero()).min(T::one()))
}

/// `(2/Z_q) max(0, |y| - √(uv))`.
pub fn concurrence_xstate<T: Real>(state: &TwoQubitXState<T>) -> T {
    (T::lit(2.0) / state.z_q * (state.y.abs() - (state.u * state.v).sqrt())).max(T::zero())
}

/// `(2/Z_q)(|y| - √(uv))` without the clamp; positive exactly when entangled.
pub fn entanglement_witness<T: Real>(state: &TwoQubitXState<T>) -> T {
    T::lit(2.0) / state.z_q * (state.y.abs() - (state.u * state.v).sqrt())
}

/// Concurrence of the Gibbs state of the probe pair.
pub fn thermal_concurrence<T: Real>(j_eff: T, omega: T, temperature: T) -> Result<T> {
    Ok(concurrence_xstate(&thermal_pair_state(j_eff, omega, temperature)?))
}

/// Locates the ratio `J_eff/T` at which the zero-field thermal pair becomes
/// entangled, by bisection on the unclamped witness.
pub fn entanglement_threshold<T: Real>(temperature: T, tol: T) -> Result<T> {
    let witness =
        |r: T| -> Result<T> { Ok(entanglement_witness(&thermal_pair_state(r * temperature, T::zero(), temperature)?)) };
    let (mut lo, mut hi) = (T::zero(), T::lit(10.0));
    if witness(lo)? >= T::zero() || witness(hi)? <= T::zero() {
        return Err(Error::Spectrum("entanglement witness does not change sign on [0, 10]".into()));
    }
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        if witness(mid)? > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singlet_and_mixed() {
        assert!((concurrence_wootters(&TwoQubitState::<f64>::singlet()).unwrap() - 1.0).abs() < 1e-12);
        assert!(concurrence_wootters(&TwoQubitState::<f64>::maximally_mixed()).unwrap().abs() < 1e-12);
        assert!((concurrence_xstate(&TwoQubitXState::<f64>::singlet()) - 1.0).abs() < 1e-15);
        assert_eq!(concurrence_xstate(&TwoQubitXState::<f64>::maximally_mixed()), 0.0);
    }

    #[test]
    fn bell_phi_plus() {
        let h = Complex::new(0.5f64, 0.0);
        let mut rho = Mat4::zeros();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            rho[(i, j)] = h;
        }
        assert!((concurrence_wootters(&TwoQubitState::unchecked(rho)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn general_matches_closed_form() {
        let s = thermal_pair_state(0.05f64, 0.002, 0.01).unwrap();
        let a = concurrence_wootters(&s.to_state()).unwrap();
        assert!((a - concurrence_xstate(&s)).abs() < 1e-12);
    }

    #[test]
    fn thermal_closed_form() {
        let (j, t) = (0.0133f64, 0.01);
        let s = thermal_pair_state(j, 0.0, t).unwrap();
        let expected = ((0.75 * j / t).exp() - 3.0 * (-0.25 * j / t).exp()).max(0.0)
            / ((0.75 * j / t).exp() + 3.0 * (-0.25 * j / t).exp());
        assert!((concurrence_xstate(&s) - expected).abs() < 1e-14);
        assert!(expected > 0.0);
    }

    #[test]
    fn threshold_is_ln3() {
        let r = entanglement_threshold(0.1f64, 1e-12).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-9);
        assert!(thermal_concurrence(3f64.ln(), 0.0, 1.0).unwrap() < 1e-15);
    }

    #[test]
    fn rejects_non_positive() {
        let mut rho = TwoQubitState::<f64>::maximally_mixed().rho;
        rho[(0, 0)] = Complex::new(-0.1, 0.0);
        rho[(1, 1)] = Complex::new(0.6, 0.0);
        assert!(concurrence_wootters(&TwoQubitState::unchecked(rho)).is_err());
    }
}
