//! Standard teleportation through a two-qubit resource state.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::open_system::{Mat2, TwoQubitState, TwoQubitXState};
use crate::quadrature::SphereRule;
use crate::{Complex, Error, Real, Result};

/// Classical benchmark for the average fidelity.
pub const CLASSICAL_FIDELITY: f64 = 2.0 / 3.0;

/// Nodes per axis of the Bloch-sphere product rule.
pub const SPHERE_NODES: usize = 64;

/// Pure input `cos(θ/2)|g⟩ + e^{iφ} sin(θ/2)|e⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputQubit<T: Real> {
    pub theta_b: T,
    pub phi_b: T,
}

impl<T: Real> InputQubit<T> {
    pub fn new(theta_b: T, phi_b: T) -> Result<Self> {
        if !(theta_b >= T::zero() && theta_b <= T::pi()) {
            return Err(Error::Domain(format!("polar angle must lie in [0, π], got {theta_b}")));
        }
        if !(phi_b >= T::zero() && phi_b < T::two_pi()) {
            return Err(Error::Domain(format!("azimuth must lie in [0, 2π), got {phi_b}")));
        }
        Ok(InputQubit { theta_b, phi_b })
    }

    pub fn ket(&self) -> Vector2<Complex<T>> {
        let h = self.theta_b / T::lit(2.0);
        Vector2::new(
            Complex::new(h.cos(), T::zero()),
            Complex::new(self.phi_b.cos(), self.phi_b.sin()) * Complex::new(h.sin(), T::zero()),
        )
    }

    pub fn density(&self) -> Mat2<T> {
        let k = self.ket();
        k * k.adjoint()
    }
}

fn paulis<T: Real>() -> [Mat2<T>; 4] {
    let (o, l, i) =
        (Complex::new(T::zero(), T::zero()), Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::one()));
    [Mat2::new(l, o, o, l), Mat2::new(o, l, l, o), Mat2::new(o, -i, i, o), Mat2::new(l, o, o, -l)]
}

/// Weights `Tr[E^i ρ]` of the Pauli corrections, `E^0 = |ψ⁻⟩⟨ψ⁻|`.
pub fn bell_weights<T: Real>(channel: &TwoQubitState<T>) -> [T; 4] {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let (z, p, m) = (Complex::new(T::zero(), T::zero()), Complex::new(s, T::zero()), Complex::new(-s, T::zero()));
    let psi_minus = nalgebra::Vector4::new(z, p, m, z);
    let id = Mat2::<T>::identity();
    paulis::<T>().map(|sig| {
        // E^i = (σ^i ⊗ 1) E^0 (σ^i ⊗ 1)
        let k = crate::open_system::kron2(&sig, &id);
        let phi = k * psi_minus;
        (phi.adjoint() * channel.rho * phi)[(0, 0)].re
    })
}

/// Output state `Σ_i Tr[E^i ρ] σ^i ρ_in σ^i`.
pub fn teleport_output<T: Real>(channel: &TwoQubitState<T>, input: &InputQubit<T>) -> Mat2<T> {
    output_from_weights(&bell_weights(channel), input)
}

fn output_from_weights<T: Real>(w: &[T; 4], input: &InputQubit<T>) -> Mat2<T> {
    let rho_in = input.density();
    paulis::<T>().iter().zip(w).fold(Mat2::zeros(), |acc, (s, &wi)| acc + s * rho_in * s * Complex::new(wi, T::zero()))
}

/// `Tr[ρ_out ρ_in]` for a pure input.
pub fn fidelity<T: Real>(channel: &TwoQubitState<T>, input: &InputQubit<T>) -> T {
    (teleport_output(channel, input) * input.density()).trace().re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport<T: Real> {
    /// `1/3 + 2(x - y)/(3 Z_q)`.
    pub f_avg_formula: T,
    /// Bloch-sphere average of [`fidelity`].
    pub f_avg_quadrature: T,
    /// `1/6 + (3x - 2y)/(3 Z_q)`, the commonly printed variant.
    pub f_avg_printed: T,
    pub singlet_fraction: T,
}

impl<T: Real> FidelityReport<T> {
    pub fn above_classical(&self) -> bool {
        self.f_avg_formula > T::lit(CLASSICAL_FIDELITY)
    }

    /// `f_avg_formula` recomputed from `singlet_fraction`.
    pub fn formula_from_fraction(&self) -> T {
        (T::one() + T::lit(2.0) * self.singlet_fraction) / T::lit(3.0)
    }
}

/// Closed-form average fidelity of an X-state channel.
pub fn average_fidelity_formula<T: Real>(channel: &TwoQubitXState<T>) -> T {
    T::one() / T::lit(3.0) + T::lit(2.0) * (channel.x - channel.y) / (T::lit(3.0) * channel.z_q)
}

pub fn average_fidelity_printed<T: Real>(channel: &TwoQubitXState<T>) -> T {
    T::one() / T::lit(6.0) + (T::lit(3.0) * channel.x - T::lit(2.0) * channel.y) / (T::lit(3.0) * channel.z_q)
}

/// Average fidelity over the Bloch sphere by product quadrature.
pub fn average_fidelity_quadrature<T: Real>(channel: &TwoQubitState<T>, rule: &SphereRule<T>) -> T {
    let w = bell_weights(channel);
    rule.average(|th, ph| {
        let input = InputQubit { theta_b: th, phi_b: ph };
        (output_from_weights(&w, &input) * input.density()).trace().re
    })
}

pub fn average_fidelity<T: Real>(channel: &TwoQubitXState<T>) -> FidelityReport<T> {
    average_fidelity_with(channel, &SphereRule::new(SPHERE_NODES, SPHERE_NODES))
}

/// Same as [`average_fidelity`] with a caller-supplied rule, so sweeps can
/// build the rule once.
pub fn average_fidelity_with<T: Real>(channel: &TwoQubitXState<T>, rule: &SphereRule<T>) -> FidelityReport<T> {
    FidelityReport {
        f_avg_formula: average_fidelity_formula(channel),
        f_avg_quadrature: average_fidelity_quadrature(&channel.to_state(), rule),
        f_avg_printed: average_fidelity_printed(channel),
        singlet_fraction: channel.singlet_fraction(),
    }
}

/// First time at which `f` drops below `level`, located by scanning `t_grid`
/// and bisecting the bracketing interval. `None` if it never does.
pub fn first_crossing<T: Real, F: Fn(T) -> T>(f: F, level: T, t_grid: &[T], tol: T) -> Option<T> {
    let first = *t_grid.first()?;
    if f(first) < level {
        return Some(first);
    }
    for w in t_grid.windows(2) {
        if f(w[1]) < level {
            let (mut lo, mut hi) = (w[0], w[1]);
            while hi - lo > tol {
                let mid = (lo + hi) / T::lit(2.0);
                if f(mid) < level {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some((lo + hi) / T::lit(2.0));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singlet_is_perfect() {
        let ch = TwoQubitState::<f64>::singlet();
        for (t, p) in [(0.0, 0.0), (1.0, 2.0), (3.0, 5.5)] {
            let inp = InputQubit::new(t, p).unwrap();
            assert!((teleport_output(&ch, &inp) - inp.density()).norm() < 1e-14);
        }
        let r = average_fidelity(&TwoQubitXState::<f64>::singlet());
        for f in [r.f_avg_formula, r.f_avg_quadrature, r.f_avg_printed] {
            assert!((f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_channel_depolarizes() {
        let ch = TwoQubitState::<f64>::maximally_mixed();
        let inp = InputQubit::new(1.1, 0.3).unwrap();
        assert!((teleport_output(&ch, &inp) - Mat2::identity() * Complex::new(0.5, 0.0)).norm() < 1e-14);
        let r = average_fidelity(&TwoQubitXState::<f64>::maximally_mixed());
        assert!((r.f_avg_quadrature - 0.5).abs() < 1e-12);
        assert!((r.f_avg_formula - 0.5).abs() < 1e-12);
        assert!((r.f_avg_printed - 5.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_one() {
        let ch = crate::open_system::thermal_pair_state(0.1f64, 0.03, 0.05).unwrap().to_state();
        assert!((bell_weights(&ch).iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn formula_matches_quadrature() {
        let x = TwoQubitXState::<f64>::from_elements(0.2, 0.7, -0.4, 0.1);
        let r = average_fidelity(&x);
        assert!((r.f_avg_formula - r.f_avg_quadrature).abs() < 1e-12);
        assert!((r.formula_from_fraction() - r.f_avg_formula).abs() < 1e-15);
    }

    #[test]
    fn input_ranges() {
        assert!(InputQubit::new(-0.1f64, 0.0).is_err());
        assert!(InputQubit::new(0.1f64, 7.0).is_err());
    }

    #[test]
    fn crossing_by_bisection() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let t = first_crossing(|t| (-t).exp(), 0.5, &grid, 1e-12).unwrap();
        assert!((t - 2f64.ln()).abs() < 1e-10);
        assert!(first_crossing(|_| 1.0, 0.5, &grid, 1e-12).is_none());
    }
}
