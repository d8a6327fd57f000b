//! Two probe qubits in local thermal reservoirs.
//!
//! Basis order is `{|gg⟩, |ge⟩, |eg⟩, |ee⟩}` with qubit A the left factor and
//! `|g⟩` the `s^z = -1/2` state. Two routes evolve a state: the generalized
//! amplitude damping channel applied to each qubit, and direct integration
//! of the Lindblad master equation.

use nalgebra::{ComplexField, DVector, Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::ode::{integrate, OdeOptions};
use crate::{Complex, Error, Real, Result};

pub type Mat2<T> = Matrix2<Complex<T>>;
pub type Mat4<T> = Matrix4<Complex<T>>;

fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Kronecker product of two single-qubit operators.
pub fn kron2<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat4<T> {
    Mat4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// Reservoir parameters shared by both qubits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams<T: Real> {
    /// Mean reservoir occupation `n̄`.
    pub n_bar: T,
    /// Spontaneous-emission rate `Γ`.
    pub gamma: T,
}

impl<T: Real> NoiseParams<T> {
    pub fn new(n_bar: T, gamma: T) -> Result<Self> {
        let out = NoiseParams { n_bar, gamma };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_bar >= T::zero()) {
            return Err(Error::Domain(format!("n_bar must be non-negative, got {}", self.n_bar)));
        }
        if !(self.gamma > T::zero()) {
            return Err(Error::Domain(format!("gamma must be positive, got {}", self.gamma)));
        }
        Ok(())
    }

    /// Total population relaxation rate `2Γ(2n̄+1)`.
    pub fn relaxation_rate(&self) -> T {
        T::lit(2.0) * self.gamma * (T::lit(2.0) * self.n_bar + T::one())
    }
}

/// Exchange probability `p(t) = 1 - exp(-2Γ(2n̄+1)t)`.
pub fn p_of_t<T: Real>(t: T, noise: &NoiseParams<T>) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    Ok(-(-noise.relaxation_rate() * t).exp_m1())
}

/// Probabilities `(a, b)` of the jumps g→e and e→g for exchange probability `p`.
pub fn jump_probabilities<T: Real>(p: T, n_bar: T) -> (T, T) {
    let denom = T::lit(2.0) * n_bar + T::one();
    (n_bar * p / denom, (n_bar + T::one()) * p / denom)
}

/// Two-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState<T: Real> {
    pub rho: Mat4<T>,
}

impl<T: Real> TwoQubitState<T> {
    /// Wraps `rho` after checking Hermiticity, unit trace and positivity.
    pub fn new(rho: Mat4<T>) -> Result<Self> {
        let s = TwoQubitState { rho };
        let herm = s.hermiticity_error();
        if herm > T::lit(1e-12) {
            return Err(Error::Domain(format!("density matrix not Hermitian (error {herm})")));
        }
        let drift = s.trace_drift();
        if drift.abs() > T::lit(1e-12) {
            return Err(Error::Domain(format!("density matrix trace is off by {drift}")));
        }
        let min = s.min_eigenvalue();
        if min < T::lit(-1e-10) {
            return Err(Error::Domain(format!("density matrix has eigenvalue {min}")));
        }
        Ok(s)
    }

    pub fn unchecked(rho: Mat4<T>) -> Self {
        TwoQubitState { rho }
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitState { rho: Mat4::identity() * c(T::lit(0.25)) }
    }

    /// `|ψ⁻⟩⟨ψ⁻|` with `|ψ⁻⟩ = (|ge⟩ - |eg⟩)/√2`.
    pub fn singlet() -> Self {
        let h = c(T::lit(0.5));
        let mut rho = Mat4::zeros();
        rho[(1, 1)] = h;
        rho[(2, 2)] = h;
        rho[(1, 2)] = -h;
        rho[(2, 1)] = -h;
        TwoQubitState { rho }
    }

    pub fn trace(&self) -> T {
        self.rho.trace().re
    }

    pub fn trace_drift(&self) -> T {
        self.trace() - T::one()
    }

    pub fn hermiticity_error(&self) -> T {
        (self.rho - self.rho.adjoint()).iter().fold(T::zero(), |m, z| m.max(z.modulus()))
    }

    /// Eigenvalues ascending.
    pub fn eigenvalues(&self) -> [T; 4] {
        let herm = (self.rho + self.rho.adjoint()) * c(T::lit(0.5));
        let ev = herm.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        out
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    /// Largest entry-wise modulus of the difference.
    pub fn distance(&self, other: &Self) -> T {
        (self.rho - other.rho).iter().fold(T::zero(), |m, z| m.max(z.modulus()))
    }

    /// Reads back the X form, failing if any entry outside the X pattern
    /// exceeds `tol` or the middle diagonals differ by more than `tol`.
    pub fn to_xstate(&self, tol: T) -> Result<TwoQubitXState<T>> {
        let r = &self.rho;
        for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)] {
            if r[(i, j)].modulus() > tol || r[(j, i)].modulus() > tol {
                return Err(Error::Domain(format!("entry ({i},{j}) breaks the X pattern")));
            }
        }
        if (r[(1, 1)].re - r[(2, 2)].re).abs() > tol || r[(1, 2)].im.abs() > tol {
            return Err(Error::Domain("state is not a symmetric real X state".into()));
        }
        let z = self.trace();
        Ok(TwoQubitXState {
            u: r[(0, 0)].re,
            x: (r[(1, 1)].re + r[(2, 2)].re) / T::lit(2.0),
            y: r[(1, 2)].re,
            v: r[(3, 3)].re,
            z_q: z,
        })
    }
}

/// Symmetric real X state `(1/Z_q) [[u,0,0,0],[0,x,y,0],[0,y,x,0],[0,0,0,v]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitXState<T: Real> {
    pub u: T,
    pub x: T,
    pub y: T,
    pub v: T,
    pub z_q: T,
}

impl<T: Real> TwoQubitXState<T> {
    /// Builds the state with `z_q = u + 2x + v`.
    pub fn from_elements(u: T, x: T, y: T, v: T) -> Self {
        TwoQubitXState { u, x, y, v, z_q: u + T::lit(2.0) * x + v }
    }

    pub fn maximally_mixed() -> Self {
        Self::from_elements(T::one(), T::one(), T::zero(), T::one())
    }

    pub fn singlet() -> Self {
        let h = T::lit(0.5);
        TwoQubitXState { u: T::zero(), x: h, y: -h, v: T::zero(), z_q: T::one() }
    }

    pub fn validate(&self) -> Result<()> {
        let tol = T::lit(1e-12) * self.z_q.abs();
        if (self.u + T::lit(2.0) * self.x + self.v - self.z_q).abs() > tol {
            return Err(Error::Domain("u + 2x + v differs from Z_q".into()));
        }
        if self.u < -tol || self.v < -tol || self.x < -tol || self.y.abs() > self.x + tol {
            return Err(Error::Domain("X state is not positive".into()));
        }
        Ok(())
    }

    /// Same state with `z_q = 1`.
    pub fn normalized(&self) -> Self {
        let z = self.z_q;
        TwoQubitXState { u: self.u / z, x: self.x / z, y: self.y / z, v: self.v / z, z_q: T::one() }
    }

    pub fn to_state(&self) -> TwoQubitState<T> {
        let n = self.normalized();
        let mut rho = Mat4::zeros();
        rho[(0, 0)] = c(n.u);
        rho[(1, 1)] = c(n.x);
        rho[(2, 2)] = c(n.x);
        rho[(1, 2)] = c(n.y);
        rho[(2, 1)] = c(n.y);
        rho[(3, 3)] = c(n.v);
        TwoQubitState { rho }
    }

    /// `⟨ψ⁻|ρ|ψ⁻⟩`.
    pub fn singlet_fraction(&self) -> T {
        (self.x - self.y) / self.z_q
    }
}

/// Gibbs state of `H = J s_A·s_B + ω(s_A^z + s_B^z)`.
///
/// All four Boltzmann factors are divided by the largest one, so `z_q` is the
/// partition function up to that common factor and never overflows.
pub fn thermal_pair_state<T: Real>(j_eff: T, omega: T, temperature: T) -> Result<TwoQubitXState<T>> {
    if !(temperature > T::zero()) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    let q = T::lit(0.25) * j_eff;
    let exps =
        [-(q - omega) / temperature, -(q + omega) / temperature, -q / temperature, T::lit(3.0) * q / temperature];
    let top = exps.iter().fold(exps[0], |m, &e| m.max(e));
    let [eu, ev, et, es] = exps.map(|e| (e - top).exp());
    let h = T::lit(0.5);
    Ok(TwoQubitXState::from_elements(eu, h * (et + es), h * (et - es), ev))
}

/// Single-qubit generalized amplitude damping operators `K_0..K_3`.
pub fn gad_kraus<T: Real>(p: T, n_bar: T) -> Result<[Mat2<T>; 4]> {
    if !(T::zero()..=T::one()).contains(&p) {
        return Err(Error::Domain(format!("p must lie in [0, 1], got {p}")));
    }
    if !(n_bar >= T::zero()) {
        return Err(Error::Domain(format!("n_bar must be non-negative, got {n_bar}")));
    }
    let denom = T::lit(2.0) * n_bar + T::one();
    let hi = ((n_bar + T::one()) / denom).sqrt();
    let lo = (n_bar / denom).sqrt();
    let keep = (T::one() - p).sqrt();
    let sp = p.sqrt();
    let z = T::zero();
    let m = |a: T, b: T, cc: T, d: T| Mat2::new(c(a), c(b), c(cc), c(d));
    Ok([m(hi, z, z, hi * keep), m(z, hi * sp, z, z), m(lo * keep, z, z, lo), m(z, z, lo * sp, z)])
}

/// `GAD(p) ⊗ GAD(p)` applied to `state`.
pub fn apply_gad_pair<T: Real>(state: &TwoQubitState<T>, p: T, n_bar: T) -> Result<TwoQubitState<T>> {
    let ks = gad_kraus(p, n_bar)?;
    let mut out = Mat4::zeros();
    for ka in &ks {
        for kb in &ks {
            let k = kron2(ka, kb);
            out += k * state.rho * k.adjoint();
        }
    }
    Ok(TwoQubitState { rho: out })
}

/// Channel evolution to time `t`.
pub fn kraus_evolve<T: Real>(state0: &TwoQubitState<T>, t: T, noise: &NoiseParams<T>) -> Result<TwoQubitState<T>> {
    apply_gad_pair(state0, p_of_t(t, noise)?, noise.n_bar)
}

/// X-state elements as commonly printed: every jump weighted by the single
/// probability `a = n̄p/(2n̄+1)`.
///
/// This does not equal the channel output unless `n̄` is very large; compare
/// [`xstate_after_channel`].
pub fn xstate_elements<T: Real>(j_eff: T, omega: T, temperature: T, p: T, n_bar: T) -> Result<TwoQubitXState<T>> {
    let s0 = thermal_pair_state(j_eff, omega, temperature)?;
    let (a, _) = jump_probabilities(p, n_bar);
    let one = T::one();
    let two = T::lit(2.0);
    let keep = one - a;
    let x2 = two * s0.x;
    Ok(TwoQubitXState {
        u: keep * keep * s0.u + a * a * s0.v + a * keep * x2,
        v: keep * keep * s0.v + a * a * s0.u + a * keep * x2,
        x: a * keep * (s0.v + s0.u) + (keep * keep + a * a) * s0.x,
        y: (one - p) * s0.y,
        z_q: s0.z_q,
    })
}

/// Exact output of `GAD(p) ⊗ GAD(p)` on an X state, with `a` and
/// `b = (n̄+1)p/(2n̄+1)` the upward and downward jump probabilities.
pub fn xstate_after_channel<T: Real>(s0: &TwoQubitXState<T>, p: T, n_bar: T) -> TwoQubitXState<T> {
    let (a, b) = jump_probabilities(p, n_bar);
    let one = T::one();
    let two = T::lit(2.0);
    TwoQubitXState {
        u: (one - a) * (one - a) * s0.u + b * b * s0.v + two * (one - a) * b * s0.x,
        v: a * a * s0.u + (one - b) * (one - b) * s0.v + two * a * (one - b) * s0.x,
        x: a * (one - a) * s0.u + b * (one - b) * s0.v + ((one - a) * (one - b) + a * b) * s0.x,
        y: (one - p) * s0.y,
        z_q: s0.z_q,
    }
}

/// Thermal pair state after exposure `p` to the reservoirs, by the exact
/// channel formulas.
pub fn xstate_at<T: Real>(j_eff: T, omega: T, temperature: T, p: T, n_bar: T) -> Result<TwoQubitXState<T>> {
    let s0 = thermal_pair_state(j_eff, omega, temperature)?;
    Ok(xstate_after_channel(&s0, p, n_bar))
}

fn sigma_minus<T: Real>() -> Mat2<T> {
    // |g⟩⟨e|
    Mat2::new(c(T::zero()), c(T::one()), c(T::zero()), c(T::zero()))
}

/// Probe-pair Hamiltonian used by the master equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HeffMode<T: Real> {
    Interacting { j_eff: T, omega: T },
    Free { omega: T },
}

impl<T: Real> HeffMode<T> {
    pub fn hamiltonian(&self) -> Mat4<T> {
        let (j, omega) = match *self {
            HeffMode::Interacting { j_eff, omega } => (j_eff, omega),
            HeffMode::Free { omega } => (T::zero(), omega),
        };
        pair_hamiltonian(j, omega)
    }
}

/// `J s_A·s_B + ω(s_A^z + s_B^z)`.
pub fn pair_hamiltonian<T: Real>(j: T, omega: T) -> Mat4<T> {
    let h = T::lit(0.5);
    let id = Mat2::<T>::identity();
    let sz = Mat2::new(c(-h), c(T::zero()), c(T::zero()), c(h));
    let sm = sigma_minus::<T>();
    let sp = sm.adjoint();
    let dot = kron2(&sz, &sz) + (kron2(&sp, &sm) + kron2(&sm, &sp)) * c(h);
    dot * c(j) + (kron2(&sz, &id) + kron2(&id, &sz)) * c(omega)
}

/// Right-hand side of the master equation.
pub fn lindblad_rhs<T: Real>(rho: &Mat4<T>, h_eff: &Mat4<T>, noise: &NoiseParams<T>) -> Mat4<T> {
    let i = Complex::new(T::zero(), T::one());
    let mut out = (h_eff * rho - rho * h_eff) * (-i);
    let id = Mat2::<T>::identity();
    let sm = sigma_minus::<T>();
    let down_rate = c((noise.n_bar + T::one()) * noise.gamma);
    let up_rate = c(noise.n_bar * noise.gamma);
    let two = c(T::lit(2.0));
    for lower in [kron2(&sm, &id), kron2(&id, &sm)] {
        let raise = lower.adjoint();
        let (pd, pu) = (raise * lower, lower * raise);
        out += (lower * rho * raise * two - pd * rho - rho * pd) * down_rate;
        out += (raise * rho * lower * two - pu * rho - rho * pu) * up_rate;
    }
    out
}

fn pack<T: Real>(m: &Mat4<T>) -> DVector<T> {
    DVector::from_fn(32, |k, _| if k < 16 { m[k].re } else { m[k - 16].im })
}

fn unpack<T: Real>(v: &DVector<T>) -> Mat4<T> {
    Mat4::from_fn(|r, col| {
        let k = r + 4 * col;
        Complex::new(v[k], v[k + 16])
    })
}

/// Master-equation trajectory sampled on the requested grid.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<TwoQubitState<T>>,
    /// `Tr ρ - 1` before any renormalization.
    pub trace_drift: Vec<T>,
    pub min_eigenvalue: Vec<T>,
    /// Snapshots whose trace was rescaled.
    pub renormalized: usize,
}

/// Drift above which a snapshot's trace is rescaled to one.
pub const TRACE_RENORM_THRESHOLD: f64 = 1e-12;

pub fn integrate_master_equation<T: Real>(
    state0: &TwoQubitState<T>,
    mode: HeffMode<T>,
    noise: &NoiseParams<T>,
    t_grid: &[T],
    tol: T,
) -> Result<Trajectory<T>> {
    noise.validate()?;
    if t_grid.first().is_some_and(|&t| t != T::zero()) {
        return Err(Error::Domain("time grid must start at 0".into()));
    }
    let h = mode.hamiltonian();
    let rhs = |_t: T, y: &DVector<T>| pack(&lindblad_rhs(&unpack(y), &h, noise));
    let opts = OdeOptions { tol, ..OdeOptions::default() };
    let sol = integrate(rhs, &pack(&state0.rho), t_grid, &opts)?;
    let mut traj = Trajectory {
        times: sol.times,
        states: Vec::with_capacity(t_grid.len()),
        trace_drift: Vec::with_capacity(t_grid.len()),
        min_eigenvalue: Vec::with_capacity(t_grid.len()),
        renormalized: 0,
    };
    for (t, y) in traj.times.iter().zip(&sol.states) {
        let mut s = TwoQubitState::unchecked(unpack(y));
        let drift = s.trace_drift();
        if drift.abs() > T::lit(TRACE_RENORM_THRESHOLD) {
            log::debug!("trace drift {drift} at t = {t}; renormalizing");
            s.rho /= c(s.trace());
            traj.renormalized += 1;
        }
        traj.trace_drift.push(drift);
        traj.min_eigenvalue.push(s.min_eigenvalue());
        traj.states.push(s);
    }
    Ok(traj)
}

/// One sampled point of an evolution, with elements normalized to unit trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow<T: Real> {
    pub t: T,
    pub p: T,
    pub u: T,
    pub x: T,
    pub y: T,
    pub v: T,
    pub trace_drift: T,
    pub min_eigenvalue: T,
}

impl<T: Real> Trajectory<T> {
    pub fn rows(&self, noise: &NoiseParams<T>) -> Result<Vec<TrajectoryRow<T>>> {
        self.times
            .iter()
            .zip(&self.states)
            .zip(self.trace_drift.iter().zip(&self.min_eigenvalue))
            .map(|((&t, s), (&drift, &min))| {
                let r = &s.rho;
                Ok(TrajectoryRow {
                    t,
                    p: p_of_t(t, noise)?,
                    u: r[(0, 0)].re,
                    x: (r[(1, 1)].re + r[(2, 2)].re) / T::lit(2.0),
                    y: r[(1, 2)].re,
                    v: r[(3, 3)].re,
                    trace_drift: drift,
                    min_eigenvalue: min,
                })
            })
            .collect()
    }

    /// Largest entry-wise difference against another trajectory on the same grid.
    pub fn sup_distance(&self, other: &Self) -> T {
        self.states.iter().zip(&other.states).fold(T::zero(), |m, (a, b)| m.max(a.distance(b)))
    }
}
