//! The open bilinear-biquadratic spin-1 chain
//! `H_c = J Σ_i [cos θ (S_i·S_{i+1}) + sin θ (S_i·S_{i+1})²]`
//! and its singlet/triplet low-energy structure.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{build_sector_basis, SectorBasis};
use crate::linalg::{lanczos_lowest, sorted_symmetric_eigen, LanczosConfig};
use crate::sparse::{two_site_coupling, CouplingForm, SparseOperator};
use crate::{Error, Real, Result};

/// Default refusal threshold for dense diagonalization.
pub const DEFAULT_DENSE_CAP: usize = 12_000;

/// `arctan(1/3)`, the edge of the singlet-ground / triplet-first window.
pub fn theta_window() -> f64 {
    (1.0f64 / 3.0).atan()
}

/// Above this ratio `J_p / J` the second-order treatment is only warned about.
pub const WEAK_PROBE_RATIO: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec<T: Real> {
    /// Number of spin-1 sites `L` (even).
    pub chain_len: usize,
    /// Biquadratic angle in radians.
    pub theta: T,
    /// Overall chain coupling `J`.
    pub j: T,
    /// Probe-chain coupling `J_p`.
    pub j_p: T,
    /// Probe level splitting `ω`.
    pub omega: T,
}

impl<T: Real> ChainSpec<T> {
    /// Chain with `J = 1` and the given length, angle and probe coupling.
    pub fn new(chain_len: usize, theta: T, j_p: T) -> Self {
        ChainSpec { chain_len, theta, j: T::one(), j_p, omega: T::zero() }
    }

    pub fn with_omega(mut self, omega: T) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_j(mut self, j: T) -> Self {
        self.j = j;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.chain_len < 2 || !self.chain_len.is_multiple_of(2) {
            return Err(Error::InvalidLength(self.chain_len));
        }
        if self.theta.abs().as_f64() >= theta_window() {
            return Err(Error::Domain(format!(
                "|theta| = {} outside the singlet-ground window |theta| < arctan(1/3) = {:.6}",
                self.theta.abs(),
                theta_window()
            )));
        }
        if self.j <= T::zero() {
            return Err(Error::Domain(format!("chain coupling J must be positive, got {}", self.j)));
        }
        if self.j_p < T::zero() {
            return Err(Error::Domain(format!("probe coupling J_p must be non-negative, got {}", self.j_p)));
        }
        if (self.j_p / self.j).as_f64() > WEAK_PROBE_RATIO {
            log::warn!("J_p/J = {} exceeds {WEAK_PROBE_RATIO}; second-order coupling is unreliable", self.j_p / self.j);
        }
        Ok(())
    }
}

/// Chain Hamiltonian restricted to one total-S^z sector (no probes).
pub fn build_chain_hamiltonian<T: Real>(spec: &ChainSpec<T>, sz_total: i32) -> Result<SparseOperator<T>> {
    spec.validate()?;
    let basis = build_sector_basis(spec.chain_len, sz_total, false)?;
    chain_hamiltonian_on(spec, &basis)
}

/// Chain part of the Hamiltonian on an arbitrary basis (the probe sites, if
/// any, are untouched).
pub fn chain_hamiltonian_on<T: Real>(spec: &ChainSpec<T>, basis: &SectorBasis) -> Result<SparseOperator<T>> {
    let (c, s) = (spec.j * spec.theta.cos(), spec.j * spec.theta.sin());
    let dim = basis.dim();
    let mut h = SparseOperator::from_triplets(dim, dim, basis.twice_sz(), basis.twice_sz(), Vec::new());
    for i in 1..spec.chain_len {
        let (a, b) = (basis.chain_site(i)?, basis.chain_site(i + 1)?);
        let bond = two_site_coupling::<T>(basis, a, b, CouplingForm::Bilinear)?;
        let bond_sq = bond.mul(&bond);
        h = h.add_scaled(&bond, c).add_scaled(&bond_sq, s);
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagMode {
    DenseFull,
    /// The `k` lowest eigenpairs by Lanczos.
    KrylovExtremal(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    DenseFull,
    KrylovExtremal,
}

#[derive(Debug, Clone)]
pub struct DiagOptions {
    pub dense_cap: usize,
    pub lanczos_tol: f64,
    pub lanczos_max_iter: usize,
}

impl Default for DiagOptions {
    fn default() -> Self {
        DiagOptions { dense_cap: DEFAULT_DENSE_CAP, lanczos_tol: 1e-12, lanczos_max_iter: 800 }
    }
}

/// Eigenvalues (ascending) and optionally eigenvectors of one sector block.
#[derive(Debug, Clone)]
pub struct SectorSpectrum<T: Real> {
    pub twice_sz: i32,
    pub dim: usize,
    pub eigenvalues: Vec<T>,
    /// Eigenvectors as columns matching `eigenvalues`.
    pub eigenvectors: Option<DMatrix<T>>,
    pub solver: SolverKind,
}

impl<T: Real> SectorSpectrum<T> {
    pub fn sz_total(&self) -> i32 {
        self.twice_sz / 2
    }

    pub fn vector(&self, k: usize) -> Option<DVector<T>> {
        self.eigenvectors.as_ref().map(|v| v.column(k).into_owned())
    }

    pub fn without_vectors(mut self) -> Self {
        self.eigenvectors = None;
        self
    }
}

pub fn diagonalize_sector<T: Real>(h: &SparseOperator<T>, mode: DiagMode) -> Result<SectorSpectrum<T>> {
    diagonalize_sector_with(h, mode, &DiagOptions::default())
}

pub fn diagonalize_sector_with<T: Real>(
    h: &SparseOperator<T>,
    mode: DiagMode,
    opts: &DiagOptions,
) -> Result<SectorSpectrum<T>> {
    if !h.is_square() {
        return Err(Error::NotSquare { rows: h.nrows(), cols: h.ncols() });
    }
    let dim = h.nrows();
    match mode {
        DiagMode::DenseFull => {
            if dim > opts.dense_cap {
                return Err(Error::DimensionCap { dim, cap: opts.dense_cap });
            }
            let e = sorted_symmetric_eigen(h.to_dense());
            Ok(SectorSpectrum {
                twice_sz: h.twice_sz_in(),
                dim,
                eigenvalues: e.values,
                eigenvectors: Some(e.vectors),
                solver: SolverKind::DenseFull,
            })
        }
        DiagMode::KrylovExtremal(k) => {
            let cfg = LanczosConfig {
                n_eig: k,
                max_iter: opts.lanczos_max_iter,
                tol: T::lit(opts.lanczos_tol),
                seed: 0x5eed ^ (h.twice_sz_in() as u64),
                check_every: 8,
            };
            let out = lanczos_lowest(dim, |v| h.apply(v), &cfg)?;
            let vectors =
                if out.vectors.is_empty() { DMatrix::zeros(dim, 0) } else { DMatrix::from_columns(&out.vectors) };
            Ok(SectorSpectrum {
                twice_sz: h.twice_sz_in(),
                dim,
                eigenvalues: out.values,
                eigenvectors: Some(vectors),
                solver: SolverKind::KrylovExtremal,
            })
        }
    }
}

/// How the low spectrum is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowSolver {
    Dense,
    Krylov,
}

/// Singlet ground state and the triplet first-excited multiplet.
#[derive(Debug, Clone)]
pub struct LowSpectrum<T: Real> {
    pub eps0: T,
    pub eps1: T,
    /// Haldane gap `ε1 - ε0`.
    pub gap: T,
    /// Ground state in the `S^z = 0` sector basis.
    pub ground_state: DVector<T>,
    /// Triplet members in the `S^z = -1, 0, +1` sector bases.
    pub triplet_states: [DVector<T>; 3],
    pub triplet_energies: [T; 3],
}

impl<T: Real> LowSpectrum<T> {
    pub fn triplet_spread(&self) -> T {
        let e = &self.triplet_energies;
        let hi = e[0].max(e[1]).max(e[2]);
        let lo = e[0].min(e[1]).min(e[2]);
        hi - lo
    }
}

/// Degenerate-level test: `|a - b| <= 1e-8 * max(J, |a|)`.
pub fn degenerate<T: Real>(a: T, b: T, j: T) -> bool {
    (a - b).abs() <= T::lit(1e-8) * j.max(a.abs())
}

pub fn low_spectrum<T: Real>(spec: &ChainSpec<T>, solver: LowSolver) -> Result<LowSpectrum<T>> {
    spec.validate()?;
    let mode = |k| match solver {
        LowSolver::Dense => DiagMode::DenseFull,
        LowSolver::Krylov => DiagMode::KrylovExtremal(k),
    };
    let sectors: Vec<Result<SectorSpectrum<T>>> = [(0, 2), (-1, 1), (1, 1)]
        .into_iter()
        .map(|(m, k)| build_chain_hamiltonian(spec, m).and_then(|h| diagonalize_sector(&h, mode(k))))
        .collect();
    let mut it = sectors.into_iter();
    let (s0, sm, sp) = (it.next().unwrap()?, it.next().unwrap()?, it.next().unwrap()?);
    low_spectrum_from_sectors(spec, &s0, &sm, &sp)
}

/// Extracts the low spectrum from already diagonalized `S^z = 0, -1, +1`
/// blocks (each needs eigenvectors; the zero block at least two levels).
pub fn low_spectrum_from_sectors<T: Real>(
    spec: &ChainSpec<T>,
    s0: &SectorSpectrum<T>,
    sm: &SectorSpectrum<T>,
    sp: &SectorSpectrum<T>,
) -> Result<LowSpectrum<T>> {
    if s0.eigenvalues.len() < 2 || sm.eigenvalues.is_empty() || sp.eigenvalues.is_empty() {
        return Err(Error::Spectrum("need two S^z=0 levels and one level in each S^z=±1 block".into()));
    }
    let missing = || Error::Spectrum("eigenvectors were not retained".into());
    let eps0 = s0.eigenvalues[0];
    let triplet_energies = [sm.eigenvalues[0], s0.eigenvalues[1], sp.eigenvalues[0]];
    let low = LowSpectrum {
        eps0,
        eps1: triplet_energies[1],
        gap: triplet_energies[1] - eps0,
        ground_state: s0.vector(0).ok_or_else(missing)?,
        triplet_states: [
            sm.vector(0).ok_or_else(missing)?,
            s0.vector(1).ok_or_else(missing)?,
            sp.vector(0).ok_or_else(missing)?,
        ],
        triplet_energies,
    };
    let spread = low.triplet_spread();
    let tol = (T::lit(1e-6) * spec.j).max(T::lit(64.0) * T::default_epsilon() * spec.j.max(eps0.abs()));
    if spread > tol {
        return Err(Error::TripletMismatch { spread: spread.as_f64(), tol: tol.as_f64() });
    }
    if degenerate(s0.eigenvalues[0], s0.eigenvalues[1], spec.j) || low.gap <= T::zero() {
        return Err(Error::Spectrum(format!("ground state not an isolated singlet (gap {})", low.gap)));
    }
    Ok(low)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Ok,
    /// `T >= Δ`: the singlet-triplet truncation is outside its regime.
    OutOfValidity,
}

impl Validity {
    pub fn as_str(self) -> &'static str {
        match self {
            Validity::Ok => "ok",
            Validity::OutOfValidity => "out_of_validity",
        }
    }
}

/// Truncated Boltzmann weights of the singlet and one triplet member.
///
/// Energies are measured from `ε0` so the weights never overflow:
/// `w0 = 1`, `w1 = e^{-Δ/T}`, `z = w0 + 3 w1`. Multiply all three by
/// `e^{-ε0/T}` for the absolute values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalWeights<T: Real> {
    pub temperature: T,
    pub eps0: T,
    pub eps1: T,
    pub w0: T,
    pub w1: T,
    pub z: T,
    pub validity: Validity,
}

impl<T: Real> ThermalWeights<T> {
    /// `ln Z` with absolute energies.
    pub fn log_partition(&self) -> T {
        -self.eps0 / self.temperature + self.z.ln()
    }

    /// Absolute `(w0, w1, Z)`; may overflow for large `|ε0|/T`.
    pub fn absolute(&self) -> (T, T, T) {
        let f = (-self.eps0 / self.temperature).exp();
        (self.w0 * f, self.w1 * f, self.z * f)
    }
}

pub fn thermal_weights<T: Real>(low: &LowSpectrum<T>, temperature: T) -> Result<ThermalWeights<T>> {
    weights_from_energies(low.eps0, low.eps1, temperature)
}

pub fn weights_from_energies<T: Real>(eps0: T, eps1: T, temperature: T) -> Result<ThermalWeights<T>> {
    if !(temperature > T::zero()) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    let gap = eps1 - eps0;
    let w1 = (-gap / temperature).exp();
    let validity = if temperature >= gap {
        log::warn!("T = {temperature} >= gap {gap}: truncated thermal state outside its regime");
        Validity::OutOfValidity
    } else {
        Validity::Ok
    };
    Ok(ThermalWeights { temperature, eps0, eps1, w0: T::one(), w1, z: T::one() + T::lit(3.0) * w1, validity })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_eigs(spec: &ChainSpec<f64>) -> Vec<f64> {
        let l = spec.chain_len as i32;
        let mut e: Vec<f64> = (-l..=l)
            .flat_map(|m| {
                let h = build_chain_hamiltonian(spec, m).unwrap();
                diagonalize_sector(&h, DiagMode::DenseFull).unwrap().eigenvalues
            })
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn dimer_heisenberg_spectrum() {
        let e = all_eigs(&ChainSpec::<f64>::new(2, 0.0, 0.1));
        let expected = [-2.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn dimer_closed_forms_at_small_theta() {
        let th: f64 = 0.1;
        let e = all_eigs(&ChainSpec::<f64>::new(2, th, 0.1));
        let e0 = -2.0 * (th.cos() - 2.0 * th.sin());
        let e1 = -(th.cos() - th.sin());
        let e2 = th.cos() + th.sin();
        assert!((e[0] - e0).abs() < 1e-13);
        assert!(e[1..4].iter().all(|x| (x - e1).abs() < 1e-13));
        assert!(e[4..].iter().all(|x| (x - e2).abs() < 1e-13));
    }

    #[test]
    fn sector_zero_of_dimer() {
        let h = build_chain_hamiltonian(&ChainSpec::<f64>::new(2, 0.0, 0.1), 0).unwrap();
        let s = diagonalize_sector(&h, DiagMode::DenseFull).unwrap();
        for (a, b) in s.eigenvalues.iter().zip([-2.0, -1.0, 1.0]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn identity_input() {
        let id = SparseOperator::<f64>::identity(5, 0);
        let s = diagonalize_sector(&id, DiagMode::DenseFull).unwrap();
        assert!(s.eigenvalues.iter().all(|&x| (x - 1.0).abs() < 1e-14));
        let k = diagonalize_sector(&id, DiagMode::KrylovExtremal(2)).unwrap();
        assert!(k.eigenvalues.iter().all(|&x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn dense_cap_refusal() {
        let h = build_chain_hamiltonian(&ChainSpec::<f64>::new(6, 0.0, 0.1), 0).unwrap();
        let opts = DiagOptions { dense_cap: 100, ..DiagOptions::default() };
        assert!(matches!(diagonalize_sector_with(&h, DiagMode::DenseFull, &opts), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn non_square_rejected() {
        let op = SparseOperator::<f64>::from_triplets(2, 3, 0, 0, vec![]);
        assert!(matches!(diagonalize_sector(&op, DiagMode::DenseFull), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn dimer_gaps() {
        let low = low_spectrum(&ChainSpec::<f64>::new(2, 0.0, 0.1), LowSolver::Dense).unwrap();
        assert!((low.gap - 1.0).abs() < 1e-13);
        let th: f64 = 0.1;
        let low = low_spectrum(&ChainSpec::<f64>::new(2, th, 0.1), LowSolver::Dense).unwrap();
        assert!((low.gap - (th.cos() - 3.0 * th.sin())).abs() < 1e-13);
    }

    #[test]
    fn dense_and_krylov_agree_at_l4() {
        let spec = ChainSpec::<f64>::new(4, 0.0, 0.1);
        let d = low_spectrum(&spec, LowSolver::Dense).unwrap();
        let k = low_spectrum(&spec, LowSolver::Krylov).unwrap();
        assert!((d.eps0 - k.eps0).abs() < 1e-9);
        assert!((d.gap - k.gap).abs() < 1e-9);
        let h = build_chain_hamiltonian(&spec, 0).unwrap();
        let dense = diagonalize_sector(&h, DiagMode::DenseFull).unwrap();
        let kry = diagonalize_sector(&h, DiagMode::KrylovExtremal(6)).unwrap();
        for (a, b) in dense.eigenvalues.iter().zip(&kry.eigenvalues) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(ChainSpec::<f64>::new(3, 0.0, 0.1).validate().is_err());
        assert!(ChainSpec::<f64>::new(4, 0.4, 0.1).validate().is_err());
        assert!(ChainSpec::<f64>::new(4, 0.0, -0.1).validate().is_err());
        assert!(ChainSpec::<f64>::new(4, 0.0, 0.1).with_j(0.0).validate().is_err());
    }

    #[test]
    fn boltzmann_limits() {
        let w = weights_from_energies(-2.0f64, -1.0, 1.0).unwrap();
        assert!((w.w1 / w.w0 - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(w.validity, Validity::OutOfValidity);
        let cold = weights_from_energies(-2.0f64, -1.0, 1e-3).unwrap();
        assert!(cold.w1 / cold.w0 < 1e-300);
        assert!((cold.z - cold.w0).abs() < 1e-300);
        assert_eq!(cold.validity, Validity::Ok);
        let w = weights_from_energies(-2.0f64, -1.0, 0.1).unwrap();
        assert!((w.z - (1.0 + 3.0 * (-10.0f64).exp())).abs() < 1e-15);
        assert!((w.w0 + 3.0 * w.w1 - w.z).abs() < 1e-15);
        assert!(weights_from_energies(-2.0f64, -1.0, 0.0).is_err());
        assert!(weights_from_energies(-2.0f64, -1.0, -1.0).is_err());
    }

    #[test]
    fn absolute_weights() {
        let w = weights_from_energies(-2.0f64, -1.0, 0.5).unwrap();
        let (w0, w1, z) = w.absolute();
        assert!((w0 - 4f64.exp()).abs() < 1e-12);
        assert!((w1 - 2f64.exp()).abs() < 1e-12);
        assert!((z - (4f64.exp() + 3.0 * 2f64.exp())).abs() < 1e-10);
        assert!((w.log_partition() - z.ln()).abs() < 1e-13);
    }
}
