//! Effective probe-probe Heisenberg coupling from second-order (Fröhlich)
//! perturbation theory in the probe-chain coupling `J_p`.
//!
//! With the chain in its truncated thermal state (singlet plus one triplet),
//! the probes see
//!
//! ```text
//! J_eff = -(2 J_p² e^{-ε0/T} / Z) (Ω⁰ + e^{-Δ/T} Ω¹)
//! Ωˡ    = Σ_{n ∈ level l} Σ_{k ∉ level l} <φ_l^n|S_1^z|k><k|S_L^z|φ_l^n> / (ε_k - ε_l)
//! ```
//!
//! `Ωˡ` sums over every member `n` of the level-`l` multiplet (one singlet,
//! three triplet states). That sum is what the chain trace of
//! `½[S, H_I] ρ_c` produces; each multiplet member carries its own Boltzmann
//! weight.
//!
//! Two backends compute `Ωˡ`: full dense spectra of the `S^z = 0, ±1` blocks,
//! or projected resolvent solves `<φ|S_1^z Q (H_c - ε_l)^{-1} Q S_L^z|φ>`
//! that only need the few lowest eigenvectors.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::basis::{build_sector_basis, SectorBasis};
use crate::cache::{CacheKey, SpectrumCache};
use crate::chain::{
    build_chain_hamiltonian, chain_hamiltonian_on, diagonalize_sector, diagonalize_sector_with,
    low_spectrum_from_sectors, weights_from_energies, ChainSpec, DiagMode, DiagOptions, LowSpectrum, SectorSpectrum,
    SolverKind, ThermalWeights, Validity,
};
use crate::linalg::{conjugate_gradient, project_out};
use crate::sparse::{site_lowering, site_raising, site_sz, two_site_coupling, CouplingForm, SparseOperator};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    FullSpectrum,
    Resolvent,
}

impl Backend {
    pub fn solver(self) -> SolverKind {
        match self {
            Backend::FullSpectrum => SolverKind::DenseFull,
            Backend::Resolvent => SolverKind::KrylovExtremal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::FullSpectrum => "full",
            Backend::Resolvent => "resolvent",
        }
    }
}

/// Where an [`OmegaSum`] value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaSource {
    FullSpectrum,
    Resolvent,
    /// Two-site closed form.
    ClosedForm,
}

impl From<Backend> for OmegaSource {
    fn from(b: Backend) -> Self {
        match b {
            Backend::FullSpectrum => OmegaSource::FullSpectrum,
            Backend::Resolvent => OmegaSource::Resolvent,
        }
    }
}

/// Multiplet-summed end-to-end resolvent sum `Ωˡ_{i,j}` (units 1/energy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaSum<T: Real> {
    /// 0 for the singlet, 1 for the triplet.
    pub level: u8,
    /// Chain sites (1-based) of the two end operators.
    pub i: usize,
    pub j: usize,
    pub value: T,
    /// Terms dropped because `|ε_k - ε_l| < 1e-10 J` (the level's own states
    /// are never counted here).
    pub excluded_terms: usize,
    pub source: OmegaSource,
}

/// Chain quantities that `J_eff(T)` depends on. None of them depend on `T`,
/// so a temperature sweep reuses one instance.
#[derive(Debug, Clone)]
pub struct CouplingInputs<T: Real> {
    pub spec: ChainSpec<T>,
    pub eps0: T,
    pub eps1: T,
    pub omega0: OmegaSum<T>,
    pub omega1: OmegaSum<T>,
    pub backend: Backend,
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveCoupling<T: Real> {
    pub j_eff: T,
    pub temperature: T,
    pub theta: T,
    pub chain_len: usize,
    pub j_p: T,
    pub omega0: OmegaSum<T>,
    pub omega1: OmegaSum<T>,
    pub eps0: T,
    pub eps1: T,
    pub validity: Validity,
}

impl<T: Real> EffectiveCoupling<T> {
    pub fn gap(&self) -> T {
        self.eps1 - self.eps0
    }

    /// Recomputes `J_eff` from the stored ingredients.
    pub fn recompute(&self) -> T {
        combine(self.j_p, self.eps0, self.eps1, self.temperature, self.omega0.value, self.omega1.value)
    }
}

fn combine<T: Real>(j_p: T, eps0: T, eps1: T, temperature: T, omega0: T, omega1: T) -> T {
    // e^{-ε0/T}/Z = 1/(1 + 3 e^{-Δ/T})
    let boltz = (-(eps1 - eps0) / temperature).exp();
    let z = T::one() + T::lit(3.0) * boltz;
    -(T::lit(2.0) * j_p * j_p / z) * (omega0 + boltz * omega1)
}

impl<T: Real> CouplingInputs<T> {
    pub fn gap(&self) -> T {
        self.eps1 - self.eps0
    }

    pub fn weights(&self, temperature: T) -> Result<ThermalWeights<T>> {
        weights_from_energies(self.eps0, self.eps1, temperature)
    }

    pub fn j_eff_at(&self, temperature: T) -> Result<EffectiveCoupling<T>> {
        let w = self.weights(temperature)?;
        Ok(EffectiveCoupling {
            j_eff: combine(self.spec.j_p, self.eps0, self.eps1, temperature, self.omega0.value, self.omega1.value),
            temperature,
            theta: self.spec.theta,
            chain_len: self.spec.chain_len,
            j_p: self.spec.j_p,
            omega0: self.omega0,
            omega1: self.omega1,
            eps0: self.eps0,
            eps1: self.eps1,
            validity: w.validity,
        })
    }

    /// `lim_{T→0} J_eff = -2 J_p² Ω⁰`.
    pub fn j_eff_zero_temperature(&self) -> T {
        -T::lit(2.0) * self.spec.j_p * self.spec.j_p * self.omega0.value
    }
}

/// The three chain blocks a level-0/1 calculation touches, with their end-site
/// `S^z` operators.
struct Blocks<T: Real> {
    /// Indexed by `S^z + 1`.
    h: [SparseOperator<T>; 3],
    s_first: [SparseOperator<T>; 3],
    s_last: [SparseOperator<T>; 3],
}

impl<T: Real> Blocks<T> {
    fn new(spec: &ChainSpec<T>) -> Result<Self> {
        let build = |m: i32| -> Result<(SparseOperator<T>, SparseOperator<T>, SparseOperator<T>)> {
            let basis = build_sector_basis(spec.chain_len, m, false)?;
            let h = chain_hamiltonian_on(spec, &basis)?;
            let first = site_sz(&basis, basis.chain_site(1)?)?;
            let last = site_sz(&basis, basis.chain_site(spec.chain_len)?)?;
            Ok((h, first, last))
        };
        let (a, b, c) = (build(-1)?, build(0)?, build(1)?);
        Ok(Blocks { h: [a.0, b.0, c.0], s_first: [a.1, b.1, c.1], s_last: [a.2, b.2, c.2] })
    }
}

/// Ωˡ for one state `phi` (energy `e`) using a full sector spectrum.
fn state_sum_full<T: Real>(
    spectrum: &SectorSpectrum<T>,
    s_first: &SparseOperator<T>,
    s_last: &SparseOperator<T>,
    self_index: usize,
    guard: T,
) -> (T, usize) {
    let vecs = spectrum.eigenvectors.as_ref().expect("full spectrum keeps eigenvectors");
    let phi = vecs.column(self_index).into_owned();
    let e = spectrum.eigenvalues[self_index];
    let a = vecs.tr_mul(&s_first.apply(&phi));
    let b = vecs.tr_mul(&s_last.apply(&phi));
    let mut sum = T::zero();
    let mut excluded = 0;
    for (k, &ek) in spectrum.eigenvalues.iter().enumerate() {
        if k == self_index {
            continue;
        }
        let d = ek - e;
        if d.abs() < guard {
            excluded += 1;
            continue;
        }
        sum += a[k] * b[k] / d;
    }
    (sum, excluded)
}

/// Ωˡ for one state through a projected linear solve. `below` lists all
/// eigenpairs of the block lying below `e`; their terms are added explicitly
/// and they are projected out together with `phi` itself.
fn state_sum_resolvent<T: Real>(
    h: &SparseOperator<T>,
    s_first: &SparseOperator<T>,
    s_last: &SparseOperator<T>,
    phi: &DVector<T>,
    e: T,
    below: &[(T, DVector<T>)],
    guard: T,
) -> Result<(T, usize)> {
    let a = s_first.apply(phi);
    let b = s_last.apply(phi);
    let mut explicit = T::zero();
    let mut excluded = 0;
    let mut deflate: Vec<DVector<T>> = vec![phi.clone()];
    for (ek, v) in below {
        let d = *ek - e;
        if d.abs() < guard {
            excluded += 1;
        } else {
            explicit += v.dot(&a) * v.dot(&b) / d;
        }
        deflate.push(v.clone());
    }
    let project = |v: &mut DVector<T>| {
        project_out(v, &deflate);
        project_out(v, &deflate);
    };
    let sol = conjugate_gradient(
        |v| {
            let mut out = h.apply(v);
            out.axpy(-e, v, T::one());
            out
        },
        project,
        &b,
        T::lit(1e-10),
        4 * h.nrows().max(50),
    )?;
    Ok((explicit + a.dot(&sol.solution), excluded))
}

/// The `S^z = -1, 0, +1` spectra a backend needs: everything for the full
/// backend, the lowest one or two states for the resolvent backend.
fn sector_spectra<T: Real>(blocks: &Blocks<T>, backend: Backend) -> Result<Vec<SectorSpectrum<T>>> {
    match backend {
        Backend::FullSpectrum => blocks.h.iter().map(|h| diagonalize_sector(h, DiagMode::DenseFull)).collect(),
        Backend::Resolvent => {
            let opts = DiagOptions::default();
            [(0usize, 1usize), (1, 2), (2, 1)]
                .into_iter()
                .map(|(m, k)| diagonalize_sector_with(&blocks.h[m], DiagMode::KrylovExtremal(k), &opts))
                .collect()
        }
    }
}

fn cached_spectra<T: Real>(
    spec: &ChainSpec<T>,
    blocks: &Blocks<T>,
    backend: Backend,
    cache: Option<&SpectrumCache>,
) -> Result<Vec<SectorSpectrum<T>>> {
    let Some(cache) = cache else {
        return sector_spectra(blocks, backend);
    };
    let key = CacheKey::new(spec, backend.solver());
    let wanted = match backend {
        Backend::FullSpectrum => [blocks.h[0].nrows(), blocks.h[1].nrows(), blocks.h[2].nrows()],
        Backend::Resolvent => [1, 2, 1],
    };
    if let Some(hit) = cache.load::<T>(&key)? {
        let usable =
            hit.len() == 3 && hit.iter().zip(wanted).all(|(s, n)| s.eigenvalues.len() >= n && s.eigenvectors.is_some());
        if usable {
            log::debug!("spectrum cache hit for {key:?}");
            return Ok(hit);
        }
    }
    let fresh = sector_spectra(blocks, backend)?;
    cache.store(&key, &fresh)?;
    Ok(fresh)
}

/// `Ω⁰` and `Ω¹` together with the low spectrum they were computed from.
pub fn coupling_inputs<T: Real>(spec: &ChainSpec<T>, backend: Backend) -> Result<CouplingInputs<T>> {
    coupling_inputs_cached(spec, backend, None)
}

/// [`coupling_inputs`] reading and filling an on-disk spectrum cache.
pub fn coupling_inputs_cached<T: Real>(
    spec: &ChainSpec<T>,
    backend: Backend,
    cache: Option<&SpectrumCache>,
) -> Result<CouplingInputs<T>> {
    spec.validate()?;
    let blocks = Blocks::new(spec)?;
    let spectra = cached_spectra(spec, &blocks, backend, cache)?;
    let guard = T::lit(1e-10) * spec.j;
    let (ng, nl) = (1, spec.chain_len);
    match backend {
        Backend::FullSpectrum => {
            let low = low_spectrum_from_sectors(spec, &spectra[1], &spectra[0], &spectra[2])?;
            let (o0, x0) = state_sum_full(&spectra[1], &blocks.s_first[1], &blocks.s_last[1], 0, guard);
            let mut o1 = T::zero();
            let mut x1 = 0;
            for (m, idx) in [(0usize, 0usize), (1, 1), (2, 0)] {
                let (v, x) = state_sum_full(&spectra[m], &blocks.s_first[m], &blocks.s_last[m], idx, guard);
                o1 += v;
                x1 += x;
            }
            Ok(assemble(spec, &low, (o0, x0), (o1, x1), backend, ng, nl))
        }
        Backend::Resolvent => {
            let low = low_spectrum_from_sectors(spec, &spectra[1], &spectra[0], &spectra[2])?;

            let (o0, x0) = state_sum_resolvent(
                &blocks.h[1],
                &blocks.s_first[1],
                &blocks.s_last[1],
                &low.ground_state,
                low.eps0,
                &[],
                guard,
            )?;
            let mut o1 = T::zero();
            let mut x1 = 0;
            let below_zero = [(low.eps0, low.ground_state.clone())];
            for (m, below) in [(0usize, &[][..]), (1, &below_zero[..]), (2, &[][..])] {
                let (v, x) = state_sum_resolvent(
                    &blocks.h[m],
                    &blocks.s_first[m],
                    &blocks.s_last[m],
                    &low.triplet_states[m],
                    low.triplet_energies[m],
                    below,
                    guard,
                )?;
                o1 += v;
                x1 += x;
            }
            Ok(assemble(spec, &low, (o0, x0), (o1, x1), backend, ng, nl))
        }
    }
}

fn assemble<T: Real>(
    spec: &ChainSpec<T>,
    low: &LowSpectrum<T>,
    (o0, x0): (T, usize),
    (o1, x1): (T, usize),
    backend: Backend,
    i: usize,
    j: usize,
) -> CouplingInputs<T> {
    let source = backend.into();
    CouplingInputs {
        spec: *spec,
        eps0: low.eps0,
        eps1: low.eps1,
        omega0: OmegaSum { level: 0, i, j, value: o0, excluded_terms: x0, source },
        omega1: OmegaSum { level: 1, i, j, value: o1, excluded_terms: x1, source },
        backend,
    }
}

/// `Ωˡ_{1,L}` for `level` 0 or 1.
pub fn omega_sum<T: Real>(spec: &ChainSpec<T>, level: u8, backend: Backend) -> Result<OmegaSum<T>> {
    let inputs = coupling_inputs(spec, backend)?;
    match level {
        0 => Ok(inputs.omega0),
        1 => Ok(inputs.omega1),
        _ => Err(Error::Domain(format!("only levels 0 and 1 are retained, got {level}"))),
    }
}

/// Effective coupling at temperature `T`.
pub fn j_eff<T: Real>(spec: &ChainSpec<T>, temperature: T, backend: Backend) -> Result<EffectiveCoupling<T>> {
    if !(temperature > T::zero()) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    coupling_inputs(spec, backend)?.j_eff_at(temperature)
}

/// Closed-form two-site levels `(ε0, ε1, ε2)` (singlet, triplet, quintet).
pub fn dimer_levels<T: Real>(theta: T, j: T) -> (T, T, T) {
    let (c, s) = (theta.cos(), theta.sin());
    let two = T::lit(2.0);
    (-two * j * (c - two * s), -j * (c - s), j * (c + s))
}

fn check_dimer_domain<T: Real>(theta: T, temperature: T) -> Result<()> {
    if theta.abs().as_f64() >= crate::chain::theta_window() {
        return Err(Error::Domain(format!("|theta| = {} outside |theta| < arctan(1/3)", theta.abs())));
    }
    if !(temperature > T::zero()) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    Ok(())
}

fn dimer_coupling<T: Real>(theta: T, temperature: T, j_p: T, j: T, quintet_sign: T) -> Result<EffectiveCoupling<T>> {
    check_dimer_domain(theta, temperature)?;
    let (e0, e1, e2) = dimer_levels(theta, j);
    let gap = e1 - e0;
    let (two, three) = (T::lit(2.0), T::lit(3.0));
    let omega0 = -two / (three * gap);
    let omega1 = two / (three * gap) - quintet_sign * T::lit(5.0) / (T::lit(6.0) * (e2 - e1));
    let w = weights_from_energies(e0, e1, temperature)?;
    let boltz = w.w1;
    let jp2 = j_p * j_p;
    let four = T::lit(4.0);
    let j_eff = (T::one() / (three * w.z))
        * ((four * jp2 - four * jp2 * boltz) / gap + quintet_sign * T::lit(5.0) * jp2 * boltz / (e2 - e1));
    let closed =
        |level, value| OmegaSum { level, i: 1, j: 2, value, excluded_terms: 0, source: OmegaSource::ClosedForm };
    Ok(EffectiveCoupling {
        j_eff,
        temperature,
        theta,
        chain_len: 2,
        j_p,
        omega0: closed(0, omega0),
        omega1: closed(1, omega1),
        eps0: e0,
        eps1: e1,
        validity: w.validity,
    })
}

/// Two-site coupling in the commonly quoted closed form
/// `(e^{-ε0/T}/3Z)[(4J_p² - 4J_p² e^{-Δ/T})/(ε1-ε0) - 5J_p² e^{-Δ/T}/(ε2-ε1)]`.
///
/// The quintet term carries the opposite sign to what second-order
/// perturbation theory gives; see [`j_eff_dimer_second_order`].
pub fn j_eff_dimer_analytic<T: Real>(theta: T, temperature: T, j_p: T, j: T) -> Result<EffectiveCoupling<T>> {
    dimer_coupling(theta, temperature, j_p, j, -T::one())
}

/// Two-site coupling as second-order perturbation theory produces it: the
/// triplet's virtual transitions to the quintet raise `J_eff`, so the quintet
/// term enters with a plus sign.
pub fn j_eff_dimer_second_order<T: Real>(theta: T, temperature: T, j_p: T, j: T) -> Result<EffectiveCoupling<T>> {
    dimer_coupling(theta, temperature, j_p, j, T::one())
}

/// Low-lying levels of the complete probe + chain Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwOracle<T: Real> {
    /// `E(triplet) - E(singlet)` of the effective probe pair.
    pub j_eff_t0: T,
    pub singlet_energy: T,
    pub triplet_energy: T,
    /// Distance from the quartet to the next level.
    pub isolation: T,
}

/// Largest chain for which the full-system oracle is attempted.
pub const SW_ORACLE_MAX_LEN: usize = 6;

/// Full probe + chain Hamiltonian on one total-S^z sector.
pub fn full_system_hamiltonian<T: Real>(spec: &ChainSpec<T>, basis: &SectorBasis) -> Result<SparseOperator<T>> {
    let mut h = chain_hamiltonian_on(spec, basis)?;
    let (a, b) = (basis.probe_a().unwrap(), basis.probe_b().unwrap());
    let first = basis.chain_site(1)?;
    let last = basis.chain_site(spec.chain_len)?;
    let left = two_site_coupling::<T>(basis, a, first, CouplingForm::ProbeHeisenberg)?;
    let right = two_site_coupling::<T>(basis, last, b, CouplingForm::ProbeHeisenberg)?;
    h = h.add_scaled(&left, spec.j_p).add_scaled(&right, spec.j_p);
    if spec.omega != T::zero() {
        h = h.add_scaled(&site_sz(basis, a)?, spec.omega).add_scaled(&site_sz(basis, b)?, spec.omega);
    }
    Ok(h)
}

/// Diagonalizes the complete Hamiltonian (probes, chain and their coupling)
/// and reads `J_eff(T→0)` off the singlet-triplet splitting of its four
/// lowest levels.
pub fn sw_numeric_oracle<T: Real>(spec: &ChainSpec<T>) -> Result<SwOracle<T>> {
    spec.validate()?;
    if spec.chain_len > SW_ORACLE_MAX_LEN {
        return Err(Error::Domain(format!("full-system oracle limited to L <= {SW_ORACLE_MAX_LEN}")));
    }
    if (spec.j_p / spec.j).as_f64() > 0.1 + 1e-12 {
        return Err(Error::Domain("full-system oracle needs J_p/J <= 0.1".into()));
    }
    if spec.omega != T::zero() {
        return Err(Error::Domain("full-system oracle needs omega = 0".into()));
    }
    let mut lowest: Vec<Vec<T>> = Vec::new();
    for m in [-1, 0, 1] {
        let basis = build_sector_basis(spec.chain_len, m, true)?;
        let h = full_system_hamiltonian(spec, &basis)?;
        let s = diagonalize_sector(&h, DiagMode::DenseFull)?;
        lowest.push(s.eigenvalues.iter().take(3).copied().collect());
    }
    let (em, e0, ep) = (&lowest[0], &lowest[1], &lowest[2]);
    let tol = T::lit(1e-9) * spec.j;
    let trip = (em[0] + ep[0]) / T::lit(2.0);
    if (em[0] - ep[0]).abs() > tol {
        return Err(Error::Spectrum("S^z = ±1 partners of the probe triplet disagree".into()));
    }
    // one of the two lowest S^z = 0 levels is the triplet partner
    let (singlet, partner) = if (e0[0] - trip).abs() <= (e0[1] - trip).abs() { (e0[1], e0[0]) } else { (e0[0], e0[1]) };
    if (partner - trip).abs() > tol {
        return Err(Error::Spectrum("no S^z = 0 partner for the probe triplet".into()));
    }
    let quartet_top = singlet.max(trip);
    let next = e0[2].min(em[1]).min(ep[1]);
    let isolation = next - quartet_top;
    let splitting = trip - singlet;
    if isolation <= T::lit(10.0) * splitting.abs() {
        return Err(Error::Spectrum(format!(
            "lowest four levels not isolated (splitting {splitting}, next level {isolation} above)"
        )));
    }
    Ok(SwOracle { j_eff_t0: splitting, singlet_energy: singlet, triplet_energy: trip, isolation })
}

/// Isotropy check: `Ωˡ` rebuilt from `S^+`/`S^-` end-site matrix elements,
/// `Σ_n Σ_k <φ_l^n|S_L^-|k><k|S_1^+|φ_l^n>/(ε_k - ε_l)`, by full
/// diagonalization. For an SU(2)-invariant chain this equals `2 Ωˡ`.
pub fn omega_sum_ladder<T: Real>(spec: &ChainSpec<T>, level: u8) -> Result<T> {
    spec.validate()?;
    let l = spec.chain_len;
    let guard = T::lit(1e-10) * spec.j;
    let spectrum = |m: i32| -> Result<(SectorBasis, SectorSpectrum<T>)> {
        let basis = build_sector_basis(l, m, false)?;
        let h = build_chain_hamiltonian(spec, m)?;
        Ok((basis, diagonalize_sector(&h, DiagMode::DenseFull)?))
    };
    let members: Vec<(i32, usize)> = match level {
        0 => vec![(0, 0)],
        1 => vec![(-1, 0), (0, 1), (1, 0)],
        _ => return Err(Error::Domain(format!("only levels 0 and 1 are retained, got {level}"))),
    };
    let mut total = T::zero();
    for (m, idx) in members {
        let (b_in, s_in) = spectrum(m)?;
        let phi = s_in.vector(idx).unwrap();
        let e = s_in.eigenvalues[idx];
        let (b_out, s_out) = spectrum(m + 1)?;
        if b_out.is_empty() {
            continue;
        }
        let up_first = site_raising::<T>(&b_in, &b_out, b_in.chain_site(1)?)?;
        let up_last = site_raising::<T>(&b_in, &b_out, b_in.chain_site(l)?)?;
        let vecs = s_out.eigenvectors.as_ref().unwrap();
        let a = vecs.tr_mul(&up_first.apply(&phi));
        let b = vecs.tr_mul(&up_last.apply(&phi));
        for (k, &ek) in s_out.eigenvalues.iter().enumerate() {
            let d = ek - e;
            if d.abs() >= guard {
                total += a[k] * b[k] / d;
            }
        }
    }
    Ok(total)
}

/// `S^-` companion of [`omega_sum_ladder`]: same sum with lowering operators.
pub fn omega_sum_ladder_lowering<T: Real>(spec: &ChainSpec<T>, level: u8) -> Result<T> {
    spec.validate()?;
    let l = spec.chain_len;
    let guard = T::lit(1e-10) * spec.j;
    let members: Vec<(i32, usize)> = match level {
        0 => vec![(0, 0)],
        1 => vec![(-1, 0), (0, 1), (1, 0)],
        _ => return Err(Error::Domain(format!("only levels 0 and 1 are retained, got {level}"))),
    };
    let mut total = T::zero();
    for (m, idx) in members {
        let b_in = build_sector_basis(l, m, false)?;
        let s_in = diagonalize_sector(&build_chain_hamiltonian(spec, m)?, DiagMode::DenseFull)?;
        let b_out = build_sector_basis(l, m - 1, false)?;
        let s_out = diagonalize_sector(&build_chain_hamiltonian(spec, m - 1)?, DiagMode::DenseFull)?;
        let phi = s_in.vector(idx).unwrap();
        let e = s_in.eigenvalues[idx];
        let dn_first = site_lowering::<T>(&b_in, &b_out, b_in.chain_site(1)?)?;
        let dn_last = site_lowering::<T>(&b_in, &b_out, b_in.chain_site(l)?)?;
        let vecs = s_out.eigenvectors.as_ref().unwrap();
        let a = vecs.tr_mul(&dn_first.apply(&phi));
        let b = vecs.tr_mul(&dn_last.apply(&phi));
        for (k, &ek) in s_out.eigenvalues.iter().enumerate() {
            let d = ek - e;
            if d.abs() >= guard {
                total += a[k] * b[k] / d;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn dimer_ground_omega() {
        let spec = ChainSpec::<f64>::new(2, 0.0, 0.1);
        let o = omega_sum(&spec, 0, Backend::FullSpectrum).unwrap();
        assert!((o.value + 2.0 / 3.0).abs() < 1e-13);
        assert_eq!(o.excluded_terms, 0);
        let r = omega_sum(&spec, 0, Backend::Resolvent).unwrap();
        assert!(rel(r.value, o.value) < 1e-10);
    }

    #[test]
    fn dimer_triplet_omega_matches_closed_form() {
        for th in [-0.1, 0.0, 0.1] {
            let spec = ChainSpec::<f64>::new(2, th, 0.1);
            let o = omega_sum(&spec, 1, Backend::FullSpectrum).unwrap();
            let c = j_eff_dimer_second_order(th, 0.1, 0.1, 1.0).unwrap();
            assert!(rel(o.value, c.omega1.value) < 1e-12, "{} vs {}", o.value, c.omega1.value);
        }
    }

    #[test]
    fn zero_temperature_limit() {
        let spec = ChainSpec::<f64>::new(2, 0.0, 0.1);
        let c = j_eff(&spec, 1e-3, Backend::FullSpectrum).unwrap();
        assert!(rel(c.j_eff, 4.0 * 0.01 / 3.0) < 1e-12);
        let a = j_eff_dimer_analytic(0.0, 1e-3, 0.1, 1.0).unwrap();
        assert!(rel(a.j_eff, 4.0 * 0.01 / 3.0) < 1e-12);
    }

    #[test]
    fn omega_route_matches_second_order_dimer() {
        for th in [-0.1, 0.0, 0.1] {
            let inputs = coupling_inputs(&ChainSpec::<f64>::new(2, th, 0.1), Backend::FullSpectrum).unwrap();
            for t in [0.05, 0.1, 0.3] {
                let a = inputs.j_eff_at(t).unwrap().j_eff;
                let b = j_eff_dimer_second_order(th, t, 0.1, 1.0).unwrap().j_eff;
                assert!(rel(a, b) < 1e-12, "theta {th} T {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn printed_dimer_form_differs_only_by_quintet_sign() {
        for (th, t) in [(0.0, 0.1), (0.1, 0.3), (-0.1, 0.05)] {
            let printed = j_eff_dimer_analytic(th, t, 0.1, 1.0).unwrap();
            let second = j_eff_dimer_second_order(th, t, 0.1, 1.0).unwrap();
            let (_, e1, e2) = dimer_levels(th, 1.0f64);
            let w = weights_from_energies(printed.eps0, printed.eps1, t).unwrap();
            let expected = 2.0 * 5.0 * 0.01 * w.w1 / (3.0 * w.z * (e2 - e1));
            assert!((second.j_eff - printed.j_eff - expected).abs() < 1e-16);
        }
    }

    #[test]
    fn dimer_golden_values() {
        // (1/(3(1+3e^-10))) [0.04 (1 - e^-10) ∓ 0.05 e^-10 / 2]
        let e = (-10.0f64).exp();
        let printed = (0.04 * (1.0 - e) - 0.05 * e / 2.0) / (3.0 * (1.0 + 3.0 * e));
        let second = (0.04 * (1.0 - e) + 0.05 * e / 2.0) / (3.0 * (1.0 + 3.0 * e));
        assert!((printed - 0.013_330_534_052_259_47).abs() < 1e-16);
        assert!((second - 0.013_331_290_614_711_87).abs() < 1e-16);
        let a = j_eff_dimer_analytic(0.0, 0.1, 0.1, 1.0).unwrap().j_eff;
        let b = j_eff_dimer_second_order(0.0, 0.1, 0.1, 1.0).unwrap().j_eff;
        assert!(rel(a, printed) < 1e-13);
        assert!(rel(b, second) < 1e-13);
    }

    #[test]
    fn small_angle_enhances_coupling() {
        let a = j_eff_dimer_analytic(0.05, 0.05, 0.1, 1.0).unwrap().j_eff;
        let b = j_eff_dimer_analytic(0.0, 0.05, 0.1, 1.0).unwrap().j_eff;
        assert!(a > b);
    }

    #[test]
    fn dimer_domain_errors() {
        assert!(j_eff_dimer_analytic(0.4, 0.1, 0.1, 1.0).is_err());
        assert!(j_eff_dimer_analytic(0.0, 0.0, 0.1, 1.0).is_err());
        assert!(j_eff(&ChainSpec::<f64>::new(2, 0.0, 0.1), -1.0, Backend::FullSpectrum).is_err());
        assert!(omega_sum(&ChainSpec::<f64>::new(2, 0.0, 0.1), 2, Backend::FullSpectrum).is_err());
    }

    #[test]
    fn backends_agree() {
        for l in [4, 6] {
            for th in [0.0, 0.15] {
                let spec = ChainSpec::<f64>::new(l, th, 0.1);
                let f = coupling_inputs(&spec, Backend::FullSpectrum).unwrap();
                let r = coupling_inputs(&spec, Backend::Resolvent).unwrap();
                assert!(rel(r.omega0.value, f.omega0.value) < 1e-8, "L={l}");
                assert!(rel(r.omega1.value, f.omega1.value) < 1e-8, "L={l}");
                assert!((r.eps0 - f.eps0).abs() < 1e-10);
                assert!((r.eps1 - f.eps1).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ground_omega_is_negative_for_even_lengths() {
        for l in [2, 4, 6, 8] {
            for th in [-0.2, 0.0, 0.2] {
                let o = omega_sum(&ChainSpec::<f64>::new(l, th, 0.1), 0, Backend::Resolvent).unwrap();
                assert!(o.value < 0.0, "L={l} theta={th}: {}", o.value);
            }
        }
    }

    #[test]
    fn ladder_sums_are_twice_longitudinal() {
        for (l, th) in [(2, 0.0), (4, 0.1), (6, -0.1)] {
            let spec = ChainSpec::<f64>::new(l, th, 0.1);
            let inputs = coupling_inputs(&spec, Backend::FullSpectrum).unwrap();
            for (level, z) in [(0u8, inputs.omega0.value), (1, inputs.omega1.value)] {
                let up = omega_sum_ladder(&spec, level).unwrap();
                let dn = omega_sum_ladder_lowering(&spec, level).unwrap();
                assert!(rel(up, 2.0 * z) < 1e-8, "L={l} level {level}: {up} vs {}", 2.0 * z);
                assert!(rel(dn, 2.0 * z) < 1e-8, "L={l} level {level}: {dn} vs {}", 2.0 * z);
            }
        }
    }

    #[test]
    fn quadratic_in_probe_coupling() {
        let a = coupling_inputs(&ChainSpec::<f64>::new(4, 0.05, 0.1), Backend::FullSpectrum).unwrap();
        let b = coupling_inputs(&ChainSpec::<f64>::new(4, 0.05, 0.03), Backend::FullSpectrum).unwrap();
        let (ja, jb) = (a.j_eff_at(0.1).unwrap().j_eff, b.j_eff_at(0.1).unwrap().j_eff);
        assert!(rel(jb, ja * 0.09) < 1e-13);
    }

    #[test]
    fn coupling_decreases_with_temperature() {
        let inputs = coupling_inputs(&ChainSpec::<f64>::new(6, 0.0, 0.1), Backend::Resolvent).unwrap();
        assert!(inputs.j_eff_at(0.05).unwrap().j_eff > inputs.j_eff_at(0.2).unwrap().j_eff);
    }

    #[test]
    fn stored_fields_recompute() {
        let c = j_eff(&ChainSpec::<f64>::new(4, 0.1, 0.1), 0.2, Backend::FullSpectrum).unwrap();
        assert_eq!(c.recompute(), c.j_eff);
        assert!(c.j_eff > 0.0);
        assert_eq!(c.validity, Validity::Ok);
        let hot = j_eff(&ChainSpec::<f64>::new(4, 0.1, 0.1), 2.0, Backend::FullSpectrum).unwrap();
        assert_eq!(hot.validity, Validity::OutOfValidity);
    }

    #[test]
    fn oracle_dimer() {
        let spec = ChainSpec::<f64>::new(2, 0.0, 0.01);
        let o = sw_numeric_oracle(&spec).unwrap();
        let pert = 4.0 * 0.01 * 0.01 / 3.0;
        assert!(rel(o.j_eff_t0, pert) < 0.05, "{} vs {pert}", o.j_eff_t0);
    }

    #[test]
    fn oracle_decoupled_probes() {
        let o = sw_numeric_oracle(&ChainSpec::<f64>::new(2, 0.0, 0.0)).unwrap();
        assert!(o.j_eff_t0.abs() < 1e-12);
    }

    #[test]
    fn oracle_l4_matches_omega_route() {
        let spec = ChainSpec::<f64>::new(4, 0.0, 0.01);
        let o = sw_numeric_oracle(&spec).unwrap();
        let inputs = coupling_inputs(&spec, Backend::FullSpectrum).unwrap();
        assert!(rel(o.j_eff_t0, inputs.j_eff_zero_temperature()) < 0.05);
    }

    #[test]
    fn oracle_preconditions() {
        assert!(sw_numeric_oracle(&ChainSpec::<f64>::new(8, 0.0, 0.01)).is_err());
        assert!(sw_numeric_oracle(&ChainSpec::<f64>::new(2, 0.0, 0.2)).is_err());
        assert!(sw_numeric_oracle(&ChainSpec::<f64>::new(2, 0.0, 0.01).with_omega(0.1)).is_err());
    }
}
