use spin1_entangle::basis::build_sector_basis;
use spin1_entangle::cache::{CacheKey, SpectrumCache};
use spin1_entangle::chain::{
    build_chain_hamiltonian, diagonalize_sector, low_spectrum, DiagMode, LowSolver, SolverKind,
};
use spin1_entangle::coupling::{coupling_inputs, coupling_inputs_cached, Backend};
use spin1_entangle::{ChainSpecF32, ChainSpecF64, Error};

/// Number of ways to pick `L` spin-1 projections summing to `m`.
fn sector_dim(len: usize, m: i32) -> usize {
    let mut counts = vec![1usize];
    for _ in 0..len {
        let mut next = vec![0usize; counts.len() + 2];
        for (k, &c) in counts.iter().enumerate() {
            for d in 0..3 {
                next[k + d] += c;
            }
        }
        counts = next;
    }
    let idx = m + len as i32;
    if idx < 0 || idx as usize >= counts.len() {
        0
    } else {
        counts[idx as usize]
    }
}

#[test]
fn sector_dimensions() {
    assert_eq!(build_sector_basis(10, 0, false).unwrap().dim(), 8953);
    for len in [2, 4, 6] {
        let total: usize = (-(len as i32)..=len as i32)
            .map(|m| {
                let d = build_sector_basis(len, m, false).unwrap().dim();
                assert_eq!(d, sector_dim(len, m));
                d
            })
            .sum();
        assert_eq!(total, 3usize.pow(len as u32));
    }
}

#[test]
fn hamiltonian_trace_over_all_sectors() {
    // Tr(S·S) = 0 and Tr((S·S)²) = 12 on a spin-1 pair
    for (len, theta) in [(2, 0.2), (4, -0.1), (6, 0.15)] {
        let spec = ChainSpecF64::new(len, theta, 0.0);
        let total: f64 = (-(len as i32)..=len as i32).map(|m| build_chain_hamiltonian(&spec, m).unwrap().trace()).sum();
        let expected = (len - 1) as f64 * theta.sin() * 12.0 * 3f64.powi(len as i32 - 2);
        assert!((total - expected).abs() < 1e-9 * expected.abs().max(1.0), "L={len}: {total} vs {expected}");
    }
}

#[test]
fn blocks_are_symmetric() {
    let spec = ChainSpecF64::new(6, 0.2, 0.0);
    for m in -2..=2 {
        assert_eq!(build_chain_hamiltonian(&spec, m).unwrap().asymmetry(), 0.0);
    }
}

#[test]
fn gap_is_positive_across_window() {
    for len in [2, 4, 6, 8] {
        for theta in [-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3] {
            let low = low_spectrum(&ChainSpecF64::new(len, theta, 0.0), LowSolver::Krylov).unwrap();
            assert!(low.gap > 0.0, "L={len} θ={theta}");
            assert!(low.triplet_spread() < 1e-8);
        }
    }
}

#[test]
fn dense_and_krylov_low_spectra_agree() {
    for (len, theta) in [(4, 0.1), (6, -0.2), (6, 0.0)] {
        let spec = ChainSpecF64::new(len, theta, 0.0);
        let d = low_spectrum(&spec, LowSolver::Dense).unwrap();
        let k = low_spectrum(&spec, LowSolver::Krylov).unwrap();
        assert!((d.eps0 - k.eps0).abs() < 1e-10);
        assert!((d.gap - k.gap).abs() < 1e-9);
        assert!((d.ground_state.dot(&k.ground_state).abs() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn outside_window_is_rejected() {
    let spec = ChainSpecF64::new(4, 0.33, 0.0);
    assert!(matches!(low_spectrum(&spec, LowSolver::Dense), Err(Error::Domain(_))));
    assert!(matches!(low_spectrum(&ChainSpecF64::new(5, 0.1, 0.0), LowSolver::Dense), Err(Error::InvalidLength(5))));
}

#[test]
fn backends_agree_on_omega_sums() {
    for (len, theta) in [(4, 0.1), (6, -0.15), (6, 0.25)] {
        let spec = ChainSpecF64::new(len, theta, 0.05);
        let full = coupling_inputs(&spec, Backend::FullSpectrum).unwrap();
        let res = coupling_inputs(&spec, Backend::Resolvent).unwrap();
        assert!(full.omega0.value < 0.0);
        assert!((full.omega0.value - res.omega0.value).abs() < 1e-8 * full.omega0.value.abs());
        assert!((full.omega1.value - res.omega1.value).abs() < 1e-8 * full.omega1.value.abs().max(1e-3));
    }
}

#[test]
fn cache_hit_reproduces_miss() {
    let dir = tempfile::tempdir().unwrap();
    let cache = SpectrumCache::new(dir.path()).unwrap();
    let spec = ChainSpecF64::new(6, 0.1, 0.05);
    for backend in [Backend::FullSpectrum, Backend::Resolvent] {
        let key = CacheKey::new(&spec, backend.solver());
        assert!(cache.load::<f64>(&key).unwrap().is_none());
        let miss = coupling_inputs_cached(&spec, backend, Some(&cache)).unwrap();
        assert!(cache.path_for(&key).exists());
        let hit = coupling_inputs_cached(&spec, backend, Some(&cache)).unwrap();
        assert_eq!(miss.omega0.value.to_bits(), hit.omega0.value.to_bits());
        assert_eq!(miss.omega1.value.to_bits(), hit.omega1.value.to_bits());
        assert_eq!(miss.eps1.to_bits(), hit.eps1.to_bits());
    }
    assert_eq!(CacheKey::new(&spec, SolverKind::DenseFull).solver, SolverKind::DenseFull);
}

#[test]
fn single_precision_pipeline() {
    let spec = ChainSpecF32::new(4, 0.1, 0.05);
    let h = build_chain_hamiltonian(&spec, 0).unwrap();
    let s32 = diagonalize_sector(&h, DiagMode::DenseFull).unwrap();
    let h64 = build_chain_hamiltonian(&ChainSpecF64::new(4, 0.1, 0.05), 0).unwrap();
    let s64 = diagonalize_sector(&h64, DiagMode::DenseFull).unwrap();
    assert!((s32.eigenvalues[0] as f64 - s64.eigenvalues[0]).abs() < 1e-4);
    let j32 = coupling_inputs(&spec, Backend::FullSpectrum).unwrap().j_eff_at(0.05).unwrap().j_eff;
    let j64 =
        coupling_inputs(&ChainSpecF64::new(4, 0.1, 0.05), Backend::FullSpectrum).unwrap().j_eff_at(0.05).unwrap().j_eff;
    assert!((j32 as f64 - j64).abs() < 1e-4 * j64.abs());
}
