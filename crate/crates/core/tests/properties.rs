use nalgebra::Matrix2;
use proptest::prelude::*;
use spin1_entangle::entanglement::{concurrence_wootters, concurrence_xstate};
use spin1_entangle::open_system::{
    apply_gad_pair, integrate_master_equation, kraus_evolve, kron2, thermal_pair_state, xstate_after_channel, HeffMode,
    Mat2, NoiseParams, TwoQubitState, TwoQubitXState,
};
use spin1_entangle::teleport::{average_fidelity_formula, bell_weights, teleport_output, InputQubit};
use spin1_entangle::Complex;

fn xstate() -> impl Strategy<Value = TwoQubitXState<f64>> {
    // positivity: x ± y >= 0, u, v >= 0
    (0.0..1.0f64, 0.01..1.0f64, -1.0..1.0f64, 0.0..1.0f64)
        .prop_map(|(u, x, frac, v)| TwoQubitXState::from_elements(u, x, frac * x, v).normalized())
}

fn local_unitary(a: f64, b: f64, c: f64) -> Mat2<f64> {
    let e = |phi: f64| Complex::new(phi.cos(), phi.sin());
    let (ca, sa) = (Complex::new(a.cos(), 0.0), Complex::new(a.sin(), 0.0));
    Matrix2::new(e(b) * ca, -e(c) * sa, e(-c) * sa, e(-b) * ca)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concurrence_in_unit_interval_and_closed_form(s in xstate()) {
        let c = concurrence_wootters(&s.to_state()).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!((c - concurrence_xstate(&s)).abs() < 1e-7);
    }

    #[test]
    fn concurrence_invariant_under_local_unitaries(
        s in xstate(),
        a in 0.0..3.2f64, b in 0.0..6.3f64, c in 0.0..6.3f64,
        d in 0.0..3.2f64, e in 0.0..6.3f64, f in 0.0..6.3f64,
    ) {
        let u = kron2(&local_unitary(a, b, c), &local_unitary(d, e, f));
        let rho = s.to_state().rho;
        let rotated = TwoQubitState::unchecked(u * rho * u.adjoint());
        let before = concurrence_wootters(&s.to_state()).unwrap();
        let after = concurrence_wootters(&rotated).unwrap();
        prop_assert!((before - after).abs() < 1e-7, "{before} vs {after}");
    }

    #[test]
    fn channel_preserves_x_form_and_trace(s in xstate(), p in 0.0..1.0f64, n_bar in 0.0..5.0f64) {
        let out = apply_gad_pair(&s.to_state(), p, n_bar).unwrap();
        prop_assert!(out.trace_drift().abs() < 1e-13);
        prop_assert!(out.min_eigenvalue() > -1e-12);
        let x = out.to_xstate(1e-12).unwrap();
        let closed = xstate_after_channel(&s, p, n_bar).to_state();
        prop_assert!(x.to_state().distance(&closed) < 1e-13);
    }

    #[test]
    fn kraus_evolution_is_a_semigroup(
        s in xstate(), t1 in 0.0..3.0f64, t2 in 0.0..3.0f64, n_bar in 0.0..3.0f64, gamma in 0.01..1.0f64,
    ) {
        let noise = NoiseParams::new(n_bar, gamma).unwrap();
        let rho = s.to_state();
        let stepped = kraus_evolve(&kraus_evolve(&rho, t1, &noise).unwrap(), t2, &noise).unwrap();
        let direct = kraus_evolve(&rho, t1 + t2, &noise).unwrap();
        prop_assert!(stepped.distance(&direct) < 1e-12);
    }

    #[test]
    fn concurrence_never_grows_under_local_noise(s in xstate(), p in 0.0..1.0f64, n_bar in 0.0..3.0f64) {
        let after = concurrence_xstate(&xstate_after_channel(&s, p, n_bar));
        prop_assert!(after <= concurrence_xstate(&s) + 1e-12);
    }

    #[test]
    fn teleported_state_is_a_density_matrix(
        s in xstate(), th in 0.0..std::f64::consts::PI, ph in 0.0..std::f64::consts::TAU,
    ) {
        let out = teleport_output(&s.to_state(), &InputQubit::new(th, ph).unwrap());
        prop_assert!((out.trace().re - 1.0).abs() < 1e-13);
        prop_assert!((out - out.adjoint()).norm() < 1e-14);
        let w = bell_weights(&s.to_state());
        prop_assert!(w.iter().all(|&x| x > -1e-14));
    }

    #[test]
    fn average_fidelity_bounds(s in xstate()) {
        let f = average_fidelity_formula(&s);
        prop_assert!((1.0 / 3.0 - 1e-12..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn thermal_state_is_normalized(j in -1.0..1.0f64, omega in -0.5..0.5f64, t in 0.001..2.0f64) {
        let s = thermal_pair_state(j, omega, t).unwrap();
        prop_assert!(s.validate().is_ok());
        prop_assert!((s.to_state().trace() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn lindblad_trajectory_stays_physical_and_coherence_decays() {
    let noise = NoiseParams::new(0.5, 0.1).unwrap();
    let s0 = thermal_pair_state(0.05, 0.01, 0.01).unwrap().to_state();
    let grid: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
    let traj = integrate_master_equation(&s0, HeffMode::Interacting { j_eff: 0.05, omega: 0.01 }, &noise, &grid, 1e-10)
        .unwrap();
    let rows = traj.rows(&noise).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].y.abs() <= w[0].y.abs() + 1e-12);
    }
    for r in &rows {
        assert!(r.trace_drift.abs() < 1e-8);
        assert!(r.min_eigenvalue > -1e-9);
    }
}
