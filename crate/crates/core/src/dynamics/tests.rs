use super::*;
use crate::waveform::{Constant, FnCoupling, HarmonicCoupling, Staircase};
use std::f64::consts::{FRAC_PI_4, PI};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn single_mode_initial_state() {
    let (s, one, two) = make_initial(0.1, 0.0).unwrap();
    assert_eq!(s.z0, 1.0);
    assert_eq!(one.0, [1.0, 0.0, 0.0, 0.0]);
    assert_eq!(two.0, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert!(close(s.a2, (-0.005f64).exp() * 0.01 / 2f64.sqrt(), 1e-18));
    assert!(close(s.c00, (-0.005f64).exp(), 1e-16));
}

#[test]
fn imbalanced_initial_state() {
    let (s, _, two) = InitialState::from_imbalance(0.1, 0.95).unwrap();
    assert!(close(s.z0, 0.95, 1e-14));
    let expect = [0.975, 0.0, 0.04875f64.sqrt(), 0.0, 0.025, 0.0];
    for (a, b) in two.0.iter().zip(expect) {
        assert!(close(*a, b, 1e-14), "{:?}", two.0);
    }
    assert!(close(two.norm_sq(), 1.0, 1e-14));
    assert!(close(s.alpha1, 0.1, 0.0));
}

#[test]
fn balanced_initial_state() {
    let (s, one, two) = make_initial(0.07, 0.07).unwrap();
    assert!(close(s.z0, 0.0, 1e-15));
    let r = 0.5f64.sqrt();
    assert!(close(one.0[0], r, 1e-15) && close(one.0[2], r, 1e-15));
    for (a, b) in two.0.iter().zip([0.5, 0.0, r, 0.0, 0.5, 0.0]) {
        assert!(close(*a, b, 1e-15));
    }
}

#[test]
fn initial_vectors_reproduce_coherent_amplitudes() {
    for (a1, a2) in [(0.1, 0.0), (0.1, 0.0229), (0.05, -0.08), (0.0, 0.2)] {
        let (s, one, two) = make_initial(a1, a2).unwrap();
        let got = Amplitudes::assemble(&s.weights(), &one, &two, 0.0).to_array();
        let want = Amplitudes::coherent(a1, a2).to_array();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).norm() < 1e-16, "{a1} {a2}");
        }
    }
}

#[test]
fn initial_state_errors() {
    assert_eq!(make_initial(0.0, 0.0).unwrap_err(), Error::BothAmplitudesZero);
    assert!(matches!(make_initial(0.3, 0.2), Err(Error::ExcitationTooStrong { .. })));
    assert!(make_initial(0.2, 0.2).is_ok());
    assert!(InitialState::from_imbalance(0.1, -1.0).is_err());
    assert!(InitialState::from_imbalance(0.1, 1.2).is_err());
}

#[test]
fn decoupled_one_photon_is_frozen() {
    let v0 = OnePhotonVector([0.6, 0.0, 0.0, 0.8]);
    let tr = evolve_one_photon(v0, &Constant(0.0), &uniform_grid(3.0, 30), DEFAULT_STEP).unwrap();
    assert!(tr.states.iter().all(|v| *v == v0));
}

#[test]
fn constant_coupling_rabi_rotation() {
    let j0 = 1.7;
    let tau = 1.3;
    let v = evolve_one_photon(OnePhotonVector([1.0, 0.0, 0.0, 0.0]), &Constant(j0), &[0.0, tau], DEFAULT_STEP)
        .unwrap()
        .last();
    let th = j0 * tau;
    for (a, b) in v.0.iter().zip([th.cos(), 0.0, 0.0, -th.sin()]) {
        assert!(close(*a, b, 1e-12), "{:?}", v.0);
    }
}

#[test]
fn one_photon_depends_only_on_pulse_area() {
    // both waveforms have area 2.2 on [0, 2]
    let ramp = FnCoupling(|t: f64| 1.1 * t);
    let bump = FnCoupling(|t: f64| 1.1 * PI / 2.0 * (PI * t / 2.0).sin());
    let v0 = OnePhotonVector([0.3, 0.4, 0.0, -(0.75f64).sqrt()]);
    let a = evolve_one_photon(v0, &ramp, &[0.0, 2.0], DEFAULT_STEP).unwrap().last();
    let b = evolve_one_photon(v0, &bump, &[0.0, 2.0], DEFAULT_STEP).unwrap().last();
    let rot = evolve_one_photon(v0, &Constant(1.1), &[0.0, 2.0], DEFAULT_STEP).unwrap().last();
    for i in 0..4 {
        assert!(close(a.0[i], b.0[i], 1e-10));
        assert!(close(a.0[i], rot.0[i], 1e-10));
    }
}

#[test]
fn decoupled_linear_two_photon_is_frozen() {
    let v0 = TwoPhotonVector::from_imbalance(0.3);
    let v = final_two_photon(v0, &Constant(0.0), 0.0, 0.0, 2.0, DEFAULT_STEP).unwrap();
    assert_eq!(v, v0);
}

#[test]
fn kerr_phase_rotation() {
    let v = final_two_photon(TwoPhotonVector([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), &Constant(0.0), 1.0, 1.0, FRAC_PI_4, DEFAULT_STEP)
        .unwrap();
    for (a, b) in v.0.iter().zip([0.0, -1.0, 0.0, 0.0, 0.0, 0.0]) {
        assert!(close(*a, b, 1e-12), "{:?}", v.0);
    }
}

#[test]
fn population_and_g2_at_start() {
    let (s, one, two) = make_initial(0.1, 0.0).unwrap();
    let a = Amplitudes::assemble(&s.weights(), &one, &two, 0.0);
    // hand substitution of the coherent amplitudes
    let n1 = (-0.01f64).exp() * (0.01 + 0.0001);
    assert!(close(population_n1(&a), n1, 1e-17));
    assert!(close(population_n1(&a), 9.9995e-3, 1e-7));
    let g2 = 2.0 * ((-0.005f64).exp() * 0.01 / 2f64.sqrt()).powi(2) / (n1 * n1);
    assert!(close(g2_equal_time(&a).unwrap(), g2, 1e-14));
    assert!(close(g2, 0.990, 5e-4));
}

#[test]
fn vacuum_has_no_population() {
    let v = Amplitudes::vacuum();
    assert_eq!(population_n1(&v), 0.0);
    assert!(matches!(g2_equal_time(&v), Err(Error::PopulationVanished { .. })));
}

#[test]
fn n1_after_switch_off_matches_closed_form() {
    let c = HarmonicCoupling::from_free(&[1.0, 0.5, -0.3, 0.2, 0.1, 0.0], 1.5, 5.0).unwrap();
    let (s, one, two) = make_initial(0.1, 0.03).unwrap();
    let grid = uniform_grid(3.0, 30);
    let tr = simulate(&s.weights(), one, two, &c, &SystemParams::symmetric(0.7, 5.0), &grid, DEFAULT_STEP).unwrap();
    let at_t = tr.amplitudes_at(1.5).unwrap();
    for i in 0..tr.len() {
        let t = tr.tau_grid[i];
        if t < 1.5 {
            continue;
        }
        let d = t - 1.5;
        let closed = (-d).exp()
            * (at_t.c10.norm_sqr() + (-d).exp() * (at_t.c11.norm_sqr() + 2.0 * at_t.c20.norm_sqr()));
        let got = population_n1(&tr.amplitudes(i));
        assert!((got - closed).abs() < 1e-12 * closed, "t={t}");
    }
}

#[test]
fn two_time_reduces_to_equal_time() {
    let a = Amplitudes::coherent(0.1, 0.02);
    let g = g2_equal_time(&a).unwrap();
    assert!(close(g2_two_time(&a, 0.0, 0.0, &Constant(0.0)).unwrap(), g, 1e-15));
    let mut prev = g;
    for k in 1..200 {
        let v = g2_two_time(&a, 0.0, 0.05 * k as f64, &Constant(0.0)).unwrap();
        assert!(v >= prev);
        prev = v;
    }
    let limit = 2.0 * a.c20.norm_sqr() / (population_n1(&a) * a.c10.norm_sqr());
    assert!(prev <= limit && close(prev, limit, 1e-6 * limit));
}

#[test]
fn two_time_agrees_with_reduced_state() {
    let a = Amplitudes::coherent(0.1, 0.05);
    let b = ReducedState::collapse(&a).unwrap();
    for tau in [0.0, 0.3, 1.0, 4.0] {
        let lhs = g2_two_time(&a, 2.0, tau, &Constant(0.0)).unwrap();
        let rhs = b.decayed(tau).b10.norm_sqr() / population_n1(&a.decayed(tau));
        assert!(close(lhs, rhs, 1e-14 * lhs));
    }
}

#[test]
fn two_time_rejects_active_coupling() {
    let a = Amplitudes::coherent(0.1, 0.0);
    let c = HarmonicCoupling::from_free(&[1.0, 0.0], 2.0, 5.0).unwrap();
    assert_eq!(g2_two_time(&a, 1.0, 0.5, &c).unwrap_err(), Error::CouplingActive { t: 1.0 });
    assert!(g2_two_time(&a, 2.0, 0.5, &c).is_ok());
    assert!(matches!(g2_two_time(&a, 0.0, 0.1, &Constant(1.0)), Err(Error::CouplingActive { .. })));
}

#[test]
fn propagated_two_time_matches_closed_form_after_switch_off() {
    let c = HarmonicCoupling::from_free(&[0.8, -0.4, 0.3, 0.1, -0.2, 0.05], 1.2, 3.0).unwrap();
    let params = SystemParams::symmetric(0.3, 3.0);
    let (s, one, two) = InitialState::from_imbalance(0.1, 0.95).unwrap();
    let tr = simulate(&s.weights(), one, two, &c, &params, &[0.0, 1.2, 1.5], DEFAULT_STEP).unwrap();
    let at_t = tr.amplitudes_at(1.5).unwrap();
    for tau in [0.0, 0.2, 1.0] {
        let closed = g2_two_time(&at_t, 1.5, tau, &c).unwrap();
        let prop = g2_two_time_propagated(&s, &c, &params, 1.5, tau, DEFAULT_STEP).unwrap();
        assert!((closed - prop).abs() < 1e-9 * closed, "{closed} {prop}");
    }
    // still defined while the coupling is on
    let early = g2_two_time_propagated(&s, &c, &params, 0.5, 0.4, DEFAULT_STEP).unwrap();
    assert!(early.is_finite() && early >= 0.0);
}

#[test]
fn coarse_step_is_reported() {
    let err = final_two_photon(TwoPhotonVector::from_imbalance(1.0), &Constant(40.0), 1.0, 1.0, 3.0, 0.2).unwrap_err();
    assert!(matches!(err, Error::StepTooLarge { .. }), "{err:?}");
    assert!(final_two_photon(TwoPhotonVector::from_imbalance(1.0), &Constant(1.0), 1.0, 1.0, 3.0, -1.0).is_err());
}

#[test]
fn integrator_lands_on_breakpoints() {
    let s = Staircase::new(vec![0.0, 0.123, 0.5], vec![2.0, 1.0]).unwrap();
    let tr = evolve_one_photon(OnePhotonVector([1.0, 0.0, 0.0, 0.0]), &s, &[0.0, 1.0], 0.01).unwrap();
    assert_eq!(tr.tau, vec![0.0, 0.123, 0.5, 1.0]);
    let th: f64 = 2.0 * 0.123 + 0.377;
    let v = tr.last();
    assert!(close(v.0[0], th.cos(), 1e-9) && close(v.0[3], -th.sin(), 1e-9));
}

#[test]
fn envelope_split_matches_direct_integration() {
    let c = HarmonicCoupling::from_free(&[2.0, -1.0, 0.7, 0.3, -0.4, 0.2], 2.0, 5.0).unwrap();
    let params = SystemParams { kappa: 1.0, u1: 0.9, u2: 1.3, jmax: 5.0 };
    let a0 = Amplitudes::coherent(0.1, 0.04);
    let (w, one, two) = ManifoldWeights::split(&a0);
    let tr = simulate(&w, one, two, &c, &params, &[0.0, 2.5], DEFAULT_STEP).unwrap();
    let direct = evolve_amplitudes_direct(&a0, &c, &params, 2.5, DEFAULT_STEP).unwrap();
    let split = tr.amplitudes(tr.len() - 1);
    for (x, y) in split.to_array().iter().zip(direct.to_array()) {
        assert!((x - y).norm() < 1e-10 * a0.c10.norm().max(1e-300), "{x} {y}");
    }
}
