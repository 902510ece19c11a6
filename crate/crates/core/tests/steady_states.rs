use omtopo_core::meanfield::{integrate, steady_residual};
use omtopo_core::model::DEFAULT_PHASE_TOL;
use omtopo_core::{
    build_hamiltonian, calibrate_g, classify_phase, effective_chain, eigh, find_steady_state_fixed_point,
    find_steady_state_ode, CalibrationSettings, Complex64, CouplingEquality, DriveProtocol, FixedPointSettings,
    LatticeSpec, MeanFieldState, OdeSteadySettings, Phase, Topology,
};

fn two_cells(g: [f64; 2], kappa: [f64; 2]) -> LatticeSpec {
    LatticeSpec {
        topology: Topology::CellChain(2),
        delta_a: vec![1.0; 2],
        omega_b: vec![1.0; 2],
        g: g.to_vec(),
        kappa: kappa.to_vec(),
        gamma: vec![1e-5; 2],
        drive: vec![DriveProtocol::constant(1e5); 2],
    }
}

fn fixed_point(spec: &LatticeSpec) -> MeanFieldState {
    find_steady_state_fixed_point(spec, &FixedPointSettings::default()).unwrap().state
}

fn max_rel_diff(a: &MeanFieldState, b: &MeanFieldState) -> f64 {
    a.amplitudes()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm() / y.norm().max(1.0))
        .fold(0.0, f64::max)
}

#[test]
fn relaxation_and_fixed_point_agree_on_the_base_set() {
    let spec = two_cells([1e-6; 2], [0.1; 2]);
    let ode = find_steady_state_ode(&spec, &OdeSteadySettings::default()).unwrap();
    let fp = find_steady_state_fixed_point(&spec, &FixedPointSettings::default()).unwrap();
    assert!(max_rel_diff(&ode.state, &fp.state) <= 1e-6);
    assert!(ode.residual < 1e-10);
    assert!(fp.residual < 1e-10);
}

#[test]
fn uncoupled_transient_matches_linear_response() {
    let mut spec = two_cells([0.0; 2], [0.1, 0.3]);
    spec.delta_a = vec![1.0, 0.6];
    let traj = integrate(&spec, &MeanFieldState::vacuum(&spec), 60.0, 0.005, 100).unwrap();
    let i = Complex64::new(0.0, 1.0);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        for j in 0..2 {
            let z = i * spec.delta_a[j] + 0.5 * spec.kappa[j];
            let ss = -i * 1e5 / z;
            let want = ss * (1.0 - (-z * t).exp());
            assert!((s.alpha[j] - want).norm() <= 1e-6 * ss.norm(), "t={t}");
        }
    }
}

#[test]
fn first_cavity_stays_weaker_after_the_transient() {
    let spec = two_cells([1e-6; 2], [0.1; 2]);
    let traj = integrate(&spec, &MeanFieldState::vacuum(&spec), 500.0, 0.005, 200).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        if *t >= 200.0 {
            assert!(s.alpha[0].norm() < s.alpha[1].norm(), "t={t}");
        }
    }
}

#[test]
fn calibration_lands_near_the_quoted_coupling() {
    let spec = two_cells([1e-6; 2], [0.1; 2]);
    let cal = calibrate_g(&spec, 0, CouplingEquality::FIRST_THIRD, &CalibrationSettings::default()).unwrap();
    assert!((cal.g / 1.023e-6 - 1.0).abs() < 0.03, "g1 = {:e}", cal.g);
    let chain = effective_chain(&cal.spec, &fixed_point(&cal.spec)).unwrap();
    let m = chain.magnitudes();
    assert!((m[0] - m[2]).abs() <= 1e-6 * m[2]);
    assert!(m[0] < m[1]);

    // Starting at the root returns it without moving.
    let again = calibrate_g(&cal.spec, 0, CouplingEquality::FIRST_THIRD, &CalibrationSettings::default()).unwrap();
    assert_eq!(again.g, cal.g);
    assert_eq!(again.evaluations, 1);
}

#[test]
fn calibration_rejects_odd_chains() {
    let spec = LatticeSpec {
        topology: Topology::OddChain(2),
        delta_a: vec![1.0; 2],
        omega_b: vec![1.0],
        g: vec![1e-6],
        kappa: vec![0.1; 2],
        gamma: vec![1e-5],
        drive: vec![DriveProtocol::constant(1e5); 2],
    };
    assert!(calibrate_g(&spec, 0, CouplingEquality::FIRST_THIRD, &CalibrationSettings::default()).is_err());
}

#[test]
fn stronger_decay_weakens_its_own_cavity() {
    for (base, j) in [([0.1, 0.1], 0), ([0.1, 0.1], 1), ([0.1, 0.412], 1), ([0.5, 0.2], 0)] {
        let mut last = f64::INFINITY;
        for scale in [1.0, 1.5, 2.0, 3.0] {
            let mut kappa = base;
            kappa[j] *= scale;
            let a = fixed_point(&two_cells([1e-6; 2], kappa)).alpha[j].norm();
            assert!(a < last, "kappa {kappa:?}");
            last = a;
        }
    }
}

#[test]
fn common_drive_phase_is_a_gauge() {
    let spec = two_cells([1.023e-6, 1e-6], [0.1; 2]);
    let phi = 0.83;
    let mut rotated = spec.clone();
    rotated.drive = rotated.drive.into_iter().map(|d| d.with_phase(phi)).collect();
    let a = fixed_point(&spec);
    let b = fixed_point(&rotated);
    let u = Complex64::from_polar(1.0, phi);
    for (x, y) in a.alpha.iter().zip(&b.alpha) {
        assert!((x * u - y).norm() <= 1e-9 * x.norm());
    }
    let ca = effective_chain(&spec, &a).unwrap();
    let cb = effective_chain(&rotated, &b).unwrap();
    for (x, y) in ca.magnitudes().iter().zip(cb.magnitudes()) {
        assert!((x - y).abs() <= 1e-12);
    }
    let sa = eigh(&build_hamiltonian(&ca)).unwrap();
    let sb = eigh(&build_hamiltonian(&cb)).unwrap();
    for (x, y) in sa.eigenvalues.iter().zip(&sb.eigenvalues) {
        assert!((x - y).abs() <= 1e-12);
    }
}

#[test]
fn strong_second_decay_suppresses_the_second_cavity() {
    let spec = two_cells([1e-6, 2.7375e-6], [0.1, 5.0]);
    let s = fixed_point(&spec);
    assert!(s.alpha[0].norm() > 2.0 * s.alpha[1].norm());
    let chain = effective_chain(&spec, &s).unwrap();
    assert_eq!(classify_phase(&chain, DEFAULT_PHASE_TOL).unwrap(), Phase::Trivial);
}

#[test]
fn balanced_decays_give_the_critical_chain() {
    let spec = two_cells([1e-6; 2], [0.1, 0.412]);
    let s = fixed_point(&spec);
    assert!((s.alpha[0].norm() - s.alpha[1].norm()).abs() <= 1e-2 * s.alpha[1].norm());
    let chain = effective_chain(&spec, &s).unwrap();
    assert_eq!(classify_phase(&chain, DEFAULT_PHASE_TOL).unwrap(), Phase::Critical);
}

#[test]
fn three_cells_reproduce_the_alternating_pattern() {
    let spec = LatticeSpec {
        topology: Topology::CellChain(3),
        delta_a: vec![1.0; 3],
        omega_b: vec![1.0; 3],
        g: vec![1.028e-6, 1.0e-6, 0.975e-6],
        kappa: vec![0.5, 0.2, 0.1],
        gamma: vec![1e-5; 3],
        drive: vec![DriveProtocol::constant(1e5); 3],
    };
    let s = fixed_point(&spec);
    assert!(steady_residual(&spec, &s) < 1e-10);
    let m = effective_chain(&spec, &s).unwrap().magnitudes();
    for (a, b) in [(0, 2), (2, 4), (0, 4), (1, 3)] {
        assert!((m[a] - m[b]).abs() <= 0.02 * m[b], "{m:?}");
    }
    assert!(m[0] < m[1]);
}
