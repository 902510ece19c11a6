use std::f64::consts::PI;

use omtopo_core::meanfield::integrate;
use omtopo_core::{
    build_hamiltonian, schrodinger_propagate, transfer_fidelity, AnalyticSchedule, Complex64, CouplingSchedule,
    DriveProtocol, EffectiveChain, LatticeSpec, MeanFieldState, Topology, TransferSource,
};
use proptest::prelude::*;

fn site(m: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); m];
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// Plain RK4 on `i dψ/dt = H(t) ψ` with a very fine step.
fn rk4_schrodinger(schedule: &AnalyticSchedule, psi0: &[Complex64], t_end: f64, steps: usize) -> Vec<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let f = |t: f64, psi: &[Complex64]| -> Vec<Complex64> {
        let h = build_hamiltonian(&schedule.chain_at(t).unwrap());
        h.mul_vec(psi).into_iter().map(|z| -i * z).collect()
    };
    let h = t_end / steps as f64;
    let mut psi = psi0.to_vec();
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = f(t, &psi);
        let y2: Vec<_> = psi.iter().zip(&k1).map(|(y, k)| y + k * (0.5 * h)).collect();
        let k2 = f(t + 0.5 * h, &y2);
        let y3: Vec<_> = psi.iter().zip(&k2).map(|(y, k)| y + k * (0.5 * h)).collect();
        let k3 = f(t + 0.5 * h, &y3);
        let y4: Vec<_> = psi.iter().zip(&k3).map(|(y, k)| y + k * h).collect();
        let k4 = f(t + h, &y4);
        for j in 0..psi.len() {
            psi[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
        }
    }
    psi
}

fn smooth_reference() -> LatticeSpec {
    LatticeSpec {
        topology: Topology::CellChain(2),
        delta_a: vec![1.0, 0.7],
        omega_b: vec![1.0, 1.3],
        g: vec![0.3, 0.2],
        kappa: vec![0.1, 0.4],
        gamma: vec![0.05, 0.05],
        drive: vec![DriveProtocol::constant(1.0), DriveProtocol::constant(0.5)],
    }
}

#[test]
fn rk4_observed_order_is_four() {
    let spec = smooth_reference();
    let y0 = MeanFieldState::vacuum(&spec);
    let run = |dt: f64| integrate(&spec, &y0, 4.0, dt, 1_000_000).unwrap().last().unwrap().clone();
    let diff = |a: &MeanFieldState, b: &MeanFieldState| {
        a.amplitudes().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    };
    let (a, b, c) = (run(0.2), run(0.1), run(0.05));
    let order = (diff(&a, &b) / diff(&b, &c)).log2();
    assert!((order - 4.0).abs() <= 0.2, "observed order {order}");
}

#[test]
fn midpoint_exponential_matches_fine_rk4() {
    // Fast modulation so the schedule varies appreciably within the run.
    let schedule = AnalyticSchedule { amplitude: 0.1, nu: 0.05 };
    let t_end = 40.0;
    let psi0 = site(3, 0);
    let r = schrodinger_propagate(|t| schedule.chain_at(t), &psi0, (0.0, t_end), 0.01).unwrap();
    let oracle = rk4_schrodinger(&schedule, &psi0, t_end, 40_000);
    for (a, b) in r.final_state.iter().zip(&oracle) {
        assert!((a - b).norm() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn rabi_populations_follow_cos_squared() {
    let j = 0.07;
    let r = schrodinger_propagate(|_| Ok(EffectiveChain::from_real(&[j])), &site(2, 0), (0.0, 100.0), 0.1).unwrap();
    for (t, p) in r.times.iter().zip(&r.populations) {
        assert!((p[0] - (j * t).cos().powi(2)).abs() < 1e-12);
    }
}

#[test]
fn backward_propagation_undoes_forward() {
    let schedule = AnalyticSchedule { amplitude: 0.1, nu: 0.012 };
    let t_end = PI / 0.012;
    let fwd = schrodinger_propagate(|t| schedule.chain_at(t), &site(3, 0), (0.0, t_end), 0.05).unwrap();
    let back = schrodinger_propagate(|t| schedule.chain_at(t), &fwd.final_state, (t_end, 0.0), 0.05).unwrap();
    assert!((back.final_state[0] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    assert_eq!(back.times.last().copied(), Some(0.0));
}

#[test]
fn slower_pumping_transfers_better() {
    let source = TransferSource::Analytic { amplitude: 0.1 };
    let fast = transfer_fidelity(&source, 0.024, 0.05, None).unwrap();
    let slow = transfer_fidelity(&source, 0.012, 0.05, None).unwrap();
    assert!(slow.fidelity >= fast.fidelity);
    assert!(slow.fidelity > 0.999);
    assert!(slow.norm_drift <= 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagation_conserves_norm(
        mags in prop::collection::vec(-0.5f64..0.5, 1..8),
        phases in prop::collection::vec(-3.2f64..3.2, 8),
        start in 0usize..8,
    ) {
        let m = mags.len() + 1;
        let couplings: Vec<Complex64> = mags.iter().zip(&phases).map(|(&r, &p)| Complex64::from_polar(r, p)).collect();
        let chain = EffectiveChain::from_couplings(couplings);
        let r = schrodinger_propagate(|_| Ok(chain.clone()), &site(m, start % m), (0.0, 30.0), 0.02).unwrap();
        prop_assert!(r.norm_drift <= 1e-10, "drift {}", r.norm_drift);
    }
}
