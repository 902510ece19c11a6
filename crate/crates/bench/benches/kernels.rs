use criterion::{criterion_group, criterion_main, Criterion};
use omtopo_core::meanfield::default_dt;
use omtopo_core::{
    build_hamiltonian, eigh, find_steady_state_fixed_point, integrate, transfer_fidelity, Complex64, DriveProtocol,
    EffectiveChain, FixedPointSettings, LatticeSpec, MeanFieldState, Topology, TransferSource,
};
use std::hint::black_box;

fn cells(n: usize) -> LatticeSpec {
    LatticeSpec {
        topology: Topology::CellChain(n),
        delta_a: vec![1.0; n],
        omega_b: vec![1.0; n],
        g: vec![1e-6; n],
        kappa: vec![0.1; n],
        gamma: vec![1e-5; n],
        drive: vec![DriveProtocol::constant(1e5); n],
    }
}

fn bench_eigh(c: &mut Criterion) {
    for m in [5, 17, 41] {
        let couplings = (0..m - 1).map(|k| Complex64::from_polar(0.1 + 0.01 * (k % 3) as f64, 0.3 * k as f64)).collect();
        let h = build_hamiltonian(&EffectiveChain::from_couplings(couplings));
        c.bench_function(&format!("eigh/{m}"), |b| b.iter(|| eigh(black_box(&h)).unwrap()));
    }
}

fn bench_steady(c: &mut Criterion) {
    let spec = cells(3);
    let settings = FixedPointSettings::default();
    c.bench_function("fixed_point/3_cells", |b| {
        b.iter(|| find_steady_state_fixed_point(black_box(&spec), &settings).unwrap())
    });
    let start = MeanFieldState::vacuum(&spec);
    let dt = default_dt(&spec);
    c.bench_function("rk4/3_cells_t50", |b| b.iter(|| integrate(&spec, black_box(&start), 50.0, dt, 1000).unwrap()));
}

fn bench_transfer(c: &mut Criterion) {
    let source = TransferSource::Analytic { amplitude: 0.1 };
    c.bench_function("transfer/analytic_nu0.006", |b| {
        b.iter(|| transfer_fidelity(black_box(&source), 0.006, 0.05, None).unwrap())
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(20);
    targets = bench_eigh, bench_steady, bench_transfer
}
criterion_main!(kernels);
