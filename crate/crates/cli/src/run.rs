use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use omtopo_core::dynamics::{
    sample_times, write_spectrum_series_csv, write_zero_mode_csv, zero_mode_series, SteadyStateSchedule,
};
use omtopo_core::meanfield::{default_dt, integrate, steady_residual};
use omtopo_core::model::{site_labels, DEFAULT_PHASE_TOL};
use omtopo_core::{
    build_hamiltonian, calibrate_g, classify_phase, coupling_ratio, edge_weight, effective_chain, eigh,
    find_steady_state_fixed_point, instantaneous_spectrum_series, ipr, periodic_steady_state, transfer_fidelity,
    AnalyticSchedule, DriveProtocol, LatticeSpec, MeanFieldState, PeriodicSteadyState, Topology, Trajectory,
    TransferSource,
};
use serde_json::{json, Map, Value};

use crate::catalog::{Pipeline, ScheduleKind};
use crate::config::Scenario;
use crate::manifest::{Manifest, OutputDir};
use crate::overrides;
use crate::{CliError, Result};

/// Runs a built-in scenario after applying `overrides` and writes its
/// outputs and manifest into `out_dir`.
pub fn run_scenario(name: &str, overrides: &[(String, Value)], out_dir: &Path) -> Result<Manifest> {
    let mut sc = crate::catalog::scenario(name)?;
    for (k, v) in overrides {
        overrides::apply(&mut sc, k, v.clone())?;
    }
    sc.spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    run_resolved(&sc, out_dir)
}

pub fn run_resolved(sc: &Scenario, out_dir: &Path) -> Result<Manifest> {
    let start = Instant::now();
    let pipeline = Pipeline::of(&sc.name).ok_or_else(|| CliError::Config(format!("unknown scenario `{}`", sc.name)))?;
    let mut out = OutputDir::create(out_dir)?;
    let mut derived = Map::new();
    match pipeline {
        Pipeline::Static => run_static(sc, &mut out, &mut derived)?,
        Pipeline::PeriodicState => {
            let pss = solve_periodic(sc, &mut derived)?;
            write_periodic(&pss, &mut out)?;
        }
        Pipeline::SpectrumSeries => {
            let pss = solve_periodic(sc, &mut derived)?;
            let series = instantaneous_spectrum_series(&sc.spec, &pss, sc.settings.spectrum_samples)
                .map_err(CliError::solver("instantaneous spectra"))?;
            let worst_zero = series
                .iter()
                .map(|(_, s)| s.eigenvalues.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            derived.insert("max_smallest_abs_eigenvalue".into(), json!(worst_zero));
            out.write_csv("spectrum_series", "spectrum_series.csv", |w| write_spectrum_series_csv(&series, w))?;
        }
        Pipeline::ZeroMode => {
            let times = |period: f64| sample_times(0.5 * period, sc.settings.zero_mode_samples);
            let series = match sc.settings.zero_mode_schedule {
                ScheduleKind::Analytic => {
                    let schedule = analytic_schedule(&sc.spec)?;
                    zero_mode_series(&schedule, &times(2.0 * PI / schedule.nu))
                }
                ScheduleKind::SteadyState => {
                    let pss = solve_periodic(sc, &mut derived)?;
                    zero_mode_series(&SteadyStateSchedule { spec: &sc.spec, pss: &pss }, &times(pss.period))
                }
            }
            .map_err(CliError::solver("zero mode"))?;
            out.write_csv("zero_mode", "zero_mode.csv", |w| write_zero_mode_csv(&series, w))?;
        }
        Pipeline::Transfer => {
            let t = &sc.settings.transfer;
            let nu = match t.nu {
                Some(nu) => nu,
                None => sc
                    .spec
                    .common_nu()
                    .ok_or_else(|| CliError::Config("transfer needs settings.transfer.nu or cosine drives".into()))?,
            };
            let source = match t.source {
                ScheduleKind::Analytic => TransferSource::Analytic {
                    amplitude: analytic_schedule(&sc.spec)?.amplitude,
                },
                ScheduleKind::SteadyState => TransferSource::SteadyState {
                    spec: sc.spec.clone(),
                    settings: sc.settings.periodic,
                },
            };
            let r = transfer_fidelity(&source, nu, t.dt, None).map_err(CliError::solver("transfer"))?;
            derived.insert("nu".into(), json!(nu));
            derived.insert("fidelity".into(), json!(r.fidelity));
            derived.insert("norm_drift".into(), json!(r.norm_drift));
            let thin = r.thinned(t.csv_every);
            out.write_csv("transfer", "transfer.csv", |w| thin.write_csv(w))?;
        }
    }
    let manifest = Manifest {
        scenario: sc.name.clone(),
        resolved_spec: serde_json::to_value(&sc.spec).expect("spec serializes"),
        settings: serde_json::to_value(&sc.settings).expect("settings serialize"),
        outputs: Vec::new(),
        wall_time: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        derived,
        failures: Vec::new(),
    };
    out.finish(manifest)
}

fn min_kappa(spec: &LatticeSpec) -> Result<f64> {
    let k = spec.kappa.iter().copied().fold(f64::INFINITY, f64::min);
    if k > 0.0 {
        Ok(k)
    } else {
        Err(CliError::Config("default end time needs every kappa > 0; set settings.t_end".into()))
    }
}

fn run_static(sc: &Scenario, out: &mut OutputDir, derived: &mut Map<String, Value>) -> Result<()> {
    let mut spec = sc.spec.clone();
    if let Some(req) = &sc.settings.calibration {
        let cal = calibrate_g(&spec, req.index, req.target, &req.settings).map_err(CliError::solver("calibration"))?;
        derived.insert("g_before_calibration".into(), json!(spec.g[req.index]));
        derived.insert("calibrated_g".into(), json!(cal.g));
        derived.insert("calibration_mismatch".into(), json!(cal.relative_mismatch));
        spec = cal.spec;
    }
    derived.insert("solved_g".into(), json!(spec.g));

    let t_end = match sc.settings.t_end {
        Some(t) => t,
        None => 50.0 / min_kappa(&spec)?,
    };
    let dt = sc.settings.dt.unwrap_or_else(|| default_dt(&spec));
    let traj = integrate(&spec, &MeanFieldState::vacuum(&spec), t_end, dt, sc.settings.sample_every)
        .map_err(CliError::solver("trajectory"))?;
    out.write_csv("trajectory", "trajectory.csv", |w| traj.write_csv(w))?;

    let report =
        find_steady_state_fixed_point(&spec, &sc.settings.fixed_point).map_err(CliError::solver("steady state"))?;
    let state = report.state;
    let steady = Trajectory {
        times: vec![0.0],
        states: vec![state.clone()],
    };
    out.write_csv("steady_state", "steady_state.csv", |w| steady.write_csv(w))?;
    derived.insert("steady_residual".into(), json!(steady_residual(&spec, &state)));
    derived.insert("alpha_abs".into(), json!(state.alpha.iter().map(|a| a.norm()).collect::<Vec<_>>()));
    if let Some(end) = traj.last() {
        let gap = end
            .alpha
            .iter()
            .zip(&state.alpha)
            .map(|(a, b)| (a - b).norm() / b.norm())
            .fold(0.0, f64::max);
        derived.insert("trajectory_end_vs_fixed_point".into(), json!(gap));
    }

    let chain = effective_chain(&spec, &state).map_err(CliError::solver("effective chain"))?;
    out.write_csv("couplings", "couplings.csv", |w| {
        use std::io::Write;
        writeln!(w, "bond,re,im,abs")?;
        for (k, z) in chain.couplings.iter().enumerate() {
            writeln!(w, "{},{}", k + 1, omtopo_core::csvfmt::row([z.re, z.im, z.norm()]))?;
        }
        Ok(())
    })?;
    derived.insert("coupling_abs".into(), json!(chain.magnitudes()));
    if let Ok(r) = coupling_ratio(&chain) {
        derived.insert("coupling_ratio".into(), json!(r));
        let phase = classify_phase(&chain, DEFAULT_PHASE_TOL).map_err(CliError::solver("phase"))?;
        derived.insert("phase_class".into(), json!(phase.to_string()));
    }

    let spectrum = eigh(&build_hamiltonian(&chain)).map_err(CliError::solver("spectrum"))?;
    out.write_csv("spectrum", "spectrum.csv", |w| spectrum.write_spectrum_csv(w))?;
    let gap = &spectrum.gap_state_indices;
    let shown = *gap.last().expect("chain has sites");
    out.write_csv("gap_state", "gap_state.csv", |w| spectrum.write_distribution_csv(shown, w))?;
    let v = &spectrum.eigenvectors[shown];
    derived.insert(
        "gap_energies".into(),
        json!(gap.iter().map(|&k| spectrum.eigenvalues[k]).collect::<Vec<_>>()),
    );
    derived.insert("edge_weight".into(), json!(edge_weight(v).map_err(CliError::solver("edge weight"))?));
    derived.insert("ipr".into(), json!(ipr(v)));
    derived.insert(
        "sites".into(),
        json!(site_labels(spec.topology).iter().map(|s| s.to_string()).collect::<Vec<_>>()),
    );
    Ok(())
}

fn solve_periodic(sc: &Scenario, derived: &mut Map<String, Value>) -> Result<PeriodicSteadyState> {
    let pss = periodic_steady_state(&sc.spec, &sc.settings.periodic).map_err(CliError::solver("periodic steady state"))?;
    derived.insert("period".into(), json!(pss.period));
    derived.insert("periods_integrated".into(), json!((pss.t0 / pss.period).round() + 1.0));
    derived.insert("convergence_error".into(), json!(pss.convergence_error));
    derived.insert("drive_envelope_deviation".into(), json!(envelope_deviation(&sc.spec, &pss)));
    Ok(pss)
}

/// Largest `| |α_j(t)| - base_j (1 + sign_j cos νt) |` over the stored period, per cavity.
pub fn envelope_deviation(spec: &LatticeSpec, pss: &PeriodicSteadyState) -> Vec<f64> {
    spec.drive
        .iter()
        .enumerate()
        .map(|(j, d)| {
            pss.samples
                .times
                .iter()
                .zip(&pss.samples.states)
                .map(|(&t, s)| (s.alpha[j].norm() - d.amplitude(t).norm()).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

fn write_periodic(pss: &PeriodicSteadyState, out: &mut OutputDir) -> Result<()> {
    // Times are measured from the start of the stored period.
    let local = Trajectory {
        times: pss.samples.times.iter().map(|t| t - pss.t0).collect(),
        states: pss.samples.states.clone(),
    };
    out.write_csv("periodic_state", "periodic_state.csv", |w| local.write_csv(w))?;
    Ok(())
}

/// Idealized schedule of a three-site chain: `A = g · base` of the drives.
pub fn analytic_schedule(spec: &LatticeSpec) -> Result<AnalyticSchedule> {
    if spec.topology != Topology::OddChain(2) {
        return Err(CliError::Config("the analytic schedule describes the three-site chain".into()));
    }
    let mut base = None;
    for d in &spec.drive {
        match *d {
            DriveProtocol::Cosine { base: b, .. } if base.is_none_or(|x| x == b) => base = Some(b),
            _ => return Err(CliError::Config("the analytic schedule needs cosine drives with one base".into())),
        }
    }
    let nu = spec
        .common_nu()
        .ok_or_else(|| CliError::Config("drives must share one modulation frequency".into()))?;
    Ok(AnalyticSchedule {
        amplitude: spec.g[0] * base.expect("two drives"),
        nu,
    })
}
