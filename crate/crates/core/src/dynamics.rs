//! Periodically driven lattice: periodic steady state of the mean field,
//! instantaneous spectra over a drive period, and coherent single-excitation
//! transfer through the zero mode of the odd chain.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csvfmt;
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::meanfield::{check_divergence, default_dt, derivative, pack, unpack, Rk4, Trajectory};
use crate::model::{build_hamiltonian, effective_chain, DriveProtocol, EffectiveChain, LatticeSpec, MeanFieldState};
use crate::spectral::{eigh, gauge_fix, SpectrumResult};

/// Largest `‖H‖·|dt|` accepted by [`schrodinger_propagate`].
pub const MAX_PHASE_PER_STEP: f64 = 0.05;
/// Propagation aborts when `|‖ψ‖² - 1|` exceeds this.
pub const NORM_ABORT: f64 = 1e-6;

pub fn drive_amplitude(p: &DriveProtocol, t: f64) -> Complex64 {
    p.amplitude(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeriodicSettings {
    /// Max relative difference between consecutive periods.
    pub tol: f64,
    pub max_periods: usize,
    /// Upper bound on the RK4 step; defaults to [`default_dt`].
    pub dt: Option<f64>,
    /// Stored samples per period (the last one repeats the first phase).
    pub samples_per_period: usize,
    /// Period used when every drive is constant.
    pub fallback_period: f64,
}

impl Default for PeriodicSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_periods: 60,
            dt: None,
            samples_per_period: 4096,
            fallback_period: 2.0 * PI,
        }
    }
}

/// One converged drive period of the mean field.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSteadyState {
    pub period: f64,
    /// Absolute start time of the stored period, an integer number of periods.
    pub t0: f64,
    /// `samples_per_period + 1` states covering `[t0, t0 + period]`.
    pub samples: Trajectory,
    /// Max relative amplitude difference between the last two periods.
    pub convergence_error: f64,
}

impl PeriodicSteadyState {
    /// State at phase time `tau` (time since the start of a period), wrapped
    /// into one period and linearly interpolated between stored samples.
    pub fn state_at(&self, tau: f64) -> MeanFieldState {
        let n = self.samples.len() - 1;
        let frac = (tau / self.period).rem_euclid(1.0);
        let x = frac * n as f64;
        let k = (x.floor() as usize).min(n - 1);
        let w = x - k as f64;
        let (s0, s1) = (&self.samples.states[k], &self.samples.states[k + 1]);
        let lerp = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> {
            a.iter().zip(b).map(|(p, q)| if w == 0.0 { *p } else { p * (1.0 - w) + q * w }).collect()
        };
        MeanFieldState {
            t: self.t0 + tau,
            alpha: lerp(&s0.alpha, &s1.alpha),
            beta: lerp(&s0.beta, &s1.beta),
        }
    }
}

/// Integrates from the vacuum one drive period at a time until two
/// consecutive periods agree sample-by-sample to `settings.tol` (relative to
/// the largest amplitude), then returns the last period.
pub fn periodic_steady_state(spec: &LatticeSpec, settings: &PeriodicSettings) -> Result<PeriodicSteadyState> {
    spec.validate()?;
    if spec.kappa.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::invalid("kappa", "periodic steady state needs every κ_j > 0"));
    }
    let period = if spec.all_constant_drives() {
        settings.fallback_period
    } else {
        let nu = spec.common_nu().ok_or_else(|| {
            Error::Unsupported("all drives must be cosines sharing one modulation frequency".into())
        })?;
        2.0 * PI / nu
    };
    let samples_n = settings.samples_per_period.max(4);
    let dt_max = settings.dt.unwrap_or_else(|| default_dt(spec));
    let sub = (period / (samples_n as f64 * dt_max)).ceil().max(1.0) as usize;
    let h = period / (samples_n * sub) as f64;

    let mut y = pack(&MeanFieldState::vacuum(spec));
    let mut rk = Rk4::new(y.len());
    let mut f = |t: f64, y: &[Complex64], dy: &mut [Complex64]| derivative(spec, t, y, dy);

    let mut previous: Option<Vec<Vec<Complex64>>> = None;
    let mut last_err = f64::INFINITY;
    for p in 0..settings.max_periods {
        let t0 = p as f64 * period;
        let mut current = Vec::with_capacity(samples_n + 1);
        current.push(y.clone());
        for k in 0..samples_n {
            for s in 0..sub {
                let t = t0 + ((k * sub + s) as f64) * h;
                rk.step(&mut f, t, &mut y, h);
            }
            check_divergence(&y, t0 + ((k + 1) * sub) as f64 * h)?;
            current.push(y.clone());
        }
        if let Some(prev) = &previous {
            let scale = current.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let diff = current
                .iter()
                .zip(prev)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
                .fold(0.0, f64::max);
            last_err = diff / scale;
            if last_err < settings.tol {
                let states: Vec<MeanFieldState> = current
                    .iter()
                    .enumerate()
                    .map(|(k, y)| unpack(spec, t0 + k as f64 * sub as f64 * h, y))
                    .collect();
                let mut times: Vec<f64> = states.iter().map(|s| s.t).collect();
                *times.last_mut().unwrap() = t0 + period;
                return Ok(PeriodicSteadyState {
                    period,
                    t0,
                    samples: Trajectory { times, states },
                    convergence_error: last_err,
                });
            }
        }
        previous = Some(current);
    }
    Err(Error::NotConverged {
        method: "periodic steady state",
        residual: last_err,
        spent: settings.max_periods as f64,
        hint: "increase max_periods".into(),
    })
}

/// Bond couplings of the chain as a function of phase time.
pub trait CouplingSchedule {
    fn chain_at(&self, tau: f64) -> Result<EffectiveChain>;
}

/// Gauge-fixed couplings extracted from a periodic steady state.
#[derive(Debug, Clone, Copy)]
pub struct SteadyStateSchedule<'a> {
    pub spec: &'a LatticeSpec,
    pub pss: &'a PeriodicSteadyState,
}

impl CouplingSchedule for SteadyStateSchedule<'_> {
    fn chain_at(&self, tau: f64) -> Result<EffectiveChain> {
        Ok(gauge_fix(&effective_chain(self.spec, &self.pss.state_at(tau))?))
    }
}

/// Idealized three-site schedule `(-A(1 - cos ντ), A(1 + cos ντ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSchedule {
    pub amplitude: f64,
    pub nu: f64,
}

impl AnalyticSchedule {
    pub fn at_phase(&self, theta: f64) -> EffectiveChain {
        let c = theta.cos();
        let mut chain = EffectiveChain::from_real(&[-self.amplitude * (1.0 - c), self.amplitude * (1.0 + c)]);
        chain.gauge_fixed = true;
        chain
    }
}

impl CouplingSchedule for AnalyticSchedule {
    fn chain_at(&self, tau: f64) -> Result<EffectiveChain> {
        Ok(self.at_phase(self.nu * tau))
    }
}

/// Spectra at `n_samples` phase times `τ_k = k·T/(n_samples - 1)` spanning one period.
pub fn instantaneous_spectrum_series(
    spec: &LatticeSpec,
    pss: &PeriodicSteadyState,
    n_samples: usize,
) -> Result<Vec<(f64, SpectrumResult)>> {
    let schedule = SteadyStateSchedule { spec, pss };
    sample_times(pss.period, n_samples)
        .into_iter()
        .map(|tau| Ok((tau, eigh(&build_hamiltonian(&schedule.chain_at(tau)?))?)))
        .collect()
}

/// Zero-mode site weights of an odd chain at the given phase times.
pub fn zero_mode_series<S: CouplingSchedule + ?Sized>(schedule: &S, times: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
    times
        .iter()
        .map(|&tau| {
            let chain = schedule.chain_at(tau)?;
            if chain.len_sites() % 2 == 0 {
                return Err(Error::Unsupported("zero mode needs an odd chain".into()));
            }
            let s = eigh(&build_hamiltonian(&chain))?;
            Ok((tau, s.distribution(s.gap_state_indices[0])))
        })
        .collect()
}

/// Zero-mode weights over one period of the periodic steady state.
pub fn zero_mode_trajectory(
    spec: &LatticeSpec,
    pss: &PeriodicSteadyState,
    n_samples: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    zero_mode_series(&SteadyStateSchedule { spec, pss }, &sample_times(pss.period, n_samples))
}

/// `n` uniformly spaced times from 0 to `span` inclusive.
pub fn sample_times(span: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|k| span * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub times: Vec<f64>,
    /// `populations[k][i] = |ψ_i(times[k])|²`.
    pub populations: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    /// Population on the last site at the final time.
    pub fidelity: f64,
    /// Largest `|‖ψ‖² - 1|` seen.
    pub norm_drift: f64,
    pub final_state: Vec<Complex64>,
}

impl TransferResult {
    /// Keeps every `every`-th record plus the final one.
    pub fn thinned(&self, every: usize) -> TransferResult {
        let every = every.max(1);
        let n = self.times.len();
        let keep: Vec<usize> = (0..n).filter(|k| k % every == 0 || k + 1 == n).collect();
        TransferResult {
            times: keep.iter().map(|&k| self.times[k]).collect(),
            populations: keep.iter().map(|&k| self.populations[k].clone()).collect(),
            norms: keep.iter().map(|&k| self.norms[k]).collect(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let m = self.populations.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=m).map(|i| format!("pop_site_{i}")));
        header.push("norm".into());
        writeln!(w, "{}", header.join(","))?;
        for ((t, pops), norm) in self.times.iter().zip(&self.populations).zip(&self.norms) {
            let values = std::iter::once(*t).chain(pops.iter().copied()).chain(std::iter::once(*norm));
            writeln!(w, "{}", csvfmt::row(values))?;
        }
        Ok(())
    }
}

/// Integrates `i dψ/dt = H(t) ψ` over `t_span` (which may run backwards) with
/// the exponential midpoint rule: each step applies `exp(-i H(t_mid) h)`
/// built from the eigendecomposition of the instantaneous Hamiltonian.
pub fn schrodinger_propagate<F>(
    mut chain_at: F,
    psi0: &[Complex64],
    t_span: (f64, f64),
    dt: f64,
) -> Result<TransferResult>
where
    F: FnMut(f64) -> Result<EffectiveChain>,
{
    let norm0 = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if (norm0 - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(norm0.sqrt()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    let (t0, t1) = t_span;
    let n_steps = if t1 == t0 { 0 } else { ((t1 - t0).abs() / dt - 1e-9).ceil().max(1.0) as usize };
    let h = if n_steps == 0 { 0.0 } else { (t1 - t0) / n_steps as f64 };

    let mut psi = psi0.to_vec();
    let m = psi.len();
    let mut out = TransferResult {
        times: Vec::with_capacity(n_steps + 1),
        populations: Vec::with_capacity(n_steps + 1),
        norms: Vec::with_capacity(n_steps + 1),
        fidelity: 0.0,
        norm_drift: 0.0,
        final_state: Vec::new(),
    };
    let record = |t: f64, psi: &[Complex64], out: &mut TransferResult| {
        let pops: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        let norm: f64 = pops.iter().sum();
        out.norm_drift = out.norm_drift.max((norm - 1.0).abs());
        out.times.push(t);
        out.populations.push(pops);
        out.norms.push(norm);
        norm
    };
    record(t0, &psi, &mut out);

    for k in 0..n_steps {
        let t_mid = t0 + (k as f64 + 0.5) * h;
        let chain = chain_at(t_mid)?;
        if chain.len_sites() != m {
            return Err(Error::dims("chain sites", m, chain.len_sites()));
        }
        let spectrum = eigh(&build_hamiltonian(&chain))?;
        let spectral_norm = spectrum.eigenvalues.iter().map(|e| e.abs()).fold(0.0, f64::max);
        if spectral_norm * h.abs() > MAX_PHASE_PER_STEP {
            return Err(Error::invalid(
                "dt",
                format!("‖H‖·dt = {:.3e} exceeds {MAX_PHASE_PER_STEP}", spectral_norm * h.abs()),
            ));
        }
        psi = apply_propagator(&spectrum, h, &psi);
        let t = if k + 1 == n_steps { t1 } else { t0 + (k + 1) as f64 * h };
        let norm = record(t, &psi, &mut out);
        if (norm - 1.0).abs() > NORM_ABORT {
            return Err(Error::NormDrift { t, drift: (norm - 1.0).abs() });
        }
    }
    out.fidelity = out.populations.last().and_then(|p| p.last().copied()).unwrap_or(0.0);
    out.final_state = psi;
    Ok(out)
}

/// `V · diag(e^{-iλh}) · V† · ψ`.
fn apply_propagator(spectrum: &SpectrumResult, h: f64, psi: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (lambda, v) in spectrum.eigenvalues.iter().zip(&spectrum.eigenvectors) {
        let overlap: Complex64 = v.iter().zip(psi).map(|(a, b)| a.conj() * b).sum();
        let c = Complex64::from_polar(1.0, -lambda * h) * overlap;
        for (o, a) in out.iter_mut().zip(v) {
            *o += c * a;
        }
    }
    out
}

/// Where the transfer Hamiltonian comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TransferSource {
    /// Idealized couplings `(-A(1 - cos νt), A(1 + cos νt))`.
    Analytic { amplitude: f64 },
    /// Couplings of the periodic steady state of this odd-chain lattice, with
    /// every drive's modulation frequency replaced by the requested `ν`.
    SteadyState { spec: LatticeSpec, settings: PeriodicSettings },
}

/// Starts with the excitation on the first cavity and propagates for half a
/// drive period (`π/ν`) or for `duration` when given; the fidelity is the
/// population on the last cavity at the end.
pub fn transfer_fidelity(source: &TransferSource, nu: f64, dt: f64, duration: Option<f64>) -> Result<TransferResult> {
    let t_end = match duration {
        Some(d) => d,
        None if nu > 0.0 => PI / nu,
        None => return Err(Error::invalid("duration", "required when nu = 0")),
    };
    match source {
        TransferSource::Analytic { amplitude } => {
            let schedule = AnalyticSchedule { amplitude: *amplitude, nu };
            schrodinger_propagate(|t| schedule.chain_at(t), &site_one(3), (0.0, t_end), dt)
        }
        TransferSource::SteadyState { spec, settings } => {
            if !matches!(spec.topology, crate::model::Topology::OddChain(_)) {
                return Err(Error::Unsupported("transfer needs an odd chain".into()));
            }
            if !(nu > 0.0) {
                return Err(Error::invalid("nu", "steady-state couplings need nu > 0"));
            }
            let mut spec = spec.clone();
            for d in &mut spec.drive {
                if let DriveProtocol::Cosine { nu: n, .. } = d {
                    *n = nu;
                }
            }
            let pss = periodic_steady_state(&spec, settings)?;
            let schedule = SteadyStateSchedule { spec: &spec, pss: &pss };
            let m = spec.topology.sites();
            schrodinger_propagate(|t| schedule.chain_at(t), &site_one(m), (0.0, t_end), dt)
        }
    }
}

fn site_one(m: usize) -> Vec<Complex64> {
    let mut psi = vec![Complex64::new(0.0, 0.0); m];
    psi[0] = Complex64::new(1.0, 0.0);
    psi
}

pub fn write_spectrum_series_csv<W: Write>(series: &[(f64, SpectrumResult)], mut w: W) -> io::Result<()> {
    let m = series.first().map_or(0, |(_, s)| s.dim());
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("lambda_{i}")));
    writeln!(w, "{}", header.join(","))?;
    for (t, s) in series {
        writeln!(w, "{}", csvfmt::row(std::iter::once(*t).chain(s.eigenvalues.iter().copied())))?;
    }
    Ok(())
}

pub fn write_zero_mode_csv<W: Write>(series: &[(f64, Vec<f64>)], mut w: W) -> io::Result<()> {
    let m = series.first().map_or(0, |(_, d)| d.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("w_site_{i}")));
    writeln!(w, "{}", header.join(","))?;
    for (t, d) in series {
        writeln!(w, "{}", csvfmt::row(std::iter::once(*t).chain(d.iter().copied())))?;
    }
    Ok(())
}

/// Dense unitary `exp(-iHh)`; used by tests and benchmarks.
pub fn propagator(h_matrix: &CMatrix, h: f64) -> Result<CMatrix> {
    let s = eigh(h_matrix)?;
    let n = h_matrix.dim();
    let mut u = CMatrix::zeros(n);
    for (lambda, v) in s.eigenvalues.iter().zip(&s.eigenvectors) {
        let phase = Complex64::from_polar(1.0, -lambda * h);
        for i in 0..n {
            for j in 0..n {
                u[(i, j)] += phase * v[i] * v[j].conj();
            }
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Topology;

    #[test]
    fn drive_amplitude_examples() {
        let minus = DriveProtocol::cosine(1e5, -1, 0.006);
        assert_eq!(drive_amplitude(&minus, 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(drive_amplitude(&DriveProtocol::cosine(1e5, 1, 0.006), 0.0).re, 2e5);
        let t = FRAC_PI_2_OVER_NU;
        assert!((drive_amplitude(&minus, t).re - 1e5).abs() < 1e-6);
    }

    const FRAC_PI_2_OVER_NU: f64 = std::f64::consts::FRAC_PI_2 / 0.006;

    #[test]
    fn zero_hamiltonian_keeps_state() {
        let psi0 = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8), Complex64::new(0.0, 0.0)];
        let r = schrodinger_propagate(|_| Ok(EffectiveChain::from_real(&[0.0, 0.0])), &psi0, (0.0, 50.0), 0.5).unwrap();
        assert_eq!(r.final_state, psi0);
        assert!(r.norm_drift < 1e-15);
    }

    #[test]
    fn rabi_oscillation() {
        let j = 0.1;
        let t_end = std::f64::consts::FRAC_PI_4 / j;
        let r = schrodinger_propagate(
            |_| Ok(EffectiveChain::from_real(&[j])),
            &site_one(2),
            (0.0, t_end),
            0.05,
        )
        .unwrap();
        for (t, p) in r.times.iter().zip(&r.populations) {
            assert!((p[0] - (j * t).cos().powi(2)).abs() < 1e-6);
        }
        assert!((r.populations.last().unwrap()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oversized_step_rejected() {
        let err = schrodinger_propagate(|_| Ok(EffectiveChain::from_real(&[1.0])), &site_one(2), (0.0, 1.0), 0.5);
        assert!(matches!(err, Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn static_drive_keeps_excitation_home() {
        let r = transfer_fidelity(&TransferSource::Analytic { amplitude: 0.1 }, 0.0, 0.05, Some(200.0)).unwrap();
        for p in &r.populations {
            assert!((p[0] - 1.0).abs() < 1e-14);
        }
        assert!(transfer_fidelity(&TransferSource::Analytic { amplitude: 0.1 }, 0.0, 0.05, None).is_err());
    }

    #[test]
    fn analytic_zero_mode_endpoints_are_exact() {
        let schedule = AnalyticSchedule { amplitude: 0.1, nu: 0.006 };
        let series = zero_mode_series(&schedule, &[0.0, PI / 0.006]).unwrap();
        assert_eq!(series[0].1, vec![1.0, 0.0, 0.0]);
        assert_eq!(series[1].1, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn propagator_is_unitary() {
        let h = build_hamiltonian(&EffectiveChain::from_real(&[-0.13, 0.07, -0.2]));
        let u = propagator(&h, 0.3).unwrap();
        let id = u.mul(&u.conj_transpose());
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_drive_periodic_state_is_stationary() {
        let spec = LatticeSpec {
            topology: Topology::CellChain(2),
            delta_a: vec![1.0; 2],
            omega_b: vec![1.0; 2],
            g: vec![1e-6; 2],
            kappa: vec![0.1; 2],
            gamma: vec![1e-5; 2],
            drive: vec![DriveProtocol::constant(1e5); 2],
        };
        let settings = PeriodicSettings { fallback_period: 100.0, samples_per_period: 64, tol: 1e-9, ..Default::default() };
        let pss = periodic_steady_state(&spec, &settings).unwrap();
        let fp = crate::meanfield::find_steady_state_fixed_point(&spec, &Default::default()).unwrap();
        for s in &pss.samples.states {
            for (a, b) in s.amplitudes().zip(fp.state.amplitudes()) {
                assert!((a - b).norm() <= 1e-7 * fp.state.max_abs(), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn sample_times_cover_span() {
        assert_eq!(sample_times(4.0, 5), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(sample_times(1.0, 0).is_empty());
    }
}
