//! Nonlinear mean-field equations of motion for the cavity and resonator
//! amplitudes, their time integration, steady-state solvers and coupling
//! calibration.
//!
//! For cavity `j` the equation is
//!
//! ```text
//! dα_j/dt = -i Δ'_j α_j - i Ω_j(t) - (κ_j/2) α_j
//! Δ'_j    = Δ_j + g_{j-1} 2Re β_{j-1} - g_j 2Re β_j
//! ```
//!
//! and for resonator `j`
//!
//! ```text
//! dβ_j/dt = -i (ω_j β_j - g_j |α_j|² + g_j |α_{j+1}|²) - (γ_j/2) β_j
//! ```
//!
//! where terms referring to a missing neighbour are dropped.

mod calibrate;
mod rk4;
mod steady;

use std::io::{self, Write};

use num_complex::Complex64;

use crate::csvfmt;
use crate::error::{Error, Result};
use crate::model::{LatticeSpec, MeanFieldState};

pub use calibrate::{calibrate_g, Calibration, CalibrationSettings, CouplingEquality};
pub use rk4::Rk4;
pub use steady::{
    find_steady_state_fixed_point, find_steady_state_ode, steady_residual, FixedPointSettings,
    OdeSteadySettings, SteadyMethod, SteadyStateReport,
};

/// Amplitudes above this magnitude abort an integration.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Time derivative of every amplitude in a [`MeanFieldState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
}

/// Right-hand side of the mean-field equations at time `t`.
pub fn rhs(spec: &LatticeSpec, state: &MeanFieldState, t: f64) -> Result<StateDerivative> {
    state.check_dims(spec)?;
    if !state.is_finite() || !t.is_finite() {
        return Err(Error::NonFinite("mean-field state".into()));
    }
    let y = pack(state);
    let mut dy = vec![Complex64::new(0.0, 0.0); y.len()];
    derivative(spec, t, &y, &mut dy);
    let nc = spec.cavities();
    Ok(StateDerivative {
        alpha: dy[..nc].to_vec(),
        beta: dy[nc..].to_vec(),
    })
}

/// Shifted detuning `Δ'_j` for the given resonator amplitudes.
pub(crate) fn shifted_detuning(spec: &LatticeSpec, j: usize, beta: &[Complex64]) -> f64 {
    let mut d = spec.delta_a[j];
    if j >= 1 && j - 1 < beta.len() {
        d += spec.g[j - 1] * 2.0 * beta[j - 1].re;
    }
    if j < beta.len() {
        d -= spec.g[j] * 2.0 * beta[j].re;
    }
    d
}

/// Flat layout `[α_1..α_N, β_1..β_M]` used by the integrators.
pub(crate) fn derivative(spec: &LatticeSpec, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
    let nc = spec.cavities();
    let (alpha, beta) = y.split_at(nc);
    let (dalpha, dbeta) = dy.split_at_mut(nc);
    for j in 0..nc {
        let detuning = shifted_detuning(spec, j, beta);
        dalpha[j] = -I * detuning * alpha[j] - I * spec.drive[j].amplitude(t) - 0.5 * spec.kappa[j] * alpha[j];
    }
    for j in 0..beta.len() {
        let mut force = -spec.g[j] * alpha[j].norm_sqr();
        if j + 1 < nc {
            force += spec.g[j] * alpha[j + 1].norm_sqr();
        }
        dbeta[j] = -I * (spec.omega_b[j] * beta[j] + force) - 0.5 * spec.gamma[j] * beta[j];
    }
}

pub(crate) fn pack(state: &MeanFieldState) -> Vec<Complex64> {
    state.alpha.iter().chain(&state.beta).copied().collect()
}

pub(crate) fn unpack(spec: &LatticeSpec, t: f64, y: &[Complex64]) -> MeanFieldState {
    let nc = spec.cavities();
    MeanFieldState {
        t,
        alpha: y[..nc].to_vec(),
        beta: y[nc..].to_vec(),
    }
}

/// Default step: 0.005 for rates up to 1, shrinking so that `κ_max · dt ≤ 0.005`.
pub fn default_dt(spec: &LatticeSpec) -> f64 {
    let fastest = spec
        .kappa
        .iter()
        .chain(&spec.omega_b)
        .chain(spec.delta_a.iter())
        .map(|x| x.abs())
        .fold(1.0, f64::max);
    0.005 / fastest
}

/// Sampled solution of the mean-field equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&MeanFieldState> {
        self.states.last()
    }

    /// `t, re_alpha_1, im_alpha_1, ..., re_beta_1, im_beta_1, ..., abs_alpha_1, ...`
    pub fn csv_header(n_cavities: usize, n_resonators: usize) -> String {
        let mut cols = vec!["t".to_string()];
        for j in 1..=n_cavities {
            cols.push(format!("re_alpha_{j}"));
            cols.push(format!("im_alpha_{j}"));
        }
        for j in 1..=n_resonators {
            cols.push(format!("re_beta_{j}"));
            cols.push(format!("im_beta_{j}"));
        }
        for j in 1..=n_cavities {
            cols.push(format!("abs_alpha_{j}"));
        }
        cols.join(",")
    }

    pub fn csv_row(state: &MeanFieldState) -> String {
        let mut values = vec![state.t];
        for z in state.alpha.iter().chain(&state.beta) {
            values.push(z.re);
            values.push(z.im);
        }
        values.extend(state.alpha.iter().map(|z| z.norm()));
        csvfmt::row(values)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let (nc, nr) = self
            .states
            .first()
            .map(|s| (s.alpha.len(), s.beta.len()))
            .unwrap_or((0, 0));
        writeln!(w, "{}", Self::csv_header(nc, nr))?;
        for s in &self.states {
            writeln!(w, "{}", Self::csv_row(s))?;
        }
        Ok(())
    }
}

/// Fixed-step RK4 integration from `state0` to `t_end`, keeping every
/// `sample_every`-th step plus the initial and final states. The step is
/// shrunk slightly so the last sample lands exactly on `t_end`.
pub fn integrate(
    spec: &LatticeSpec,
    state0: &MeanFieldState,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    state0.check_dims(spec)?;
    if !state0.is_finite() {
        return Err(Error::NonFinite("initial state".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_end > state0.t) {
        return Err(Error::invalid(
            "t_end",
            format!("must exceed the initial time {}", state0.t),
        ));
    }
    let sample_every = sample_every.max(1);
    let t0 = state0.t;
    let n_steps = ((t_end - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    let h = (t_end - t0) / n_steps as f64;

    let mut y = pack(state0);
    let mut rk = Rk4::new(y.len());
    let mut f = |t: f64, y: &[Complex64], dy: &mut [Complex64]| derivative(spec, t, y, dy);

    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![state0.clone()],
    };
    for k in 0..n_steps {
        let t = t0 + k as f64 * h;
        rk.step(&mut f, t, &mut y, h);
        let t_next = if k + 1 == n_steps { t_end } else { t0 + (k + 1) as f64 * h };
        check_divergence(&y, t_next)?;
        if (k + 1) % sample_every == 0 || k + 1 == n_steps {
            traj.times.push(t_next);
            traj.states.push(unpack(spec, t_next, &y));
        }
    }
    Ok(traj)
}

pub(crate) fn check_divergence(y: &[Complex64], t: f64) -> Result<()> {
    let mut worst = 0.0_f64;
    for z in y {
        let m = z.norm();
        if !m.is_finite() {
            return Err(Error::Divergence { t, magnitude: f64::INFINITY });
        }
        worst = worst.max(m);
    }
    if worst > DIVERGENCE_LIMIT {
        return Err(Error::Divergence { t, magnitude: worst });
    }
    Ok(())
}
