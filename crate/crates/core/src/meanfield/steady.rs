use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_divergence, default_dt, derivative, pack, shifted_detuning, unpack, Rk4};
use crate::error::{Error, Result};
use crate::model::{LatticeSpec, MeanFieldState};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyMethod {
    OdeRelaxation,
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateReport {
    pub state: MeanFieldState,
    pub method: SteadyMethod,
    /// `max_i |dX_i/dt| / (1 + |X_i|)` over every amplitude at `state`.
    pub residual: f64,
    /// Iteration count for the fixed point, elapsed time for relaxation.
    pub iterations_or_time: f64,
}

/// Normalized derivative residual `max_i |dX_i/dt| / (1 + |X_i|)`.
pub fn steady_residual(spec: &LatticeSpec, state: &MeanFieldState) -> f64 {
    let y = pack(state);
    let mut dy = vec![Complex64::new(0.0, 0.0); y.len()];
    derivative(spec, state.t, &y, &mut dy);
    normalized_residual(&y, &dy)
}

fn normalized_residual(y: &[Complex64], dy: &[Complex64]) -> f64 {
    y.iter()
        .zip(dy)
        .map(|(x, d)| d.norm() / (1.0 + x.norm()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeSteadySettings {
    pub tol: f64,
    /// Defaults to [`default_dt`].
    pub dt: Option<f64>,
    /// Defaults to `2000 / min κ`.
    pub max_time: Option<f64>,
    /// Steps between residual checks.
    pub check_every: usize,
}

impl Default for OdeSteadySettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            dt: None,
            max_time: None,
            check_every: 200,
        }
    }
}

/// Relaxes the equations of motion from the vacuum until the normalized
/// derivative residual drops below `settings.tol`.
pub fn find_steady_state_ode(spec: &LatticeSpec, settings: &OdeSteadySettings) -> Result<SteadyStateReport> {
    spec.validate()?;
    if !spec.all_constant_drives() {
        return Err(Error::Unsupported(
            "relaxation needs constant drives; use the periodic steady state for modulated drives".into(),
        ));
    }
    let kappa_min = spec.kappa.iter().copied().fold(f64::INFINITY, f64::min);
    if !(kappa_min > 0.0) {
        return Err(Error::invalid("kappa", "relaxation needs every κ_j > 0"));
    }
    let dt = settings.dt.unwrap_or_else(|| default_dt(spec));
    let max_time = settings.max_time.unwrap_or(2000.0 / kappa_min);
    let check_every = settings.check_every.max(1);

    let mut y = pack(&MeanFieldState::vacuum(spec));
    let mut dy = vec![Complex64::new(0.0, 0.0); y.len()];
    let mut rk = Rk4::new(y.len());
    let mut f = |t: f64, y: &[Complex64], dy: &mut [Complex64]| derivative(spec, t, y, dy);

    let mut best = f64::INFINITY;
    let mut step: u64 = 0;
    loop {
        let t = step as f64 * dt;
        if step % check_every as u64 == 0 && step > 0 {
            derivative(spec, t, &y, &mut dy);
            let r = normalized_residual(&y, &dy);
            best = best.min(r);
            if r < settings.tol {
                return Ok(SteadyStateReport {
                    state: unpack(spec, t, &y),
                    method: SteadyMethod::OdeRelaxation,
                    residual: r,
                    iterations_or_time: t,
                });
            }
        }
        if t >= max_time {
            return Err(Error::NotConverged {
                method: "ode relaxation",
                residual: best,
                spent: t,
                hint: "no stationary state reached; the dynamics may settle on a limit cycle".into(),
            });
        }
        rk.step(&mut f, t, &mut y, dt);
        step += 1;
        if step % 64 == 0 {
            check_divergence(&y, step as f64 * dt)?;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedPointSettings {
    /// Stop when the relative change between successive iterates drops below this.
    pub tol: f64,
    /// Under-relaxation factor in `(0, 1]`.
    pub damping: f64,
    pub max_iter: usize,
}

impl Default for FixedPointSettings {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            damping: 0.5,
            max_iter: 100_000,
        }
    }
}

/// Solves the algebraic steady-state equations by damped self-consistent
/// iteration, starting from the vacuum:
///
/// ```text
/// β_j ← g_j (|α_j|² - |α_{j+1}|²) / (ω_j - iγ_j/2)
/// α_j ← -i Ω_j / (i Δ'_j(β) + κ_j/2)
/// ```
///
/// Note the iteration converges to fixed points regardless of their dynamical
/// stability; compare with [`find_steady_state_ode`] when stability matters.
pub fn find_steady_state_fixed_point(
    spec: &LatticeSpec,
    settings: &FixedPointSettings,
) -> Result<SteadyStateReport> {
    spec.validate()?;
    if !spec.all_constant_drives() {
        return Err(Error::Unsupported("fixed-point iteration needs constant drives".into()));
    }
    let d = settings.damping;
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::invalid("damping", format!("must lie in (0, 1], got {d}")));
    }
    let nc = spec.cavities();
    let nr = spec.resonators();
    let mut state = MeanFieldState::vacuum(spec);
    let mut beta_new = vec![Complex64::new(0.0, 0.0); nr];
    let mut best = f64::INFINITY;

    for iter in 1..=settings.max_iter {
        for j in 0..nr {
            let mut force = state.alpha[j].norm_sqr();
            if j + 1 < nc {
                force -= state.alpha[j + 1].norm_sqr();
            }
            beta_new[j] = spec.g[j] * force / Complex64::new(spec.omega_b[j], -0.5 * spec.gamma[j]);
        }
        let mut change = 0.0_f64;
        let mut scale = 0.0_f64;
        for j in 0..nc {
            let detuning = shifted_detuning(spec, j, &beta_new);
            let a_new = -I * spec.drive[j].amplitude(0.0) / (I * detuning + 0.5 * spec.kappa[j]);
            let mixed = state.alpha[j] * (1.0 - d) + a_new * d;
            change = change.max((mixed - state.alpha[j]).norm());
            scale = scale.max(mixed.norm());
            state.alpha[j] = mixed;
        }
        for j in 0..nr {
            let mixed = state.beta[j] * (1.0 - d) + beta_new[j] * d;
            change = change.max((mixed - state.beta[j]).norm());
            scale = scale.max(mixed.norm());
            state.beta[j] = mixed;
        }
        if !state.is_finite() {
            return Err(Error::NotConverged {
                method: "fixed-point iteration",
                residual: f64::INFINITY,
                spent: iter as f64,
                hint: "iterate became non-finite".into(),
            });
        }
        let rel = if scale > 0.0 { change / scale } else { 0.0 };
        best = best.min(rel);
        if rel < settings.tol {
            return Ok(SteadyStateReport {
                residual: steady_residual(spec, &state),
                state,
                method: SteadyMethod::FixedPoint,
                iterations_or_time: iter as f64,
            });
        }
    }
    Err(Error::NotConverged {
        method: "fixed-point iteration",
        residual: best,
        spent: settings.max_iter as f64,
        hint: "iteration oscillates; try a smaller damping".into(),
    })
}
