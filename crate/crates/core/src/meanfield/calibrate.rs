use serde::{Deserialize, Serialize};

use super::steady::{find_steady_state_fixed_point, FixedPointSettings};
use crate::error::{Error, Result};
use crate::model::{effective_chain, LatticeSpec, Topology};

/// Requires `|J_a| = |J_b|` for two zero-based bond indices of the effective chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEquality {
    pub a: usize,
    pub b: usize,
}

impl CouplingEquality {
    /// First and last bond of a two-cell chain (`|G₁| = |G₃|`).
    pub const FIRST_THIRD: CouplingEquality = CouplingEquality { a: 0, b: 2 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSettings {
    /// Relative tolerance on `|J_a| - |J_b|`.
    pub tol: f64,
    /// Centre of the bracketing scan; defaults to the current coupling.
    pub reference: Option<f64>,
    /// Scan range as multiples of the reference.
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_points: usize,
    pub max_iter: usize,
    pub fixed_point: FixedPointSettings,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            reference: None,
            scan_lo: 0.5,
            scan_hi: 3.0,
            scan_points: 51,
            max_iter: 100,
            fixed_point: FixedPointSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub spec: LatticeSpec,
    pub g: f64,
    /// `(|J_a| - |J_b|) / |J_b|` at the calibrated steady state.
    pub relative_mismatch: f64,
    pub evaluations: usize,
}

struct Objective<'a> {
    spec: &'a LatticeSpec,
    index: usize,
    target: CouplingEquality,
    settings: &'a CalibrationSettings,
    evaluations: usize,
}

impl Objective<'_> {
    /// Returns `(|J_a| - |J_b|, |J_b|)`.
    fn eval(&mut self, g: f64) -> Result<(f64, f64)> {
        self.evaluations += 1;
        let mut spec = self.spec.clone();
        spec.g[self.index] = g;
        let report = find_steady_state_fixed_point(&spec, &self.settings.fixed_point)?;
        let chain = effective_chain(&spec, &report.state)?;
        let ja = chain.couplings[self.target.a].norm();
        let jb = chain.couplings[self.target.b].norm();
        Ok((ja - jb, jb))
    }
}

/// Adjusts `g[index]` until the steady-state bond magnitudes named by `target`
/// coincide. The root is bracketed by scanning `[scan_lo, scan_hi] × reference`
/// and refined with a bisection-safeguarded secant iteration.
pub fn calibrate_g(
    spec: &LatticeSpec,
    index: usize,
    target: CouplingEquality,
    settings: &CalibrationSettings,
) -> Result<Calibration> {
    spec.validate()?;
    if !matches!(spec.topology, Topology::CellChain(_)) {
        return Err(Error::Unsupported("calibration is defined for cell chains".into()));
    }
    if index >= spec.g.len() {
        return Err(Error::invalid("adjustable_index", format!("{index} out of range")));
    }
    let bonds = 2 * spec.cavities() - 1;
    if target.a >= bonds || target.b >= bonds || target.a == target.b {
        return Err(Error::invalid("target", format!("bonds must be distinct and < {bonds}")));
    }

    let mut obj = Objective {
        spec,
        index,
        target,
        settings,
        evaluations: 0,
    };
    let done = |spec: &LatticeSpec, g: f64, f: f64, jb: f64, evaluations: usize| {
        let mut out = spec.clone();
        out.g[index] = g;
        Calibration {
            spec: out,
            g,
            relative_mismatch: f / jb,
            evaluations,
        }
    };

    let g0 = spec.g[index];
    if let Ok((f0, jb0)) = obj.eval(g0) {
        if f0.abs() < settings.tol * jb0 {
            return Ok(done(spec, g0, f0, jb0, obj.evaluations));
        }
    }

    // Bracketing scan; points where the steady-state solver fails are skipped.
    let reference = settings.reference.unwrap_or(g0);
    let n = settings.scan_points.max(2);
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(n);
    for k in 0..n {
        let g = reference * (settings.scan_lo + (settings.scan_hi - settings.scan_lo) * k as f64 / (n - 1) as f64);
        if let Ok((f, _)) = obj.eval(g) {
            samples.push((g, f));
        }
    }
    let bracket = samples
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .min_by(|x, y| {
            let dx = (0.5 * (x[0].0 + x[1].0) - g0).abs();
            let dy = (0.5 * (y[0].0 + y[1].0) - g0).abs();
            dx.total_cmp(&dy)
        })
        .map(|w| (w[0], w[1]));
    let Some(((mut lo, mut f_lo), (mut hi, mut f_hi))) = bracket else {
        let (gmin, gmax) = (reference * settings.scan_lo, reference * settings.scan_hi);
        let fmin = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let fmax = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::Calibration(format!(
            "no sign change of |J_a|-|J_b| for g in [{gmin:.4e}, {gmax:.4e}] \
             ({} of {n} points solved, mismatch range [{fmin:.3e}, {fmax:.3e}])",
            samples.len()
        )));
    };

    // Secant step, falling back to bisection when it leaves the bracket.
    let (mut g_prev, mut f_prev) = (lo, f_lo);
    let (mut g_cur, mut f_cur) = (hi, f_hi);
    for _ in 0..settings.max_iter {
        let mut g_next = g_cur - f_cur * (g_cur - g_prev) / (f_cur - f_prev);
        if !(g_next > lo.min(hi) && g_next < lo.max(hi)) || !g_next.is_finite() {
            g_next = 0.5 * (lo + hi);
        }
        let (f_next, jb) = obj.eval(g_next)?;
        if f_next.abs() < settings.tol * jb {
            return Ok(done(spec, g_next, f_next, jb, obj.evaluations));
        }
        if f_next.signum() == f_lo.signum() {
            lo = g_next;
            f_lo = f_next;
        } else {
            hi = g_next;
            f_hi = f_next;
        }
        g_prev = g_cur;
        f_prev = f_cur;
        g_cur = g_next;
        f_cur = f_next;
        if (hi - lo).abs() < 1e-15 * hi.abs() {
            break;
        }
    }
    Err(Error::Calibration(format!(
        "secant refinement stalled in [{lo:.10e}, {hi:.10e}] (mismatch {f_lo:.3e} / {f_hi:.3e})"
    )))
}
