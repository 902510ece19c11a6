use std::io::Write;
use std::path::Path;
use std::time::Instant;

use omtopo_core::model::DEFAULT_PHASE_TOL;
use omtopo_core::{
    build_hamiltonian, calibrate_g, classify_phase, coupling_ratio, edge_weight, effective_chain, eigh,
    find_steady_state_fixed_point, FixedPointSettings, LatticeSpec, Topology,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map};

use crate::catalog::CalibrationRequest;
use crate::config::Scenario;
use crate::manifest::{Manifest, OutputDir};
use crate::overrides;
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    EdgeWeightOfGapState,
    /// Difference between the two gap-state energies.
    GapStateSplitting,
    CouplingRatio,
    /// All `|α_j|`, joined with `;`.
    SteadyAlphaAbs,
    PhaseClass,
}

fn default_base() -> String {
    "fig2a".into()
}

/// One-parameter sweep. Each point applies `parameter = value` to the base
/// spec, optionally recalibrates a coupling, and evaluates the observable at
/// the self-consistent steady state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Built-in scenario providing the base spec, unless `base` is given.
    #[serde(default = "default_base")]
    pub base_scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<LatticeSpec>,
    /// Key path into the spec, e.g. `kappa[1]`.
    pub parameter: String,
    pub values: Vec<f64>,
    pub observable: Observable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationRequest>,
    #[serde(default)]
    pub fixed_point: FixedPointSettings,
}

impl SweepSpec {
    pub fn base_spec(&self) -> Result<LatticeSpec> {
        match &self.base {
            Some(spec) => Ok(spec.clone()),
            None => Ok(crate::catalog::scenario(&self.base_scenario)?.spec),
        }
    }

    pub fn validate(&self, base: &LatticeSpec) -> Result<()> {
        if let Some(x) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("sweep value {x} is not finite")));
        }
        let up = self.values.windows(2).all(|w| w[0] < w[1]);
        let down = self.values.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return Err(CliError::Config("sweep values must be strictly ordered".into()));
        }
        let cells = match base.topology {
            Topology::CellChain(n) => n,
            Topology::OddChain(_) => 0,
        };
        let needs_cells = matches!(
            self.observable,
            Observable::CouplingRatio | Observable::PhaseClass | Observable::GapStateSplitting
        );
        if needs_cells && cells < 2 {
            return Err(CliError::Config(format!(
                "observable {:?} needs a cell chain with at least two cells",
                self.observable
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub observable: String,
    pub calibrated_g: Option<f64>,
    pub coupling_ratio: Option<f64>,
}

fn spec_at(sweep: &SweepSpec, base: &LatticeSpec, value: f64) -> Result<LatticeSpec> {
    let mut sc = Scenario {
        name: sweep.base_scenario.clone(),
        spec: base.clone(),
        settings: Default::default(),
    };
    overrides::apply(&mut sc, &sweep.parameter, json!(value))?;
    Ok(sc.spec)
}

pub fn evaluate_point(sweep: &SweepSpec, base: &LatticeSpec, value: f64) -> Result<PointResult> {
    let mut spec = spec_at(sweep, base, value)?;
    let mut calibrated_g = None;
    if let Some(req) = &sweep.calibration {
        let cal = calibrate_g(&spec, req.index, req.target, &req.settings).map_err(CliError::solver("calibration"))?;
        calibrated_g = Some(cal.g);
        spec = cal.spec;
    }
    let state = find_steady_state_fixed_point(&spec, &sweep.fixed_point)
        .map_err(CliError::solver("steady state"))?
        .state;
    let chain = effective_chain(&spec, &state).map_err(CliError::solver("effective chain"))?;
    let ratio = coupling_ratio(&chain).ok();
    let observable = match sweep.observable {
        Observable::SteadyAlphaAbs => state
            .alpha
            .iter()
            .map(|a| omtopo_core::csvfmt::num(a.norm()))
            .collect::<Vec<_>>()
            .join(";"),
        Observable::CouplingRatio => omtopo_core::csvfmt::num(coupling_ratio(&chain).map_err(CliError::solver("ratio"))?),
        Observable::PhaseClass => classify_phase(&chain, DEFAULT_PHASE_TOL)
            .map_err(CliError::solver("phase"))?
            .to_string(),
        Observable::EdgeWeightOfGapState | Observable::GapStateSplitting => {
            let s = eigh(&build_hamiltonian(&chain)).map_err(CliError::solver("spectrum"))?;
            let gap = &s.gap_state_indices;
            let x = if sweep.observable == Observable::GapStateSplitting {
                s.eigenvalues[gap[gap.len() - 1]] - s.eigenvalues[gap[0]]
            } else {
                edge_weight(&s.eigenvectors[*gap.last().expect("non-empty chain")])
                    .map_err(CliError::solver("edge weight"))?
            };
            omtopo_core::csvfmt::num(x)
        }
    };
    Ok(PointResult {
        observable,
        calibrated_g,
        coupling_ratio: ratio,
    })
}

/// Parameter values where the intra/inter coupling ratio crosses one,
/// linearly interpolated between neighbouring points.
pub fn ratio_crossings(values: &[f64], ratios: &[Option<f64>]) -> Vec<f64> {
    values
        .windows(2)
        .zip(ratios.windows(2))
        .filter_map(|(v, r)| {
            let (a, b) = (r[0]? - 1.0, r[1]? - 1.0);
            (a.signum() != b.signum()).then(|| v[0] + (v[1] - v[0]) * a / (a - b))
        })
        .collect()
}

/// Evaluates every point, at most `jobs` at a time, and writes `sweep.csv`
/// with columns `index,value,observable,calibrated_g,status` in input order.
pub fn run_sweep(sweep: &SweepSpec, base: &LatticeSpec, out_dir: &Path, jobs: usize) -> Result<Manifest> {
    let start = Instant::now();
    base.validate().map_err(|e| CliError::Config(e.to_string()))?;
    sweep.validate(base)?;
    // A malformed parameter path is a config error, not a per-point failure.
    if let Some(&v) = sweep.values.first() {
        spec_at(sweep, base, v)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<PointResult>> =
        pool.install(|| sweep.values.par_iter().map(|&v| evaluate_point(sweep, base, v)).collect());

    let mut out = OutputDir::create(out_dir)?;
    let mut failures = Vec::new();
    out.write_csv("sweep", "sweep.csv", |w| {
        writeln!(w, "index,value,observable,calibrated_g,status")?;
        for (k, (v, r)) in sweep.values.iter().zip(&results).enumerate() {
            let v = omtopo_core::csvfmt::num(*v);
            match r {
                Ok(p) => {
                    let g = p.calibrated_g.map(omtopo_core::csvfmt::num).unwrap_or_default();
                    writeln!(w, "{k},{v},{},{g},ok", p.observable)?;
                }
                Err(e) => {
                    failures.push(json!({"index": k, "value": v, "error": e.to_string()}));
                    writeln!(w, "{k},{v},,,failed")?;
                }
            }
        }
        Ok(())
    })?;

    let mut derived = Map::new();
    let ratios: Vec<Option<f64>> = results.iter().map(|r| r.as_ref().ok().and_then(|p| p.coupling_ratio)).collect();
    if ratios.iter().any(Option::is_some) {
        derived.insert("coupling_ratio".into(), json!(ratios));
        derived.insert("ratio_crossings".into(), json!(ratio_crossings(&sweep.values, &ratios)));
    }
    let manifest = Manifest {
        scenario: format!("sweep:{}", sweep.parameter),
        resolved_spec: serde_json::to_value(base).expect("spec serializes"),
        settings: serde_json::to_value(sweep).expect("sweep serializes"),
        outputs: Vec::new(),
        wall_time: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        derived,
        failures,
    };
    out.finish(manifest)
}
