use omtopo_core::dynamics::PeriodicSettings;
use omtopo_core::{
    CalibrationSettings, CouplingEquality, DriveProtocol, FixedPointSettings, LatticeSpec, Topology,
};
use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::{CliError, Result};

pub const SCENARIOS: [&str; 12] = [
    "fig2a", "fig2d", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig10a", "fig10b", "fig10c", "transfer",
];

/// What a scenario computes after its spec is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// Trajectory, steady state, couplings, spectrum and gap-state distribution.
    Static,
    PeriodicState,
    SpectrumSeries,
    ZeroMode,
    Transfer,
}

impl Pipeline {
    pub fn of(name: &str) -> Option<Pipeline> {
        Some(match name {
            "fig2a" | "fig2d" | "fig3" | "fig4" | "fig5" | "fig6" | "fig7" | "fig8" => Pipeline::Static,
            "fig10a" => Pipeline::PeriodicState,
            "fig10b" => Pipeline::SpectrumSeries,
            "fig10c" => Pipeline::ZeroMode,
            "transfer" => Pipeline::Transfer,
            _ => return None,
        })
    }
}

pub fn summary(name: &str) -> &'static str {
    match name {
        "fig2a" => "two cells, equal couplings and decays: cavity fields versus time",
        "fig2d" => "two cells with g1 recalibrated so |G1| = |G3|",
        "fig3" => "spectrum and gap state of the calibrated two-cell chain",
        "fig4" => "kappa1 = 3.5: stronger edge localization",
        "fig5" => "kappa1 = 10: nearly degenerate edge modes",
        "fig6" => "three cells with graded decays",
        "fig7" => "kappa2 = 0.412: critical point, |G1| = |G2| = |G3|",
        "fig8" => "kappa2 = 5: trivial phase",
        "fig10a" => "three-site chain under cosine drives: periodic steady state",
        "fig10b" => "instantaneous spectra over one drive period",
        "fig10c" => "zero-mode distribution over half a drive period",
        "transfer" => "single-excitation transfer through the zero mode",
        _ => "",
    }
}

/// Which coupling schedule a driven pipeline uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Gauge-fixed couplings of the computed periodic steady state.
    SteadyState,
    /// `(-A(1 - cos νt), A(1 + cos νt))` with `A = g·base`.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRequest {
    pub index: usize,
    pub target: CouplingEquality,
    #[serde(default)]
    pub settings: CalibrationSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferSettings {
    /// Defaults to the drives' modulation frequency.
    pub nu: Option<f64>,
    pub dt: f64,
    pub source: ScheduleKind,
    /// Row thinning of the transfer CSV.
    pub csv_every: usize,
}

impl Default for TransferSettings {
    fn default() -> Self {
        Self {
            nu: None,
            dt: 0.05,
            source: ScheduleKind::SteadyState,
            csv_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSettings {
    /// Trajectory end time; defaults to `50 / min κ`.
    pub t_end: Option<f64>,
    /// Trajectory step; defaults to the solver's rule.
    pub dt: Option<f64>,
    pub sample_every: usize,
    pub fixed_point: FixedPointSettings,
    pub calibration: Option<CalibrationRequest>,
    pub periodic: PeriodicSettings,
    pub spectrum_samples: usize,
    pub zero_mode_samples: usize,
    pub zero_mode_schedule: ScheduleKind,
    pub transfer: TransferSettings,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        Self {
            t_end: None,
            dt: None,
            sample_every: 200,
            fixed_point: FixedPointSettings::default(),
            calibration: None,
            periodic: PeriodicSettings::default(),
            spectrum_samples: 129,
            zero_mode_samples: 129,
            zero_mode_schedule: ScheduleKind::SteadyState,
            transfer: TransferSettings::default(),
        }
    }
}

fn cells(g: &[f64], kappa: &[f64]) -> LatticeSpec {
    let n = g.len();
    LatticeSpec {
        topology: Topology::CellChain(n),
        delta_a: vec![1.0; n],
        omega_b: vec![1.0; n],
        g: g.to_vec(),
        kappa: kappa.to_vec(),
        gamma: vec![1e-5; n],
        drive: vec![DriveProtocol::constant(1e5); n],
    }
}

fn three_sites() -> LatticeSpec {
    LatticeSpec {
        topology: Topology::OddChain(2),
        delta_a: vec![1.0; 2],
        omega_b: vec![1.0],
        g: vec![1e-6],
        kappa: vec![0.1; 2],
        gamma: vec![1e-5],
        drive: vec![DriveProtocol::cosine(1e5, -1, 0.006), DriveProtocol::cosine(1e5, 1, 0.006)],
    }
}

/// Built-in scenario with its default parameters.
pub fn scenario(name: &str) -> Result<Scenario> {
    let mut settings = ScenarioSettings::default();
    let spec = match name {
        "fig2a" => cells(&[1e-6, 1e-6], &[0.1, 0.1]),
        "fig2d" | "fig3" => {
            settings.calibration = Some(CalibrationRequest {
                index: 0,
                target: CouplingEquality::FIRST_THIRD,
                settings: CalibrationSettings::default(),
            });
            cells(&[1.023e-6, 1.0e-6], &[0.1, 0.1])
        }
        "fig4" => cells(&[2.015e-6, 1.0e-6], &[3.5, 0.1]),
        "fig5" => {
            // At damping 0.5 the map oscillates around this fixed point.
            settings.fixed_point.damping = 0.2;
            cells(&[5.12e-6, 1.0e-6], &[10.0, 0.1])
        }
        "fig6" => cells(&[1.028e-6, 1.0e-6, 0.975e-6], &[0.5, 0.2, 0.1]),
        "fig7" => cells(&[1e-6, 1e-6], &[0.1, 0.412]),
        "fig8" => cells(&[1.0e-6, 2.7375e-6], &[0.1, 5.0]),
        "fig10a" | "fig10b" => three_sites(),
        "fig10c" => {
            settings.zero_mode_schedule = ScheduleKind::Analytic;
            three_sites()
        }
        "transfer" => three_sites(),
        _ => {
            return Err(CliError::Config(format!(
                "unknown scenario `{name}` (known: {})",
                SCENARIOS.join(", ")
            )))
        }
    };
    Ok(Scenario {
        name: name.to_string(),
        spec,
        settings,
    })
}
