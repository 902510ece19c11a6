//! Driven-dissipative optomechanical lattices mapped onto Su–Schrieffer–Heeger chains.
//!
//! The pipeline runs from the nonlinear mean-field equations of the cavity and
//! resonator amplitudes ([`meanfield`]), through the effective nearest-neighbour
//! chain built from the steady cavity fields ([`model`]), to its spectrum and
//! edge-state localization ([`spectral`]). Periodically modulated drives and
//! adiabatic transfer through the zero mode of an odd chain live in
//! [`dynamics`].
//!
//! Frequencies and rates are in units of the mechanical frequency `ω_b = 1`.

pub mod csvfmt;
pub mod dynamics;
pub mod error;
pub mod matrix;
pub mod meanfield;
pub mod model;
pub mod spectral;

pub use error::{Error, Result};
pub use matrix::CMatrix;
pub use num_complex::Complex64;

pub use dynamics::{
    instantaneous_spectrum_series, periodic_steady_state, schrodinger_propagate, transfer_fidelity,
    zero_mode_trajectory, AnalyticSchedule, CouplingSchedule, PeriodicSettings, PeriodicSteadyState,
    TransferResult, TransferSource,
};
pub use meanfield::{
    calibrate_g, find_steady_state_fixed_point, find_steady_state_ode, integrate, rhs, Calibration,
    CalibrationSettings, CouplingEquality, FixedPointSettings, OdeSteadySettings, SteadyMethod,
    SteadyStateReport, Trajectory,
};
pub use model::{
    build_hamiltonian, classify_phase, coupling_ratio, effective_chain, DriveProtocol, EffectiveChain,
    LatticeSpec, MeanFieldState, Phase, Site, Topology,
};
pub use spectral::{edge_weight, eigh, gap_states, gauge_fix, ipr, SpectrumResult};
