//! Lattice description, effective tight-binding chain and phase classification.
//!
//! Sites are ordered along the chain as `a1, b1, a2, b2, ...` where `a_j` is
//! the j-th optical cavity and `b_j` the j-th mechanical resonator. Resonator
//! `b_j` couples to its left cavity `a_j` with `-g_j` and to its right cavity
//! `a_{j+1}` (when present) with `+g_j`. All frequencies are in units of the
//! resonator frequency.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CMatrix;

/// Chain layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// `N` unit cells `(a_j, b_j)`: `2N` sites, ends on a resonator.
    CellChain(usize),
    /// `N` cavities and `N - 1` resonators: `2N - 1` sites, ends on a cavity.
    OddChain(usize),
}

impl Topology {
    pub fn cavities(self) -> usize {
        match self {
            Topology::CellChain(n) | Topology::OddChain(n) => n,
        }
    }

    pub fn resonators(self) -> usize {
        match self {
            Topology::CellChain(n) => n,
            Topology::OddChain(n) => n.saturating_sub(1),
        }
    }

    pub fn sites(self) -> usize {
        self.cavities() + self.resonators()
    }
}

/// Laser amplitude law for one cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveProtocol {
    /// `Ω(t) = amplitude · e^{iφ}`.
    Constant {
        amplitude: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        phase: f64,
    },
    /// `Ω(t) = base · (1 + sign · cos(ν t)) · e^{iφ}`, with `sign = ±1`.
    Cosine {
        base: f64,
        sign: i8,
        nu: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        phase: f64,
    },
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl DriveProtocol {
    pub fn constant(amplitude: f64) -> Self {
        DriveProtocol::Constant {
            amplitude,
            phase: 0.0,
        }
    }

    pub fn cosine(base: f64, sign: i8, nu: f64) -> Self {
        DriveProtocol::Cosine {
            base,
            sign,
            nu,
            phase: 0.0,
        }
    }

    /// Complex drive amplitude at time `t`.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        match *self {
            DriveProtocol::Constant { amplitude, phase } => Complex64::from_polar(amplitude, phase),
            DriveProtocol::Cosine {
                base,
                sign,
                nu,
                phase,
            } => {
                let envelope = base * (1.0 + f64::from(sign) * (nu * t).cos());
                Complex64::from_polar(1.0, phase) * envelope
            }
        }
    }

    /// Modulation frequency, `None` for a constant drive.
    pub fn nu(&self) -> Option<f64> {
        match *self {
            DriveProtocol::Constant { .. } => None,
            DriveProtocol::Cosine { nu, .. } => Some(nu),
        }
    }

    pub fn with_phase(self, phi: f64) -> Self {
        match self {
            DriveProtocol::Constant { amplitude, .. } => DriveProtocol::Constant {
                amplitude,
                phase: phi,
            },
            DriveProtocol::Cosine { base, sign, nu, .. } => DriveProtocol::Cosine {
                base,
                sign,
                nu,
                phase: phi,
            },
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        match *self {
            DriveProtocol::Constant { amplitude, phase } => {
                if !amplitude.is_finite() || !phase.is_finite() {
                    return Err(Error::invalid(field, "amplitude and phase must be finite"));
                }
            }
            DriveProtocol::Cosine {
                base,
                sign,
                nu,
                phase,
            } => {
                if !(base > 0.0 && base.is_finite()) {
                    return Err(Error::invalid(field, format!("base must be > 0, got {base}")));
                }
                if sign != 1 && sign != -1 {
                    return Err(Error::invalid(field, format!("sign must be ±1, got {sign}")));
                }
                if !(nu > 0.0 && nu.is_finite()) {
                    return Err(Error::invalid(field, format!("nu must be > 0, got {nu}")));
                }
                if !phase.is_finite() {
                    return Err(Error::invalid(field, "phase must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Static physical parameters of the lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub topology: Topology,
    /// Bare cavity detunings, one per cavity.
    pub delta_a: Vec<f64>,
    /// Resonator frequencies, one per resonator.
    pub omega_b: Vec<f64>,
    /// Single-photon optomechanical couplings, one per resonator.
    pub g: Vec<f64>,
    /// Cavity decay rates, one per cavity.
    pub kappa: Vec<f64>,
    /// Resonator damping rates, one per resonator.
    pub gamma: Vec<f64>,
    /// Drive law, one per cavity.
    pub drive: Vec<DriveProtocol>,
}

impl LatticeSpec {
    pub fn cavities(&self) -> usize {
        self.topology.cavities()
    }

    pub fn resonators(&self) -> usize {
        self.topology.resonators()
    }

    pub fn sites(&self) -> Vec<Site> {
        site_labels(self.topology)
    }

    /// Checks every invariant and returns the spec unchanged.
    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let nc = self.cavities();
        let nr = self.resonators();
        if nc == 0 {
            return Err(Error::invalid("topology", "needs at least one cavity"));
        }
        if let Topology::OddChain(1) = self.topology {
            return Err(Error::invalid("topology", "odd chain needs at least two cavities"));
        }
        for (field, len, expected) in [
            ("delta_a", self.delta_a.len(), nc),
            ("kappa", self.kappa.len(), nc),
            ("drive", self.drive.len(), nc),
            ("omega_b", self.omega_b.len(), nr),
            ("g", self.g.len(), nr),
            ("gamma", self.gamma.len(), nr),
        ] {
            if len != expected {
                return Err(Error::dims(field, expected, len));
            }
        }
        for (i, &x) in self.delta_a.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::invalid(format!("delta_a[{i}]"), "must be finite"));
            }
        }
        positive("g", &self.g)?;
        positive("omega_b", &self.omega_b)?;
        non_negative("kappa", &self.kappa)?;
        non_negative("gamma", &self.gamma)?;
        for (i, d) in self.drive.iter().enumerate() {
            d.validate(&format!("drive[{i}]"))?;
        }
        Ok(())
    }

    /// Common modulation frequency when every drive is a cosine with the same ν.
    pub fn common_nu(&self) -> Option<f64> {
        let first = self.drive.first()?.nu()?;
        self.drive
            .iter()
            .all(|d| d.nu() == Some(first))
            .then_some(first)
    }

    pub fn all_constant_drives(&self) -> bool {
        self.drive.iter().all(|d| d.nu().is_none())
    }
}

fn positive(field: &str, xs: &[f64]) -> Result<()> {
    for (i, &x) in xs.iter().enumerate() {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::invalid(format!("{field}[{i}]"), format!("must be > 0, got {x}")));
        }
    }
    Ok(())
}

fn non_negative(field: &str, xs: &[f64]) -> Result<()> {
    for (i, &x) in xs.iter().enumerate() {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::invalid(format!("{field}[{i}]"), format!("must be >= 0, got {x}")));
        }
    }
    Ok(())
}

/// Identifies a chain site. Indices are zero-based; `Display` is one-based (`a1`, `b1`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    Cavity(usize),
    Resonator(usize),
}

impl Site {
    pub fn is_resonator(self) -> bool {
        matches!(self, Site::Resonator(_))
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Cavity(j) => write!(f, "a{}", j + 1),
            Site::Resonator(j) => write!(f, "b{}", j + 1),
        }
    }
}

pub fn site_labels(topology: Topology) -> Vec<Site> {
    let (nc, nr) = (topology.cavities(), topology.resonators());
    let mut sites = Vec::with_capacity(nc + nr);
    for j in 0..nc {
        sites.push(Site::Cavity(j));
        if j < nr {
            sites.push(Site::Resonator(j));
        }
    }
    sites
}

/// Cavity amplitudes `α_j` and resonator amplitudes `β_j` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub t: f64,
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
}

impl MeanFieldState {
    pub fn vacuum(spec: &LatticeSpec) -> Self {
        Self {
            t: 0.0,
            alpha: vec![Complex64::new(0.0, 0.0); spec.cavities()],
            beta: vec![Complex64::new(0.0, 0.0); spec.resonators()],
        }
    }

    pub fn check_dims(&self, spec: &LatticeSpec) -> Result<()> {
        if self.alpha.len() != spec.cavities() {
            return Err(Error::dims("alpha", spec.cavities(), self.alpha.len()));
        }
        if self.beta.len() != spec.resonators() {
            return Err(Error::dims("beta", spec.resonators(), self.beta.len()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self
                .alpha
                .iter()
                .chain(&self.beta)
                .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// All amplitudes, cavities first.
    pub fn amplitudes(&self) -> impl Iterator<Item = &Complex64> {
        self.alpha.iter().chain(&self.beta)
    }

    pub fn max_abs(&self) -> f64 {
        self.amplitudes().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Nearest-neighbour chain of complex bond couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveChain {
    /// Bond `k` joins sites `k` and `k + 1`.
    pub couplings: Vec<Complex64>,
    pub sites: Vec<Site>,
    /// Set when all couplings are real with the alternating sign pattern `-, +, -, ...`.
    pub gauge_fixed: bool,
}

impl EffectiveChain {
    /// A chain with generic site labels (`a1, b1, a2, ...`) for the given couplings.
    pub fn from_couplings(couplings: Vec<Complex64>) -> Self {
        let m = couplings.len() + 1;
        let topology = if m % 2 == 0 {
            Topology::CellChain(m / 2)
        } else {
            Topology::OddChain(m.div_ceil(2))
        };
        Self {
            couplings,
            sites: site_labels(topology),
            gauge_fixed: false,
        }
    }

    pub fn from_real(couplings: &[f64]) -> Self {
        Self::from_couplings(couplings.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.couplings.iter().map(|z| z.norm()).collect()
    }
}

/// Bond couplings `J = -g_j α_j` (cavity to its own resonator) and
/// `J = +g_j α_{j+1}` (resonator to the next cavity), in site order.
pub fn effective_chain(spec: &LatticeSpec, state: &MeanFieldState) -> Result<EffectiveChain> {
    state.check_dims(spec)?;
    let nr = spec.resonators();
    let nc = spec.cavities();
    let mut couplings = Vec::with_capacity(nc + nr - 1);
    for j in 0..nr {
        couplings.push(-spec.g[j] * state.alpha[j]);
        if j + 1 < nc {
            couplings.push(spec.g[j] * state.alpha[j + 1]);
        }
    }
    Ok(EffectiveChain {
        couplings,
        sites: spec.sites(),
        gauge_fixed: false,
    })
}

/// Tridiagonal Hermitian hopping matrix with zero diagonal.
pub fn build_hamiltonian(chain: &EffectiveChain) -> CMatrix {
    let m = chain.couplings.len() + 1;
    let mut h = CMatrix::zeros(m);
    for (k, &j) in chain.couplings.iter().enumerate() {
        h[(k, k + 1)] = j;
        h[(k + 1, k)] = j.conj();
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Nontrivial,
    Critical,
    Trivial,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Nontrivial => "nontrivial",
            Phase::Critical => "critical",
            Phase::Trivial => "trivial",
        })
    }
}

/// Default width of the critical band around a unit coupling ratio.
pub const DEFAULT_PHASE_TOL: f64 = 0.02;

/// Ratio `mean|J_intra| / mean|J_inter|` of a cell chain.
pub fn coupling_ratio(chain: &EffectiveChain) -> Result<f64> {
    let m = chain.len_sites();
    if m % 2 != 0 {
        return Err(Error::Unsupported(
            "phase classification needs an even (cell) chain".into(),
        ));
    }
    if m < 4 {
        return Err(Error::Unsupported(
            "phase classification needs at least two unit cells".into(),
        ));
    }
    let mags = chain.magnitudes();
    let mean = |it: Vec<f64>| it.iter().sum::<f64>() / it.len() as f64;
    let intra = mean(mags.iter().step_by(2).copied().collect());
    let inter = mean(mags.iter().skip(1).step_by(2).copied().collect());
    if inter == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(intra / inter)
}

pub fn classify_phase(chain: &EffectiveChain, rel_tol: f64) -> Result<Phase> {
    let r = coupling_ratio(chain)?;
    Ok(if r < 1.0 - rel_tol {
        Phase::Nontrivial
    } else if r > 1.0 + rel_tol {
        Phase::Trivial
    } else {
        Phase::Critical
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    pub(crate) fn fig2_spec() -> LatticeSpec {
        LatticeSpec {
            topology: Topology::CellChain(2),
            delta_a: vec![1.0; 2],
            omega_b: vec![1.0; 2],
            g: vec![1e-6; 2],
            kappa: vec![0.1; 2],
            gamma: vec![1e-5; 2],
            drive: vec![DriveProtocol::constant(1e5); 2],
        }
    }

    #[test]
    fn fig2_parameters_are_valid() {
        assert!(fig2_spec().validated().is_ok());
    }

    #[test]
    fn wrong_kappa_length_is_a_dimension_error() {
        let mut spec = fig2_spec();
        spec.kappa = vec![0.1; 3];
        match spec.validate() {
            Err(Error::DimensionMismatch { field, expected, found }) => {
                assert_eq!((field.as_str(), expected, found), ("kappa", 2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_g_is_invalid() {
        let mut spec = fig2_spec();
        spec.g[0] = 0.0;
        match spec.validate() {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "g[0]"),
            other => panic!("unexpected {other:?}"),
        }
        let mut spec = fig2_spec();
        spec.gamma[1] = -1e-5;
        assert!(matches!(spec.validate(), Err(Error::InvalidParameter { field, .. }) if field == "gamma[1]"));
    }

    #[test]
    fn cosine_minus_vanishes_at_origin() {
        let d = DriveProtocol::cosine(1e5, -1, 0.006);
        assert_eq!(d.amplitude(0.0), c(0.0));
        assert_eq!(DriveProtocol::cosine(1e5, 1, 0.006).amplitude(0.0), c(2e5));
        let quarter = std::f64::consts::FRAC_PI_2 / 0.006;
        assert!((d.amplitude(quarter) - c(1e5)).norm() < 1e-6);
    }

    #[test]
    fn site_order_interleaves() {
        let labels: Vec<String> = site_labels(Topology::OddChain(2)).iter().map(|s| s.to_string()).collect();
        assert_eq!(labels, ["a1", "b1", "a2"]);
        let labels: Vec<String> = site_labels(Topology::CellChain(2)).iter().map(|s| s.to_string()).collect();
        assert_eq!(labels, ["a1", "b1", "a2", "b2"]);
    }

    #[test]
    fn cell_chain_couplings_follow_sign_convention() {
        let spec = fig2_spec();
        let state = MeanFieldState {
            t: 0.0,
            alpha: vec![c(1e5), c(1e5)],
            beta: vec![c(0.0), c(0.0)],
        };
        let chain = effective_chain(&spec, &state).unwrap();
        let re: Vec<f64> = chain.couplings.iter().map(|z| z.re).collect();
        assert_eq!(chain.couplings.len(), 3);
        for (got, want) in re.iter().zip([-0.1, 0.1, -0.1]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn odd_chain_couplings_track_drive_envelopes() {
        let spec = LatticeSpec {
            topology: Topology::OddChain(2),
            delta_a: vec![1.0; 2],
            omega_b: vec![1.0],
            g: vec![1e-6],
            kappa: vec![0.1; 2],
            gamma: vec![1e-5],
            drive: vec![DriveProtocol::cosine(1e5, -1, 0.006), DriveProtocol::cosine(1e5, 1, 0.006)],
        };
        spec.validate().unwrap();
        for theta in [0.0, 0.7, 2.0] {
            let (cm, cp) = (1.0 - f64::cos(theta), 1.0 + f64::cos(theta));
            let state = MeanFieldState {
                t: 0.0,
                alpha: vec![c(cm * 1e5), c(cp * 1e5)],
                beta: vec![c(0.0)],
            };
            let chain = effective_chain(&spec, &state).unwrap();
            assert_eq!(chain.couplings.len(), 2);
            assert!((chain.couplings[0].re + 0.1 * cm).abs() < 1e-14);
            assert!((chain.couplings[1].re - 0.1 * cp).abs() < 1e-14);
        }
    }

    #[test]
    fn effective_chain_rejects_wrong_state() {
        let spec = fig2_spec();
        let state = MeanFieldState { t: 0.0, alpha: vec![c(1.0)], beta: vec![c(0.0); 2] };
        assert!(matches!(effective_chain(&spec, &state), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn hamiltonian_is_tridiagonal_and_hermitian() {
        let h = build_hamiltonian(&EffectiveChain::from_real(&[-0.1, 0.2, -0.1]));
        assert_eq!(h.dim(), 4);
        assert_eq!(h[(0, 1)], c(-0.1));
        assert_eq!(h[(1, 2)], c(0.2));
        assert_eq!(h[(3, 2)], c(-0.1));
        assert_eq!(h[(0, 2)], c(0.0));
        assert_eq!(h[(1, 1)], c(0.0));
        assert_eq!(h, h.conj_transpose());

        let phi = 0.83;
        let z = Complex64::from_polar(0.1, phi);
        let h = build_hamiltonian(&EffectiveChain::from_couplings(vec![z]));
        assert_eq!(h[(0, 1)], z);
        assert_eq!(h[(1, 0)], z.conj());
        assert!((h[(1, 0)] - Complex64::from_polar(0.1, -phi)).norm() < 1e-17);
        assert_eq!(h.hermiticity_defect(), 0.0);
    }

    #[test]
    fn eq9_chain_at_quarter_period() {
        let theta = std::f64::consts::FRAC_PI_2;
        let chain = EffectiveChain::from_real(&[-0.1 * (1.0 - theta.cos()), 0.1 * (1.0 + theta.cos())]);
        let h = build_hamiltonian(&chain);
        assert!((h[(0, 1)].re + 0.1).abs() < 1e-15);
        assert!((h[(1, 2)].re - 0.1).abs() < 1e-15);
    }

    #[test]
    fn phase_thresholds() {
        let chain = EffectiveChain::from_real(&[-0.05, 0.15, -0.05]);
        assert_eq!(classify_phase(&chain, 0.02).unwrap(), Phase::Nontrivial);
        let chain = EffectiveChain::from_real(&[-0.1, 0.1, -0.1]);
        assert_eq!(classify_phase(&chain, 0.02).unwrap(), Phase::Critical);
        let chain = EffectiveChain::from_real(&[-0.2, 0.1, -0.2]);
        assert_eq!(classify_phase(&chain, 0.02).unwrap(), Phase::Trivial);
        let odd = EffectiveChain::from_real(&[-0.1, 0.1]);
        assert!(matches!(classify_phase(&odd, 0.02), Err(Error::Unsupported(_))));
    }

    #[test]
    fn spec_json_rejects_unknown_keys() {
        let mut v = serde_json::to_value(fig2_spec()).unwrap();
        v.as_object_mut().unwrap().insert("kapa".into(), serde_json::json!([0.1]));
        let err = serde_json::from_value::<LatticeSpec>(v).unwrap_err().to_string();
        assert!(err.contains("kapa"), "{err}");

        let bad_drive = r#"{"kind":"constant","amplitude":1.0,"amp":2.0}"#;
        assert!(serde_json::from_str::<DriveProtocol>(bad_drive).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = fig2_spec();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains(r#""topology":{"cell_chain":2}"#), "{text}");
        let back: LatticeSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
