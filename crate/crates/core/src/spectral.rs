//! Spectra of the effective chain and localization diagnostics.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csvfmt;
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::model::EffectiveChain;

/// Hermiticity tolerance accepted by [`eigh`], relative to `max(1, max|H_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` belongs to `eigenvalues[k]`; unit norm, largest
    /// component real and positive.
    pub eigenvectors: Vec<Vec<Complex64>>,
    pub gap_state_indices: Vec<usize>,
}

impl SpectrumResult {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `|v_i|²` of eigenvector `k`.
    pub fn distribution(&self, k: usize) -> Vec<f64> {
        self.eigenvectors[k].iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn write_spectrum_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,eigenvalue")?;
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{},{}", k + 1, csvfmt::num(e))?;
        }
        Ok(())
    }

    pub fn write_distribution_csv<W: Write>(&self, k: usize, mut w: W) -> io::Result<()> {
        writeln!(w, "site,weight")?;
        for (i, p) in self.distribution(k).into_iter().enumerate() {
            writeln!(w, "{},{}", i + 1, csvfmt::num(p))?;
        }
        Ok(())
    }
}

/// Full eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
pub fn eigh(h: &CMatrix) -> Result<SpectrumResult> {
    let n = h.dim();
    let scale = h.max_abs().max(1.0);
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            a[(j, i)] = a[(i, j)].conj();
        }
    }
    let mut v = CMatrix::identity(n);

    let frob: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)].norm_sqr())
        .sum::<f64>()
        .sqrt();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| a[(k, k)].re).collect();
    let eigenvectors: Vec<Vec<Complex64>> = order
        .iter()
        .map(|&k| fix_phase((0..n).map(|i| v[(i, k)]).collect()))
        .collect();
    let gap_state_indices = nearest_zero(&eigenvalues, if n % 2 == 0 { 2 } else { 1 });
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        gap_state_indices,
    })
}

/// Annihilates `a[p][q]` with the unitary `R = diag-phase · Givens`, updating
/// `a ← R† a R` and `v ← v R`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let n = a.dim();
    let e = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.is_infinite() {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let ec = e.conj();

    // Columns p and q: a'_kp = c a_kp - s ē a_kq, a'_kq = s a_kp + c ē a_kq.
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let new_kp = akp * c - akq * ec * s;
        let new_kq = akp * s + akq * ec * c;
        a[(k, p)] = new_kp;
        a[(p, k)] = new_kp.conj();
        a[(k, q)] = new_kq;
        a[(q, k)] = new_kq.conj();
    }
    a[(p, p)] = Complex64::new(app - t * r, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * r, 0.0);
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * ec * s;
        v[(k, q)] = vkp * s + vkq * ec * c;
    }
}

/// Normalizes and rotates the global phase so the largest component is real positive.
fn fix_phase(mut vec: Vec<Complex64>) -> Vec<Complex64> {
    let norm = vec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let max = vec.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // First component within rounding of the maximum, so near-ties resolve by position.
    let pivot = vec
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .unwrap_or(0);
    let phase = if vec[pivot].norm() > 0.0 {
        vec[pivot].conj() / vec[pivot].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    for z in &mut vec {
        *z = *z * phase / norm;
    }
    vec[pivot] = Complex64::new(vec[pivot].re, 0.0);
    vec
}

fn nearest_zero(eigenvalues: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eigenvalues[i].abs().total_cmp(&eigenvalues[j].abs()).then(i.cmp(&j)));
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

/// Eigenvalues nearest zero: two for an even chain, the zero mode for an odd one.
pub fn gap_states(result: &SpectrumResult, chain: &EffectiveChain) -> Vec<usize> {
    let count = if chain.len_sites() % 2 == 0 { 2 } else { 1 };
    nearest_zero(&result.eigenvalues, count)
}

fn check_unit(v: &[Complex64]) -> Result<f64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    Ok(norm)
}

/// Probability on the two end sites, `|v_1|² + |v_M|²`.
pub fn edge_weight(v: &[Complex64]) -> Result<f64> {
    check_unit(v)?;
    match v {
        [] => Ok(0.0),
        [only] => Ok(only.norm_sqr()),
        [first, .., last] => Ok(first.norm_sqr() + last.norm_sqr()),
    }
}

/// Inverse participation ratio `Σ |v_i|⁴`.
pub fn ipr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr().powi(2)).sum()
}

/// Replaces every coupling by its magnitude with the alternating sign
/// pattern `-, +, -, ...`. On an open chain this is a diagonal unitary
/// transformation, so the spectrum and all site weights are unchanged.
pub fn gauge_fix(chain: &EffectiveChain) -> EffectiveChain {
    let couplings = chain
        .couplings
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            Complex64::new(sign * z.norm(), 0.0)
        })
        .collect();
    EffectiveChain {
        couplings,
        sites: chain.sites.clone(),
        gauge_fixed: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_hamiltonian;

    fn spectrum(couplings: &[f64]) -> SpectrumResult {
        eigh(&build_hamiltonian(&EffectiveChain::from_real(couplings))).unwrap()
    }

    #[test]
    fn three_site_chain() {
        let s = spectrum(&[-0.1, 0.1]);
        let r = 0.1 * 2f64.sqrt();
        for (got, want) in s.eigenvalues.iter().zip([-r, 0.0, r]) {
            assert!((got - want).abs() < 1e-15, "{got}");
        }
        assert_eq!(s.gap_state_indices, vec![1]);
    }

    #[test]
    fn four_site_chain() {
        // E² = (2G₁² + G₂² ± G₂ √(G₂² + 4G₁²)) / 2 with G₁ = 0.1, G₂ = 0.2.
        let s = spectrum(&[-0.1, 0.2, -0.1]);
        let want = [-0.241_421_356_237_309_5, -0.041_421_356_237_309_5, 0.041_421_356_237_309_5, 0.241_421_356_237_309_5];
        for (got, want) in s.eigenvalues.iter().zip(want) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        assert_eq!(s.gap_state_indices, vec![1, 2]);
    }

    #[test]
    fn complex_two_site_coupling() {
        for phi in [0.0, 0.4, 2.5, -1.9] {
            let chain = EffectiveChain::from_couplings(vec![Complex64::from_polar(0.1, phi)]);
            let s = eigh(&build_hamiltonian(&chain)).unwrap();
            assert!((s.eigenvalues[0] + 0.1).abs() < 1e-15);
            assert!((s.eigenvalues[1] - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = CMatrix::zeros(2);
        h[(0, 1)] = Complex64::new(0.1, 0.0);
        h[(1, 0)] = Complex64::new(0.2, 0.0);
        assert!(matches!(eigh(&h), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn phase_convention_largest_component_positive() {
        let s = spectrum(&[0.3, -0.1, 0.2, 0.05]);
        for v in &s.eigenvectors {
            let (k, _) = v.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
            assert!(v[k].re > 0.0 && v[k].im == 0.0);
        }
    }

    #[test]
    fn edge_weight_examples() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(edge_weight(&[one, zero, zero, zero]).unwrap(), 1.0);
        let u = vec![Complex64::new(0.5, 0.0); 4];
        assert!((edge_weight(&u).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(edge_weight(&[one, one]), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn ipr_examples() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(ipr(&[zero, one, zero]), 1.0);
        let m = 6;
        let u = vec![Complex64::new(1.0 / (m as f64).sqrt(), 0.0); m];
        assert!((ipr(&u) - 1.0 / m as f64).abs() < 1e-15);
        let g: f64 = 0.1;
        let n = (2.0 * g * g).sqrt();
        let zm = [Complex64::new(g / n, 0.0), zero, Complex64::new(-g / n, 0.0)];
        assert!((ipr(&zm) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gauge_fix_examples() {
        let fixed = gauge_fix(&EffectiveChain::from_real(&[-0.1, 0.1]));
        assert_eq!(fixed.couplings, vec![Complex64::new(-0.1, 0.0), Complex64::new(0.1, 0.0)]);
        assert!(fixed.gauge_fixed);
        let chain = EffectiveChain::from_couplings(vec![Complex64::from_polar(0.1, 1.1), Complex64::new(-0.2, 0.0)]);
        let fixed = gauge_fix(&chain);
        assert!((fixed.couplings[0] - Complex64::new(-0.1, 0.0)).norm() < 1e-16);
        assert_eq!(fixed.couplings[1], Complex64::new(0.2, 0.0));
    }

    #[test]
    fn spectrum_csv() {
        let s = spectrum(&[-0.1, 0.1]);
        let mut buf = Vec::new();
        s.write_spectrum_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,eigenvalue\n1,"));
        assert_eq!(text.lines().count(), 4);
    }
}
