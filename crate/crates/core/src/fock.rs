//! Truncated Fock-space linear algebra.
//!
//! Everything lives in the span of `|0⟩..|n_max⟩`. Operators that leave the
//! truncation (like `a†` acting on `|n_max⟩`) are truncated silently; callers
//! that need exactness for short operator words should embed into a larger
//! [`FockDim`] first.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{laguerre_sequence, ln_factorial};

pub type CMatrix = DMatrix<Complex64>;

const I0: Complex64 = Complex64::new(0.0, 0.0);
const I1: Complex64 = Complex64::new(1.0, 0.0);

/// Truncation of the single-mode Fock space to `|0⟩..|n_max⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockDim {
    n_max: usize,
}

impl FockDim {
    pub const fn new(n_max: usize) -> Self {
        FockDim { n_max }
    }

    pub const fn n_max(self) -> usize {
        self.n_max
    }

    /// Number of basis states, `n_max + 1`.
    pub const fn size(self) -> usize {
        self.n_max + 1
    }
}

/// Numerical tolerances for density-matrix validation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub psd: f64,
    pub tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermiticity: 1e-10,
            trace: 1e-10,
            psd: 1e-8,
            tail: 1e-8,
        }
    }
}

/// A general operator on the truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    dim: FockDim,
    entries: CMatrix,
}

impl FockOperator {
    pub fn new(dim: FockDim, entries: CMatrix) -> Result<Self> {
        check_shape(dim, &entries)?;
        Ok(FockOperator { dim, entries })
    }

    pub fn identity(dim: FockDim) -> Self {
        FockOperator {
            dim,
            entries: CMatrix::identity(dim.size(), dim.size()),
        }
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.entries[(n, m)]
    }

    pub fn adjoint(&self) -> Self {
        FockOperator {
            dim: self.dim,
            entries: self.entries.adjoint(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn mul(&self, other: &FockOperator) -> Result<FockOperator> {
        same_dim(self.dim, other.dim)?;
        Ok(FockOperator {
            dim: self.dim,
            entries: &self.entries * &other.entries,
        })
    }
}

/// Annihilation operator `a` on the truncated space.
pub fn annihilation(dim: FockDim) -> FockOperator {
    let size = dim.size();
    let mut m = CMatrix::zeros(size, size);
    for n in 1..size {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    FockOperator { dim, entries: m }
}

/// Creation operator `a†` on the truncated space.
pub fn creation(dim: FockDim) -> FockOperator {
    annihilation(dim).adjoint()
}

/// Number operator `a†a`.
pub fn number_operator(dim: FockDim) -> FockOperator {
    let size = dim.size();
    let mut m = CMatrix::zeros(size, size);
    for n in 0..size {
        m[(n, n)] = Complex64::new(n as f64, 0.0);
    }
    FockOperator { dim, entries: m }
}

/// Diagonal operator `κ^{a†a}` with entries `κ^n`; `0^0 = 1`.
pub fn number_power_diag(kappa: Complex64, dim: FockDim) -> FockOperator {
    let size = dim.size();
    let mut m = CMatrix::zeros(size, size);
    let mut p = I1;
    for n in 0..size {
        m[(n, n)] = p;
        p *= kappa;
    }
    FockOperator { dim, entries: m }
}

/// `exp(c·a†)` as the exact finite sum (lower triangular).
pub fn exp_creation(c: Complex64, dim: FockDim) -> FockOperator {
    let size = dim.size();
    let mut m = CMatrix::zeros(size, size);
    for k in 0..size {
        // ⟨n|e^{c a†}|k⟩ = c^{n-k}/(n-k)! · sqrt(n!/k!)
        let mut amp = I1;
        m[(k, k)] = amp;
        for n in k + 1..size {
            let d = (n - k) as f64;
            amp *= c * (n as f64).sqrt() / d;
            m[(n, k)] = amp;
        }
    }
    FockOperator { dim, entries: m }
}

/// `exp(c·a)` as the exact finite sum (upper triangular).
pub fn exp_annihilation(c: Complex64, dim: FockDim) -> FockOperator {
    let t = exp_creation(c.conj(), dim);
    t.adjoint()
}

/// Matrix elements `⟨n|D(λ)|m⟩` of the displacement operator from the
/// associated-Laguerre closed form, evaluated in log space.
pub fn displacement_matrix(lambda: Complex64, dim: FockDim) -> FockOperator {
    let size = dim.size();
    if lambda == I0 {
        return FockOperator::identity(dim);
    }
    let x = lambda.norm_sqr();
    let ln_r = lambda.norm().ln();
    let theta = lambda.arg();
    let mut m = CMatrix::zeros(size, size);
    for d in 0..size {
        let lag = laguerre_sequence(size - 1 - d, d, x);
        let df = d as f64;
        for (low, l) in lag.iter().enumerate() {
            let high = low + d;
            let ln_mag = 0.5 * (ln_factorial(low) - ln_factorial(high)) + df * ln_r - 0.5 * x
                + l.ln_abs();
            let mag = l.signum() * ln_mag.exp();
            // n >= m: λ^{d}; n < m: (-λ̄)^{d}
            let below = Complex64::from_polar(mag, df * theta);
            m[(high, low)] = below;
            if d > 0 {
                let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
                m[(low, high)] = Complex64::from_polar(sign * mag, -df * theta);
            }
        }
    }
    FockOperator { dim, entries: m }
}

/// `D(λ) = e^{-|λ|²/2} exp(λ a†) exp(-λ̄ a)` built from matrix exponentials of
/// the truncated (nilpotent) ladder matrices.
pub fn displacement_matrix_factorized(lambda: Complex64, dim: FockDim) -> FockOperator {
    let ad = creation(dim).into_matrix() * lambda;
    let a = annihilation(dim).into_matrix() * (-lambda.conj());
    let exp_plus = nilpotent_exp(&ad);
    let exp_minus = nilpotent_exp(&a);
    let scale = Complex64::new((-0.5 * lambda.norm_sqr()).exp(), 0.0);
    FockOperator {
        dim,
        entries: exp_plus * exp_minus * scale,
    }
}

fn nilpotent_exp(x: &CMatrix) -> CMatrix {
    let size = x.nrows();
    let mut out = CMatrix::identity(size, size);
    let mut term = CMatrix::identity(size, size);
    for k in 1..size {
        term = &term * x / Complex64::new(k as f64, 0.0);
        out += &term;
    }
    out
}

/// Hermitian, unit-trace, positive semidefinite matrix in a truncated basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim: FockDim,
    entries: CMatrix,
}

/// Result of [`validate_density`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityDiagnostics {
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
    pub tail_mass: f64,
    /// Hermiticity, trace and positivity within tolerance.
    pub passed: bool,
    /// Tail mass within the truncation tolerance.
    pub tail_ok: bool,
}

impl DensityMatrix {
    /// Validating constructor (hermiticity, trace, positivity; not tail).
    pub fn new(dim: FockDim, entries: CMatrix) -> Result<Self> {
        Self::with_tolerances(dim, entries, &Tolerances::default())
    }

    pub fn with_tolerances(dim: FockDim, entries: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_shape(dim, &entries)?;
        let rho = DensityMatrix { dim, entries };
        let diag = validate_density_with(&rho, tol);
        if !diag.passed {
            return Err(Error::InvalidDensity(format!(
                "hermiticity defect {:.3e}, trace defect {:.3e}, min eigenvalue {:.3e}",
                diag.hermiticity_defect, diag.trace_defect, diag.min_eigenvalue
            )));
        }
        Ok(rho)
    }

    /// No validation. Used for reconstructed matrices, whose defects are
    /// reported separately.
    pub fn from_matrix_unchecked(dim: FockDim, entries: CMatrix) -> Result<Self> {
        check_shape(dim, &entries)?;
        Ok(DensityMatrix { dim, entries })
    }

    /// Projector onto a (normalized) state vector.
    pub fn from_pure(dim: FockDim, psi: &[Complex64]) -> Result<Self> {
        if psi.len() != dim.size() {
            return Err(Error::DimensionMismatch {
                expected: dim.n_max(),
                found: psi.len().saturating_sub(1),
            });
        }
        let size = dim.size();
        let entries = CMatrix::from_fn(size, size, |n, m| psi[n] * psi[m].conj());
        Ok(DensityMatrix { dim, entries })
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.entries[(n, m)]
    }

    pub fn as_operator(&self) -> FockOperator {
        FockOperator {
            dim: self.dim,
            entries: self.entries.clone(),
        }
    }

    /// `Tr[ρ O]`.
    pub fn expect(&self, op: &FockOperator) -> Result<Complex64> {
        same_dim(self.dim, op.dim)?;
        let size = self.dim.size();
        let mut acc = I0;
        for n in 0..size {
            for m in 0..size {
                acc += self.entries[(n, m)] * op.entries[(m, n)];
            }
        }
        Ok(acc)
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim.size())
            .map(|n| n as f64 * self.entries[(n, n)].re)
            .sum()
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalized vector `ψ`.
    pub fn fidelity_pure(&self, psi: &[Complex64]) -> f64 {
        let size = self.dim.size().min(psi.len());
        let mut acc = I0;
        for n in 0..size {
            for m in 0..size {
                acc += psi[n].conj() * self.entries[(n, m)] * psi[m];
            }
        }
        acc.re
    }

    /// Frobenius norm of `self - other` over the common leading block.
    pub fn frobenius_distance(&self, other: &DensityMatrix) -> f64 {
        let size = self.dim.size().min(other.dim.size());
        let mut acc = 0.0;
        for n in 0..size {
            for m in 0..size {
                acc += (self.entries[(n, m)] - other.entries[(n, m)]).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Zero-padded copy in a larger truncation, or the leading block of a
    /// smaller one.
    pub fn resized(&self, dim: FockDim) -> DensityMatrix {
        let size = dim.size();
        let keep = size.min(self.dim.size());
        let mut entries = CMatrix::zeros(size, size);
        entries
            .view_mut((0, 0), (keep, keep))
            .copy_from(&self.entries.view((0, 0), (keep, keep)));
        DensityMatrix { dim, entries }
    }
}

fn check_shape(dim: FockDim, m: &CMatrix) -> Result<()> {
    if m.nrows() != dim.size() || m.ncols() != dim.size() {
        return Err(Error::DimensionMismatch {
            expected: dim.n_max(),
            found: m.nrows().max(m.ncols()).saturating_sub(1),
        });
    }
    Ok(())
}

pub(crate) fn same_dim(a: FockDim, b: FockDim) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a.n_max(),
            found: b.n_max(),
        });
    }
    Ok(())
}

pub fn validate_density(rho: &DensityMatrix) -> DensityDiagnostics {
    validate_density_with(rho, &Tolerances::default())
}

pub fn validate_density_with(rho: &DensityMatrix, tol: &Tolerances) -> DensityDiagnostics {
    let m = &rho.entries;
    let size = m.nrows();
    let mut herm: f64 = 0.0;
    for n in 0..size {
        for k in 0..size {
            herm = herm.max((m[(n, k)] - m[(k, n)].conj()).norm());
        }
    }
    let trace = m.trace();
    let trace_defect = (trace - I1).norm();
    let hermitized = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let min_eigenvalue = hermitized
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let tail_mass = m[(size - 1, size - 1)].re;
    let finite = herm.is_finite() && trace_defect.is_finite() && min_eigenvalue.is_finite();
    DensityDiagnostics {
        hermiticity_defect: herm,
        trace_defect,
        min_eigenvalue,
        tail_mass,
        passed: finite
            && herm <= tol.hermiticity
            && trace_defect <= tol.trace
            && min_eigenvalue >= -tol.psd,
        tail_ok: tail_mass <= tol.tail,
    }
}

fn check_tail(tail: f64, dim: FockDim, tol: &Tolerances) -> Result<()> {
    if tail > tol.tail || !tail.is_finite() {
        return Err(Error::Truncation {
            tail,
            tol: tol.tail,
            n_max: dim.n_max(),
        });
    }
    Ok(())
}

/// Truncated, unnormalized coherent amplitudes `e^{-|β|²/2} β^n / sqrt(n!)`.
pub fn coherent_amplitudes(beta: Complex64, dim: FockDim) -> Vec<Complex64> {
    let x = beta.norm_sqr();
    let ln_r = beta.norm().ln();
    let theta = beta.arg();
    (0..dim.size())
        .map(|n| {
            if n == 0 {
                return Complex64::new((-0.5 * x).exp(), 0.0);
            }
            if x == 0.0 {
                return I0;
            }
            let nf = n as f64;
            let ln_mag = -0.5 * x + nf * ln_r - 0.5 * ln_factorial(n);
            Complex64::from_polar(ln_mag.exp(), nf * theta)
        })
        .collect()
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for c in v.iter_mut() {
            *c /= norm;
        }
    }
    norm
}

/// Normalized truncated coherent vector; errors if truncation is inadequate.
pub fn coherent_vector(beta: Complex64, dim: FockDim, tol: &Tolerances) -> Result<Vec<Complex64>> {
    let mut v = coherent_amplitudes(beta, dim);
    normalize(&mut v);
    check_tail(v[dim.n_max()].norm_sqr(), dim, tol)?;
    Ok(v)
}

pub fn fock_state(n: usize, dim: FockDim) -> Result<DensityMatrix> {
    if n > dim.n_max() {
        return Err(Error::invalid(format!(
            "Fock index {n} outside truncation n_max = {}",
            dim.n_max()
        )));
    }
    let mut psi = vec![I0; dim.size()];
    psi[n] = I1;
    DensityMatrix::from_pure(dim, &psi)
}

pub fn coherent_state(beta: Complex64, dim: FockDim) -> Result<DensityMatrix> {
    coherent_state_with(beta, dim, &Tolerances::default())
}

pub fn coherent_state_with(beta: Complex64, dim: FockDim, tol: &Tolerances) -> Result<DensityMatrix> {
    let psi = coherent_vector(beta, dim, tol)?;
    DensityMatrix::from_pure(dim, &psi)
}

pub fn thermal_state(nbar: f64, dim: FockDim) -> Result<DensityMatrix> {
    thermal_state_with(nbar, dim, &Tolerances::default())
}

pub fn thermal_state_with(nbar: f64, dim: FockDim, tol: &Tolerances) -> Result<DensityMatrix> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::invalid(format!("thermal occupation must be >= 0, got {nbar}")));
    }
    let ratio = nbar / (nbar + 1.0);
    let mut p: Vec<f64> = Vec::with_capacity(dim.size());
    let mut w = 1.0;
    for _ in 0..dim.size() {
        p.push(w);
        w *= ratio;
    }
    let z: f64 = p.iter().sum();
    let size = dim.size();
    let mut entries = CMatrix::zeros(size, size);
    for (n, pn) in p.iter().enumerate() {
        entries[(n, n)] = Complex64::new(pn / z, 0.0);
    }
    check_tail(p[size - 1] / z, dim, tol)?;
    Ok(DensityMatrix { dim, entries })
}

/// Normalized `|β⟩ + sign·|-β⟩`.
pub fn cat_state(beta: Complex64, sign: i32, dim: FockDim) -> Result<DensityMatrix> {
    cat_state_with(beta, sign, dim, &Tolerances::default())
}

pub fn cat_state_with(beta: Complex64, sign: i32, dim: FockDim, tol: &Tolerances) -> Result<DensityMatrix> {
    if sign != 1 && sign != -1 {
        return Err(Error::invalid(format!("cat sign must be +1 or -1, got {sign}")));
    }
    let plus = coherent_amplitudes(beta, dim);
    let minus = coherent_amplitudes(-beta, dim);
    let sg = sign as f64;
    let mut psi: Vec<Complex64> = plus.iter().zip(&minus).map(|(p, m)| p + m * sg).collect();
    let norm = normalize(&mut psi);
    if norm < 1e-12 {
        return Err(Error::invalid("cat state has zero norm (beta = 0 with odd sign)"));
    }
    check_tail(psi[dim.n_max()].norm_sqr(), dim, tol)?;
    DensityMatrix::from_pure(dim, &psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fock_state_examples() {
        let d = FockDim::new(5);
        let vac = fock_state(0, d).unwrap();
        assert_eq!(vac.get(0, 0), I1);
        assert_eq!(vac.matrix().iter().filter(|z| **z != I0).count(), 1);
        assert_eq!(fock_state(1, d).unwrap().get(1, 1), I1);
        assert!(fock_state(6, d).is_err());
    }

    #[test]
    fn coherent_state_examples() {
        let vac = coherent_state(I0, FockDim::new(5)).unwrap();
        assert!((vac.get(0, 0).re - 1.0).abs() < 1e-15);
        let one = coherent_state(c(1.0, 0.0), FockDim::new(20)).unwrap();
        assert!((one.get(0, 0).re - (-1.0f64).exp()).abs() < 1e-12);
        assert!(matches!(
            coherent_state(c(4.0, 0.0), FockDim::new(5)),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn thermal_state_examples() {
        let vac = thermal_state(0.0, FockDim::new(5)).unwrap();
        assert_eq!(vac.get(0, 0).re, 1.0);
        let th = thermal_state(1.0, FockDim::new(40)).unwrap();
        assert!((th.get(0, 0).re - 0.5).abs() < 1e-12);
        assert!((th.get(1, 1).re - 0.25).abs() < 1e-12);
        assert!(thermal_state(-1.0, FockDim::new(5)).is_err());
        assert!((th.mean_photon_number() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cat_state_examples() {
        let vac = cat_state(I0, 1, FockDim::new(5)).unwrap();
        assert!((vac.get(0, 0).re - 1.0).abs() < 1e-14);
        let cat = cat_state(c(2.0, 0.0), 1, FockDim::new(30)).unwrap();
        assert!((cat.purity() - 1.0).abs() < 1e-12);
        assert!(validate_density(&cat).passed);
        // even cat has no odd components
        assert!(cat.get(1, 1).norm() < 1e-15);
        assert!(cat_state(I0, -1, FockDim::new(5)).is_err());
    }

    #[test]
    fn displacement_examples() {
        let d = FockDim::new(5);
        let id = displacement_matrix(I0, d);
        assert_eq!(id, FockOperator::identity(d));
        let d1 = displacement_matrix(c(1.0, 0.0), FockDim::new(30));
        assert!((d1.get(0, 0).re - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn displacement_first_column_is_coherent_vector() {
        let dim = FockDim::new(20);
        let beta = c(0.7, -0.4);
        let d = displacement_matrix(beta, dim);
        let amps = coherent_amplitudes(beta, dim);
        for n in 0..=20 {
            assert!((d.get(n, 0) - amps[n]).norm() < 1e-14);
        }
    }

    #[test]
    fn displacement_unitarity_on_low_block() {
        // |λ| = sqrt(n_max)/4; the truncation defect is below 1e-10 only
        // on the block n, m <= n_max/4.
        let dim = FockDim::new(40);
        let lam = Complex64::from_polar(40f64.sqrt() / 4.0, 0.7);
        let d = displacement_matrix(lam, dim);
        let prod = d.matrix() * displacement_matrix(-lam, dim).matrix();
        for n in 0..=10 {
            for m in 0..=10 {
                let expect = if n == m { 1.0 } else { 0.0 };
                assert!((prod[(n, m)] - c(expect, 0.0)).norm() < 1e-10, "{n} {m}");
            }
        }
    }

    #[test]
    fn number_power_diag_examples() {
        let d = FockDim::new(4);
        assert_eq!(number_power_diag(I1, d), FockOperator::identity(d));
        let parity = number_power_diag(c(-1.0, 0.0), d);
        for n in 0..5 {
            assert_eq!(parity.get(n, n).re, if n % 2 == 0 { 1.0 } else { -1.0 });
        }
        let vac = number_power_diag(I0, d);
        assert_eq!(vac.get(0, 0), I1);
        assert_eq!(vac.get(1, 1), I0);
    }

    #[test]
    fn validate_density_examples() {
        let vac = fock_state(0, FockDim::new(5)).unwrap();
        let diag = validate_density(&vac);
        assert_eq!(diag.hermiticity_defect, 0.0);
        assert_eq!(diag.trace_defect, 0.0);
        assert!(diag.min_eigenvalue.abs() < 1e-15);
        assert!(diag.passed && diag.tail_ok);

        let mut m = vac.matrix().clone();
        m[(0, 1)] += c(1e-3, 0.0);
        let bad = DensityMatrix::from_matrix_unchecked(FockDim::new(5), m).unwrap();
        let diag = validate_density(&bad);
        assert!((diag.hermiticity_defect - 1e-3).abs() < 1e-12);
        assert!(!diag.passed);

        let th = thermal_state(1.0, FockDim::new(40)).unwrap();
        assert!(validate_density(&th).tail_mass < 1e-10);
    }

    #[test]
    fn exp_ladder_matches_series() {
        let dim = FockDim::new(8);
        let z = c(0.3, -1.1);
        let direct = exp_creation(z, dim);
        let series = nilpotent_exp(&(creation(dim).into_matrix() * z));
        assert!((direct.matrix() - series).norm() < 1e-13);
        let direct = exp_annihilation(z, dim);
        let series = nilpotent_exp(&(annihilation(dim).into_matrix() * z));
        assert!((direct.matrix() - series).norm() < 1e-13);
    }
}
