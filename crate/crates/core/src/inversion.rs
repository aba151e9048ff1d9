//! Density matrices from s-ordered Wigner functions:
//! `ρ = ∫ d²α W_s(α) K(α; s)` with
//! `K(α; s) = (2/(1+s)) e^{-2|α|²/(1+s)} e^{(2α/(1+s))a†} ((s-1)/(s+1))^{a†a} e^{(2ᾱ/(1+s))a}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CMatrix, DensityMatrix, FockDim, FockOperator};
use crate::special::{laguerre_sequence, ln_factorial};
use crate::wigner::WignerField;

/// Kernel magnitudes above this make the reconstruction noise-dominated.
pub const KERNEL_WARN: f64 = 1e6;

/// Trace defects above this abort `rho_from_field`.
pub const MAX_TRACE_DEFECT: f64 = 0.05;

fn check_s(s: f64) -> Result<()> {
    if !(s > -1.0 && s <= 1.0) {
        return Err(Error::OrderingOutOfRange {
            s,
            context: "inversion (-1 < s <= 1)",
        });
    }
    Ok(())
}

/// The full kernel matrix `K_nm(α; s)` for `n, m <= n_max`, from the
/// associated-Laguerre closed form (for `n >= m`)
/// `(2/(1+s)) e^{-2|α|²/(1+s)} sqrt(m!/n!) κ^m (2α/(1+s))^{n-m} L_m^{(n-m)}(4|α|²/(1-s²))`,
/// `κ = (s-1)/(s+1)`, and Hermitian symmetry.
pub fn kernel_matrix(alpha: Complex64, s: f64, dim: FockDim) -> Result<CMatrix> {
    check_s(s)?;
    let size = dim.size();
    let r2 = alpha.norm_sqr();
    let b = 2.0 / (1.0 + s);
    let ln_pre = b.ln() - b * r2;
    let ln_ba = (b * alpha.norm()).ln();
    let theta = alpha.arg();
    let mut k = CMatrix::zeros(size, size);
    if s == 1.0 {
        // P-function limit: e^{-|α|²} α^n ᾱ^m / sqrt(n! m!)
        if r2 == 0.0 {
            k[(0, 0)] = Complex64::new(1.0, 0.0);
            return Ok(k);
        }
        let ln_r = alpha.norm().ln();
        for n in 0..size {
            for m in 0..size {
                let ln_mag = -r2 + (n + m) as f64 * ln_r - 0.5 * (ln_factorial(n) + ln_factorial(m));
                k[(n, m)] = Complex64::from_polar(ln_mag.exp(), (n as f64 - m as f64) * theta);
            }
        }
        return Ok(k);
    }
    let kappa = (s - 1.0) / (s + 1.0);
    let ln_kappa = kappa.abs().ln();
    let y = 4.0 * r2 / (1.0 - s * s);
    for d in 0..size {
        if d > 0 && r2 == 0.0 {
            break;
        }
        let lag = laguerre_sequence(size - 1 - d, d, y);
        for (m, l) in lag.iter().enumerate() {
            let n = m + d;
            if l.mantissa == 0.0 {
                continue;
            }
            let ln_mag = ln_pre + 0.5 * (ln_factorial(m) - ln_factorial(n))
                + m as f64 * ln_kappa
                + if d > 0 { d as f64 * ln_ba } else { 0.0 }
                + l.ln_abs();
            let sign = l.signum() * if kappa < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
            let v = Complex64::from_polar(sign * ln_mag.exp(), d as f64 * theta);
            k[(n, m)] = v;
            if d > 0 {
                k[(m, n)] = v.conj();
            }
        }
    }
    if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("inversion kernel"));
    }
    Ok(k)
}

/// Single kernel entry `⟨n|K(α; s)|m⟩`.
pub fn inversion_kernel(n: usize, m: usize, alpha: Complex64, s: f64) -> Result<Complex64> {
    let k = kernel_matrix(alpha, s, FockDim::new(n.max(m)))?;
    Ok(k[(n, m)])
}

/// Optional post-processing of a reconstruction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InversionOptions {
    /// Clip negative eigenvalues to zero and renormalize the trace.
    pub clip_eigenvalues: bool,
}

/// Defects of the raw quadrature result, before hermitization.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InversionDiagnostics {
    pub s: f64,
    pub n_max: usize,
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
    /// Largest `|K_nm|` over the evaluation points.
    pub kernel_max: f64,
    pub clipped: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub rho: DensityMatrix,
    pub diagnostics: InversionDiagnostics,
}

fn finish(raw: CMatrix, dim: FockDim, s: f64, kernel_max: f64, opts: &InversionOptions) -> Result<(DensityMatrix, InversionDiagnostics)> {
    let size = dim.size();
    let mut herm: f64 = 0.0;
    for n in 0..size {
        for m in 0..size {
            herm = herm.max((raw[(n, m)] - raw[(m, n)].conj()).norm());
        }
    }
    let trace = raw.trace();
    let trace_defect = (trace - Complex64::new(1.0, 0.0)).norm();
    if !trace_defect.is_finite() || !herm.is_finite() {
        return Err(Error::NonFinite("reconstruction"));
    }
    let mut rho = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let min_eigenvalue = rho.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    let mut warnings = Vec::new();
    if kernel_max > KERNEL_WARN {
        warnings.push(format!(
            "kernel magnitude {kernel_max:.3e} exceeds {KERNEL_WARN:.0e}; reconstruction is noise-dominated at high n"
        ));
    }
    if opts.clip_eigenvalues {
        let eig = rho.clone().symmetric_eigen();
        let mut vals = eig.eigenvalues.map(|v| v.max(0.0));
        let total: f64 = vals.iter().sum();
        if total <= 0.0 {
            return Err(Error::Reconstruction("no positive spectrum left after clipping".into()));
        }
        vals /= total;
        let v = &eig.eigenvectors;
        let d = CMatrix::from_diagonal(&vals.map(|x| Complex64::new(x, 0.0)));
        rho = v * d * v.adjoint();
    }
    let diagnostics = InversionDiagnostics {
        s,
        n_max: dim.n_max(),
        hermiticity_defect: herm,
        trace_defect,
        min_eigenvalue,
        kernel_max,
        clipped: opts.clip_eigenvalues,
        warnings,
    };
    Ok((DensityMatrix::from_matrix_unchecked(dim, rho)?, diagnostics))
}

/// Raw (unhermitized) trapezoidal quadrature `Σ w_ij W_ij K(α_ij)`.
///
/// Rows of the grid are reduced in parallel and then summed in row order,
/// so the result does not depend on the thread count.
pub fn quadrature_raw(field: &WignerField, dim: FockDim) -> Result<(CMatrix, f64)> {
    check_s(field.s)?;
    let g = field.grid;
    let size = dim.size();
    let rows: Vec<Result<(CMatrix, f64)>> = (0..g.n_re)
        .into_par_iter()
        .map(|i| {
            let mut acc = CMatrix::zeros(size, size);
            let mut kmax: f64 = 0.0;
            for j in 0..g.n_im {
                let k = kernel_matrix(g.node(i, j), field.s, dim)?;
                kmax = kmax.max(k.iter().map(|z| z.norm()).fold(0.0, f64::max));
                let w = g.weight(i, j) * field.at(i, j);
                acc += k * Complex64::new(w, 0.0);
            }
            Ok((acc, kmax))
        })
        .collect();
    let mut total = CMatrix::zeros(size, size);
    let mut kmax: f64 = 0.0;
    for r in rows {
        let (m, k) = r?;
        total += m;
        kmax = kmax.max(k);
    }
    Ok((total, kmax))
}

/// Reconstructs `ρ` (in the caller-chosen truncation) from a sampled field.
pub fn rho_from_field(field: &WignerField, dim: FockDim) -> Result<Reconstruction> {
    rho_from_field_with(field, dim, &InversionOptions::default())
}

pub fn rho_from_field_with(field: &WignerField, dim: FockDim, opts: &InversionOptions) -> Result<Reconstruction> {
    let (raw, kmax) = quadrature_raw(field, dim)?;
    let (rho, diagnostics) = finish(raw, dim, field.s, kmax, opts)?;
    if diagnostics.trace_defect > MAX_TRACE_DEFECT {
        return Err(Error::Reconstruction(format!(
            "trace defect {:.3e} exceeds {MAX_TRACE_DEFECT}; grid does not enclose the state or truncation is too small",
            diagnostics.trace_defect
        )));
    }
    Ok(Reconstruction { rho, diagnostics })
}

/// Monte-Carlo reconstruction with per-entry standard errors.
#[derive(Clone, Debug)]
pub struct SampleReconstruction {
    pub rho: DensityMatrix,
    /// Standard error of each entry, row-major.
    pub std_err: Vec<f64>,
    pub n_samples: usize,
    pub diagnostics: InversionDiagnostics,
}

impl SampleReconstruction {
    pub fn std_err_at(&self, n: usize, m: usize) -> f64 {
        self.std_err[n * self.rho.dim().size() + m]
    }
}

fn normalized_weights(samples: &[Complex64], weights: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if samples.len() != weights.len() {
        return Err(Error::invalid("samples and weights differ in length"));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("weights sum to zero"));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

const CHUNK: usize = 4096;

/// `ρ ≈ Σ_i w_i K(α_i; s)` for draws `α_i` from a nonnegative `W_s`.
pub fn rho_from_samples(samples: &[Complex64], weights: &[f64], s: f64, dim: FockDim) -> Result<SampleReconstruction> {
    check_s(s)?;
    let w = normalized_weights(samples, weights)?;
    let size = dim.size();
    let n = samples.len();
    // first pass: weighted mean; second pass: weighted squared deviations
    let partial: Vec<Result<(CMatrix, f64)>> = samples
        .par_chunks(CHUNK)
        .zip(w.par_chunks(CHUNK))
        .map(|(xs, ws)| {
            let mut acc = CMatrix::zeros(size, size);
            let mut kmax: f64 = 0.0;
            for (a, wi) in xs.iter().zip(ws) {
                let k = kernel_matrix(*a, s, dim)?;
                kmax = kmax.max(k.iter().map(|z| z.norm()).fold(0.0, f64::max));
                acc += k * Complex64::new(*wi, 0.0);
            }
            Ok((acc, kmax))
        })
        .collect();
    let mut mean = CMatrix::zeros(size, size);
    let mut kmax: f64 = 0.0;
    for p in partial {
        let (m, k) = p?;
        mean += m;
        kmax = kmax.max(k);
    }
    let var_parts: Vec<Result<Vec<f64>>> = samples
        .par_chunks(CHUNK)
        .zip(w.par_chunks(CHUNK))
        .map(|(xs, ws)| {
            let mut acc = vec![0.0; size * size];
            for (a, wi) in xs.iter().zip(ws) {
                let k = kernel_matrix(*a, s, dim)?;
                for r in 0..size {
                    for c in 0..size {
                        acc[r * size + c] += wi * wi * (k[(r, c)] - mean[(r, c)]).norm_sqr();
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut var = vec![0.0; size * size];
    for p in var_parts {
        for (v, x) in var.iter_mut().zip(p?) {
            *v += x;
        }
    }
    let bessel = if n > 1 { n as f64 / (n as f64 - 1.0) } else { f64::NAN };
    let std_err = var.iter().map(|v| (v * bessel).sqrt()).collect();
    let (rho, diagnostics) = finish(mean, dim, s, kmax, &InversionOptions::default())?;
    Ok(SampleReconstruction {
        rho,
        std_err,
        n_samples: n,
        diagnostics,
    })
}

/// Monte-Carlo estimate of `Tr[O ρ]` and its standard error, using
/// per-sample values `Tr[O K(α_i)]`.
pub fn sample_expectation(
    samples: &[Complex64],
    weights: &[f64],
    s: f64,
    op: &FockOperator,
) -> Result<(Complex64, f64)> {
    check_s(s)?;
    let w = normalized_weights(samples, weights)?;
    let dim = op.dim();
    let size = dim.size();
    let values: Vec<Result<Complex64>> = samples
        .par_iter()
        .map(|a| {
            let k = kernel_matrix(*a, s, dim)?;
            let mut t = Complex64::new(0.0, 0.0);
            for r in 0..size {
                for c in 0..size {
                    t += op.matrix()[(r, c)] * k[(c, r)];
                }
            }
            Ok(t)
        })
        .collect();
    let values: Vec<Complex64> = values.into_iter().collect::<Result<_>>()?;
    let mean: Complex64 = values.iter().zip(&w).map(|(v, wi)| v * wi).sum();
    let n = values.len();
    let var: f64 = values.iter().zip(&w).map(|(v, wi)| wi * wi * (v - mean).norm_sqr()).sum();
    let bessel = if n > 1 { n as f64 / (n as f64 - 1.0) } else { f64::NAN };
    Ok((mean, (var * bessel).sqrt()))
}
