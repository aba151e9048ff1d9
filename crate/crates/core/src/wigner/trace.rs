//! The three trace forms, the parity form at `s = 0` and the Q function.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{
    coherent_amplitudes, displacement_matrix, exp_annihilation, exp_creation, CMatrix,
    DensityMatrix, FockDim, FockOperator,
};
use crate::special::{ln_factorial, CompensatedSum};
use crate::xprec::Fixed;

pub(crate) fn check_w1(s: f64) -> Result<()> {
    if !(s < 1.0) || !s.is_finite() {
        return Err(Error::OrderingOutOfRange { s, context: "w1 (s < 1)" });
    }
    Ok(())
}

pub(crate) fn check_w2(s: f64) -> Result<()> {
    if !(s < 1.0) || !s.is_finite() || s == -1.0 {
        return Err(Error::OrderingOutOfRange {
            s,
            context: "w2 (s < 1, s != -1)",
        });
    }
    Ok(())
}

pub(crate) fn check_w3(s: f64) -> Result<()> {
    if !(s.abs() < 1.0) {
        return Err(Error::OrderingOutOfRange {
            s,
            context: "w3 (-1 < s < 1)",
        });
    }
    Ok(())
}

fn finite(z: Complex64, what: &'static str) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// First trace form for an arbitrary (not necessarily Hermitian) operator
/// given by its matrix. Exact in the truncation: `e^{c a}` on the left and
/// `e^{c a†}` on the right never leave the block.
pub(crate) fn w1_complex(x: &CMatrix, alpha: Complex64, s: f64) -> Result<Complex64> {
    check_w1(s)?;
    let size = x.nrows();
    let dim = FockDim::new(size - 1);
    let d = 2.0 / (1.0 - s);
    let kappa = (s + 1.0) / (s - 1.0);
    let left = exp_annihilation(alpha.conj() * d, dim);
    let right = exp_creation(alpha * d, dim);
    let y = left.matrix() * x;
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    let mut kp = 1.0;
    for n in 0..size {
        // (Y B)_nn
        let mut acc = Complex64::new(0.0, 0.0);
        for k in n..size {
            acc += y[(n, k)] * right.matrix()[(k, n)];
        }
        let t = acc * kp;
        re.add(t.re);
        im.add(t.im);
        kp *= kappa;
    }
    let pref = d / PI * (-d * alpha.norm_sqr()).exp();
    finite(Complex64::new(re.value(), im.value()) * pref, "w1 trace form")
}

/// First trace form applied to any operator, e.g. a generator output
/// `dρ/dt`; the result is complex in general.
pub fn w1_operator(op: &FockOperator, alpha: Complex64, s: f64) -> Result<Complex64> {
    w1_complex(op.matrix(), alpha, s)
}

/// `W_s(α)` from the first trace form (`s < 1`).
pub fn wigner_w1(rho: &DensityMatrix, alpha: Complex64, s: f64) -> Result<f64> {
    Ok(w1_complex(rho.matrix(), alpha, s)?.re)
}

/// Third trace form, symmetric split of `((1+s)/(1-s))^{a†a}` around the
/// displacement.
pub(crate) fn w3_complex(x: &CMatrix, alpha: Complex64, s: f64) -> Result<Complex64> {
    check_w3(s)?;
    let size = x.nrows();
    let dim = FockDim::new(size - 1);
    let q = 1.0 - s * s;
    let lambda = alpha * (2.0 / q.sqrt());
    let disp = displacement_matrix(lambda, dim);
    let root_k = ((1.0 + s) / (1.0 - s)).sqrt();
    let mut pw = Vec::with_capacity(size);
    let mut p = 1.0;
    for _ in 0..size {
        pw.push(p);
        p *= root_k;
    }
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for n in 0..size {
        for m in 0..size {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let t = disp.matrix()[(n, m)] * x[(m, n)] * (pw[n] * pw[m] * sign);
            re.add(t.re);
            im.add(t.im);
        }
    }
    let pref = 2.0 / (PI * (1.0 - s)) * (-2.0 * s * alpha.norm_sqr() / q).exp();
    finite(Complex64::new(re.value(), im.value()) * pref, "w3 trace form")
}

/// `W_s(α)` from the third trace form (`-1 < s < 1`).
pub fn wigner_w3(rho: &DensityMatrix, alpha: Complex64, s: f64) -> Result<f64> {
    Ok(w3_complex(rho.matrix(), alpha, s)?.re)
}

/// `W_0(α) = (2/π) Tr[ρ D(2α) (-1)^{a†a}]`.
pub fn glauber_parity(rho: &DensityMatrix, alpha: Complex64) -> f64 {
    let dim = rho.dim();
    let disp = displacement_matrix(alpha * 2.0, dim);
    let x = rho.matrix();
    let mut acc = CompensatedSum::default();
    for n in 0..dim.size() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for m in 0..dim.size() {
            acc.add((x[(n, m)] * disp.matrix()[(m, n)]).re * sign);
        }
    }
    2.0 / PI * acc.value()
}

/// Husimi function `⟨α|ρ|α⟩ / π` with the (unrenormalized) truncated
/// coherent vector, which makes it exact for a truncated `ρ`.
pub fn q_function(rho: &DensityMatrix, alpha: Complex64) -> f64 {
    let v = coherent_amplitudes(alpha, rho.dim());
    let x = rho.matrix();
    let mut acc = CompensatedSum::default();
    for n in 0..v.len() {
        for m in 0..v.len() {
            acc.add((v[n].conj() * x[(n, m)] * v[m]).re);
        }
    }
    acc.value() / PI
}

/// Second trace form, prepared for one `(α, s, n_max)` and reusable across
/// density matrices.
///
/// In the truncated basis the operator `e^{-cᾱa} κ^{a†a} e^{-cαa†}` has
/// matrix elements given by infinite series that cancel violently for
/// `s → -1`; the series are summed in fixed point with enough bits that
/// the cancellation is harmless.
#[derive(Clone, Debug)]
pub struct W2Evaluator {
    n_max: usize,
    /// `g[(j, k)]` multiplies `ρ_jk`.
    g: CMatrix,
}

impl W2Evaluator {
    pub fn new(alpha: Complex64, s: f64, dim: FockDim) -> Result<Self> {
        check_w2(s)?;
        let size = dim.size();
        let c = 2.0 / (1.0 + s);
        let kappa = (s + 1.0) / (s - 1.0);
        let x = c * c * alpha.norm_sqr();
        let ca = alpha * c;
        let ln_ca = ca.norm().ln();
        let ln_pref = 2.0 * alpha.norm_sqr() / (1.0 + s) + (2.0 / (PI * (1.0 - s))).ln();
        let mut g = CMatrix::zeros(size, size);
        for hi in 0..size {
            for lo in 0..=hi {
                let d = hi - lo;
                if d > 0 && alpha.norm_sqr() == 0.0 {
                    continue;
                }
                let ln_outer = ln_pref + d as f64 * if d > 0 { ln_ca } else { 0.0 }
                    - 0.5 * (ln_factorial(hi) + ln_factorial(lo));
                let (m, e) = series(hi, lo, kappa, x, ln_outer)?;
                if m == 0.0 {
                    continue;
                }
                let mag = (e as f64 * LN_2 + m.abs().ln() + ln_outer).exp() * m.signum();
                let unit = Complex64::from_polar(1.0, d as f64 * (-ca.conj()).arg());
                // j >= k uses (-cᾱ)^{j-k}; j < k uses (-cα)^{k-j}
                g[(hi, lo)] = unit * mag;
                if d > 0 {
                    g[(lo, hi)] = unit.conj() * mag;
                }
            }
        }
        if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("w2 series"));
        }
        Ok(W2Evaluator { n_max: dim.n_max(), g })
    }

    pub(crate) fn trace_complex(&self, rho: &DensityMatrix) -> Result<Complex64> {
        let n = rho.dim().n_max();
        if n > self.n_max {
            return Err(Error::DimensionMismatch {
                expected: self.n_max,
                found: n,
            });
        }
        let x = rho.matrix();
        let mut re = CompensatedSum::default();
        let mut im = CompensatedSum::default();
        for j in 0..=n {
            for k in 0..=n {
                let t = x[(j, k)] * self.g[(j, k)];
                re.add(t.re);
                im.add(t.im);
            }
        }
        Ok(Complex64::new(re.value(), im.value()))
    }

    pub fn eval(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(self.trace_complex(rho)?.re)
    }
}

/// `T_{hi,lo} = Σ_{n≥hi} κ^n x^{n-hi} n! / ((n-hi)! (n-lo)!)` as `m·2^e`.
fn series(hi: usize, lo: usize, kappa: f64, x: f64, ln_outer: f64) -> Result<(f64, i64)> {
    let ln_k = kappa.abs().ln();
    let ln_start = hi as f64 * ln_k + ln_factorial(hi) - ln_factorial(hi - lo);
    if x == 0.0 {
        let v = (ln_start.exp()) * if kappa < 0.0 && hi % 2 == 1 { -1.0 } else { 1.0 };
        let (m, e) = frexp(v);
        return Ok((m, e));
    }
    let ln_x = x.ln();
    let kx = kappa.abs() * x;
    let n_stop = (2.0 * kx) as usize + hi + 2;
    // scan term magnitudes to size the fixed-point precision
    let mut ln_max = ln_start;
    let mut n = hi;
    let mut ln_t = ln_start;
    loop {
        let nf = (n + 1) as f64;
        ln_t += ln_k + ln_x + nf.ln() - ((n + 1 - hi) as f64).ln() - ((n + 1 - lo) as f64).ln();
        n += 1;
        ln_max = ln_max.max(ln_t);
        if n > n_stop && ln_t < ln_max - 120.0 {
            break;
        }
    }
    let n_terms = (n - hi + 1) as f64;
    let guard = 64.0 + 2.0 * n_terms.log2();
    let frac_bits = ((ln_max - ln_start.min(0.0) + ln_outer.max(0.0)) / LN_2 + guard).ceil();
    let frac_bits = frac_bits.max(64.0) as usize;

    let mut term = Fixed::from_f64(1.0, frac_bits);
    for _ in 0..hi {
        term.mul_f64(kappa);
    }
    for k in (hi - lo + 1)..=hi {
        term.mul_u64(k as u64);
    }
    let mut sum = term.clone();
    let floor_bits = -(frac_bits as i64);
    let mut n = hi;
    loop {
        term.mul_f64(kappa);
        term.mul_f64(x);
        term.mul_u64((n + 1) as u64);
        term.div_u64((n + 1 - hi) as u64);
        term.div_u64((n + 1 - lo) as u64);
        n += 1;
        sum.add_assign(&term);
        let small = match term.log2_abs() {
            None => true,
            Some(l) => l < floor_bits + 8,
        };
        if n > n_stop && small {
            break;
        }
        if n > n_stop + 100_000 {
            return Err(Error::NonFinite("w2 series did not converge"));
        }
    }
    Ok(sum.to_mantissa_exp2())
}

fn frexp(v: f64) -> (f64, i64) {
    if v == 0.0 {
        return (0.0, 0);
    }
    let e = v.abs().log2().floor() as i64 + 1;
    (v / 2f64.powi(e as i32), e)
}

/// `W_s(α)` from the second trace form (`s < 1`, `s != -1`).
pub fn wigner_w2(rho: &DensityMatrix, alpha: Complex64, s: f64) -> Result<f64> {
    W2Evaluator::new(alpha, s, rho.dim())?.eval(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{cat_state, coherent_state, fock_state, thermal_state};

    const TWO_PI: f64 = 2.0 / PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn w1_examples() {
        let vac = fock_state(0, FockDim::new(5)).unwrap();
        let one = fock_state(1, FockDim::new(5)).unwrap();
        let th = thermal_state(1.0, FockDim::new(40)).unwrap();
        assert!((wigner_w1(&vac, c(0.0, 0.0), 0.0).unwrap() - TWO_PI).abs() < 1e-14);
        assert!((wigner_w1(&one, c(0.0, 0.0), 0.0).unwrap() + TWO_PI).abs() < 1e-14);
        let got = wigner_w1(&th, c(0.0, 0.0), 0.0).unwrap();
        assert!((got - 2.0 / (3.0 * PI)).abs() < 1e-10, "{got}");
        assert!(wigner_w1(&vac, c(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn w2_examples() {
        let vac = fock_state(0, FockDim::new(5)).unwrap();
        assert!((wigner_w2(&vac, c(0.0, 0.0), 0.0).unwrap() - TWO_PI).abs() < 1e-14);
        let coh = coherent_state(c(1.0, 0.0), FockDim::new(30)).unwrap();
        let got = wigner_w2(&coh, c(1.0, 0.0), 0.0).unwrap();
        assert!((got - TWO_PI).abs() < 1e-10, "{got}");
        assert!(matches!(
            wigner_w2(&vac, c(0.3, 0.0), -1.0),
            Err(Error::OrderingOutOfRange { .. })
        ));
    }

    #[test]
    fn w2_vacuum_entry_is_closed_form() {
        // T_00 = exp(-4|α|²/(1-s²)), so W_s(vacuum) is a Gaussian of variance (1-s)/4
        for &s in &[-0.9, -0.5, 0.0, 0.4] {
            let vac = fock_state(0, FockDim::new(3)).unwrap();
            let a = c(1.2, -1.5);
            let got = wigner_w2(&vac, a, s).unwrap();
            let want = 2.0 / (PI * (1.0 - s)) * (-2.0 * a.norm_sqr() / (1.0 - s)).exp();
            assert!((got - want).abs() < 1e-14, "s={s}: {got} vs {want}");
        }
    }

    #[test]
    fn w3_examples() {
        let vac = fock_state(0, FockDim::new(5)).unwrap();
        let one = fock_state(1, FockDim::new(5)).unwrap();
        assert!((wigner_w3(&vac, c(0.0, 0.0), 0.0).unwrap() - TWO_PI).abs() < 1e-14);
        let got = wigner_w3(&one, c(0.0, 0.0), -0.5).unwrap();
        let want = 2.0 / (PI * 1.5) * (0.5 / 1.5) * -1.0;
        assert!((got - want).abs() < 1e-14);
        assert!((got + 0.141471).abs() < 1e-6);
        let cat = cat_state(c(2.0, 0.0), 1, FockDim::new(30)).unwrap();
        let w3 = wigner_w3(&cat, c(0.0, 0.0), 0.0).unwrap();
        let w1 = wigner_w1(&cat, c(0.0, 0.0), 0.0).unwrap();
        assert!(w3 > 0.0);
        assert!((w3 - w1).abs() < 1e-9);
        assert!(wigner_w3(&vac, c(0.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn forms_agree_on_a_coherent_superposition() {
        let cat = cat_state(c(1.0, 0.5), -1, FockDim::new(20)).unwrap();
        for &s in &[-0.9, -0.5, 0.0, 0.4] {
            for &a in &[c(0.0, 0.0), c(0.7, -0.2), c(-1.1, 1.4)] {
                let w1 = wigner_w1(&cat, a, s).unwrap();
                let w2 = wigner_w2(&cat, a, s).unwrap();
                let w3 = wigner_w3(&cat, a, s).unwrap();
                assert!((w1 - w3).abs() < 1e-9, "s={s} a={a}: {w1} {w3}");
                assert!((w1 - w2).abs() < 1e-9, "s={s} a={a}: {w1} {w2}");
            }
        }
    }

    #[test]
    fn parity_form_matches_w1_and_q_matches_s_minus_one() {
        let cat = cat_state(c(1.5, 0.0), 1, FockDim::new(25)).unwrap();
        for &a in &[c(0.0, 0.0), c(0.3, 0.8), c(-1.0, -0.4)] {
            let w1 = wigner_w1(&cat, a, 0.0).unwrap();
            assert!((glauber_parity(&cat, a) - w1).abs() < 1e-12);
            let q = wigner_w1(&cat, a, -1.0).unwrap();
            assert!((q_function(&cat, a) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn q_function_examples() {
        let vac = fock_state(0, FockDim::new(5)).unwrap();
        let one = fock_state(1, FockDim::new(5)).unwrap();
        assert!((q_function(&vac, c(0.0, 0.0)) - 1.0 / PI).abs() < 1e-15);
        assert_eq!(q_function(&one, c(0.0, 0.0)), 0.0);
        let beta = c(0.6, -0.3);
        let coh = coherent_state(beta, FockDim::new(30)).unwrap();
        let a = c(-0.2, 0.4);
        let want = (-(a - beta).norm_sqr()).exp() / PI;
        assert!((q_function(&coh, a) - want).abs() < 1e-12);
    }

    #[test]
    fn w1_and_w3_agree_on_non_hermitian_operators() {
        let dim = FockDim::new(6);
        let mut m = CMatrix::zeros(7, 7);
        m[(0, 1)] = c(1.0, 0.0);
        m[(2, 5)] = c(0.3, -0.2);
        let op = FockOperator::new(dim, m.clone()).unwrap();
        for &a in &[c(0.0, 0.0), c(0.4, -0.7)] {
            let w1 = w1_operator(&op, a, -0.3).unwrap();
            let w3 = w3_complex(&m, a, -0.3).unwrap();
            assert!((w1 - w3).norm() < 1e-12, "{w1} {w3}");
        }
    }
}
