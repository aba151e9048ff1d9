//! Applies a differential form to a sampled field with high-order central
//! differences (`∂α = (∂x − i∂y)/2`, `∂ᾱ = (∂x + i∂y)/2`, `α = x + iy`).

use std::collections::HashMap;

use num_complex::Complex64;

use super::form::{DiffForm, Ordering};
use crate::error::{Error, Result};
use crate::wigner::WignerField;

/// Eighth-order central first-derivative stencil, offsets `1..=4`.
const STENCIL: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
pub const STENCIL_HALF_WIDTH: usize = 4;

#[derive(Clone, Debug)]
pub struct AppliedField {
    /// Real part of the result; nodes within `margin` of an edge hold NaN.
    pub field: WignerField,
    /// Nodes per edge without a valid value.
    pub margin: usize,
}

fn diff(v: &[Complex64], n_re: usize, n_im: usize, along_re: bool, h: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(f64::NAN, 0.0); v.len()];
    let w = STENCIL_HALF_WIDTH;
    for i in 0..n_re {
        for j in 0..n_im {
            let (k, n) = if along_re { (i, n_re) } else { (j, n_im) };
            if k < w || k + w >= n {
                continue;
            }
            let at = |o: isize| {
                let (ii, jj) = if along_re {
                    ((i as isize + o) as usize, j)
                } else {
                    (i, (j as isize + o) as usize)
                };
                v[ii * n_im + jj]
            };
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, c) in STENCIL.iter().enumerate() {
                let o = m as isize + 1;
                acc += (at(o) - at(-o)) * *c;
            }
            out[i * n_im + j] = acc / h;
        }
    }
    out
}

/// Evaluates `form[W]` on the grid. Symbols in coefficients take values from
/// `values`; `s` comes from the form's ordering (which must match the field)
/// or from `values` when the form is symbolic.
pub fn apply_form(form: &DiffForm, field: &WignerField, values: &HashMap<String, f64>) -> Result<AppliedField> {
    let mut vals = values.clone();
    match form.ordering() {
        Ordering::Fixed(v) => {
            let s: f64 = num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN);
            if (s - field.s).abs() > 1e-12 {
                return Err(Error::invalid(format!("form built for s = {s}, field has s = {}", field.s)));
            }
            vals.insert("s".into(), s);
        }
        Ordering::Symbolic => {
            vals.entry("s".into()).or_insert(field.s);
        }
    }
    let g = field.grid;
    let (n_re, n_im) = (g.n_re, g.n_im);
    let (hx, hy) = (g.h_re(), g.h_im());
    let base: Vec<Complex64> = field.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let half = Complex64::new(0.5, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);
    let d_alpha = |v: &[Complex64]| -> Vec<Complex64> {
        let dx = diff(v, n_re, n_im, true, hx);
        let dy = diff(v, n_re, n_im, false, hy);
        dx.iter().zip(&dy).map(|(a, b)| half * (a - i_unit * b)).collect()
    };
    let d_conj = |v: &[Complex64]| -> Vec<Complex64> {
        let dx = diff(v, n_re, n_im, true, hx);
        let dy = diff(v, n_re, n_im, false, hy);
        dx.iter().zip(&dy).map(|(a, b)| half * (a + i_unit * b)).collect()
    };

    let mut cache: HashMap<(u32, u32), Vec<Complex64>> = HashMap::new();
    cache.insert((0, 0), base);
    let mut total = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut max_order = 0;
    for (&(p, q, r, t), c) in form.terms() {
        let coeff = c
            .eval(&vals)
            .ok_or_else(|| Error::invalid(format!("unbound symbol in coefficient {c}")))?;
        max_order = max_order.max(r + t);
        if !cache.contains_key(&(r, t)) {
            // build ∂α^r ∂ᾱ^t by walking up from lower orders
            for rr in 0..=r {
                for tt in 0..=t {
                    if cache.contains_key(&(rr, tt)) {
                        continue;
                    }
                    let next = if tt > 0 {
                        d_conj(&cache[&(rr, tt - 1)])
                    } else {
                        d_alpha(&cache[&(rr - 1, 0)])
                    };
                    cache.insert((rr, tt), next);
                }
            }
        }
        let d = &cache[&(r, t)];
        for i in 0..n_re {
            for j in 0..n_im {
                let a = g.node(i, j);
                let k = i * n_im + j;
                total[k] += coeff * a.powu(p) * a.conj().powu(q) * d[k];
            }
        }
    }
    let margin = max_order as usize * STENCIL_HALF_WIDTH;
    let mut imag_residue: f64 = 0.0;
    let values_out = total
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let (i, j) = (k / n_im, k % n_im);
            let inside = i >= margin && i + margin < n_re && j >= margin && j + margin < n_im;
            if inside {
                imag_residue = imag_residue.max(z.im.abs());
                z.re
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(AppliedField {
        field: WignerField {
            grid: g,
            s: field.s,
            values: values_out,
            method: "finite-difference".into(),
            imag_residue,
        },
        margin,
    })
}
