//! Operations on sampled fields: ordering change by Gaussian convolution,
//! s-ordered moments and quadrature marginals.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::WignerField;
use crate::error::{Error, Result};
use crate::special::CompensatedSum;

fn axis_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h })
        .collect()
}

/// Smooths a field at ordering `s'` down to `s < s'` with the Gaussian
/// kernel `(2/(π(s'-s))) e^{-2|α-β|²/(s'-s)}`, on the same grid.
///
/// The kernel factorizes over the two axes, so the convolution is two 1D
/// passes with trapezoidal weights. Values near the grid edge lose the mass
/// that lay outside the grid; pad the source grid accordingly.
pub fn s_convolve(field: &WignerField, s: f64) -> Result<WignerField> {
    let delta = field.s - s;
    if !(delta > 0.0) || !s.is_finite() {
        return Err(Error::OrderingOutOfRange {
            s,
            context: "convolution (target s must be below the source s)",
        });
    }
    let g = field.grid;
    let norm = (2.0 / (PI * delta)).sqrt();
    let kernel = |d: f64| norm * (-2.0 * d * d / delta).exp();
    let wx = axis_weights(g.n_re, g.h_re());
    let wy = axis_weights(g.n_im, g.h_im());
    let kx: Vec<f64> = (0..g.n_re)
        .flat_map(|i| (0..g.n_re).map(move |k| (i, k)))
        .map(|(i, k)| kernel(g.x(i) - g.x(k)) * wx[k])
        .collect();
    let ky: Vec<f64> = (0..g.n_im)
        .flat_map(|j| (0..g.n_im).map(move |l| (j, l)))
        .map(|(j, l)| kernel(g.y(j) - g.y(l)) * wy[l])
        .collect();
    // pass over the imaginary axis
    let mut tmp = vec![0.0; g.len()];
    for i in 0..g.n_re {
        let row = &field.values[i * g.n_im..(i + 1) * g.n_im];
        for j in 0..g.n_im {
            let k = &ky[j * g.n_im..(j + 1) * g.n_im];
            tmp[i * g.n_im + j] = row.iter().zip(k).map(|(v, k)| v * k).sum();
        }
    }
    let mut out = vec![0.0; g.len()];
    for i in 0..g.n_re {
        let k = &kx[i * g.n_re..(i + 1) * g.n_re];
        for j in 0..g.n_im {
            let mut acc = 0.0;
            for (kk, kv) in k.iter().enumerate() {
                acc += kv * tmp[kk * g.n_im + j];
            }
            out[i * g.n_im + j] = acc;
        }
    }
    Ok(WignerField {
        grid: g,
        s,
        values: out,
        method: "convolved".to_string(),
        imag_residue: field.imag_residue,
    })
}

/// `∫ ᾱ^n α^m W_s(α) d²α` by trapezoidal quadrature, the s-ordered moment
/// `⟨{a†^n a^m}_s⟩`.
pub fn expectation_s(field: &WignerField, n: u32, m: u32) -> Complex64 {
    let g = &field.grid;
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for i in 0..g.n_re {
        for j in 0..g.n_im {
            let a = g.node(i, j);
            let t = a.conj().powu(n) * a.powu(m) * (g.weight(i, j) * field.at(i, j));
            re.add(t.re);
            im.add(t.im);
        }
    }
    Complex64::new(re.value(), im.value())
}

/// Resampling rule for rotated marginals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Whittaker-Shannon (separable sinc) interpolation; spectrally
    /// accurate for well-resolved fields that vanish at the grid edge.
    #[default]
    Sinc,
    Bilinear,
}

impl std::str::FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinc" => Ok(Interpolation::Sinc),
            "bilinear" => Ok(Interpolation::Bilinear),
            other => Err(Error::invalid(format!("unknown interpolation '{other}'"))),
        }
    }
}

/// Distribution of the quadrature `X_φ = (a†e^{iφ} + a e^{-iφ})/2`,
/// tabulated at the real-axis nodes of the source grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub phi: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

/// Quadrature marginal of an `s = 0` field with sinc resampling.
pub fn marginal(field: &WignerField, phi: f64) -> Result<Marginal> {
    marginal_with(field, phi, Interpolation::Sinc)
}

pub fn marginal_with(field: &WignerField, phi: f64, interp: Interpolation) -> Result<Marginal> {
    if field.s != 0.0 {
        return Err(Error::OrderingOutOfRange {
            s: field.s,
            context: "marginals (s = 0 only)",
        });
    }
    if !phi.is_finite() {
        return Err(Error::invalid("phi must be finite"));
    }
    let g = field.grid;
    let tol = 1e-9 * g.re_max.abs().max(1.0);
    let centered = (g.re_min + g.re_max).abs() < tol && (g.im_min + g.im_max).abs() < tol;
    let square = g.n_re == g.n_im && (g.re_max - g.im_max).abs() < tol;
    if !centered || !square {
        return Err(Error::invalid("marginals need a square grid centered on the origin"));
    }
    let (sin, cos) = phi.sin_cos();
    let rot = Complex64::new(cos, sin);
    let h = g.h_im();
    let wy = axis_weights(g.n_im, h);
    let sampler = Sampler::new(field, interp);
    let xs: Vec<f64> = (0..g.n_re).map(|i| g.x(i)).collect();
    let values = xs
        .iter()
        .map(|&x| {
            let mut acc = CompensatedSum::default();
            for (j, w) in wy.iter().enumerate() {
                let a = Complex64::new(x, g.y(j)) * rot;
                acc.add(w * sampler.at(a));
            }
            acc.value()
        })
        .collect();
    Ok(Marginal { phi, x: xs, values })
}

struct Sampler<'a> {
    field: &'a WignerField,
    interp: Interpolation,
}

impl<'a> Sampler<'a> {
    fn new(field: &'a WignerField, interp: Interpolation) -> Self {
        Sampler { field, interp }
    }

    fn at(&self, a: Complex64) -> f64 {
        let g = &self.field.grid;
        let eps = 1e-12;
        if a.re < g.re_min - eps || a.re > g.re_max + eps || a.im < g.im_min - eps || a.im > g.im_max + eps {
            return 0.0;
        }
        let u = (a.re - g.re_min) / g.h_re();
        let v = (a.im - g.im_min) / g.h_im();
        // exact node hit: no resampling
        let (ur, vr) = (u.round(), v.round());
        if (u - ur).abs() < 1e-10 && (v - vr).abs() < 1e-10 {
            return self.field.at(ur as usize, vr as usize);
        }
        match self.interp {
            Interpolation::Bilinear => {
                let i = (u.floor() as usize).min(g.n_re - 2);
                let j = (v.floor() as usize).min(g.n_im - 2);
                let fu = u - i as f64;
                let fv = v - j as f64;
                let f = |i, j| self.field.at(i, j);
                (1.0 - fu) * (1.0 - fv) * f(i, j)
                    + fu * (1.0 - fv) * f(i + 1, j)
                    + (1.0 - fu) * fv * f(i, j + 1)
                    + fu * fv * f(i + 1, j + 1)
            }
            Interpolation::Sinc => {
                let su = sinc_row(u, g.n_re);
                let sv = sinc_row(v, g.n_im);
                let mut acc = 0.0;
                for (i, wu) in su.iter().enumerate() {
                    if *wu == 0.0 {
                        continue;
                    }
                    let row = &self.field.values[i * g.n_im..(i + 1) * g.n_im];
                    let inner: f64 = row.iter().zip(&sv).map(|(f, w)| f * w).sum();
                    acc += wu * inner;
                }
                acc
            }
        }
    }
}

fn sinc_row(u: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let d = u - i as f64;
            if d.abs() < 1e-14 {
                1.0
            } else {
                (PI * d).sin() / (PI * d)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, fock_state, FockDim};
    use crate::wigner::{field_on_grid, q_function, Method, OrderingParam, PhaseSpaceGrid};

    fn w0(rho: &crate::DensityMatrix, grid: &PhaseSpaceGrid) -> WignerField {
        field_on_grid(rho, grid, OrderingParam::new(0.0).unwrap(), Method::W1).unwrap()
    }

    fn hermite_marginal(n: usize, x: f64) -> f64 {
        // |ψ_n(√2 x)|² √2 with physicists' Hermite functions
        let z = 2f64.sqrt() * x;
        let mut h0 = 1.0;
        let mut h1 = 2.0 * z;
        let h = match n {
            0 => h0,
            _ => {
                for k in 1..n {
                    let h2 = 2.0 * z * h1 - 2.0 * k as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                }
                h1
            }
        };
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let norm = 1.0 / (2f64.powi(n as i32) * fact * PI.sqrt());
        2f64.sqrt() * norm * h * h * (-z * z).exp()
    }

    #[test]
    fn convolution_of_vacuum_gives_q() {
        let vac = fock_state(0, FockDim::new(4)).unwrap();
        let grid = PhaseSpaceGrid::square(-5.0, 5.0, 101).unwrap();
        let q = s_convolve(&w0(&vac, &grid), -1.0).unwrap();
        for i in 0..grid.n_re {
            for j in 0..grid.n_im {
                if grid.is_interior(i, j, 1.5) {
                    let want = q_function(&vac, grid.node(i, j));
                    assert!((q.at(i, j) - want).abs() < 1e-6);
                }
            }
        }
        assert!(s_convolve(&q, -1.0).is_err());
    }

    #[test]
    fn convolved_fock1_is_nonnegative() {
        let one = fock_state(1, FockDim::new(6)).unwrap();
        let grid = PhaseSpaceGrid::square(-5.0, 5.0, 101).unwrap();
        let q = s_convolve(&w0(&one, &grid), -1.0).unwrap();
        assert!(q.values.iter().all(|&v| v >= -1e-6));
    }

    #[test]
    fn moments() {
        let vac = fock_state(0, FockDim::new(4)).unwrap();
        let grid = PhaseSpaceGrid::square(-5.0, 5.0, 81).unwrap();
        let f = w0(&vac, &grid);
        assert!((expectation_s(&f, 1, 1).re - 0.5).abs() < 1e-6);
        assert!((expectation_s(&f, 0, 0).re - 1.0).abs() < 1e-6);
        let beta = Complex64::new(0.5, -0.25);
        let coh = coherent_state(beta, FockDim::new(25)).unwrap();
        let g = PhaseSpaceGrid::square(-6.0, 6.0, 121).unwrap();
        let f = w0(&coh, &g);
        assert!((expectation_s(&f, 0, 1) - beta).norm() < 1e-6);
    }

    #[test]
    fn marginals_match_hermite_functions() {
        let grid = PhaseSpaceGrid::square(-4.0, 4.0, 128).unwrap();
        for n in 0..2 {
            let rho = fock_state(n, FockDim::new(4)).unwrap();
            let f = w0(&rho, &grid);
            for &phi in &[0.0, PI / 3.0] {
                let m = marginal(&f, phi).unwrap();
                let err = m
                    .x
                    .iter()
                    .zip(&m.values)
                    .map(|(&x, &p)| (p - hermite_marginal(n, x)).abs())
                    .fold(0.0, f64::max);
                assert!(err < 1e-6, "n={n} phi={phi}: {err}");
            }
        }
    }

    #[test]
    fn marginal_rejects_other_orderings_and_shapes() {
        let vac = fock_state(0, FockDim::new(4)).unwrap();
        let grid = PhaseSpaceGrid::square(-3.0, 3.0, 32).unwrap();
        let f = field_on_grid(&vac, &grid, OrderingParam::new(-0.5).unwrap(), Method::W1).unwrap();
        assert!(marginal(&f, 0.0).is_err());
        let g = PhaseSpaceGrid::new(-3.0, 2.0, 32, -3.0, 3.0, 32).unwrap();
        assert!(marginal(&w0(&vac, &g), 0.0).is_err());
    }

    #[test]
    fn bilinear_is_coarser_than_sinc() {
        let vac = fock_state(0, FockDim::new(4)).unwrap();
        let grid = PhaseSpaceGrid::square(-4.0, 4.0, 64).unwrap();
        let f = w0(&vac, &grid);
        let base = marginal(&f, 0.0).unwrap();
        let sinc = marginal_with(&f, PI / 3.0, Interpolation::Sinc).unwrap();
        let bil = marginal_with(&f, PI / 3.0, Interpolation::Bilinear).unwrap();
        let d = |m: &Marginal| {
            m.values
                .iter()
                .zip(&base.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        assert!(d(&sinc) < 1e-6);
        assert!(d(&bil) > d(&sinc));
    }
}
