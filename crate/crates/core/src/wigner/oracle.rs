//! Direct quadrature of the characteristic-function definition
//! `W_s(α) = π⁻² ∫ d²λ e^{αλ̄ - ᾱλ} e^{s|λ|²/2} Tr[D(λ)ρ]`.
//!
//! Radial direction: composite Gauss-Legendre on `[0, R]` with
//! `R >= max(6, 4√n_max)/√(1-s)`, extended until the integrand envelope is
//! below `1e-15`. Angular
//! direction: the periodic trapezoid rule, which is spectrally accurate for
//! the band-limited angular dependence (`Tr[D(re^{iθ})ρ]` is a trigonometric
//! polynomial of degree `n_max` in `θ`).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{displacement_matrix, DensityMatrix};
use crate::special::gauss_legendre;

const GL_ORDER: usize = 14;
const PANEL_WIDTH: f64 = 0.75;
const ENVELOPE_TOL: f64 = 1e-15;
const MAX_RADIUS_FACTOR: f64 = 4.0;

/// Characteristic-function oracle prepared for one `(ρ, s)` pair.
#[derive(Clone, Debug)]
pub struct CharOracle {
    s: f64,
    n_max: usize,
    radius: f64,
    /// `(r, w·r·e^{s r²/2})` per radial node.
    radial: Vec<(f64, f64)>,
    /// `c_d(r)` for `d = -n_max..=n_max`, row per radial node.
    coeffs: Vec<Vec<Complex64>>,
    n_theta: usize,
}

impl CharOracle {
    /// Oracle good for `|α| <= 2`.
    pub fn new(rho: &DensityMatrix, s: f64) -> Result<Self> {
        Self::with_alpha_bound(rho, s, 2.0)
    }

    /// Oracle whose angular resolution covers evaluation points with
    /// `|α| <= alpha_max`.
    pub fn with_alpha_bound(rho: &DensityMatrix, s: f64, alpha_max: f64) -> Result<Self> {
        if !(s < 1.0) || !s.is_finite() {
            return Err(Error::OrderingOutOfRange {
                s,
                context: "characteristic-function oracle (s < 1)",
            });
        }
        let n_max = rho.dim().n_max();
        let size = n_max + 1;
        let x = rho.matrix();
        let base = (6f64).max(4.0 * (n_max as f64).sqrt()) / (1.0 - s).sqrt();
        let (gx, gw) = gauss_legendre(GL_ORDER);
        let mut radial = Vec::new();
        let mut coeffs = Vec::new();
        let mut radius = 0.0;
        // panels up to the nominal radius, then more until the integrand
        // envelope is negligible
        loop {
            let a = radius;
            let mut envelope: f64 = 0.0;
            for (xg, w) in gx.iter().zip(&gw) {
                let r = a + 0.5 * PANEL_WIDTH * (xg + 1.0);
                let growth = r * (0.5 * s * r * r).exp();
                let d = displacement_matrix(Complex64::new(r, 0.0), rho.dim());
                let mut c = vec![Complex64::new(0.0, 0.0); 2 * size - 1];
                for n in 0..size {
                    for m in 0..size {
                        c[n + n_max - m] += d.matrix()[(n, m)] * x[(m, n)];
                    }
                }
                envelope = envelope.max(growth * c.iter().map(|z| z.norm()).sum::<f64>());
                radial.push((r, 0.5 * PANEL_WIDTH * w * growth));
                coeffs.push(c);
            }
            radius += PANEL_WIDTH;
            if radius >= base && envelope < ENVELOPE_TOL {
                break;
            }
            if radius > MAX_RADIUS_FACTOR * base {
                return Err(Error::NonFinite("characteristic function does not decay"));
            }
        }
        let bandwidth = n_max as f64 + 2.0 * alpha_max.abs() * radius + 16.0;
        let n_theta = (2.0 * bandwidth).ceil().max(64.0) as usize;
        Ok(CharOracle {
            s,
            n_max,
            radius,
            radial,
            coeffs,
            n_theta,
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `W_s(α)`.
    pub fn eval(&self, alpha: Complex64) -> f64 {
        let dtheta = 2.0 * PI / self.n_theta as f64;
        let nm = self.n_max as i64;
        let mut total = 0.0;
        for (k, &(r, w)) in self.radial.iter().enumerate() {
            let c = &self.coeffs[k];
            let mut ring = 0.0;
            for l in 0..self.n_theta {
                let theta = l as f64 * dtheta;
                let e = Complex64::from_polar(1.0, theta);
                // χ(re^{iθ}) = Σ_d e^{idθ} c_d, Horner in e^{iθ} from d = -n_max
                let mut chi = Complex64::new(0.0, 0.0);
                for cd in c.iter().rev() {
                    chi = chi * e + cd;
                }
                chi *= e.powi(-nm as i32);
                // e^{αλ̄ - ᾱλ} = e^{2i Im(αλ̄)}
                let lambda = e * r;
                let phase = 2.0 * (alpha * lambda.conj()).im;
                ring += (Complex64::from_polar(1.0, phase) * chi).re;
            }
            total += w * ring * dtheta;
        }
        total / (PI * PI)
    }
}

/// `W_s(α)` by direct quadrature of the characteristic function.
pub fn wigner_char(rho: &DensityMatrix, alpha: Complex64, s: f64) -> Result<f64> {
    Ok(CharOracle::with_alpha_bound(rho, s, alpha.norm())?.eval(alpha))
}
