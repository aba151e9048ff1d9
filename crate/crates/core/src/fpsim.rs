//! Monte-Carlo realization of the damped-oscillator Fokker-Planck equation
//! `∂ₜW = γ/2 [∂α α + ∂ᾱ ᾱ + (2n̄+1−s) ∂α∂ᾱ] W`.
//!
//! With `α = x + iy`, `∂α∂ᾱ = ¼(∂x² + ∂y²)`, so each quadrature follows
//! `dx = −(γ/2) x dt + √(2D) dB` with `D = γ(2n̄+1−s)/8`, stationary
//! variance `(2n̄+1−s)/4`.
//!
//! Trajectory `k` draws from ChaCha8 stream `k` under a key derived from
//! `(seed, epoch)`, so results do not depend on the worker count.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockDim;
use crate::inversion::{rho_from_samples, SampleReconstruction};
use crate::superop::{FpSpec, Ordering};
use crate::wigner::{PhaseSpaceGrid, WignerField};

/// Largest `γ·dt` accepted by the Euler-Maruyama scheme.
pub const EM_MAX_GAMMA_DT: f64 = 0.1;
/// KDE kernels are cut off this many bandwidths from their centre.
pub const KDE_CUTOFF: f64 = 6.0;
const KDE_CHUNK: usize = 16384;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub gamma: f64,
    pub nbar: f64,
    pub s: f64,
}

impl OuParams {
    pub fn new(gamma: f64, nbar: f64, s: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(Error::invalid(format!("nbar must be nonnegative, got {nbar}")));
        }
        if !s.is_finite() || !(s < 2.0 * nbar + 1.0) {
            return Err(Error::NotSimulable(format!(
                "diffusion γ(2n̄+1−s)/2 is not positive for n̄ = {nbar}, s = {s}"
            )));
        }
        Ok(OuParams { gamma, nbar, s })
    }

    /// Coefficient of `∂α∂ᾱ`.
    pub fn diffusion(&self) -> f64 {
        0.5 * self.gamma * (2.0 * self.nbar + 1.0 - self.s)
    }

    /// Per-quadrature diffusion `D` in `dx = −(γ/2)x dt + √(2D) dB`.
    pub fn axis_diffusion(&self) -> f64 {
        0.25 * self.diffusion()
    }

    pub fn drift_rate(&self) -> f64 {
        0.5 * self.gamma
    }

    pub fn stationary_variance(&self) -> f64 {
        0.25 * (2.0 * self.nbar + 1.0 - self.s)
    }
}

fn real_constant(p: &crate::superop::Poly, what: &str) -> Result<f64> {
    let c = p
        .as_constant()
        .ok_or_else(|| Error::NotSimulable(format!("{what} coefficient {p} has unbound symbols")))?;
    if !c.im.is_zero() {
        return Err(Error::NotSimulable(format!("{what} coefficient {p} is not real")));
    }
    c.re.to_f64().ok_or_else(|| Error::NotSimulable(format!("{what} coefficient out of range")))
}

/// Reads `γ, n̄, s` off a compiled spec after binding parameters.
pub fn realize_sde(spec: &FpSpec, bindings: &BTreeMap<String, BigRational>) -> Result<OuParams> {
    let b = spec.bind(bindings);
    if !b.residual_terms.is_empty() {
        return Err(Error::NotSimulable(format!(
            "{} terms of derivative order > 2",
            b.residual_terms.len()
        )));
    }
    if !b.other_terms.is_empty() || !b.order0_terms.is_empty() {
        return Err(Error::NotSimulable("generator is not of Ornstein-Uhlenbeck form".into()));
    }
    let s = match &b.ordering {
        Ordering::Fixed(v) => v.to_f64().unwrap_or(f64::NAN),
        Ordering::Symbolic => return Err(Error::NotSimulable("s is unbound".into())),
    };
    if b.drift_alpha != b.drift_conj {
        return Err(Error::NotSimulable("drift coefficients differ (rotating frame not supported)".into()));
    }
    let half_gamma = real_constant(&b.drift_alpha, "drift")?;
    if !(half_gamma > 0.0) {
        return Err(Error::NotSimulable(format!("drift coefficient {half_gamma} is not a damping")));
    }
    let gamma = 2.0 * half_gamma;
    let dc = real_constant(&b.diffusion, "diffusion")?;
    if !(dc > 0.0) {
        return Err(Error::NotSimulable(format!("diffusion coefficient {dc} is not positive")));
    }
    let nbar = 0.5 * (2.0 * dc / gamma - 1.0 + s);
    if nbar < -1e-12 {
        return Err(Error::NotSimulable(format!("implied n̄ = {nbar} is negative")));
    }
    OuParams::new(gamma, nbar.max(0.0), s)
}

/// Exact Ornstein-Uhlenbeck moments after time `t`.
pub fn evolve_exact_gaussian(
    mean: Complex64,
    cov: Matrix2<f64>,
    params: &OuParams,
    t: f64,
) -> Result<(Complex64, Matrix2<f64>)> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let decay = (-params.gamma * t).exp();
    let v = params.stationary_variance();
    let cov_t = cov * decay + Matrix2::identity() * (v * (1.0 - decay));
    Ok((mean * (-0.5 * params.gamma * t).exp(), cov_t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    EulerMaruyama,
    ExactGaussianStep,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::EulerMaruyama => "euler-maruyama",
            Scheme::ExactGaussianStep => "exact-gaussian-step",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler-maruyama" | "em" => Ok(Scheme::EulerMaruyama),
            "exact-gaussian-step" | "exact" => Ok(Scheme::ExactGaussianStep),
            other => Err(Error::invalid(format!("unknown scheme '{other}'"))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn trajectory_rng(seed: u64, epoch: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(epoch)));
    rng.set_stream(index as u64);
    rng
}

/// Weighted point cloud standing in for `W_s` at some time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    pub samples: Vec<Complex64>,
    pub weights: Vec<f64>,
    /// In units of `1/γ` when produced by [`simulate`].
    pub time: f64,
    pub s: f64,
    pub seed: u64,
    /// Number of random draws made so far; keys the next draw.
    pub epoch: u64,
}

impl TrajectoryEnsemble {
    pub fn new(samples: Vec<Complex64>, weights: Vec<f64>, s: f64, seed: u64) -> Result<Self> {
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
        // summation error grows with the ensemble size
        if (total - 1.0).abs() > 1e-12 + 4.0 * f64::EPSILON * weights.len() as f64 {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(TrajectoryEnsemble {
            samples,
            weights,
            time: 0.0,
            s,
            seed,
            epoch: 0,
        })
    }

    fn uniform(samples: Vec<Complex64>, s: f64, seed: u64, epoch: u64) -> Self {
        let w = 1.0 / samples.len() as f64;
        let weights = vec![w; samples.len()];
        TrajectoryEnsemble {
            samples,
            weights,
            time: 0.0,
            s,
            seed,
            epoch,
        }
    }

    /// `n` trajectories all starting at `alpha`.
    pub fn delta(alpha: Complex64, n: usize, s: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyEnsemble);
        }
        Ok(Self::uniform(vec![alpha; n], s, seed, 0))
    }

    /// Isotropic Gaussian with per-quadrature variance `var` around `mean`.
    pub fn gaussian(mean: Complex64, var: f64, n: usize, s: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if !(var > 0.0) || !var.is_finite() {
            return Err(Error::invalid(format!("W_{s} of this state is not a positive Gaussian (variance {var})")));
        }
        let sd = var.sqrt();
        let samples = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = trajectory_rng(seed, 0, k);
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                mean + Complex64::new(sd * x, sd * y)
            })
            .collect();
        Ok(Self::uniform(samples, s, seed, 1))
    }

    /// Draws from `W_s` of the coherent state `|β⟩` (variance `(1−s)/4`).
    pub fn coherent(beta: Complex64, n: usize, s: f64, seed: u64) -> Result<Self> {
        Self::gaussian(beta, 0.25 * (1.0 - s), n, s, seed)
    }

    /// Draws from `W_s` of a thermal state (variance `(2n̄+1−s)/4`).
    pub fn thermal(nbar: f64, n: usize, s: f64, seed: u64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::invalid(format!("nbar must be nonnegative, got {nbar}")));
        }
        Self::gaussian(Complex64::new(0.0, 0.0), 0.25 * (2.0 * nbar + 1.0 - s), n, s, seed)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn moments(&self) -> Moments {
        Moments::of(&self.samples, &self.weights)
    }
}

/// Weighted first and second moments with standard errors (Kish effective
/// sample size).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: Complex64,
    /// Standard error of `Re` and `Im` of the mean.
    pub mean_se: (f64, f64),
    pub var_x: f64,
    pub var_y: f64,
    /// Standard errors of the two variances.
    pub var_se: (f64, f64),
    pub n_eff: f64,
}

impl Moments {
    pub fn of(samples: &[Complex64], weights: &[f64]) -> Moments {
        let total: f64 = weights.iter().sum();
        let w: Vec<f64> = weights.iter().map(|x| x / total).collect();
        let n_eff = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
        let mean: Complex64 = samples.iter().zip(&w).map(|(a, wi)| a * wi).sum();
        let central = |k: u32, f: &dyn Fn(Complex64) -> f64| -> f64 {
            samples.iter().zip(&w).map(|(a, wi)| wi * f(a - mean).powi(k as i32)).sum()
        };
        let re = |z: Complex64| z.re;
        let im = |z: Complex64| z.im;
        let bessel = if n_eff > 1.0 { n_eff / (n_eff - 1.0) } else { 1.0 };
        let var_x = central(2, &re) * bessel;
        let var_y = central(2, &im) * bessel;
        let m4x = central(4, &re);
        let m4y = central(4, &im);
        let var_se = (
            ((m4x - var_x * var_x).max(0.0) / n_eff).sqrt(),
            ((m4y - var_y * var_y).max(0.0) / n_eff).sqrt(),
        );
        Moments {
            mean,
            mean_se: ((var_x / n_eff).sqrt(), (var_y / n_eff).sqrt()),
            var_x,
            var_y,
            var_se,
            n_eff,
        }
    }
}

/// Advances every trajectory by `n_steps` steps of size `dt`.
pub fn simulate(
    ensemble: &TrajectoryEnsemble,
    params: &OuParams,
    dt: f64,
    n_steps: usize,
    scheme: Scheme,
) -> Result<TrajectoryEnsemble> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if (params.s - ensemble.s).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "ensemble samples W_{} but the equation is for s = {}",
            ensemble.s, params.s
        )));
    }
    if scheme == Scheme::EulerMaruyama && params.gamma * dt > EM_MAX_GAMMA_DT {
        return Err(Error::invalid(format!(
            "euler-maruyama needs γ·dt <= {EM_MAX_GAMMA_DT}, got {}",
            params.gamma * dt
        )));
    }
    if n_steps == 0 {
        return Ok(ensemble.clone());
    }
    let k = params.drift_rate();
    let (a, b) = match scheme {
        Scheme::ExactGaussianStep => {
            let decay = (-k * dt).exp();
            let sd = (params.stationary_variance() * (1.0 - decay * decay)).sqrt();
            (decay, sd)
        }
        Scheme::EulerMaruyama => (1.0 - k * dt, (2.0 * params.axis_diffusion() * dt).sqrt()),
    };
    let (seed, epoch) = (ensemble.seed, ensemble.epoch);
    let samples = ensemble
        .samples
        .par_iter()
        .enumerate()
        .map(|(idx, &z0)| {
            let mut rng = trajectory_rng(seed, epoch, idx);
            let (mut x, mut y) = (z0.re, z0.im);
            for _ in 0..n_steps {
                let gx: f64 = rng.sample(StandardNormal);
                let gy: f64 = rng.sample(StandardNormal);
                x = a * x + b * gx;
                y = a * y + b * gy;
            }
            Complex64::new(x, y)
        })
        .collect();
    Ok(TrajectoryEnsemble {
        samples,
        weights: ensemble.weights.clone(),
        time: ensemble.time + dt * n_steps as f64,
        s: ensemble.s,
        seed,
        epoch: epoch + 1,
    })
}

/// Gaussian kernel density estimate of the ensemble on `grid`.
///
/// Chunks of samples scatter into private grids that are summed in chunk
/// order, so the result is independent of scheduling.
pub fn estimate_field(ensemble: &TrajectoryEnsemble, grid: &PhaseSpaceGrid, bandwidth: f64) -> Result<WignerField> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    grid.validate()?;
    let g = *grid;
    let total: f64 = ensemble.weights.iter().sum();
    let norm = 1.0 / (2.0 * PI * bandwidth * bandwidth * total);
    let inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    let reach = KDE_CUTOFF * bandwidth;
    let (hx, hy) = (g.h_re(), g.h_im());
    let index_range = |c: f64, lo: f64, h: f64, n: usize| -> Option<(usize, usize)> {
        let a = ((c - reach - lo) / h).ceil().max(0.0);
        let b = ((c + reach - lo) / h).floor().min(n as f64 - 1.0);
        (a <= b).then_some((a as usize, b as usize))
    };
    let partial: Vec<Vec<f64>> = ensemble
        .samples
        .par_chunks(KDE_CHUNK)
        .zip(ensemble.weights.par_chunks(KDE_CHUNK))
        .map(|(zs, ws)| {
            let mut acc = vec![0.0; g.len()];
            for (z, w) in zs.iter().zip(ws) {
                let (Some((i0, i1)), Some((j0, j1))) =
                    (index_range(z.re, g.re_min, hx, g.n_re), index_range(z.im, g.im_min, hy, g.n_im))
                else {
                    continue;
                };
                for i in i0..=i1 {
                    let dx = g.x(i) - z.re;
                    for j in j0..=j1 {
                        let dy = g.y(j) - z.im;
                        let r2 = dx * dx + dy * dy;
                        if r2 <= reach * reach {
                            acc[i * g.n_im + j] += w * (-r2 * inv2h2).exp();
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut values = vec![0.0; g.len()];
    for p in partial {
        for (v, x) in values.iter_mut().zip(p) {
            *v += x;
        }
    }
    for v in values.iter_mut() {
        *v *= norm;
    }
    Ok(WignerField {
        grid: g,
        s: ensemble.s,
        values,
        method: "kde".into(),
        imag_residue: 0.0,
    })
}

/// `ρ` from the ensemble via the sample-mean inversion formula.
pub fn reconstruct(ensemble: &TrajectoryEnsemble, s: f64, dim: FockDim) -> Result<SampleReconstruction> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if (s - ensemble.s).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "ensemble samples W_{} but reconstruction asked for s = {s}",
            ensemble.s
        )));
    }
    rho_from_samples(&ensemble.samples, &ensemble.weights, s, dim)
}
