//! s-ordered Wigner functions on the phase plane.
//!
//! Point evaluators ([`wigner_w1`], [`wigner_w2`], [`wigner_w3`]) implement the
//! three trace forms, [`wigner_char`] integrates the characteristic function
//! directly and serves as the reference, and [`field_on_grid`] samples any of
//! them over a [`PhaseSpaceGrid`].
//!
//! Conventions: `α = x + i y`, fields carry units of inverse area in the
//! α-plane, so `Σ W h_x h_y ≈ 1`.

mod ops;
mod oracle;
mod trace;

pub use ops::{
    expectation_s, marginal, marginal_with, s_convolve, Interpolation, Marginal,
};
pub use oracle::{wigner_char, CharOracle};
pub use trace::{
    glauber_parity, q_function, w1_operator, wigner_w1, wigner_w2, wigner_w3, W2Evaluator,
};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;

/// Largest ordering parameter accepted for direct field evaluation.
pub const DEFAULT_S_CAP: f64 = 0.99;

/// Imaginary residues of trace-form evaluations above this are reported.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Ordering parameter `s` of a quasi-probability: `-1` is Q, `0` is Wigner,
/// `1` (never evaluated directly) is P.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderingParam(f64);

impl OrderingParam {
    pub fn new(s: f64) -> Result<Self> {
        Self::with_cap(s, DEFAULT_S_CAP)
    }

    pub fn with_cap(s: f64, cap: f64) -> Result<Self> {
        if !s.is_finite() || s > cap || s >= 1.0 {
            return Err(Error::OrderingOutOfRange {
                s,
                context: "direct evaluation (s <= s_cap < 1)",
            });
        }
        Ok(OrderingParam(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Uniform rectangular grid over the α-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl PhaseSpaceGrid {
    pub fn new(re_min: f64, re_max: f64, n_re: usize, im_min: f64, im_max: f64, n_im: usize) -> Result<Self> {
        let g = PhaseSpaceGrid {
            re_min,
            re_max,
            im_min,
            im_max,
            n_re,
            n_im,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square grid `[min, max]²` with `n` nodes per axis.
    pub fn square(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(min, max, n, min, max, n)
    }

    /// Parses `min:max:n` (square) or `min:max:n,min:max:n` (re, im).
    pub fn from_spec(spec: &str) -> Result<Self> {
        let axis = |part: &str| -> Result<(f64, f64, usize)> {
            let fields: Vec<&str> = part.trim().split(':').collect();
            if fields.len() != 3 {
                return Err(Error::invalid(format!("grid axis '{part}' is not min:max:n")));
            }
            let bad = |_| Error::invalid(format!("grid axis '{part}' has a malformed number"));
            let min: f64 = fields[0].trim().parse().map_err(bad)?;
            let max: f64 = fields[1].trim().parse().map_err(bad)?;
            let n: usize = fields[2]
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("grid axis '{part}' has a malformed count")))?;
            Ok((min, max, n))
        };
        let parts: Vec<&str> = spec.split(',').collect();
        match parts.as_slice() {
            [one] => {
                let (a, b, n) = axis(one)?;
                Self::square(a, b, n)
            }
            [re, im] => {
                let (a, b, n) = axis(re)?;
                let (c, d, m) = axis(im)?;
                Self::new(a, b, n, c, d, m)
            }
            _ => Err(Error::invalid(format!("grid spec '{spec}' has too many ranges"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.n_re >= 2
            && self.n_im >= 2
            && self.re_min.is_finite()
            && self.re_max.is_finite()
            && self.im_min.is_finite()
            && self.im_max.is_finite()
            && self.re_max > self.re_min
            && self.im_max > self.im_min;
        if !ok {
            return Err(Error::invalid(format!("degenerate phase-space grid {self:?}")));
        }
        Ok(())
    }

    pub fn h_re(&self) -> f64 {
        (self.re_max - self.re_min) / (self.n_re - 1) as f64
    }

    pub fn h_im(&self) -> f64 {
        (self.im_max - self.im_min) / (self.n_im - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.re_min + i as f64 * self.h_re()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.im_min + j as f64 * self.h_im()
    }

    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x(i), self.y(j))
    }

    pub fn len(&self) -> usize {
        self.n_re * self.n_im
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Trapezoidal quadrature weight of node `(i, j)`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i + 1 == self.n_re { 0.5 } else { 1.0 };
        let wy = if j == 0 || j + 1 == self.n_im { 0.5 } else { 1.0 };
        wx * wy * self.h_re() * self.h_im()
    }

    /// Nodes at least `margin` away from every edge.
    pub fn is_interior(&self, i: usize, j: usize, margin: f64) -> bool {
        let x = self.x(i);
        let y = self.y(j);
        x - self.re_min >= margin - 1e-12
            && self.re_max - x >= margin - 1e-12
            && y - self.im_min >= margin - 1e-12
            && self.im_max - y >= margin - 1e-12
    }
}

/// Which trace form (or the oracle) evaluates a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    W1,
    W2,
    W3,
    Char,
    Auto,
}

impl Method {
    /// `auto` is w1 for `s <= 0` and w3 for `0 < s`.
    pub fn resolve(self, s: f64) -> Method {
        match self {
            Method::Auto if s <= 0.0 => Method::W1,
            Method::Auto => Method::W3,
            m => m,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::W1 => "w1",
            Method::W2 => "w2",
            Method::W3 => "w3",
            Method::Char => "char",
            Method::Auto => "auto",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w1" => Ok(Method::W1),
            "w2" => Ok(Method::W2),
            "w3" => Ok(Method::W3),
            "char" => Ok(Method::Char),
            "auto" => Ok(Method::Auto),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// Samples of `W_s` on a grid. `values[i * n_im + j]` is the value at
/// `grid.node(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    pub grid: PhaseSpaceGrid,
    pub s: f64,
    pub values: Vec<f64>,
    /// Concrete evaluator used (after `auto` dispatch), or a producer tag
    /// such as `convolved` or `kde`.
    pub method: String,
    /// Largest discarded imaginary part.
    pub imag_residue: f64,
}

impl WignerField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_im + j]
    }

    /// Trapezoidal `∫ W d²α`.
    pub fn mass(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.grid.n_re {
            for j in 0..self.grid.n_im {
                acc += self.grid.weight(i, j) * self.at(i, j);
            }
        }
        acc
    }

    /// Builds a field by evaluating `f` at every node (data-parallel,
    /// schedule-independent).
    pub fn tabulate<F>(grid: PhaseSpaceGrid, s: f64, method: &str, f: F) -> Result<Self>
    where
        F: Fn(Complex64) -> Result<Complex64> + Sync,
    {
        grid.validate()?;
        let rows: Vec<Result<Vec<Complex64>>> = (0..grid.n_re)
            .into_par_iter()
            .map(|i| (0..grid.n_im).map(|j| f(grid.node(i, j))).collect())
            .collect();
        let mut values = Vec::with_capacity(grid.len());
        let mut imag_residue: f64 = 0.0;
        for row in rows {
            for z in row? {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite("field evaluation"));
                }
                imag_residue = imag_residue.max(z.im.abs());
                values.push(z.re);
            }
        }
        Ok(WignerField {
            grid,
            s,
            values,
            method: method.to_string(),
            imag_residue,
        })
    }
}

/// Evaluates `W_s` of `rho` at every node of `grid`.
pub fn field_on_grid(
    rho: &DensityMatrix,
    grid: &PhaseSpaceGrid,
    s: OrderingParam,
    method: Method,
) -> Result<WignerField> {
    let sv = s.value();
    let method = method.resolve(sv);
    match method {
        Method::W1 => {
            trace::check_w1(sv)?;
            WignerField::tabulate(*grid, sv, "w1", |a| trace::w1_complex(rho.matrix(), a, sv))
        }
        Method::W2 => {
            trace::check_w2(sv)?;
            WignerField::tabulate(*grid, sv, "w2", |a| {
                W2Evaluator::new(a, sv, rho.dim())?.trace_complex(rho)
            })
        }
        Method::W3 => {
            trace::check_w3(sv)?;
            WignerField::tabulate(*grid, sv, "w3", |a| trace::w3_complex(rho.matrix(), a, sv))
        }
        Method::Char => {
            let max_abs = grid
                .re_min
                .abs()
                .max(grid.re_max.abs())
                .hypot(grid.im_min.abs().max(grid.im_max.abs()));
            let oracle = CharOracle::with_alpha_bound(rho, sv, max_abs)?;
            WignerField::tabulate(*grid, sv, "char", |a| Ok(Complex64::new(oracle.eval(a), 0.0)))
        }
        Method::Auto => unreachable!("resolved above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{fock_state, FockDim};
    use std::f64::consts::PI;

    #[test]
    fn grid_spec_parsing() {
        let g = PhaseSpaceGrid::from_spec("-3:3:41").unwrap();
        assert_eq!((g.n_re, g.n_im), (41, 41));
        assert!((g.h_re() - 0.15).abs() < 1e-15);
        let g = PhaseSpaceGrid::from_spec("-1:2:4,0:1:3").unwrap();
        assert_eq!((g.re_min, g.re_max, g.n_re), (-1.0, 2.0, 4));
        assert_eq!((g.im_min, g.im_max, g.n_im), (0.0, 1.0, 3));
        assert!(PhaseSpaceGrid::from_spec("1:1:5").is_err());
        assert!(PhaseSpaceGrid::from_spec("0:1").is_err());
        assert!(PhaseSpaceGrid::from_spec("0:1:1").is_err());
    }

    #[test]
    fn auto_dispatch_rule() {
        assert_eq!(Method::Auto.resolve(-1.0), Method::W1);
        assert_eq!(Method::Auto.resolve(0.0), Method::W1);
        assert_eq!(Method::Auto.resolve(0.3), Method::W3);
        assert_eq!(Method::W2.resolve(0.3), Method::W2);
    }

    #[test]
    fn ordering_param_cap() {
        assert!(OrderingParam::new(0.99).is_ok());
        assert!(OrderingParam::new(1.0).is_err());
        assert!(OrderingParam::new(f64::NAN).is_err());
        assert!(OrderingParam::with_cap(0.995, 0.999).is_ok());
    }

    #[test]
    fn vacuum_field_normalization() {
        let vac = fock_state(0, FockDim::new(4)).unwrap();
        let grid = PhaseSpaceGrid::square(-3.0, 3.0, 41).unwrap();
        let f = field_on_grid(&vac, &grid, OrderingParam::new(0.0).unwrap(), Method::Auto).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-3);
        assert_eq!(f.method, "w1");
    }

    #[test]
    fn fock1_field_minimum_at_origin() {
        let one = fock_state(1, FockDim::new(4)).unwrap();
        let grid = PhaseSpaceGrid::square(-3.0, 3.0, 41).unwrap();
        let f = field_on_grid(&one, &grid, OrderingParam::new(0.0).unwrap(), Method::Auto).unwrap();
        let (k, min) = f
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
        assert!((min + 2.0 / PI).abs() < 1e-12);
        assert_eq!(k, 20 * 41 + 20);
    }

    #[test]
    fn w2_rejects_q_ordering_on_grid() {
        let vac = fock_state(0, FockDim::new(4)).unwrap();
        let grid = PhaseSpaceGrid::square(-1.0, 1.0, 5).unwrap();
        let s = OrderingParam::new(-1.0).unwrap();
        assert!(matches!(
            field_on_grid(&vac, &grid, s, Method::W2),
            Err(Error::OrderingOutOfRange { .. })
        ));
    }
}
