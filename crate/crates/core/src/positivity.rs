//! Where on the `s` axis does `W_s` stop being nonnegative?
//!
//! Positivity is certified on grid nodes only; the grid is part of every
//! report.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::special::CompensatedSum;
use crate::wigner::{field_on_grid, Method, OrderingParam, PhaseSpaceGrid, WignerField, DEFAULT_S_CAP};

/// Slack separating roundoff from genuine negativity.
pub const EPS_POS: f64 = 1e-9;

/// Smallest grid value and the node where it occurs (first in row-major
/// order on ties).
pub fn min_on_grid(field: &WignerField) -> (f64, Complex64) {
    let g = &field.grid;
    let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0));
    for i in 0..g.n_re {
        for j in 0..g.n_im {
            let v = field.at(i, j);
            if v < best.0 {
                best = (v, g.node(i, j));
            }
        }
    }
    best
}

/// Closed-form `W_s(0) = (2/(π(1-s))) Σ_n ρ_nn ((s+1)/(s-1))^n`.
pub fn parity_point_value(rho: &DensityMatrix, s: f64) -> Result<f64> {
    if !(s < 1.0) || !s.is_finite() {
        return Err(Error::OrderingOutOfRange {
            s,
            context: "parity point value (s < 1)",
        });
    }
    let kappa = (s + 1.0) / (s - 1.0);
    let mut acc = CompensatedSum::default();
    let mut p = 1.0;
    for n in 0..rho.dim().size() {
        acc.add(rho.get(n, n).re * p);
        p *= kappa;
    }
    Ok(2.0 / (PI * (1.0 - s)) * acc.value())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub s_lo: f64,
    pub s_hi: f64,
    pub tol_s: f64,
    pub eps_pos: f64,
    pub method: Method,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            s_lo: -1.0,
            s_hi: DEFAULT_S_CAP,
            tol_s: 1e-3,
            eps_pos: EPS_POS,
            method: Method::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub s_star: f64,
    /// `(s, min W_s)` for every ordering evaluated, sorted by `s`.
    pub min_curve: Vec<(f64, f64)>,
    pub grid: PhaseSpaceGrid,
    pub flags: Vec<String>,
}

pub const FLAG_BELOW_RANGE: &str = "positive only below scan range";
pub const FLAG_WHOLE_RANGE: &str = "positive throughout scan range";

/// Largest `s` in `[s_lo, s_hi]` (to `tol_s`) whose field is nonnegative
/// (within `eps_pos`) on every grid node, by bisection. Bisection assumes the
/// predicate is monotone in `s`, which the convolution relation guarantees
/// for the exact functions.
pub fn max_positive_s(rho: &DensityMatrix, grid: &PhaseSpaceGrid, opts: &ScanOptions) -> Result<PositivityReport> {
    if !(opts.s_lo < opts.s_hi) || !(opts.tol_s > 0.0) {
        return Err(Error::invalid("scan needs s_lo < s_hi and tol_s > 0"));
    }
    let mut curve = Vec::new();
    let mut min_at = |s: f64| -> Result<f64> {
        let cap = opts.s_hi.max(DEFAULT_S_CAP);
        let field = field_on_grid(rho, grid, OrderingParam::with_cap(s, cap)?, opts.method)?;
        let m = min_on_grid(&field).0;
        curve.push((s, m));
        Ok(m)
    };
    let mut flags = Vec::new();
    let s_star = if min_at(opts.s_lo)? < -opts.eps_pos {
        flags.push(FLAG_BELOW_RANGE.to_string());
        opts.s_lo
    } else if min_at(opts.s_hi)? >= -opts.eps_pos {
        flags.push(FLAG_WHOLE_RANGE.to_string());
        opts.s_hi
    } else {
        let (mut lo, mut hi) = (opts.s_lo, opts.s_hi);
        while hi - lo > opts.tol_s {
            let mid = 0.5 * (lo + hi);
            if min_at(mid)? >= -opts.eps_pos {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(PositivityReport {
        s_star,
        min_curve: curve,
        grid: *grid,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{cat_state, fock_state, FockDim};

    #[test]
    fn min_on_grid_examples() {
        let grid = PhaseSpaceGrid::square(-4.0, 4.0, 41).unwrap();
        let s0 = OrderingParam::new(0.0).unwrap();
        let vac = fock_state(0, FockDim::new(6)).unwrap();
        let (v, _) = min_on_grid(&field_on_grid(&vac, &grid, s0, Method::Auto).unwrap());
        assert!(v >= 0.0 && v < 1e-12);
        let one = fock_state(1, FockDim::new(6)).unwrap();
        let (v, at) = min_on_grid(&field_on_grid(&one, &grid, s0, Method::Auto).unwrap());
        assert!((v + 2.0 / PI).abs() < 1e-12);
        assert!(at.norm() < 1e-12);
        let cat = cat_state(Complex64::new(2.0, 0.0), 1, FockDim::new(30)).unwrap();
        let (v, at) = min_on_grid(&field_on_grid(&cat, &grid, s0, Method::Auto).unwrap());
        assert!(v < -0.1);
        assert!(at.norm() < 1.0);
    }

    #[test]
    fn parity_point_examples() {
        let three = fock_state(3, FockDim::new(5)).unwrap();
        assert!(parity_point_value(&three, -0.2).unwrap() < 0.0);
        let vac = fock_state(0, FockDim::new(5)).unwrap();
        for &s in &[-3.0, -0.5, 0.7] {
            let want = 2.0 / (PI * (1.0 - s));
            assert!((parity_point_value(&vac, s).unwrap() - want).abs() < 1e-15);
        }
        let cat = cat_state(Complex64::new(1.0, 0.0), -1, FockDim::new(25)).unwrap();
        let parity: f64 = (0..26).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * cat.get(n, n).re).sum();
        assert!((parity_point_value(&cat, 0.0).unwrap() - 2.0 / PI * parity).abs() < 1e-14);
        assert!(parity_point_value(&vac, 1.0).is_err());
    }

    #[test]
    fn fock1_is_negative_above_minus_one() {
        let one = fock_state(1, FockDim::new(8)).unwrap();
        let grid = PhaseSpaceGrid::square(-3.0, 3.0, 21).unwrap();
        let r = max_positive_s(&one, &grid, &ScanOptions::default()).unwrap();
        assert!((r.s_star + 1.0).abs() <= 1e-3);
        let w = r.min_curve.windows(2).all(|p| p[0].0 <= p[1].0);
        assert!(w);
    }

    #[test]
    fn flags_for_out_of_range_scans() {
        let one = fock_state(1, FockDim::new(8)).unwrap();
        let grid = PhaseSpaceGrid::square(-3.0, 3.0, 21).unwrap();
        let opts = ScanOptions {
            s_lo: -0.5,
            s_hi: 0.5,
            ..ScanOptions::default()
        };
        let r = max_positive_s(&one, &grid, &opts).unwrap();
        assert_eq!(r.s_star, -0.5);
        assert_eq!(r.flags, vec![FLAG_BELOW_RANGE.to_string()]);
        let vac = fock_state(0, FockDim::new(8)).unwrap();
        let r = max_positive_s(&vac, &grid, &opts).unwrap();
        assert_eq!(r.s_star, 0.5);
        assert_eq!(r.flags, vec![FLAG_WHOLE_RANGE.to_string()]);
        let bad = ScanOptions { s_lo: 0.5, s_hi: 0.5, ..opts };
        assert!(max_positive_s(&vac, &grid, &bad).is_err());
    }
}
