//! Special functions used across the crate: log-factorials, scaled
//! generalized Laguerre sequences, Gauss-Legendre rules and compensated sums.

use std::sync::OnceLock;

const LN_FACT_TABLE: usize = 4096;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_TABLE);
        t.push(0.0);
        let mut acc = 0.0f64;
        for k in 1..LN_FACT_TABLE {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    let table = ln_fact_table();
    if n < table.len() {
        return table[n];
    }
    // Stirling series, far past any table entry.
    let x = n as f64 + 1.0;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
}

/// A real number stored as `mantissa * exp(log_scale)` so that Laguerre
/// values of high degree do not overflow.
#[derive(Clone, Copy, Debug)]
pub struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn ln_abs(self) -> f64 {
        self.mantissa.abs().ln() + self.log_scale
    }

    pub fn signum(self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa.signum()
        }
    }

    pub fn value(self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }
}

const RESCALE_AT: f64 = 1e100;

/// `L_n^{(k)}(x)` for `n = 0..=n_max`, via the three-term recurrence with
/// running rescaling.
pub fn laguerre_sequence(n_max: usize, k: usize, x: f64) -> Vec<Scaled> {
    let kf = k as f64;
    let mut out = Vec::with_capacity(n_max + 1);
    let mut log_scale = 0.0;
    let mut prev = 1.0f64;
    out.push(Scaled { mantissa: prev, log_scale });
    if n_max == 0 {
        return out;
    }
    let mut cur = 1.0 + kf - x;
    out.push(Scaled { mantissa: cur, log_scale });
    for n in 1..n_max {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf + kf) * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT || prev.abs() > RESCALE_AT {
            cur /= RESCALE_AT;
            prev /= RESCALE_AT;
            log_scale += RESCALE_AT.ln();
        }
        out.push(Scaled { mantissa: cur, log_scale });
    }
    out
}

/// Single value `L_n^{(k)}(x)` (unscaled; caller must know it fits in f64).
pub fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    laguerre_sequence(n, k, x)[n].value()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorial_small_and_stirling() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-14);
        let direct: f64 = (1..=5000).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(5000) - direct).abs() / direct < 1e-12);
    }

    #[test]
    fn laguerre_matches_explicit_polynomials() {
        // L_2^{(1)}(x) = (x^2 - 6x + 6)/2, L_3^{(0)}(x) = (-x^3 + 9x^2 - 18x + 6)/6
        for &x in &[0.0, 0.7, 3.2, 11.0] {
            let l2 = laguerre(2, 1, x);
            assert!((l2 - (x * x - 6.0 * x + 6.0) / 2.0).abs() < 1e-12);
            let l3 = laguerre(3, 0, x);
            let expect = (-x * x * x + 9.0 * x * x - 18.0 * x + 6.0) / 6.0;
            assert!((l3 - expect).abs() < 1e-10 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn laguerre_rescales_without_overflow() {
        let seq = laguerre_sequence(600, 3, 2000.0);
        let last = seq[600];
        assert!(last.ln_abs().is_finite());
        assert!(last.ln_abs() > 300.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(12);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((q - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::default();
        for v in [1e16, 1.0, -1e16, 1.0] {
            s.add(v);
        }
        assert_eq!(s.value(), 2.0);
    }
}
