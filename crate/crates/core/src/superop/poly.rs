//! Multivariate polynomials with exact Gaussian-rational coefficients.
//!
//! Variables are real symbols: the ordering parameter `s` and the named
//! parameters of a master equation. Conjugation acts on coefficients only.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Gaussian rational `a + b i` with `a, b ∈ ℚ`.
pub type CRational = Complex<BigRational>;

/// Sorted `(variable, power)` pairs with positive powers.
pub type Monomial = Vec<(String, u32)>;

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn c_real(r: BigRational) -> CRational {
    Complex::new(r, BigRational::zero())
}

fn c_is_zero(c: &CRational) -> bool {
    c.re.is_zero() && c.im.is_zero()
}

/// Parses a decimal literal (`12`, `0.25`, `1e-3`, `2.5E2`) exactly.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], text[k + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int, frac) = match mantissa.find('.') {
        Some(k) => (&mantissa[..k], &mantissa[k + 1..]),
        None => (mantissa, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    Some(r)
}

/// Best exact rational for a finite `f64` (its exact binary value).
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::invalid(format!("{x} is not finite")))
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, CRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(c_real(BigRational::one()))
    }

    pub fn constant(c: CRational) -> Self {
        let mut p = Poly::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn real(r: BigRational) -> Self {
        Poly::constant(c_real(r))
    }

    pub fn int(n: i64) -> Self {
        Poly::real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Poly::real(rational(n, d))
    }

    pub fn imag_unit() -> Self {
        Poly::constant(Complex::new(BigRational::zero(), BigRational::one()))
    }

    pub fn var(name: &str) -> Self {
        let mut p = Poly::zero();
        p.add_term(vec![(name.to_string(), 1)], c_real(BigRational::one()));
        p
    }

    fn add_term(&mut self, m: Monomial, c: CRational) {
        if c_is_zero(&c) {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(CRational::zero);
        *slot = &*slot + c;
        if c_is_zero(slot) {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &CRational)> {
        self.terms.iter()
    }

    /// The constant value, if the polynomial has no variables.
    pub fn as_constant(&self) -> Option<CRational> {
        match self.terms.len() {
            0 => Some(CRational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn variables(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .terms
            .keys()
            .flat_map(|m| m.iter().map(|(n, _)| n.clone()))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn conj(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.conj())).collect(),
        }
    }

    pub fn scale(&self, c: &CRational) -> Poly {
        let mut out = Poly::zero();
        for (m, k) in &self.terms {
            out.add_term(m.clone(), k * c);
        }
        out
    }

    /// Divides by a nonzero constant.
    pub fn div_constant(&self, c: &CRational) -> Result<Poly> {
        if c_is_zero(c) {
            return Err(Error::Symbolic("division by zero".into()));
        }
        let inv = CRational::one() / c.clone();
        Ok(self.scale(&inv))
    }

    /// Substitutes exact values for some variables.
    pub fn substitute(&self, values: &BTreeMap<String, BigRational>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for (name, pow) in m {
                match values.get(name) {
                    Some(v) => {
                        let f = num_traits::pow(v.clone(), *pow as usize);
                        coeff = coeff * c_real(f);
                    }
                    None => rest.push((name.clone(), *pow)),
                }
            }
            out.add_term(rest, coeff);
        }
        out
    }

    /// Numeric value; `None` if a variable is unbound.
    pub fn eval(&self, values: &HashMap<String, f64>) -> Option<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut v = Complex64::new(c.re.to_f64()?, c.im.to_f64()?);
            for (name, pow) in m {
                v *= values.get(name)?.powi(*pow as i32);
            }
            acc += v;
        }
        Some(acc)
    }
}

fn mul_monomials(a: &Monomial, b: &Monomial) -> Monomial {
    let mut map: BTreeMap<String, u32> = a.iter().cloned().collect();
    for (n, p) in b {
        *map.entry(n.clone()).or_insert(0) += p;
    }
    map.into_iter().collect()
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(mul_monomials(ma, mb), ca * cb);
            }
        }
        out
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr for Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                (&self).$f(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn fmt_monomial(m: &Monomial) -> String {
    m.iter()
        .map(|(n, p)| if *p == 1 { n.clone() } else { format!("{n}^{p}") })
        .collect::<Vec<_>>()
        .join("*")
}

/// Renders as an expanded sum, e.g. `1/2*g + g*N - 1/2*g*s`; purely
/// imaginary coefficients print with the factor `i`.
impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // low total degree first, then by name
        let mut items: Vec<(&Monomial, &CRational)> = self.terms.iter().collect();
        items.sort_by_key(|(m, _)| (m.iter().map(|(_, p)| *p).sum::<u32>(), (*m).clone()));
        let mut first = true;
        for (m, c) in items {
            let (negative, body) = if c.im.is_zero() {
                (c.re.is_negative(), fmt_rational(&c.re.abs()))
            } else if c.re.is_zero() {
                let r = fmt_rational(&c.im.abs());
                let body = if c.im.abs().is_one() { "i".to_string() } else { format!("{r}*i") };
                (c.im.is_negative(), body)
            } else {
                let sign = if c.im.is_negative() { "-" } else { "+" };
                (false, format!("({} {sign} {}*i)", fmt_rational(&c.re), fmt_rational(&c.im.abs())))
            };
            let mono = fmt_monomial(m);
            let term = match (body.as_str(), mono.is_empty()) {
                (_, true) => body.clone(),
                ("1", false) => mono,
                (_, false) => format!("{body}*{mono}"),
            };
            match (first, negative) {
                (true, true) => write!(f, "-{term}")?,
                (true, false) => write!(f, "{term}")?,
                (false, true) => write!(f, " - {term}")?,
                (false, false) => write!(f, " + {term}")?,
            }
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("0.25").unwrap(), rational(1, 4));
        assert_eq!(parse_decimal("12").unwrap(), rational(12, 1));
        assert_eq!(parse_decimal("1e-3").unwrap(), rational(1, 1000));
        assert_eq!(parse_decimal("2.5E2").unwrap(), rational(250, 1));
        assert_eq!(parse_decimal(".5").unwrap(), rational(1, 2));
        assert!(parse_decimal("1.2.3").is_none());
        assert!(parse_decimal("e3").is_none());
    }

    #[test]
    fn ring_operations() {
        let s = Poly::var("s");
        let one = Poly::one();
        let a = &one - &s;
        let b = &one + &s;
        let prod = &a * &b;
        assert_eq!(prod, &one - &(&s * &s));
        assert!((&prod - &prod).is_zero());
        let i = Poly::imag_unit();
        assert_eq!(&i * &i, Poly::int(-1));
        assert_eq!((&i * &s).conj(), -&(&i * &s));
    }

    #[test]
    fn display_and_eval() {
        let g = Poly::var("g");
        let n = Poly::var("N");
        let s = Poly::var("s");
        let p = &(&g * &Poly::ratio(1, 2)) * &(&(&(&n * &Poly::int(2)) + &Poly::one()) - &s);
        assert_eq!(p.to_string(), "1/2*g + N*g - 1/2*g*s");
        let vals: HashMap<String, f64> = [("g", 1.0), ("N", 0.5), ("s", 0.0)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        assert_eq!(p.eval(&vals).unwrap(), Complex64::new(1.0, 0.0));
        assert!(p.eval(&HashMap::new()).is_none());
        assert_eq!((&Poly::imag_unit() * &Poly::int(-3)).to_string(), "-3*i");
        assert_eq!(Poly::zero().to_string(), "0");
    }

    #[test]
    fn substitution() {
        let s = Poly::var("s");
        let p = &(&s * &s) + &Poly::var("g");
        let mut vals = BTreeMap::new();
        vals.insert("s".to_string(), rational(1, 2));
        assert_eq!(p.substitute(&vals), &Poly::var("g") + &Poly::ratio(1, 4));
    }
}
