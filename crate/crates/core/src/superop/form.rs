//! Differential forms `Σ c_{pqrt} α^p ᾱ^q ∂α^r ∂ᾱ^t` acting on `W_s`.
//!
//! Terms are kept in normal order (multiplications left of derivatives) so
//! equality of forms is equality of term maps.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::poly::{Poly, CRational};
use crate::error::{Error, Result};

/// Exponents `(p, q, r, t)` of `α, ᾱ, ∂α, ∂ᾱ`.
pub type Exponents = (u32, u32, u32, u32);

/// The ordering parameter a form is built for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ordering {
    /// `s` stays an indeterminate named `s`.
    Symbolic,
    Fixed(BigRational),
}

impl Ordering {
    pub fn fixed_f64(s: f64) -> Result<Self> {
        Ok(Ordering::Fixed(super::poly::rational_from_f64(s)?))
    }

    pub fn s_poly(&self) -> Poly {
        match self {
            Ordering::Symbolic => Poly::var("s"),
            Ordering::Fixed(v) => Poly::real(v.clone()),
        }
    }

    fn bind(&self, p: &Poly) -> Poly {
        match self {
            Ordering::Symbolic => p.clone(),
            Ordering::Fixed(v) => {
                let mut m = BTreeMap::new();
                m.insert("s".to_string(), v.clone());
                p.substitute(&m)
            }
        }
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ordering::Symbolic => write!(f, "symbolic"),
            Ordering::Fixed(v) => write!(f, "{}", Poly::real(v.clone())),
        }
    }
}

/// The eight super-operators with tabulated forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasicOp {
    /// `aρ`
    LeftA,
    /// `a†ρ`
    LeftAd,
    /// `ρa`
    RightA,
    /// `ρa†`
    RightAd,
    /// `aρa†`
    ASandwichAd,
    /// `a†ρa`
    AdSandwichA,
    /// `a†aρ`
    LeftNumber,
    /// `ρa†a`
    RightNumber,
}

impl BasicOp {
    pub const ALL: [BasicOp; 8] = [
        BasicOp::LeftA,
        BasicOp::LeftAd,
        BasicOp::RightA,
        BasicOp::RightAd,
        BasicOp::ASandwichAd,
        BasicOp::AdSandwichA,
        BasicOp::LeftNumber,
        BasicOp::RightNumber,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BasicOp::LeftA => "a·",
            BasicOp::LeftAd => "a†·",
            BasicOp::RightA => "·a",
            BasicOp::RightAd => "·a†",
            BasicOp::ASandwichAd => "a·a†",
            BasicOp::AdSandwichA => "a†·a",
            BasicOp::LeftNumber => "a†a·",
            BasicOp::RightNumber => "·a†a",
        }
    }

    /// The operator whose form is the adjoint of this one (`Ô· ↔ ·Ô†`).
    pub fn adjoint(self) -> BasicOp {
        match self {
            BasicOp::LeftA => BasicOp::RightAd,
            BasicOp::LeftAd => BasicOp::RightA,
            BasicOp::RightA => BasicOp::LeftAd,
            BasicOp::RightAd => BasicOp::LeftA,
            BasicOp::ASandwichAd => BasicOp::ASandwichAd,
            BasicOp::AdSandwichA => BasicOp::AdSandwichA,
            BasicOp::LeftNumber => BasicOp::RightNumber,
            BasicOp::RightNumber => BasicOp::LeftNumber,
        }
    }
}

/// Accepts `a·` style names, with `.` for `·` and `ad` for `a†`.
impl FromStr for BasicOp {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        let norm = text.trim().replace('·', ".").replace("a†", "ad");
        let op = match norm.as_str() {
            "a." => BasicOp::LeftA,
            "ad." => BasicOp::LeftAd,
            ".a" => BasicOp::RightA,
            ".ad" => BasicOp::RightAd,
            "a.ad" => BasicOp::ASandwichAd,
            "ad.a" => BasicOp::AdSandwichA,
            "ada." => BasicOp::LeftNumber,
            ".ada" => BasicOp::RightNumber,
            _ => return Err(Error::Symbolic(format!("unknown super-operator {text:?}"))),
        };
        Ok(op)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffForm {
    terms: BTreeMap<Exponents, Poly>,
    ordering: Ordering,
}

fn falling(n: u32, k: u32) -> i64 {
    (0..k).map(|j| (n - j) as i64).product()
}

fn binom(n: u32, k: u32) -> i64 {
    let mut c: i64 = 1;
    for j in 0..k {
        c = c * (n - j) as i64 / (j + 1) as i64;
    }
    c
}

impl DiffForm {
    pub fn zero(ordering: Ordering) -> Self {
        DiffForm {
            terms: BTreeMap::new(),
            ordering,
        }
    }

    pub fn identity(ordering: Ordering) -> Self {
        Self::zero(ordering).with_term((0, 0, 0, 0), Poly::one())
    }

    /// Adds `c · α^p ᾱ^q ∂α^r ∂ᾱ^t`.
    pub fn with_term(mut self, e: Exponents, c: Poly) -> Self {
        self.add_term(e, c);
        self
    }

    fn add_term(&mut self, e: Exponents, c: Poly) {
        let c = self.ordering.bind(&c);
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_default();
        *slot = &*slot + &c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn ordering(&self) -> &Ordering {
        &self.ordering
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Poly)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: Exponents) -> Poly {
        self.terms.get(&e).cloned().unwrap_or_default()
    }

    /// Highest `r + t` present (0 for the zero form).
    pub fn derivative_order(&self) -> u32 {
        self.terms.keys().map(|&(_, _, r, t)| r + t).max().unwrap_or(0)
    }

    fn check_same(&self, other: &DiffForm) -> Result<()> {
        if self.ordering != other.ordering {
            return Err(Error::Symbolic(format!(
                "forms built for different orderings ({} vs {})",
                self.ordering, other.ordering
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &DiffForm) -> Result<DiffForm> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Poly) -> DiffForm {
        let mut out = DiffForm::zero(self.ordering.clone());
        for (e, k) in &self.terms {
            out.add_term(*e, k * c);
        }
        out
    }

    pub fn scale_constant(&self, c: &CRational) -> DiffForm {
        self.scale(&Poly::constant(c.clone()))
    }

    /// `f ∘ g`: apply `g` first, then `f`, re-normal-ordered with
    /// `∂^r x^p = Σ_k C(r,k) (p)_k x^{p-k} ∂^{r-k}`.
    pub fn compose(f: &DiffForm, g: &DiffForm) -> Result<DiffForm> {
        f.check_same(g)?;
        let mut out = DiffForm::zero(f.ordering.clone());
        for (&(p, q, r, t), cf) in &f.terms {
            for (&(p2, q2, r2, t2), cg) in &g.terms {
                let c = cf * cg;
                for k in 0..=r.min(p2) {
                    let ck = binom(r, k) * falling(p2, k);
                    for l in 0..=t.min(q2) {
                        let cl = binom(t, l) * falling(q2, l);
                        let e = (p + p2 - k, q + q2 - l, r - k + r2, t - l + t2);
                        out.add_term(e, &c * &Poly::int(ck * cl));
                    }
                }
            }
        }
        Ok(out)
    }

    /// `[f, g] = f∘g − g∘f`.
    pub fn commutator(f: &DiffForm, g: &DiffForm) -> Result<DiffForm> {
        let fg = Self::compose(f, g)?;
        let gf = Self::compose(g, f)?;
        fg.add(&gf.scale(&Poly::int(-1)))
    }

    /// Form of `·Ô†` from the form of `Ô·`: conjugate coefficients and swap
    /// `α ↔ ᾱ`, `∂α ↔ ∂ᾱ`.
    pub fn adjoint(&self) -> DiffForm {
        let mut out = DiffForm::zero(self.ordering.clone());
        for (&(p, q, r, t), c) in &self.terms {
            out.add_term((q, p, t, r), c.conj());
        }
        out
    }

    /// Substitutes exact values for named parameters; binding `s` turns a
    /// symbolic form into a fixed one.
    pub fn bind(&self, values: &BTreeMap<String, BigRational>) -> DiffForm {
        let ordering = match (&self.ordering, values.get("s")) {
            (Ordering::Symbolic, Some(v)) => Ordering::Fixed(v.clone()),
            (o, _) => o.clone(),
        };
        let mut out = DiffForm::zero(ordering);
        for (e, c) in &self.terms {
            out.add_term(*e, c.substitute(values));
        }
        out
    }

    /// Rewrites the form with derivatives to the left:
    /// `x^p ∂^r = Σ_k (−1)^k C(r,k) (p)_k ∂^{r-k} x^{p-k}` per variable.
    pub fn divergence_form(&self) -> DivergenceForm {
        let mut terms: BTreeMap<Exponents, Poly> = BTreeMap::new();
        for (&(p, q, r, t), c) in &self.terms {
            for k in 0..=r.min(p) {
                let ck = binom(r, k) * falling(p, k) * if k % 2 == 0 { 1 } else { -1 };
                for l in 0..=t.min(q) {
                    let cl = binom(t, l) * falling(q, l) * if l % 2 == 0 { 1 } else { -1 };
                    let e = (p - k, q - l, r - k, t - l);
                    let slot = terms.entry(e).or_default();
                    *slot = &*slot + &(c * &Poly::int(ck * cl));
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        DivergenceForm {
            terms,
            ordering: self.ordering.clone(),
        }
    }
}

/// True when a left-word form and a right-word form commute.
pub fn left_right_commute_check(f_left: &DiffForm, g_right: &DiffForm) -> Result<bool> {
    Ok(DiffForm::commutator(f_left, g_right)?.is_zero())
}

/// The tabulated form of a basic super-operator.
pub fn basic_form(op: BasicOp, ordering: &Ordering) -> DiffForm {
    let s = ordering.s_poly();
    let one = Poly::one();
    let half = Poly::ratio(1, 2);
    // u = (1-s)/2, v = (1+s)/2
    let u = &half * &(&one - &s);
    let v = &half * &(&one + &s);
    let z = DiffForm::zero(ordering.clone());
    let sandwich = |c: &Poly, sq: Poly| {
        z.clone()
            .with_term((1, 1, 0, 0), one.clone())
            .with_term((0, 0, 0, 0), c.clone())
            .with_term((1, 0, 1, 0), c.clone())
            .with_term((0, 1, 0, 1), c.clone())
            .with_term((0, 0, 1, 1), sq)
    };
    let uv = &u * &v;
    match op {
        BasicOp::LeftA => z.with_term((1, 0, 0, 0), one).with_term((0, 0, 0, 1), u),
        BasicOp::LeftAd => z.with_term((0, 1, 0, 0), one).with_term((0, 0, 1, 0), -&v),
        BasicOp::RightA => z.with_term((1, 0, 0, 0), one).with_term((0, 0, 0, 1), -&v),
        BasicOp::RightAd => z.with_term((0, 1, 0, 0), one).with_term((0, 0, 1, 0), u),
        BasicOp::ASandwichAd => sandwich(&u, &u * &u),
        BasicOp::AdSandwichA => sandwich(&-&v, &v * &v),
        BasicOp::LeftNumber => z
            .with_term((1, 1, 0, 0), one)
            .with_term((0, 1, 0, 1), u)
            .with_term((1, 0, 1, 0), -&v)
            .with_term((0, 0, 0, 0), -&v)
            .with_term((0, 0, 1, 1), -&uv),
        BasicOp::RightNumber => z
            .with_term((1, 1, 0, 0), one)
            .with_term((1, 0, 1, 0), u)
            .with_term((0, 1, 0, 1), -&v)
            .with_term((0, 0, 0, 0), -&v)
            .with_term((0, 0, 1, 1), -&uv),
    }
}

/// `Σ c ∂α^r ∂ᾱ^t (α^p ᾱ^q ·)`, keyed by the same `(p, q, r, t)` tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivergenceForm {
    pub terms: BTreeMap<Exponents, Poly>,
    pub ordering: Ordering,
}

impl DivergenceForm {
    pub fn coeff(&self, e: Exponents) -> Poly {
        self.terms.get(&e).cloned().unwrap_or_default()
    }
}

fn fmt_factor(f: &mut String, sym: &str, pow: u32) {
    if pow == 0 {
        return;
    }
    if !f.is_empty() {
        f.push(' ');
    }
    f.push_str(sym);
    if pow > 1 {
        f.push_str(&format!("^{pow}"));
    }
}

pub(crate) fn fmt_monomial(e: Exponents, derivatives_first: bool) -> String {
    let (p, q, r, t) = e;
    let mut s = String::new();
    if derivatives_first {
        fmt_factor(&mut s, "∂α", r);
        fmt_factor(&mut s, "∂ᾱ", t);
    }
    fmt_factor(&mut s, "α", p);
    fmt_factor(&mut s, "ᾱ", q);
    if !derivatives_first {
        fmt_factor(&mut s, "∂α", r);
        fmt_factor(&mut s, "∂ᾱ", t);
    }
    if s.is_empty() {
        s.push('1');
    }
    s
}

fn fmt_terms(f: &mut fmt::Formatter<'_>, terms: &BTreeMap<Exponents, Poly>, div: bool) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    let parts: Vec<String> = terms
        .iter()
        .map(|(e, c)| format!("({c})·{}", fmt_monomial(*e, div)))
        .collect();
    write!(f, "{}", parts.join(" + "))
}

impl fmt::Display for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, &self.terms, false)
    }
}

impl fmt::Display for DivergenceForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, &self.terms, true)
    }
}
