//! Fokker-Planck coefficients of a compiled generator.
//!
//! Terms are read in divergence form `∂α^r ∂ᾱ^t (α^p ᾱ^q W)`, where
//! first-order terms are drifts and `∂α∂ᾱ` is diffusion.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::form::{DiffForm, Exponents, Ordering};
use super::parse::parse_coefficient;
use super::poly::Poly;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpTerm {
    /// `(p, q, r, t)` of `∂α^r ∂ᾱ^t (α^p ᾱ^q ·)`.
    pub exponents: Exponents,
    pub coeff: Poly,
}

impl FpTerm {
    pub fn order(&self) -> u32 {
        self.exponents.2 + self.exponents.3
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpSpec {
    pub ordering: Ordering,
    /// Coefficient of `∂α(α ·)`.
    pub drift_alpha: Poly,
    /// Coefficient of `∂ᾱ(ᾱ ·)`.
    pub drift_conj: Poly,
    /// Coefficient of `∂α∂ᾱ`.
    pub diffusion: Poly,
    /// Remaining first- and second-order terms.
    pub other_terms: Vec<FpTerm>,
    /// Derivative-free terms; empty for trace-preserving generators.
    pub order0_terms: Vec<FpTerm>,
    /// Terms of derivative order above two.
    pub residual_terms: Vec<FpTerm>,
}

const DRIFT_ALPHA: Exponents = (1, 0, 1, 0);
const DRIFT_CONJ: Exponents = (0, 1, 0, 1);
const DIFFUSION: Exponents = (0, 0, 1, 1);

/// Splits a generator by derivative order.
pub fn extract_fp(f: &DiffForm) -> FpSpec {
    let d = f.divergence_form();
    let mut spec = FpSpec {
        ordering: f.ordering().clone(),
        drift_alpha: d.coeff(DRIFT_ALPHA),
        drift_conj: d.coeff(DRIFT_CONJ),
        diffusion: d.coeff(DIFFUSION),
        other_terms: Vec::new(),
        order0_terms: Vec::new(),
        residual_terms: Vec::new(),
    };
    for (&e, c) in &d.terms {
        if e == DRIFT_ALPHA || e == DRIFT_CONJ || e == DIFFUSION {
            continue;
        }
        let term = FpTerm {
            exponents: e,
            coeff: c.clone(),
        };
        match term.order() {
            0 => spec.order0_terms.push(term),
            1 | 2 => spec.other_terms.push(term),
            _ => spec.residual_terms.push(term),
        }
    }
    spec
}

impl FpSpec {
    /// No derivative-free term, so `∫ ∂ₜW d²α = 0`.
    pub fn trace_preserving(&self) -> bool {
        self.order0_terms.is_empty()
    }

    pub fn drift_conjugate(&self) -> bool {
        self.drift_conj == self.drift_alpha.conj()
    }

    /// Substitutes parameter values (and `s`, if symbolic).
    pub fn bind(&self, values: &BTreeMap<String, BigRational>) -> FpSpec {
        let mut values = values.clone();
        let ordering = match (&self.ordering, values.get("s")) {
            (Ordering::Symbolic, Some(v)) => Ordering::Fixed(v.clone()),
            (Ordering::Fixed(v), _) => {
                values.insert("s".into(), v.clone());
                Ordering::Fixed(v.clone())
            }
            (o, None) => o.clone(),
        };
        let sub = |p: &Poly| p.substitute(&values);
        let terms = |ts: &[FpTerm]| -> Vec<FpTerm> {
            ts.iter()
                .map(|t| FpTerm {
                    exponents: t.exponents,
                    coeff: sub(&t.coeff),
                })
                .filter(|t| !t.coeff.is_zero())
                .collect()
        };
        FpSpec {
            ordering,
            drift_alpha: sub(&self.drift_alpha),
            drift_conj: sub(&self.drift_conj),
            diffusion: sub(&self.diffusion),
            other_terms: terms(&self.other_terms),
            order0_terms: terms(&self.order0_terms),
            residual_terms: terms(&self.residual_terms),
        }
    }

    /// Free symbols remaining in any coefficient.
    pub fn free_symbols(&self) -> Vec<String> {
        let mut v: Vec<String> = [&self.drift_alpha, &self.drift_conj, &self.diffusion]
            .into_iter()
            .chain(self.other_terms.iter().map(|t| &t.coeff))
            .chain(self.order0_terms.iter().map(|t| &t.coeff))
            .chain(self.residual_terms.iter().map(|t| &t.coeff))
            .flat_map(|p| p.variables())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn to_json(&self) -> FpSpecJson {
        let terms = |ts: &[FpTerm]| {
            ts.iter()
                .map(|t| FpTermJson {
                    alpha: t.exponents.0,
                    alpha_conj: t.exponents.1,
                    d_alpha: t.exponents.2,
                    d_alpha_conj: t.exponents.3,
                    coeff: t.coeff.to_string(),
                })
                .collect()
        };
        FpSpecJson {
            s: self.ordering.to_string(),
            drift_alpha: self.drift_alpha.to_string(),
            drift_conj: self.drift_conj.to_string(),
            diffusion: self.diffusion.to_string(),
            other_terms: terms(&self.other_terms),
            order0_terms: terms(&self.order0_terms),
            residual_terms: terms(&self.residual_terms),
            trace_preserving: self.trace_preserving(),
            drift_conjugate: self.drift_conjugate(),
        }
    }

    pub fn from_json(j: &FpSpecJson) -> Result<FpSpec> {
        let ordering = if j.s == "symbolic" {
            Ordering::Symbolic
        } else {
            let c = parse_coefficient(&j.s)?
                .as_constant()
                .filter(|c| c.im.is_zero())
                .ok_or_else(|| Error::Format(format!("s must be 'symbolic' or a real number, got {:?}", j.s)))?;
            Ordering::Fixed(c.re)
        };
        let terms = |ts: &[FpTermJson]| -> Result<Vec<FpTerm>> {
            ts.iter()
                .map(|t| {
                    Ok(FpTerm {
                        exponents: (t.alpha, t.alpha_conj, t.d_alpha, t.d_alpha_conj),
                        coeff: parse_coefficient(&t.coeff)?,
                    })
                })
                .collect()
        };
        Ok(FpSpec {
            ordering,
            drift_alpha: parse_coefficient(&j.drift_alpha)?,
            drift_conj: parse_coefficient(&j.drift_conj)?,
            diffusion: parse_coefficient(&j.diffusion)?,
            other_terms: terms(&j.other_terms)?,
            order0_terms: terms(&j.order0_terms)?,
            residual_terms: terms(&j.residual_terms)?,
        })
    }
}

/// Serialized form: coefficients as polynomial strings in `s` and the
/// named parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpSpecJson {
    pub s: String,
    pub drift_alpha: String,
    pub drift_conj: String,
    pub diffusion: String,
    #[serde(default)]
    pub other_terms: Vec<FpTermJson>,
    #[serde(default)]
    pub order0_terms: Vec<FpTermJson>,
    #[serde(default)]
    pub residual_terms: Vec<FpTermJson>,
    #[serde(default)]
    pub trace_preserving: bool,
    #[serde(default)]
    pub drift_conjugate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpTermJson {
    pub alpha: u32,
    pub alpha_conj: u32,
    pub d_alpha: u32,
    pub d_alpha_conj: u32,
    pub coeff: String,
}
