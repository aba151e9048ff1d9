//! Master-equation DSL.
//!
//! ```text
//! params: g, N                      # optional; restricts identifiers
//! -(g/2)*(N+1)*(ad*a*rho + rho*ad*a - 2*a*rho*ad)
//!   - (g/2)*N*(a*ad*rho + rho*a*ad - 2*ad*rho*a)
//! ```
//!
//! `expr := term (('+'|'-') term)*`, `term := unary (('*'|'/') unary)*`,
//! `unary := '-' unary | power`, `power := atom ('^' integer)?`,
//! `atom := number | 'i' | 'a' | 'ad' | 'rho' | ident | '(' expr ')'`.
//! Products are expanded; every resulting monomial must hold exactly one
//! `rho`. Division is by nonzero numeric constants only.

use std::collections::BTreeMap;
use std::fmt;

use super::poly::{parse_decimal, Poly};
use crate::error::{Error, Result};

pub const RESERVED: [&str; 5] = ["a", "ad", "rho", "i", "s"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ladder {
    A,
    Ad,
}

impl Ladder {
    pub fn dagger(self) -> Ladder {
        match self {
            Ladder::A => Ladder::Ad,
            Ladder::Ad => Ladder::A,
        }
    }

    fn token(self) -> &'static str {
        match self {
            Ladder::A => "a",
            Ladder::Ad => "ad",
        }
    }
}

/// `L₁⋯L_k ρ R₁⋯R_m`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SuperOpWord {
    pub left: Vec<Ladder>,
    pub right: Vec<Ladder>,
}

impl fmt::Display for SuperOpWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self
            .left
            .iter()
            .map(|l| l.token())
            .chain(std::iter::once("rho"))
            .chain(self.right.iter().map(|l| l.token()))
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeqTerm {
    pub coeff: Poly,
    pub word: SuperOpWord,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterEquation {
    /// Declared or discovered parameter names, sorted.
    pub params: Vec<String>,
    /// Distinct words with nonzero coefficients, sorted by word.
    pub terms: Vec<MeqTerm>,
}

impl fmt::Display for MasterEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|t| format!("({})*{}", t.coeff, t.word)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str, first_line: usize) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = first_line + k;
        let body = raw.split('#').next().unwrap_or("");
        let chars: Vec<char> = body.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent only when followed by a digit or sign+digit
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Num(lit), line, column });
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let id: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Ident(id), line, column });
            } else if "+-*/^()".contains(c) {
                out.push(Token { tok: Tok::Op(c), line, column });
                i += 1;
            } else {
                return Err(perr(line, column, format!("unexpected character {c:?}")));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sym {
    A,
    Ad,
    Rho,
}

/// Expanded value: sum of `coeff · word`, each with the position of the
/// monomial's first factor.
type Value = Vec<(Poly, Vec<Sym>, (usize, usize))>;

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    params: Option<Vec<String>>,
    operators: bool,
    end: (usize, usize),
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.column)).unwrap_or(self.end)
    }

    fn eat(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Token { tok: Tok::Op(o), .. }) if *o == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Value> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc.extend(self.term()?);
            } else if self.eat('-') {
                acc.extend(negate(self.term()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Value> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                let rhs = self.unary()?;
                acc = multiply(&acc, &rhs);
            } else if matches!(self.peek(), Some(Token { tok: Tok::Op('/'), .. })) {
                let (line, column) = self.here();
                self.pos += 1;
                let rhs = self.unary()?;
                let c = constant_of(&rhs).ok_or_else(|| perr(line, column, "division only by numeric constants"))?;
                let inv = Poly::one()
                    .div_constant(&c)
                    .map_err(|_| perr(line, column, "division by zero"))?;
                acc = multiply(&acc, &vec![(inv, Vec::new(), (line, column))]);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Value> {
        if self.eat('-') {
            return Ok(negate(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Value> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let (line, column) = self.here();
        let n = match self.peek() {
            Some(Token { tok: Tok::Num(lit), .. }) => lit.parse::<u32>().ok(),
            _ => None,
        }
        .filter(|n| *n <= 16)
        .ok_or_else(|| perr(line, column, "exponent must be an integer literal in 0..=16"))?;
        self.pos += 1;
        let mut acc: Value = vec![(Poly::one(), Vec::new(), (line, column))];
        for _ in 0..n {
            acc = multiply(&acc, &base);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Value> {
        let (line, column) = self.here();
        let at = (line, column);
        let Some(tok) = self.peek().cloned() else {
            return Err(perr(line, column, "unexpected end of input"));
        };
        self.pos += 1;
        let single = |p: Poly, w: Vec<Sym>| Ok(vec![(p, w, at)]);
        match tok.tok {
            Tok::Num(lit) => {
                let r = parse_decimal(&lit).ok_or_else(|| perr(line, column, format!("bad number {lit:?}")))?;
                single(Poly::real(r), Vec::new())
            }
            Tok::Op('(') => {
                let inner = self.expr()?;
                if !self.eat(')') {
                    let (l, c) = self.here();
                    return Err(perr(l, c, "expected ')'"));
                }
                Ok(inner)
            }
            Tok::Op(c) => Err(perr(line, column, format!("unexpected {c:?}"))),
            Tok::Ident(id) => match id.as_str() {
                "i" => single(Poly::imag_unit(), Vec::new()),
                "a" | "ad" | "rho" if self.operators => {
                    let sym = match id.as_str() {
                        "a" => Sym::A,
                        "ad" => Sym::Ad,
                        _ => Sym::Rho,
                    };
                    single(Poly::one(), vec![sym])
                }
                "s" if !self.operators => single(Poly::var("s"), Vec::new()),
                _ if RESERVED.contains(&id.as_str()) => {
                    Err(perr(line, column, format!("reserved identifier {id:?} not allowed here")))
                }
                _ => {
                    if let Some(ps) = &self.params {
                        if !ps.contains(&id) {
                            return Err(perr(line, column, format!("unknown identifier {id:?}")));
                        }
                    }
                    single(Poly::var(&id), Vec::new())
                }
            },
        }
    }
}

fn negate(v: Value) -> Value {
    v.into_iter().map(|(c, w, at)| (-&c, w, at)).collect()
}

fn multiply(a: &Value, b: &Value) -> Value {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (ca, wa, at) in a {
        for (cb, wb, _) in b {
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            out.push((ca * cb, w, *at));
        }
    }
    out
}

/// The value as a single numeric constant, if it is one.
fn constant_of(v: &Value) -> Option<super::poly::CRational> {
    let mut total = Poly::zero();
    for (c, w, _) in v {
        if !w.is_empty() {
            return None;
        }
        total = &total + c;
    }
    total.as_constant()
}

fn parse_params_line(rest: &str, line: usize, offset: usize) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut column = offset + 1;
    for part in rest.split(',') {
        let name = part.trim();
        let col = column + part.len() - part.trim_start().len();
        column += part.len() + 1;
        if name.is_empty() && rest.trim().is_empty() {
            break;
        }
        let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(perr(line, col, format!("bad parameter name {name:?}")));
        }
        if RESERVED.contains(&name) {
            return Err(perr(line, col, format!("reserved identifier {name:?} cannot be a parameter")));
        }
        out.push(name.to_string());
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn run_parser(tokens: &[Token], params: Option<Vec<String>>, operators: bool) -> Result<Value> {
    let Some(last) = tokens.last() else {
        return Ok(Vec::new());
    };
    let width = match &last.tok {
        Tok::Num(t) | Tok::Ident(t) => t.len(),
        Tok::Op(_) => 1,
    };
    let end = (last.line, last.column + width);
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        params,
        operators,
        end,
    };
    let v = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(perr(t.line, t.column, format!("unexpected {:?}", t.tok)));
    }
    Ok(v)
}

/// Parses a master-equation generator `dρ/dt = ...` (right-hand side only).
pub fn parse_master_equation(text: &str) -> Result<MasterEquation> {
    let mut params = None;
    let mut body_start = 0;
    let mut body = String::new();
    for (k, raw) in text.lines().enumerate() {
        let code = raw.split('#').next().unwrap_or("");
        if params.is_none() && body.trim().is_empty() {
            if let Some(idx) = code.find("params:") {
                if code[..idx].trim().is_empty() {
                    params = Some(parse_params_line(&code[idx + 7..], k + 1, idx + 7)?);
                    body_start = k + 1;
                    body.clear();
                    continue;
                }
            }
        }
        body.push_str(raw);
        body.push('\n');
    }
    let tokens = lex(&body, body_start + 1)?;
    let value = run_parser(&tokens, params.clone(), true)?;

    let mut merged: BTreeMap<SuperOpWord, Poly> = BTreeMap::new();
    let mut seen: Vec<String> = Vec::new();
    for (c, w, (line, column)) in value {
        let rhos = w.iter().filter(|s| **s == Sym::Rho).count();
        if rhos != 1 {
            return Err(perr(line, column, format!("product term has {rhos} rho factors, expected exactly one")));
        }
        let split = w.iter().position(|s| *s == Sym::Rho).unwrap_or(0);
        let ladder = |s: &Sym| if *s == Sym::A { Ladder::A } else { Ladder::Ad };
        let word = SuperOpWord {
            left: w[..split].iter().map(ladder).collect(),
            right: w[split + 1..].iter().map(ladder).collect(),
        };
        seen.extend(c.variables());
        let slot = merged.entry(word).or_default();
        *slot = &*slot + &c;
    }
    let terms = merged
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(word, coeff)| MeqTerm { coeff, word })
        .collect();
    let params = params.unwrap_or_else(|| {
        seen.sort();
        seen.dedup();
        seen
    });
    Ok(MasterEquation { params, terms })
}

/// Parses a coefficient string as printed in compiled output (polynomial in
/// `s`, `i` and parameters).
pub fn parse_coefficient(text: &str) -> Result<Poly> {
    let tokens = lex(text, 1)?;
    if tokens.is_empty() {
        return Err(perr(1, 1, "empty coefficient"));
    }
    let v = run_parser(&tokens, None, false)?;
    Ok(v.into_iter().fold(Poly::zero(), |acc, (c, _, _)| &acc + &c))
}
