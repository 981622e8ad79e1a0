//! Multi-affine polynomials with exact rational coefficients.
//!
//! Every variable appears with degree at most one in each term, so a term is
//! identified by the *set* of parameters it multiplies. The zero polynomial is
//! the empty term map.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable `{0}` occurs with degree >= 2")]
    NotMultiAffine(String),
    #[error("no value for parameter `{0}`")]
    MissingParameter(String),
}

/// The set of parameters multiplied together in one term, kept sorted.
///
/// Ordered by cardinality first, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<String>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Monomial(vec![name.into()])
    }

    /// Builds a monomial from names; fails if a name repeats.
    pub fn from_vars<I, S>(vars: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = vars.into_iter().map(Into::into).collect();
        names.sort();
        for pair in names.windows(2) {
            if pair[0] == pair[1] {
                return Err(PolyError::NotMultiAffine(pair[0].clone()));
            }
        }
        Ok(Monomial(names))
    }

    pub fn vars(&self) -> &[String] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Monomial) -> Result<Monomial, PolyError> {
        Monomial::from_vars(self.0.iter().chain(other.0.iter()).cloned())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Assignment of rational values to parameter names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Valuation(BTreeMap<String, Rational>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: Rational) -> Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Rational) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Rational> {
        self.0.get(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Rational)> {
        self.0.iter()
    }

    /// Union of two valuations; `other` wins on shared names.
    pub fn union(&self, other: &Valuation) -> Valuation {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.0.insert(k.clone(), v.clone());
        }
        out
    }
}

impl FromIterator<(String, Rational)> for Valuation {
    fn from_iter<T: IntoIterator<Item = (String, Rational)>>(iter: T) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, ")")
    }
}

/// A multi-affine polynomial in canonical form (no zero coefficients).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(value: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), value);
        p
    }

    pub fn var(name: impl Into<String>) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::var(name), Rational::one());
        p
    }

    /// Adds `coeff * monomial`, dropping the term if it cancels.
    pub fn add_term(&mut self, monomial: Monomial, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(monomial);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_constant)
    }

    /// The value of a constant polynomial, `None` if any parameter occurs.
    pub fn constant_value(&self) -> Option<Rational> {
        if !self.is_constant() {
            return None;
        }
        Some(
            self.terms
                .get(&Monomial::one())
                .cloned()
                .unwrap_or_else(Rational::zero),
        )
    }

    pub fn vars(&self) -> BTreeSet<&str> {
        self.terms
            .keys()
            .flat_map(|m| m.vars().iter().map(String::as_str))
            .collect()
    }

    pub fn scale(&self, factor: &Rational) -> Poly {
        if factor.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c * factor))
                .collect(),
        }
    }

    /// Product of two polynomials; fails if a variable would reach degree 2.
    pub fn checked_mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb)?, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn eval(&self, valuation: &Valuation) -> Result<Rational, PolyError> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut prod = c.clone();
            for v in m.vars() {
                let value = valuation
                    .get(v)
                    .ok_or_else(|| PolyError::MissingParameter(v.clone()))?;
                prod *= value;
            }
            acc += prod;
        }
        Ok(acc)
    }

    /// Substitutes the bound parameters; unbound ones stay symbolic.
    pub fn substitute(&self, partial: &Valuation) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::with_capacity(m.degree());
            for v in m.vars() {
                match partial.get(v) {
                    Some(value) => coeff *= value,
                    None => rest.push(v.clone()),
                }
            }
            // rest stays sorted and duplicate-free
            out.add_term(Monomial(rest), coeff);
        }
        out
    }

    /// Renames parameters; `rename` must be injective on `vars(self)`.
    pub fn rename(&self, mut rename: impl FnMut(&str) -> String) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let names: Vec<String> = m.vars().iter().map(|v| rename(v)).collect();
            let mono = Monomial::from_vars(names).expect("renaming must be injective");
            out.add_term(mono, c.clone());
        }
        out
    }
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
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Rational::one())
    }
}

impl std::iter::Sum for Poly {
    fn sum<I: Iterator<Item = Poly>>(iter: I) -> Poly {
        iter.fold(Poly::zero(), |acc, p| &acc + &p)
    }
}

/// Highest-degree terms first, e.g. `1/3*x + 1/3`.
impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let magnitude = c.abs();
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_constant() {
                write!(f, "{magnitude}")?;
            } else {
                if !magnitude.is_one() {
                    write!(f, "{magnitude}*")?;
                }
                write!(f, "{}", m.vars().join("*"))?;
            }
        }
        Ok(())
    }
}

impl FromStr for Poly {
    type Err = PolyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_poly(s)
    }
}

/// Parses an exact rational: `3`, `-3/4`, `0.25`, `1e-5`, `2.5E3`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((num, den)) = text.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}0").parse().ok()?;
    let scale = frac_part.len() as i32 + 1 - exponent;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Rational::new(digits, num_traits::pow(ten, scale as usize))
    } else {
        Rational::from_integer(digits * num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

pub fn parse_poly(text: &str) -> Result<Poly, PolyError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let poly = parser.poly()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(poly)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> PolyError {
        PolyError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn poly(&mut self) -> Result<Poly, PolyError> {
        let mut out = Poly::zero();
        // a leading sign is accepted so serialized output parses back
        let mut negate = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        loop {
            let (mono, mut coeff) = self.term()?;
            if negate {
                coeff = -coeff;
            }
            out.add_term(mono, coeff);
            match self.peek() {
                Some(b'+') => negate = false,
                Some(b'-') => negate = true,
                _ => break,
            }
            self.pos += 1;
        }
        Ok(out)
    }

    fn term(&mut self) -> Result<(Monomial, Rational), PolyError> {
        let mut coeff = Rational::one();
        let mut vars: Vec<String> = Vec::new();
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => coeff = self.coefficient()?,
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.factor(&mut vars)?,
            _ => return Err(self.error("expected a coefficient or a variable")),
        }
        while self.peek() == Some(b'*') {
            self.pos += 1;
            match self.peek() {
                Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.factor(&mut vars)?,
                _ => return Err(self.error("expected a variable after `*`")),
            }
        }
        Ok((Monomial::from_vars(vars)?, coeff))
    }

    fn factor(&mut self, vars: &mut Vec<String>) -> Result<(), PolyError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .to_string();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let exp_start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let exponent: u32 = std::str::from_utf8(&self.src[exp_start..self.pos])
                .expect("ascii")
                .parse()
                .map_err(|_| self.error("expected an integer exponent"))?;
            match exponent {
                0 => return Ok(()),
                1 => {}
                _ => return Err(PolyError::NotMultiAffine(name)),
            }
        }
        if vars.contains(&name) {
            return Err(PolyError::NotMultiAffine(name));
        }
        vars.push(name);
        Ok(())
    }

    fn coefficient(&mut self) -> Result<Rational, PolyError> {
        let start = self.pos;
        let numeral = |p: &mut Self| {
            while p.pos < p.src.len() && (p.src[p.pos].is_ascii_digit() || p.src[p.pos] == b'.') {
                p.pos += 1;
            }
            // scientific exponent
            if p.pos < p.src.len() && (p.src[p.pos] == b'e' || p.src[p.pos] == b'E') {
                let save = p.pos;
                p.pos += 1;
                if p.pos < p.src.len() && (p.src[p.pos] == b'-' || p.src[p.pos] == b'+') {
                    p.pos += 1;
                }
                let digits = p.pos;
                while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                    p.pos += 1;
                }
                if digits == p.pos {
                    p.pos = save;
                }
            }
        };
        numeral(self);
        let save = self.pos;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let den_start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if den_start == self.pos {
                return Err(self.error("expected a denominator"));
            }
        } else {
            self.pos = save;
        }
        let text: String = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect();
        parse_rational(&text).ok_or_else(|| PolyError::Syntax {
            offset: start,
            message: format!("invalid number `{text}`"),
        })
    }
}
