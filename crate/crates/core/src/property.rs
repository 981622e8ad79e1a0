//! Threshold properties: `P<=0.8 [F target]`, `E>2 [F done]`.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed};
use thiserror::Error;

use crate::poly::{parse_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PropertyKind {
    /// Probability of eventually reaching the target.
    ReachProb,
    /// Expected reward accumulated before reaching the target.
    ExpReward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparison {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Le => value <= threshold,
            Comparison::Lt => value < threshold,
            Comparison::Ge => value >= threshold,
            Comparison::Gt => value > threshold,
        }
    }

    pub fn holds_exact(self, value: &Rational, threshold: &Rational) -> bool {
        match self {
            Comparison::Le => value <= threshold,
            Comparison::Lt => value < threshold,
            Comparison::Ge => value >= threshold,
            Comparison::Gt => value > threshold,
        }
    }

    /// Whether satisfaction is decided by an upper bound (`<=`, `<`).
    pub fn is_upper(self) -> bool {
        matches!(self, Comparison::Le | Comparison::Lt)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::Le => "<=",
            Comparison::Lt => "<",
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropertyError {
    #[error("malformed property `{0}`: expected e.g. `P<=0.8 [F target]`")]
    Syntax(String),
    #[error("probability threshold {0} is outside [0, 1]")]
    ThresholdRange(Rational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub kind: PropertyKind,
    pub comparison: Comparison,
    pub threshold: Rational,
    /// Label naming the target states.
    pub target: String,
}

impl Property {
    pub fn new(
        kind: PropertyKind,
        comparison: Comparison,
        threshold: Rational,
        target: impl Into<String>,
    ) -> Result<Self, PropertyError> {
        if kind == PropertyKind::ReachProb
            && (threshold.is_negative() || threshold > Rational::one())
        {
            return Err(PropertyError::ThresholdRange(threshold));
        }
        Ok(Property {
            kind,
            comparison,
            threshold,
            target: target.into(),
        })
    }

    pub fn threshold_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self.threshold).unwrap_or(f64::NAN)
    }
}

impl FromStr for Property {
    type Err = PropertyError;
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = || PropertyError::Syntax(text.to_string());
        let s = text.trim();
        let kind = match s.chars().next() {
            Some('P') => PropertyKind::ReachProb,
            Some('E') => PropertyKind::ExpReward,
            _ => return Err(err()),
        };
        let s = s[1..].trim_start();
        let (comparison, s) = if let Some(rest) = s.strip_prefix("<=") {
            (Comparison::Le, rest)
        } else if let Some(rest) = s.strip_prefix(">=") {
            (Comparison::Ge, rest)
        } else if let Some(rest) = s.strip_prefix('<') {
            (Comparison::Lt, rest)
        } else if let Some(rest) = s.strip_prefix('>') {
            (Comparison::Gt, rest)
        } else {
            return Err(err());
        };
        let (threshold, rest) = s.split_once('[').ok_or_else(err)?;
        let threshold = parse_rational(threshold).ok_or_else(err)?;
        let inner = rest.trim_end().strip_suffix(']').ok_or_else(err)?;
        let mut words = inner.split_whitespace();
        if words.next() != Some("F") {
            return Err(err());
        }
        let target = words.next().ok_or_else(err)?;
        let valid = target
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && target.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid || words.next().is_some() {
            return Err(err());
        }
        Property::new(kind, comparison, threshold, target)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = match self.kind {
            PropertyKind::ReachProb => 'P',
            PropertyKind::ExpReward => 'E',
        };
        write!(
            f,
            "{head}{}{} [F {}]",
            self.comparison.as_str(),
            self.threshold,
            self.target
        )
    }
}
