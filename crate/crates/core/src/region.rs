//! Hyperrectangular parameter regions.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::model::ParametricModel;
use crate::poly::{parse_rational, Poly, Rational, Valuation};

/// Default bound on the number of corners enumerated for one parameter set.
pub const DEFAULT_CORNER_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("empty interval for `{name}`: {lo} > {hi}")]
    EmptyInterval {
        name: String,
        lo: Box<Rational>,
        hi: Box<Rational>,
    },
    #[error("parameter `{0}` bounded twice")]
    DuplicateParameter(String),
    #[error("region does not bound parameter `{0}`")]
    MissingParameter(String),
    #[error("region bounds `{0}`, which the model does not declare")]
    UnknownParameter(String),
    #[error("2^{bits} corners exceed the corner cap {cap}")]
    CombinatorialLimit { bits: usize, cap: usize },
    #[error("region is a single point and cannot be split")]
    DegenerateRegion,
    #[error("region is not contained in the reference region")]
    NotContained,
    #[error("malformed region `{0}`: expected e.g. `0.1<=x<=0.8, 0.4<=y<=0.7`")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStrategy {
    /// Bisect every non-degenerate dimension (2^d children).
    AllDimensions,
    /// Bisect the widest dimension only.
    LongestEdge,
}

/// A corner of a region restricted to some parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CornerValuation {
    pub valuation: Valuation,
    /// One bit per non-degenerate parameter, `true` = upper bound.
    pub bits: Vec<bool>,
}

impl CornerValuation {
    /// Bit string such as `"01"`; `"_"` when nothing branches.
    pub fn label(&self) -> String {
        if self.bits.is_empty() {
            return "_".to_string();
        }
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Closed box: one interval per parameter, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Region {
    bounds: Vec<(String, Interval)>,
}

impl Region {
    pub fn new<I, S>(bounds: I) -> Result<Self, RegionError>
    where
        I: IntoIterator<Item = (S, Rational, Rational)>,
        S: Into<String>,
    {
        let mut out: Vec<(String, Interval)> = Vec::new();
        for (name, lo, hi) in bounds {
            let name = name.into();
            if lo > hi {
                return Err(RegionError::EmptyInterval {
                    name,
                    lo: Box::new(lo),
                    hi: Box::new(hi),
                });
            }
            if out.iter().any(|(n, _)| *n == name) {
                return Err(RegionError::DuplicateParameter(name));
            }
            out.push((name, Interval { lo, hi }));
        }
        Ok(Region { bounds: out })
    }

    /// The same interval for every parameter.
    pub fn uniform(params: &[String], lo: &Rational, hi: &Rational) -> Result<Self, RegionError> {
        Region::new(params.iter().map(|p| (p.clone(), lo.clone(), hi.clone())))
    }

    pub fn point(valuation: &Valuation) -> Region {
        Region {
            bounds: valuation
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        Interval {
                            lo: v.clone(),
                            hi: v.clone(),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.bounds.iter().map(|(n, _)| n.as_str())
    }

    pub fn bounds(&self) -> &[(String, Interval)] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn interval(&self, name: &str) -> Option<&Interval> {
        self.bounds.iter().find(|(n, _)| n == name).map(|(_, i)| i)
    }

    /// Reorders the region to `params` and checks it bounds exactly them.
    pub fn aligned_to(&self, params: &[String]) -> Result<Region, RegionError> {
        if let Some(extra) = self.params().find(|p| !params.iter().any(|q| q == p)) {
            return Err(RegionError::UnknownParameter(extra.to_string()));
        }
        let bounds = params
            .iter()
            .map(|p| {
                self.interval(p)
                    .map(|i| (p.clone(), i.clone()))
                    .ok_or_else(|| RegionError::MissingParameter(p.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Region { bounds })
    }

    pub fn is_point(&self) -> bool {
        self.bounds.iter().all(|(_, i)| i.is_point())
    }

    pub fn max_width(&self) -> Rational {
        self.bounds
            .iter()
            .map(|(_, i)| i.width())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Corners over `vars`, bit pattern ascending with the first parameter
    /// (in region order) as most significant bit.
    pub fn corners<S: AsRef<str>>(
        &self,
        vars: &[S],
        cap: usize,
    ) -> Result<Vec<CornerValuation>, RegionError> {
        for v in vars {
            if self.interval(v.as_ref()).is_none() {
                return Err(RegionError::MissingParameter(v.as_ref().to_string()));
            }
        }
        let selected: Vec<&(String, Interval)> = self
            .bounds
            .iter()
            .filter(|(n, _)| vars.iter().any(|v| v.as_ref() == n))
            .collect();
        let fixed: Vec<&(String, Interval)> =
            selected.iter().copied().filter(|(_, i)| i.is_point()).collect();
        let free: Vec<&(String, Interval)> =
            selected.iter().copied().filter(|(_, i)| !i.is_point()).collect();
        let k = free.len();
        if k >= usize::BITS as usize - 1 || (1usize << k) > cap {
            return Err(RegionError::CombinatorialLimit { bits: k, cap });
        }
        let mut out = Vec::with_capacity(1 << k);
        for pattern in 0..(1usize << k) {
            let bits: Vec<bool> = (0..k).map(|i| pattern >> (k - 1 - i) & 1 == 1).collect();
            let mut valuation = Valuation::new();
            for (name, i) in &fixed {
                valuation.insert(name.clone(), i.lo.clone());
            }
            for ((name, i), &b) in free.iter().zip(&bits) {
                valuation.insert(name.clone(), if b { i.hi.clone() } else { i.lo.clone() });
            }
            out.push(CornerValuation { valuation, bits });
        }
        Ok(out)
    }

    pub fn all_corners(&self, cap: usize) -> Result<Vec<CornerValuation>, RegionError> {
        let names: Vec<&str> = self.params().collect();
        self.corners(&names, cap)
    }

    pub fn split(&self, strategy: SplitStrategy) -> Result<Vec<Region>, RegionError> {
        let free: Vec<usize> = (0..self.bounds.len())
            .filter(|&i| !self.bounds[i].1.is_point())
            .collect();
        if free.is_empty() {
            return Err(RegionError::DegenerateRegion);
        }
        let dims = match strategy {
            SplitStrategy::AllDimensions => free,
            SplitStrategy::LongestEdge => {
                let mut best = free[0];
                for &i in &free[1..] {
                    if self.bounds[i].1.width() > self.bounds[best].1.width() {
                        best = i;
                    }
                }
                vec![best]
            }
        };
        let k = dims.len();
        let mut out = Vec::with_capacity(1 << k);
        for pattern in 0..(1usize << k) {
            let mut child = self.clone();
            for (j, &d) in dims.iter().enumerate() {
                let upper = pattern >> (k - 1 - j) & 1 == 1;
                let iv = &mut child.bounds[d].1;
                let mid = iv.midpoint();
                if upper {
                    iv.lo = mid;
                } else {
                    iv.hi = mid;
                }
            }
            out.push(child);
        }
        Ok(out)
    }

    /// Volume of `self` relative to `of`, ignoring point dimensions of `of`.
    pub fn measure_fraction(&self, of: &Region) -> Result<Rational, RegionError> {
        if !of.contains(self) {
            return Err(RegionError::NotContained);
        }
        let mut frac = Rational::one();
        for (name, outer) in &of.bounds {
            if outer.is_point() {
                continue;
            }
            let inner = self.interval(name).expect("containment checked");
            frac *= inner.width() / outer.width();
        }
        Ok(frac)
    }

    /// Componentwise containment; both regions must bound the same parameters.
    pub fn contains(&self, other: &Region) -> bool {
        self.bounds.len() == other.bounds.len()
            && self.bounds.iter().all(|(n, i)| {
                other
                    .interval(n)
                    .is_some_and(|j| i.lo <= j.lo && j.hi <= i.hi)
            })
    }

    pub fn contains_valuation(&self, u: &Valuation) -> bool {
        self.bounds
            .iter()
            .all(|(n, i)| u.get(n).is_some_and(|v| i.contains(v)))
    }

    /// A uniformly drawn valuation on a 2^20 grid strictly inside each
    /// non-degenerate interval.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Valuation {
        const GRID: i64 = 1 << 20;
        self.bounds
            .iter()
            .map(|(n, i)| {
                let v = if i.is_point() {
                    i.lo.clone()
                } else {
                    let k = rng.gen_range(1..GRID);
                    &i.lo + i.width() * Rational::new(BigInt::from(k), BigInt::from(GRID))
                };
                (n.clone(), v)
            })
            .collect()
    }

    pub fn center(&self) -> Valuation {
        self.bounds
            .iter()
            .map(|(n, i)| (n.clone(), i.midpoint()))
            .collect()
    }

    pub fn bounds_f64(&self) -> Vec<(String, f64, f64)> {
        self.bounds
            .iter()
            .map(|(n, i)| {
                (
                    n.clone(),
                    i.lo.to_f64().unwrap_or(f64::NAN),
                    i.hi.to_f64().unwrap_or(f64::NAN),
                )
            })
            .collect()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (name, i)) in self.bounds.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}<={name}<={}", i.lo, i.hi)?;
        }
        Ok(())
    }
}

impl FromStr for Region {
    type Err = RegionError;
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = || RegionError::Syntax(text.to_string());
        let mut bounds = Vec::new();
        for part in text.split(',') {
            let pieces: Vec<&str> = part.split("<=").map(str::trim).collect();
            if pieces.len() != 3 {
                return Err(err());
            }
            let lo = parse_rational(pieces[0]).ok_or_else(err)?;
            let hi = parse_rational(pieces[2]).ok_or_else(err)?;
            let name = pieces[1];
            let valid = name
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(err());
            }
            bounds.push((name.to_string(), lo, hi));
        }
        Region::new(bounds)
    }
}

/// Why a region is not well-defined: a polynomial that is not strictly
/// positive (non-negative for rewards) at some corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IllDefinedWitness {
    pub location: String,
    pub poly: Poly,
    pub corner: Valuation,
    pub value: Rational,
}

impl fmt::Display for IllDefinedWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {} evaluates to {} at corner {}",
            self.location, self.poly, self.value, self.corner
        )
    }
}

/// Decides well-definedness exactly: a multi-affine polynomial attains its
/// box extrema at vertices, so checking the corners over its own
/// parameters suffices.
pub fn well_defined(
    m: &ParametricModel,
    r: &Region,
    cap: usize,
) -> Result<Option<IllDefinedWitness>, RegionError> {
    for p in m.parameters() {
        if r.interval(p).is_none() {
            return Err(RegionError::MissingParameter(p.clone()));
        }
    }
    let check = |poly: &Poly, strict: bool, location: &dyn Fn() -> String| {
        let vars: Vec<&str> = poly.vars().into_iter().collect();
        for corner in r.corners(&vars, cap)? {
            let value = poly.eval(&corner.valuation).expect("corner covers vars");
            if value.is_negative() || (strict && value.is_zero()) {
                return Ok(Some(IllDefinedWitness {
                    location: location(),
                    poly: poly.clone(),
                    corner: corner.valuation,
                    value,
                }));
            }
        }
        Ok::<_, RegionError>(None)
    };
    for (s, state) in m.states().iter().enumerate() {
        for choice in state.choices() {
            if choice.params().is_empty() {
                continue;
            }
            for t in choice.transitions() {
                let loc = || format!("P({s}, {}, {})", choice.action(), t.target);
                if let Some(w) = check(&t.prob, true, &loc)? {
                    return Ok(Some(w));
                }
            }
        }
        let reward = m.reward(s);
        if !reward.is_zero() {
            let loc = || format!("rew({s})");
            if let Some(w) = check(&reward, false, &loc)? {
                return Ok(Some(w));
            }
        }
    }
    Ok(None)
}
