//! Region checking and parameter-space refinement.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::time::{Duration, Instant};

use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::lifting::{check_reward_preconditions, LiftError, SubstitutionSkeleton};
use crate::model::{ModelError, ModelKind, ParametricModel};
use crate::poly::{Rational, Valuation};
use crate::property::{Comparison, Property, PropertyKind};
use crate::region::{well_defined, Region, RegionError, SplitStrategy, DEFAULT_CORNER_CAP};
use crate::solver::{
    expreward_iter, solve_mc_exact, solve_mc_reward_exact, value_iter_mdp, value_iter_sg, Objective,
    SolverError, SolverOptions, SparseModel,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Lift(LiftError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Unsupported(String),
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

impl From<LiftError> for SynthesisError {
    fn from(e: LiftError) -> Self {
        match e {
            LiftError::Region(e) => SynthesisError::Region(e),
            LiftError::Model(e) => SynthesisError::Model(e),
            LiftError::Unsupported(msg) => SynthesisError::Unsupported(msg),
            other => SynthesisError::Lift(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Safe,
    Unsafe,
    Unknown,
    IllDefined,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Safe => "safe",
            Verdict::Unsafe => "unsafe",
            Verdict::Unknown => "unknown",
            Verdict::IllDefined => "ill_defined",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionResult {
    pub region: Region,
    pub verdict: Verdict,
    /// Bounds on the property's quantity over the region; NaN when
    /// ill-defined.
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Why the region is ill-defined.
    pub witness: Option<String>,
}

impl RegionResult {
    fn ill_defined(region: Region, why: String) -> Self {
        RegionResult {
            region,
            verdict: Verdict::IllDefined,
            lower_bound: f64::NAN,
            upper_bound: f64::NAN,
            witness: Some(why),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub solver: SolverOptions,
    /// Margin around the threshold inside which bounds are inconclusive.
    pub delta: f64,
    pub corner_cap: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            solver: SolverOptions::default(),
            delta: 1e-5,
            corner_cap: DEFAULT_CORNER_CAP,
        }
    }
}

/// Classifies bounds `[lower, upper]` against `comparison threshold` with
/// margin `delta`.
pub fn classify(comparison: Comparison, threshold: f64, delta: f64, lower: f64, upper: f64) -> Verdict {
    let (safe, unsafe_) = match comparison {
        Comparison::Le => (upper <= threshold - delta, lower > threshold + delta),
        Comparison::Lt => (upper < threshold - delta, lower >= threshold + delta),
        Comparison::Ge => (lower >= threshold + delta, upper < threshold - delta),
        Comparison::Gt => (lower > threshold + delta, upper <= threshold - delta),
    };
    if safe {
        Verdict::Safe
    } else if unsafe_ {
        Verdict::Unsafe
    } else {
        Verdict::Unknown
    }
}

/// Checks regions of one model against one property. The substitution
/// skeleton is built once and shared by all checks, including parallel
/// ones.
#[derive(Debug, Clone)]
pub struct RegionChecker {
    property: Property,
    target: BTreeSet<usize>,
    skeleton: SubstitutionSkeleton,
    options: CheckOptions,
    // region-independent reason why every region is ill-defined
    global_issue: Option<String>,
}

impl RegionChecker {
    pub fn new(m: &ParametricModel, property: &Property, options: CheckOptions) -> Result<Self, SynthesisError> {
        if m.kind() == ModelKind::Psg {
            return Err(SynthesisError::Unsupported(
                "region checking of parametric games is not supported".into(),
            ));
        }
        let target = m.label(&property.target)?.clone();
        let mut global_issue = None;
        let skeleton = match property.kind {
            PropertyKind::ReachProb => SubstitutionSkeleton::new(m)?,
            PropertyKind::ExpReward => {
                match check_reward_preconditions(m, &property.target) {
                    Ok(()) => {}
                    Err(e @ (LiftError::RewardParameterOverlap(_) | LiftError::TargetNotAlmostSure(_))) => {
                        global_issue = Some(e.to_string());
                    }
                    Err(e) => return Err(e.into()),
                }
                SubstitutionSkeleton::with_rewards(m)?
            }
        };
        Ok(RegionChecker {
            property: property.clone(),
            target,
            skeleton,
            options,
            global_issue,
        })
    }

    pub fn model(&self) -> &ParametricModel {
        self.skeleton.source()
    }

    pub fn property(&self) -> &Property {
        &self.property
    }

    pub fn options(&self) -> &CheckOptions {
        &self.options
    }

    /// Lower and upper bound of the property's quantity at the initial state
    /// over `r`, or the reason `r` is ill-defined.
    pub fn bounds(&self, r: &Region) -> Result<Result<(f64, f64), String>, SynthesisError> {
        if let Some(why) = &self.global_issue {
            return Ok(Err(why.clone()));
        }
        let m = self.model();
        let sub = match self.skeleton.substitute(r, self.options.corner_cap) {
            Ok(sub) => sub,
            Err(LiftError::NotWellDefined { .. } | LiftError::NegativeReward { .. }) => {
                let why = well_defined(m, r, self.options.corner_cap)?
                    .map(|w| w.to_string())
                    .unwrap_or_else(|| "region is not well-defined".into());
                return Ok(Err(why));
            }
            Err(e) => return Err(e.into()),
        };
        let sparse = SparseModel::from_substituted(&sub);
        let opts = &self.options.solver;
        let init = m.initial();
        let (lo, hi) = match (self.property.kind, m.kind()) {
            (PropertyKind::ReachProb, ModelKind::Pmc) => (
                value_iter_mdp(&sparse, &self.target, Objective::Min, opts)?,
                value_iter_mdp(&sparse, &self.target, Objective::Max, opts)?,
            ),
            (PropertyKind::ReachProb, _) => {
                let p1 = if self.property.comparison.is_upper() {
                    Objective::Max
                } else {
                    Objective::Min
                };
                (
                    value_iter_sg(&sparse, &self.target, p1, Objective::Min, opts)?,
                    value_iter_sg(&sparse, &self.target, p1, Objective::Max, opts)?,
                )
            }
            (PropertyKind::ExpReward, _) => {
                let solve = |obj| match expreward_iter(&sparse, &self.target, obj, opts) {
                    Err(SolverError::TargetNotAlmostSure) => {
                        Err(LiftError::TargetNotAlmostSure(self.property.target.clone()).to_string())
                    }
                    other => Ok(other),
                };
                match (solve(Objective::Min), solve(Objective::Max)) {
                    (Ok(lo), Ok(hi)) => (lo?, hi?),
                    (Err(why), _) | (_, Err(why)) => return Ok(Err(why)),
                }
            }
        };
        Ok(Ok((lo.values[init], hi.values[init])))
    }

    pub fn check(&self, r: &Region) -> Result<RegionResult, SynthesisError> {
        let region = r.aligned_to(self.model().parameters())?;
        match self.bounds(&region)? {
            Err(why) => Ok(RegionResult::ill_defined(region, why)),
            Ok((lower, upper)) => {
                let verdict = classify(
                    self.property.comparison,
                    self.property.threshold_f64(),
                    self.options.delta,
                    lower,
                    upper,
                );
                Ok(RegionResult {
                    region,
                    verdict,
                    lower_bound: lower,
                    upper_bound: upper,
                    witness: None,
                })
            }
        }
    }

    /// Partitions `space` until `options.coverage_target` of it is
    /// classified or a limit is hit.
    pub fn refine(&self, space: &Region, options: &RefineOptions) -> Result<SynthesisReport, SynthesisError> {
        let start = Instant::now();
        let space = space.aligned_to(self.model().parameters())?;
        let pool = match options.threads {
            1 => None,
            n => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| SynthesisError::ThreadPool(e.to_string()))?,
            ),
        };
        let mut report = SynthesisReport {
            regions: Vec::new(),
            coverage: Coverage::unknown_everywhere(),
            checks: 0,
            limit_reached: false,
            elapsed: Duration::ZERO,
            space: space.clone(),
        };
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        heap.push(Pending {
            measure: Rational::one(),
            seq,
            region: space.clone(),
            inherited: None,
        });
        let split_results_too = |r: &RegionResult| match r.verdict {
            Verdict::Unknown => true,
            // global issues do not go away on smaller regions
            Verdict::IllDefined => self.global_issue.is_none(),
            _ => false,
        };
        while report.coverage.classified() < options.coverage_target && !heap.is_empty() {
            let budget = match options.max_checks {
                Some(max) if report.checks >= max => {
                    report.limit_reached = true;
                    break;
                }
                Some(max) => max - report.checks,
                None => usize::MAX,
            };
            if options.timeout.is_some_and(|t| start.elapsed() >= t) {
                report.limit_reached = true;
                break;
            }
            let width = if pool.is_some() {
                pool.as_ref().map_or(1, |p| p.current_num_threads()).max(1)
            } else {
                1
            };
            let batch: Vec<Pending> = (0..width.min(budget)).map_while(|_| heap.pop()).collect();
            let results: Vec<Result<RegionResult, SynthesisError>> = match &pool {
                Some(pool) => pool.install(|| batch.par_iter().map(|p| self.check(&p.region)).collect()),
                None => batch.iter().map(|p| self.check(&p.region)).collect(),
            };
            report.checks += batch.len();
            for (item, result) in batch.into_iter().zip(results) {
                let result = result?;
                let splittable = !item.region.is_point() && item.region.max_width() >= options.min_width;
                if split_results_too(&result) && splittable {
                    let bounds = (result.verdict == Verdict::Unknown)
                        .then_some((result.lower_bound, result.upper_bound));
                    for child in item.region.split(options.strategy)? {
                        seq += 1;
                        heap.push(Pending {
                            measure: child.measure_fraction(&space)?,
                            seq,
                            region: child,
                            inherited: bounds,
                        });
                    }
                } else {
                    report.coverage.record(result.verdict, &item.measure);
                    report.regions.push(result);
                }
            }
        }
        if report.coverage.classified() < options.coverage_target {
            report.limit_reached = true;
        }
        // whatever is still queued stays unknown, with its parent's bounds
        let mut rest = heap.into_sorted_vec();
        rest.reverse();
        for item in rest {
            let (lower, upper) = item.inherited.unwrap_or((f64::NAN, f64::NAN));
            report.regions.push(RegionResult {
                region: item.region,
                verdict: Verdict::Unknown,
                lower_bound: lower,
                upper_bound: upper,
                witness: None,
            });
        }
        report.elapsed = start.elapsed();
        Ok(report)
    }
}

pub fn check_region(
    m: &ParametricModel,
    r: &Region,
    property: &Property,
    options: &CheckOptions,
) -> Result<RegionResult, SynthesisError> {
    RegionChecker::new(m, property, *options)?.check(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOptions {
    pub coverage_target: Rational,
    pub strategy: SplitStrategy,
    /// Unknown regions narrower than this in every dimension are not split.
    pub min_width: Rational,
    pub max_checks: Option<usize>,
    pub timeout: Option<Duration>,
    /// Worker threads; 1 checks sequentially, 0 uses all cores.
    pub threads: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            coverage_target: Rational::new(95.into(), 100.into()),
            strategy: SplitStrategy::AllDimensions,
            min_width: Rational::new(1.into(), 1_000_000.into()),
            max_checks: Some(1_000_000),
            timeout: None,
            threads: 1,
        }
    }
}

/// Exact fractions of the parameter space per verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverage {
    pub safe: Rational,
    pub unsafe_: Rational,
    pub unknown: Rational,
    pub ill_defined: Rational,
}

impl Coverage {
    fn unknown_everywhere() -> Self {
        Coverage {
            safe: Rational::zero(),
            unsafe_: Rational::zero(),
            unknown: Rational::one(),
            ill_defined: Rational::zero(),
        }
    }

    fn record(&mut self, verdict: Verdict, measure: &Rational) {
        let slot = match verdict {
            Verdict::Safe => &mut self.safe,
            Verdict::Unsafe => &mut self.unsafe_,
            Verdict::IllDefined => &mut self.ill_defined,
            Verdict::Unknown => return,
        };
        *slot += measure;
        self.unknown -= measure;
    }

    /// Fraction classified safe or unsafe.
    pub fn classified(&self) -> Rational {
        &self.safe + &self.unsafe_
    }

    pub fn total(&self) -> Rational {
        &self.safe + &self.unsafe_ + &self.unknown + &self.ill_defined
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport {
    pub space: Region,
    /// Every sub-box of the space exactly once.
    pub regions: Vec<RegionResult>,
    pub coverage: Coverage,
    pub checks: usize,
    pub limit_reached: bool,
    pub elapsed: Duration,
}

#[derive(Debug)]
struct Pending {
    measure: Rational,
    seq: u64,
    region: Region,
    inherited: Option<(f64, f64)>,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl Ord for Pending {
    // largest measure first, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        self.measure
            .cmp(&other.measure)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn refine(
    m: &ParametricModel,
    property: &Property,
    space: &Region,
    check: &CheckOptions,
    options: &RefineOptions,
) -> Result<SynthesisReport, SynthesisError> {
    RegionChecker::new(m, property, *check)?.refine(space, options)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleVerdict {
    AllSat,
    AllViol,
    Neither,
}

impl SampleVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleVerdict::AllSat => "all_sat",
            SampleVerdict::AllViol => "all_viol",
            SampleVerdict::Neither => "neither",
        }
    }
}

/// The property's quantity at the initial state of `m[u]`: exact for
/// chains, value iteration for MDPs (maximum for upper-bounded comparisons,
/// minimum otherwise). `None` stands for an infinite expected reward.
pub fn evaluate_at(
    m: &ParametricModel,
    property: &Property,
    u: &Valuation,
    options: &SolverOptions,
) -> Result<Option<Rational>, SynthesisError> {
    let inst = m.instantiate(u)?;
    let target = m.label(&property.target)?;
    let init = m.initial();
    match (m.kind(), property.kind) {
        (ModelKind::Pmc, PropertyKind::ReachProb) => Ok(Some(solve_mc_exact(&inst, target)?[init].clone())),
        (ModelKind::Pmc, PropertyKind::ExpReward) => Ok(solve_mc_reward_exact(&inst, target)?[init].clone()),
        (ModelKind::Pmdp, PropertyKind::ReachProb) => {
            let obj = if property.comparison.is_upper() {
                Objective::Max
            } else {
                Objective::Min
            };
            let res = value_iter_mdp(&SparseModel::from_model(&inst)?, target, obj, options)?;
            Ok(Rational::from_float(res.values[init]))
        }
        _ => Err(SynthesisError::Unsupported(format!(
            "{} properties on {} models",
            match property.kind {
                PropertyKind::ReachProb => "probability",
                PropertyKind::ExpReward => "reward",
            },
            m.kind().as_str()
        ))),
    }
}

/// Whether `m[u]` satisfies the property.
pub fn satisfies(
    m: &ParametricModel,
    property: &Property,
    u: &Valuation,
    options: &SolverOptions,
) -> Result<bool, SynthesisError> {
    Ok(match evaluate_at(m, property, u, options)? {
        Some(v) => property.comparison.holds_exact(&v, &property.threshold),
        // an infinite reward exceeds every threshold
        None => !property.comparison.is_upper(),
    })
}

/// Evaluates the property at every corner of `r` and at `n` random
/// interior points.
pub fn classify_sample(
    m: &ParametricModel,
    r: &Region,
    property: &Property,
    n: usize,
    seed: u64,
    options: &CheckOptions,
) -> Result<SampleVerdict, SynthesisError> {
    let r = r.aligned_to(m.parameters())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corners = r.all_corners(options.corner_cap)?.into_iter().map(|c| c.valuation);
    let interior: Vec<Valuation> = (0..n).map(|_| r.sample(&mut rng)).collect();
    let (mut sat, mut viol) = (false, false);
    for u in corners.chain(interior) {
        if satisfies(m, property, &u, &options.solver)? {
            sat = true;
        } else {
            viol = true;
        }
        if sat && viol {
            return Ok(SampleVerdict::Neither);
        }
    }
    Ok(if viol {
        SampleVerdict::AllViol
    } else {
        SampleVerdict::AllSat
    })
}

/// Fraction as `f64`, for display.
pub fn fraction_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;
    use crate::poly::parse_rational;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn bounce() -> ParametricModel {
        parse_model(
            "@kind pmc\n@parameters x y\n@label target 3\n\
             state 0\n 1 : x\n 2 : 1 - x\nstate 1\n 2 : y\n 3 : 1 - y\n\
             state 2\n 1 : y\n 4 : 1 - y\nstate 3\n 3 : 1\nstate 4\n 4 : 1\n",
        )
        .unwrap()
    }

    fn prop(s: &str) -> Property {
        s.parse().unwrap()
    }

    #[test]
    fn classification_rules() {
        use Comparison::*;
        // dyadic numbers keep the boundary cases exact
        let d = 0.125;
        assert_eq!(classify(Le, 0.5, d, 0.0, 0.375), Verdict::Safe);
        assert_eq!(classify(Le, 0.5, d, 0.0, 0.5), Verdict::Unknown);
        assert_eq!(classify(Le, 0.5, d, 0.625, 0.9), Verdict::Unknown);
        assert_eq!(classify(Le, 0.5, d, 0.75, 0.9), Verdict::Unsafe);
        assert_eq!(classify(Lt, 0.5, d, 0.0, 0.375), Verdict::Unknown);
        assert_eq!(classify(Lt, 0.5, d, 0.0, 0.25), Verdict::Safe);
        assert_eq!(classify(Lt, 0.5, d, 0.625, 0.9), Verdict::Unsafe);
        assert_eq!(classify(Ge, 0.5, d, 0.625, 0.9), Verdict::Safe);
        assert_eq!(classify(Ge, 0.5, d, 0.0, 0.375), Verdict::Unknown);
        assert_eq!(classify(Ge, 0.5, d, 0.0, 0.25), Verdict::Unsafe);
        assert_eq!(classify(Gt, 0.5, d, 0.625, 0.9), Verdict::Unknown);
        assert_eq!(classify(Gt, 0.5, d, 0.75, 0.9), Verdict::Safe);
        assert_eq!(classify(Gt, 0.5, d, 0.0, 0.375), Verdict::Unsafe);
        assert_eq!(classify(Gt, 0.5, d, 0.45, 0.55), Verdict::Unknown);
    }

    #[test]
    fn worked_example_is_safe() {
        let r: Region = "0.1<=x<=0.8, 0.4<=y<=0.7".parse().unwrap();
        let res = check_region(&bounce(), &r, &prop("P<=0.8 [F target]"), &CheckOptions::default()).unwrap();
        assert_eq!(res.verdict, Verdict::Safe);
        assert!((res.upper_bound - 47.0 / 60.0).abs() < 2e-6);
        // lower: x = 0.1, p1 = 1/1.7 at y = 0.7 in s1, p2 = 0.4 p1
        let mid = (res.lower_bound + res.upper_bound) / 2.0;
        let p = Property::new(PropertyKind::ReachProb, Comparison::Le, Rational::from_float(mid).unwrap(), "target")
            .unwrap();
        let res = check_region(&bounce(), &r, &p, &CheckOptions::default()).unwrap();
        assert_eq!(res.verdict, Verdict::Unknown);
    }

    #[test]
    fn point_regions_match_the_exact_value() {
        let u = Valuation::new().with("x", q("0.8")).with("y", q("0.6"));
        let r = Region::point(&u);
        // exact value 23/40
        let opts = CheckOptions::default();
        assert_eq!(check_region(&bounce(), &r, &prop("P<=0.6 [F target]"), &opts).unwrap().verdict, Verdict::Safe);
        assert_eq!(check_region(&bounce(), &r, &prop("P<=0.55 [F target]"), &opts).unwrap().verdict, Verdict::Unsafe);
        assert_eq!(check_region(&bounce(), &r, &prop("P>0.55 [F target]"), &opts).unwrap().verdict, Verdict::Safe);
    }

    #[test]
    fn ill_defined_regions() {
        let r: Region = "0<=x<=1, 0<=y<=1".parse().unwrap();
        let res = check_region(&bounce(), &r, &prop("P<=0.8 [F target]"), &CheckOptions::default()).unwrap();
        assert_eq!(res.verdict, Verdict::IllDefined);
        assert!(res.witness.unwrap().contains("evaluates to 0"));
    }

    #[test]
    fn refinement_accounts_for_everything() {
        let space: Region = "1/100000<=x<=99999/100000, 1/100000<=y<=99999/100000".parse().unwrap();
        let report = refine(
            &bounce(),
            &prop("P<=0.8 [F target]"),
            &space,
            &CheckOptions::default(),
            &RefineOptions::default(),
        )
        .unwrap();
        assert!(!report.limit_reached);
        assert!(report.coverage.classified() >= q("0.95"));
        assert_eq!(report.coverage.total(), Rational::one());
        let measure: Rational = report
            .regions
            .iter()
            .map(|r| r.region.measure_fraction(&space).unwrap())
            .sum();
        assert_eq!(measure, Rational::one());
        for r in &report.regions {
            match r.verdict {
                Verdict::Safe => assert!(r.upper_bound <= 0.8),
                Verdict::Unsafe => assert!(r.lower_bound > 0.8),
                _ => {}
            }
        }
    }

    #[test]
    fn refinement_edge_cases() {
        let space: Region = "0.1<=x<=0.8, 0.4<=y<=0.7".parse().unwrap();
        let p = prop("P<=0.8 [F target]");
        let zero = RefineOptions {
            coverage_target: Rational::zero(),
            ..Default::default()
        };
        let report = refine(&bounce(), &p, &space, &CheckOptions::default(), &zero).unwrap();
        assert_eq!(report.checks, 0);
        assert_eq!(report.coverage.unknown, Rational::one());
        assert!(!report.limit_reached);
        assert_eq!(report.regions.len(), 1);

        let report = refine(&bounce(), &p, &space, &CheckOptions::default(), &RefineOptions::default()).unwrap();
        assert_eq!(report.checks, 1);
        assert_eq!(report.regions.len(), 1);
        assert_eq!(report.coverage.safe, Rational::one());

        let capped = RefineOptions {
            max_checks: Some(3),
            ..Default::default()
        };
        let space: Region = "1/100000<=x<=99999/100000, 1/100000<=y<=99999/100000".parse().unwrap();
        let report = refine(&bounce(), &p, &space, &CheckOptions::default(), &capped).unwrap();
        assert!(report.limit_reached);
        assert_eq!(report.checks, 3);
        assert_eq!(report.coverage.total(), Rational::one());
    }

    #[test]
    fn sampling_classification() {
        let opts = CheckOptions::default();
        let p = prop("P<=0.8 [F target]");
        let straddle: Region = "0.1<=x<=0.9, 0.1<=y<=0.9".parse().unwrap();
        assert_eq!(classify_sample(&bounce(), &straddle, &p, 10, 1, &opts).unwrap(), SampleVerdict::Neither);
        let inside: Region = "0.1<=x<=0.3, 0.4<=y<=0.6".parse().unwrap();
        assert_eq!(classify_sample(&bounce(), &inside, &p, 10, 1, &opts).unwrap(), SampleVerdict::AllSat);
        let point = Region::point(&Valuation::new().with("x", q("0.8")).with("y", q("0.6")));
        assert_eq!(classify_sample(&bounce(), &point, &p, 10, 1, &opts).unwrap(), SampleVerdict::AllSat);
        let p = prop("P>0.8 [F target]");
        assert_eq!(classify_sample(&bounce(), &point, &p, 10, 1, &opts).unwrap(), SampleVerdict::AllViol);
    }

    #[test]
    fn reward_properties() {
        let lp = parse_model(
            "@kind pmc\n@parameters x\n@label t 1\n@reward 0 : 1\nstate 0\n 0 : x\n 1 : 1 - x\nstate 1\n 1 : 1\n",
        )
        .unwrap();
        let r: Region = "1/2<=x<=9/10".parse().unwrap();
        let opts = CheckOptions::default();
        let res = check_region(&lp, &r, &prop("E<=11 [F t]"), &opts).unwrap();
        assert_eq!(res.verdict, Verdict::Safe);
        assert!((res.lower_bound - 2.0).abs() < 2e-6 && (res.upper_bound - 10.0).abs() < 2e-6);
        assert_eq!(check_region(&lp, &r, &prop("E>=1 [F t]"), &opts).unwrap().verdict, Verdict::Safe);
        assert_eq!(check_region(&lp, &r, &prop("E<=5 [F t]"), &opts).unwrap().verdict, Verdict::Unknown);

        let overlap = parse_model(
            "@kind pmc\n@parameters x\n@label t 1\n@reward 0 : x\nstate 0\n 0 : x\n 1 : 1 - x\nstate 1\n 1 : 1\n",
        )
        .unwrap();
        let res = check_region(&overlap, &r, &prop("E<=11 [F t]"), &opts).unwrap();
        assert_eq!(res.verdict, Verdict::IllDefined);
        assert!(res.witness.unwrap().contains("both rewards and transition"));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let space: Region = "1/100000<=x<=99999/100000, 1/100000<=y<=99999/100000".parse().unwrap();
        let p = prop("P<=0.8 [F target]");
        let seq = refine(&bounce(), &p, &space, &CheckOptions::default(), &RefineOptions::default()).unwrap();
        let par = refine(
            &bounce(),
            &p,
            &space,
            &CheckOptions::default(),
            &RefineOptions {
                threads: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(par.coverage.classified() >= q("0.95"));
        assert_eq!(par.coverage.total(), Rational::one());
        assert!(seq.checks > 1 && par.checks > 1);
    }
}
