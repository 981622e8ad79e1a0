//! Parameter lifting for parametric Markov models.
//!
//! Bounds reachability probabilities and expected rewards of parametric
//! Markov chains and MDPs over boxes of parameter values by replacing every
//! parametric distribution with a nondeterministic choice between its
//! corner instantiations, then partitions a parameter space into regions
//! that provably satisfy or violate a threshold property.

pub mod graph;
pub mod lifting;
pub mod model;
pub mod poly;
pub mod property;
pub mod region;
pub mod report;
pub mod solver;
pub mod synthesis;

pub use model::{parse_model, ModelBuilder, ModelError, ModelKind, ParametricModel, Player, Scheduler};
pub use poly::{parse_poly, Poly, PolyError, Rational, Valuation};
pub use property::{Comparison, Property, PropertyKind};
pub use region::{Region, SplitStrategy};
pub use synthesis::{
    check_region, classify_sample, refine, CheckOptions, RefineOptions, RegionChecker, RegionResult,
    SampleVerdict, SynthesisReport, Verdict,
};
