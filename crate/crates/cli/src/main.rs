//! `paramlift`: region checking and parameter synthesis from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{One, Zero};

use paramlift::poly::parse_rational;
use paramlift::region::DEFAULT_CORNER_CAP;
use paramlift::report::{to_csv, to_svg, JsonCheck, JsonReport, JsonSample, ReportContext};
use paramlift::solver::SolverOptions;
use paramlift::synthesis::fraction_f64;
use paramlift::{
    classify_sample, parse_model, CheckOptions, ParametricModel, Property, Rational, RefineOptions, Region,
    RegionChecker, SplitStrategy, Verdict,
};

const EXIT_LIMIT: u8 = 2;
const EXIT_ILL_DEFINED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "paramlift", version, about = "Parameter lifting for parametric Markov models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bound the property over one region and classify it.
    Check(Common),
    /// Partition the region into safe, unsafe and unknown parts.
    Synthesize(SynthesizeArgs),
    /// Evaluate the property at the corners and random points of a region.
    Sample(SampleArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
    /// Property, e.g. "P<=0.8 [F target]".
    #[arg(long)]
    property: String,
    /// Region, e.g. "0.1<=x<=0.8, 0.4<=y<=0.7"; defaults to [1e-5, 1-1e-5]
    /// for every parameter.
    #[arg(long)]
    region: Option<String>,
    /// Value iteration precision.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Margin around the threshold.
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    /// Stop value iteration on relative instead of absolute change.
    #[arg(long)]
    relative: bool,
    /// Value iteration sweep limit.
    #[arg(long, default_value_t = 1_000_000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct SynthesizeArgs {
    #[command(flatten)]
    common: Common,
    /// Fraction of the region to classify.
    #[arg(long, default_value = "0.95")]
    coverage: String,
    #[arg(long, value_enum, default_value_t = Strategy::All)]
    strategy: Strategy,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Region map for two-parameter spaces.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Maximal number of region checks.
    #[arg(long, default_value_t = 1_000_000)]
    max_regions: usize,
    /// Unknown regions narrower than this are not split further.
    #[arg(long, default_value = "1/1000000")]
    min_width: String,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    /// Random interior valuations in addition to the corners.
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Strategy {
    All,
    Longest,
}

struct Loaded {
    model: ParametricModel,
    property: Property,
    region: Region,
    options: CheckOptions,
}

fn corner_cap() -> Result<usize> {
    match std::env::var("PARAMLIFT_CORNER_CAP") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("PARAMLIFT_CORNER_CAP: `{v}` is not a count")),
        Err(_) => Ok(DEFAULT_CORNER_CAP),
    }
}

fn load(c: &Common) -> Result<Loaded> {
    let text = fs::read_to_string(&c.model).with_context(|| format!("cannot read {}", c.model.display()))?;
    let model = parse_model(&text).with_context(|| format!("{}", c.model.display()))?;
    let property: Property = c.property.parse()?;
    model.label(&property.target)?;
    let region = match &c.region {
        Some(r) => r.parse::<Region>()?,
        None => Region::uniform(
            model.parameters(),
            &Rational::new(1.into(), 100_000.into()),
            &Rational::new(99_999.into(), 100_000.into()),
        )?,
    };
    let region = region.aligned_to(model.parameters())?;
    if c.epsilon.is_nan() || c.epsilon <= 0.0 {
        bail!("--epsilon must be positive");
    }
    if c.delta.is_nan() || c.delta < 0.0 {
        bail!("--delta must not be negative");
    }
    let options = CheckOptions {
        solver: SolverOptions {
            epsilon: c.epsilon,
            max_iterations: c.max_iterations,
            relative: c.relative,
        },
        delta: c.delta,
        corner_cap: corner_cap()?,
    };
    Ok(Loaded {
        model,
        property,
        region,
        options,
    })
}

fn write_output(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
}

fn fmt_bound(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else {
        format!("{v}")
    }
}

fn check(c: &Common) -> Result<u8> {
    let l = load(c)?;
    let checker = RegionChecker::new(&l.model, &l.property, l.options)?;
    let result = checker.check(&l.region)?;
    println!("region:  {}", result.region);
    println!("verdict: {}", result.verdict);
    println!("lower:   {}", fmt_bound(result.lower_bound));
    println!("upper:   {}", fmt_bound(result.upper_bound));
    if let Some(w) = &result.witness {
        println!("witness: {w}");
    }
    if let Some(out) = &c.output {
        let text = match c.format {
            Format::Json => {
                let json = JsonCheck::new(&result, &c.model.display().to_string(), c.property.trim());
                serde_json::to_string_pretty(&json)? + "\n"
            }
            Format::Csv => to_csv(std::slice::from_ref(&result))?,
        };
        write_output(out, &text)?;
    }
    Ok(if result.verdict == Verdict::IllDefined {
        EXIT_ILL_DEFINED
    } else {
        0
    })
}

fn synthesize(a: &SynthesizeArgs) -> Result<u8> {
    let c = &a.common;
    let l = load(c)?;
    let coverage_target = parse_rational(&a.coverage).context("--coverage: expected a number")?;
    if coverage_target <= Rational::zero() || coverage_target > Rational::one() {
        bail!("--coverage must lie in (0, 1]");
    }
    let min_width = parse_rational(&a.min_width).context("--min-width: expected a number")?;
    let strategy = match a.strategy {
        Strategy::All => SplitStrategy::AllDimensions,
        Strategy::Longest => SplitStrategy::LongestEdge,
    };
    let timeout = match a.timeout {
        Some(t) if t.is_nan() || t <= 0.0 => bail!("--timeout must be positive"),
        Some(t) => Some(Duration::from_secs_f64(t)),
        None => None,
    };
    let options = RefineOptions {
        coverage_target: coverage_target.clone(),
        strategy,
        min_width,
        max_checks: Some(a.max_regions),
        timeout,
        threads: a.threads,
    };
    let checker = RegionChecker::new(&l.model, &l.property, l.options)?;
    let report = checker.refine(&l.region, &options)?;
    let cov = &report.coverage;
    println!("safe:        {} ({:.4})", cov.safe, fraction_f64(&cov.safe));
    println!("unsafe:      {} ({:.4})", cov.unsafe_, fraction_f64(&cov.unsafe_));
    println!("unknown:     {} ({:.4})", cov.unknown, fraction_f64(&cov.unknown));
    println!("ill-defined: {} ({:.4})", cov.ill_defined, fraction_f64(&cov.ill_defined));
    println!("regions:     {}", report.regions.len());
    println!("checks:      {}", report.checks);
    if report.limit_reached {
        println!("limit reached before the coverage target");
    }
    eprintln!("time: {:.3} s", report.elapsed.as_secs_f64());
    if let Some(out) = &c.output {
        let text = match c.format {
            Format::Json => {
                let ctx = ReportContext {
                    model: c.model.display().to_string(),
                    property: c.property.trim().to_string(),
                    coverage_target,
                    strategy,
                    epsilon: c.epsilon,
                    delta: c.delta,
                };
                JsonReport::new(&report, &ctx).to_string_pretty() + "\n"
            }
            Format::Csv => to_csv(&report.regions)?,
        };
        write_output(out, &text)?;
    }
    if let Some(path) = &a.svg {
        match to_svg(&report) {
            Some(svg) => write_output(path, &svg)?,
            None => eprintln!("no region map: the region does not span exactly two parameters"),
        }
    }
    Ok(if report.limit_reached { EXIT_LIMIT } else { 0 })
}

fn sample(a: &SampleArgs) -> Result<u8> {
    let c = &a.common;
    let l = load(c)?;
    let verdict = classify_sample(&l.model, &l.region, &l.property, a.samples, c.seed, &l.options)?;
    println!("{}", verdict.as_str());
    if let Some(out) = &c.output {
        if c.format == Format::Csv {
            bail!("sample results are only written as JSON");
        }
        let json = JsonSample::new(
            verdict,
            &l.region,
            &c.model.display().to_string(),
            c.property.trim(),
            a.samples,
            c.seed,
        );
        write_output(out, &(serde_json::to_string_pretty(&json)? + "\n"))?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Check(c) => check(c),
        Command::Synthesize(a) => synthesize(a),
        Command::Sample(a) => sample(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
