//! JSON, CSV and SVG renderings of synthesis results.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::poly::Rational;
use crate::region::{Region, SplitStrategy};
use crate::synthesis::{RegionResult, SampleVerdict, SynthesisReport, Verdict};

pub type JsonBox = BTreeMap<String, [f64; 2]>;
pub type ExactBox = BTreeMap<String, [String; 2]>;

fn json_box(r: &Region) -> JsonBox {
    r.bounds_f64().into_iter().map(|(n, lo, hi)| (n, [lo, hi])).collect()
}

fn exact_box(r: &Region) -> ExactBox {
    r.bounds()
        .iter()
        .map(|(n, i)| (n.clone(), [i.lo.to_string(), i.hi.to_string()]))
        .collect()
}

fn finite(v: f64) -> Option<f64> {
    (!v.is_nan()).then_some(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonRegion {
    #[serde(rename = "box")]
    pub bounds: JsonBox,
    pub verdict: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub exact: ExactBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl From<&RegionResult> for JsonRegion {
    fn from(r: &RegionResult) -> Self {
        JsonRegion {
            bounds: json_box(&r.region),
            verdict: r.verdict.as_str().to_string(),
            lower: finite(r.lower_bound),
            upper: finite(r.upper_bound),
            exact: exact_box(&r.region),
            witness: r.witness.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonCoverage {
    pub safe: String,
    #[serde(rename = "unsafe")]
    pub unsafe_: String,
    pub unknown: String,
    pub ill_defined: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonStats {
    pub checks: usize,
    pub regions: usize,
    pub limit_reached: bool,
    pub coverage_target: String,
    pub strategy: String,
    pub epsilon: f64,
    pub delta: f64,
}

/// Synthesis report in the documented schema. Timing is left out so that
/// identical runs give identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub model: String,
    pub property: String,
    pub space: JsonBox,
    pub regions: Vec<JsonRegion>,
    pub coverage: JsonCoverage,
    pub stats: JsonStats,
}

/// Run settings echoed into reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportContext {
    pub model: String,
    pub property: String,
    pub coverage_target: Rational,
    pub strategy: SplitStrategy,
    pub epsilon: f64,
    pub delta: f64,
}

pub fn strategy_name(s: SplitStrategy) -> &'static str {
    match s {
        SplitStrategy::AllDimensions => "all",
        SplitStrategy::LongestEdge => "longest",
    }
}

impl JsonReport {
    pub fn new(report: &SynthesisReport, ctx: &ReportContext) -> Self {
        JsonReport {
            model: ctx.model.clone(),
            property: ctx.property.clone(),
            space: json_box(&report.space),
            regions: report.regions.iter().map(JsonRegion::from).collect(),
            coverage: JsonCoverage {
                safe: report.coverage.safe.to_string(),
                unsafe_: report.coverage.unsafe_.to_string(),
                unknown: report.coverage.unknown.to_string(),
                ill_defined: report.coverage.ill_defined.to_string(),
            },
            stats: JsonStats {
                checks: report.checks,
                regions: report.regions.len(),
                limit_reached: report.limit_reached,
                coverage_target: ctx.coverage_target.to_string(),
                strategy: strategy_name(ctx.strategy).to_string(),
                epsilon: ctx.epsilon,
                delta: ctx.delta,
            },
        }
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Result of a single region check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonCheck {
    pub model: String,
    pub property: String,
    pub region: JsonBox,
    pub verdict: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub exact: ExactBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl JsonCheck {
    pub fn new(result: &RegionResult, model: &str, property: &str) -> Self {
        let r = JsonRegion::from(result);
        JsonCheck {
            model: model.to_string(),
            property: property.to_string(),
            region: r.bounds,
            verdict: r.verdict,
            lower: r.lower,
            upper: r.upper,
            exact: r.exact,
            witness: r.witness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonSample {
    pub model: String,
    pub property: String,
    pub region: JsonBox,
    pub verdict: String,
    pub samples: usize,
    pub seed: u64,
}

impl JsonSample {
    pub fn new(verdict: SampleVerdict, region: &Region, model: &str, property: &str, samples: usize, seed: u64) -> Self {
        JsonSample {
            model: model.to_string(),
            property: property.to_string(),
            region: json_box(region),
            verdict: verdict.as_str().to_string(),
            samples,
            seed,
        }
    }
}

/// `v` with 12 significant digits.
pub fn sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

/// One row per region: verdict, bounds, then decimal and exact endpoints
/// per parameter.
pub fn to_csv(regions: &[RegionResult]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let params: Vec<String> = regions
        .first()
        .map(|r| r.region.params().map(str::to_string).collect())
        .unwrap_or_default();
    let mut header = vec!["verdict".to_string(), "lower".into(), "upper".into()];
    for p in &params {
        header.extend([format!("{p}_lo"), format!("{p}_hi")]);
    }
    for p in &params {
        header.extend([format!("{p}_lo_exact"), format!("{p}_hi_exact")]);
    }
    w.write_record(&header)?;
    for r in regions {
        let bound = |v: f64| if v.is_nan() { String::new() } else { sig12(v) };
        let mut row = vec![r.verdict.as_str().to_string(), bound(r.lower_bound), bound(r.upper_bound)];
        for (_, lo, hi) in r.region.bounds_f64() {
            row.extend([sig12(lo), sig12(hi)]);
        }
        for (_, i) in r.region.bounds() {
            row.extend([i.lo.to_string(), i.hi.to_string()]);
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn color(v: Verdict) -> &'static str {
    match v {
        Verdict::Safe => "#4caf50",
        Verdict::Unsafe => "#e53935",
        Verdict::Unknown => "#e0e0e0",
        Verdict::IllDefined => "#424242",
    }
}

/// Region map over the two non-degenerate parameters of the space, or
/// `None` if there are not exactly two.
pub fn to_svg(report: &SynthesisReport) -> Option<String> {
    let axes: Vec<(String, f64, f64)> = report
        .space
        .bounds()
        .iter()
        .filter(|(_, i)| !i.is_point())
        .map(|(n, i)| {
            let f = |q: &Rational| num_traits::ToPrimitive::to_f64(q).unwrap_or(f64::NAN);
            (n.clone(), f(&i.lo), f(&i.hi))
        })
        .collect();
    let [(xn, x0, x1), (yn, y0, y1)] = <[_; 2]>::try_from(axes).ok()?;
    const SIZE: f64 = 400.0;
    const MARGIN: f64 = 50.0;
    let sx = |v: f64| MARGIN + (v - x0) / (x1 - x0) * SIZE;
    let sy = |v: f64| MARGIN + SIZE - (v - y0) / (y1 - y0) * SIZE;
    let total = SIZE + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{total}" height="{total}" fill="#ffffff"/>"##);
    for r in &report.regions {
        let b = r.region.bounds_f64();
        let find = |name: &str| b.iter().find(|(n, _, _)| n == name).map(|(_, lo, hi)| (*lo, *hi));
        let (Some((ax, bx)), Some((ay, by))) = (find(&xn), find(&yn)) else {
            continue;
        };
        let _ = writeln!(
            out,
            r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}" stroke="#000000" stroke-width="0.2"><title>{}</title></rect>"##,
            sx(ax),
            sy(by),
            sx(bx) - sx(ax),
            sy(ay) - sy(by),
            color(r.verdict),
            r.verdict
        );
    }
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="#000000"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{xn}</text>"#,
        MARGIN + SIZE / 2.0,
        total - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 15 {})">{yn}</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0
    );
    for (v, anchor_x, anchor_y) in [(x0, sx(x0), total - 32.0), (x1, sx(x1), total - 32.0)] {
        let _ = writeln!(
            out,
            r#"<text x="{anchor_x:.3}" y="{anchor_y}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#,
            sig_short(v)
        );
    }
    for (v, anchor_y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{anchor_y:.3}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text>"#,
            MARGIN - 4.0,
            sig_short(v)
        );
    }
    out.push_str("</svg>\n");
    Some(out)
}

fn sig_short(v: f64) -> String {
    format!("{}", (v * 1e5).round() / 1e5)
}
