//! Random model generators and independent reference solvers.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::ToPrimitive;
use paramlift::poly::Valuation;
use paramlift::{parse_model, ParametricModel, Rational, Region};
use rand::seq::SliceRandom;
use rand::Rng;

pub const PARAMS: [&str; 3] = ["p", "q", "r"];

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn f(x: &Rational) -> f64 {
    x.to_f64().unwrap()
}

/// A random probability in (0, 1) with a small denominator.
fn weight<R: Rng>(rng: &mut R) -> (i64, i64) {
    let d = rng.gen_range(2..=10);
    (rng.gen_range(1..d), d)
}

/// Split of 1 into `k` positive fractions over a common denominator.
fn constant_split<R: Rng>(rng: &mut R, k: usize) -> Vec<String> {
    let d = rng.gen_range(k as i64..=k as i64 + 8);
    let mut cuts: Vec<i64> = (1..d).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<i64> = cuts[..k - 1].to_vec();
    cuts.sort_unstable();
    let mut out = Vec::new();
    let mut prev = 0;
    for c in cuts.into_iter().chain([d]) {
        out.push(format!("{}/{}", c - prev, d));
        prev = c;
    }
    out
}

pub struct GenOptions {
    /// Transient states; the model adds a target and a sink.
    pub transient: usize,
    pub params: usize,
    /// Probability that a transient state is parametric.
    pub parametric: f64,
    /// Allow products of two parameters.
    pub products: bool,
    /// Actions per state (1 for chains).
    pub max_actions: usize,
}

/// One distribution as lines `  target : poly`.
fn distribution<R: Rng>(rng: &mut R, n: usize, opts: &GenOptions) -> (String, BTreeSet<&'static str>) {
    let mut succ = || rng.gen_range(0..n);
    let mut out = String::new();
    let mut used = BTreeSet::new();
    let (a, b, c) = (succ(), succ(), succ());
    if opts.params > 0 && rng.gen_bool(opts.parametric) {
        let x = PARAMS[rng.gen_range(0..opts.params)];
        used.insert(x);
        let shape = rng.gen_range(0..if opts.products && opts.params > 1 { 3 } else { 2 });
        match shape {
            0 => {
                let _ = writeln!(out, "  {a} : {x}\n  {b} : 1 - {x}");
            }
            1 => {
                let (wn, wd) = weight(rng);
                let _ = writeln!(
                    out,
                    "  {a} : {wn}/{wd}*{x}\n  {b} : {wn}/{wd} - {wn}/{wd}*{x}\n  {c} : {}/{wd}",
                    wd - wn
                );
            }
            _ => {
                let y = loop {
                    let y = PARAMS[rng.gen_range(0..opts.params)];
                    if y != x {
                        break y;
                    }
                };
                used.insert(y);
                let _ = writeln!(out, "  {a} : {x}*{y}\n  {b} : 1 - {x}*{y}");
            }
        }
    } else {
        let k = rng.gen_range(1..=3);
        for (t, p) in [a, b, c].iter().zip(constant_split(rng, k)) {
            let _ = writeln!(out, "  {t} : {p}");
        }
    }
    (out, used)
}

/// A random model text: states `0..transient` are transient, then the
/// absorbing `target` and `sink`. Duplicate successors are summed by the
/// parser.
pub fn random_model_text<R: Rng>(rng: &mut R, opts: &GenOptions) -> String {
    let n = opts.transient + 2;
    let kind = if opts.max_actions > 1 { "pmdp" } else { "pmc" };
    let mut body = String::new();
    let mut used = BTreeSet::new();
    for s in 0..opts.transient {
        let _ = writeln!(body, "state {s}");
        let actions = rng.gen_range(1..=opts.max_actions);
        for a in 0..actions {
            let (dist, u) = distribution(rng, n, opts);
            used.extend(u);
            if opts.max_actions > 1 {
                let _ = writeln!(body, " action a{a}");
            }
            body.push_str(&dist);
        }
    }
    let _ = writeln!(body, "state {}\n  {} : 1", n - 2, n - 2);
    let _ = writeln!(body, "state {}\n  {} : 1", n - 1, n - 1);
    let params: Vec<&str> = PARAMS[..opts.params].iter().copied().filter(|p| used.contains(p)).collect();
    format!(
        "@kind {kind}\n@parameters {}\n@label target {}\n{body}",
        params.join(" "),
        n - 2
    )
}

pub fn random_model<R: Rng>(rng: &mut R, opts: &GenOptions) -> ParametricModel {
    parse_model(&random_model_text(rng, opts)).expect("generated model parses")
}

/// A random box inside [1/20, 19/20] per parameter; every generated model is
/// well-defined on it.
pub fn random_region<R: Rng>(rng: &mut R, m: &ParametricModel) -> Region {
    Region::new(m.parameters().iter().map(|p| {
        let a = rng.gen_range(1..=19);
        let b = rng.gen_range(1..=19);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let hi = if rng.gen_bool(0.1) { lo } else { hi };
        (p.clone(), q(lo, 20), q(hi, 20))
    }))
    .unwrap()
}

pub fn target(m: &ParametricModel) -> BTreeSet<usize> {
    m.label("target").unwrap().clone()
}

/// Dense rows of a parameter-free chain.
pub fn chain_rows(m: &ParametricModel) -> Vec<Vec<(usize, f64)>> {
    m.states()
        .iter()
        .map(|s| {
            assert_eq!(s.choices().len(), 1, "expected a chain");
            s.choices()[0]
                .transitions()
                .iter()
                .map(|t| (t.target, f(&t.prob.constant_value().unwrap())))
                .collect()
        })
        .collect()
}

/// Reachability probabilities of a chain by plain Gaussian elimination
/// with partial pivoting over the states that can reach the target.
#[allow(clippy::needless_range_loop)]
pub fn dense_reach(rows: &[Vec<(usize, f64)>], target: &BTreeSet<usize>) -> Vec<f64> {
    let n = rows.len();
    let mut can = vec![false; n];
    for &t in target {
        can[t] = true;
    }
    loop {
        let mut changed = false;
        for s in 0..n {
            if !can[s] && rows[s].iter().any(|&(t, p)| p > 0.0 && can[t]) {
                can[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|s| can[*s] && !target.contains(s)).collect();
    let mut idx = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        idx[s] = i;
    }
    let k = unknown.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] += 1.0;
        for &(t, p) in &rows[s] {
            if target.contains(&t) {
                a[i][k] += p;
            } else if idx[t] != usize::MAX {
                a[i][idx[t]] -= p;
            }
        }
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        for j in col..=k {
            a[col][j] /= d;
        }
        for r in 0..k {
            if r != col {
                let factor = a[r][col];
                if factor != 0.0 {
                    for j in col..=k {
                        a[r][j] -= factor * a[col][j];
                    }
                }
            }
        }
    }
    let mut out = vec![0.0; n];
    for &t in target {
        out[t] = 1.0;
    }
    for (i, &s) in unknown.iter().enumerate() {
        out[s] = a[i][k];
    }
    out
}

/// Row of choice `c` at state `s` instantiated at `u`.
pub fn instantiated_row(m: &ParametricModel, s: usize, c: usize, u: &Valuation) -> Vec<(usize, f64)> {
    m.state(s).choices()[c]
        .transitions()
        .iter()
        .map(|t| (t.target, f(&t.prob.eval(u).unwrap())))
        .collect()
}

/// Corner valuations of `r` restricted to `vars` (each chosen independently).
pub fn local_corners(r: &Region, vars: &[String]) -> Vec<Valuation> {
    let free: Vec<&String> = vars.iter().filter(|v| !r.interval(v).unwrap().is_point()).collect();
    (0..1usize << free.len())
        .map(|mask| {
            vars.iter()
                .map(|v| {
                    let i = r.interval(v).unwrap();
                    let pos = free.iter().position(|w| *w == v);
                    let hi = pos.is_some_and(|p| mask & (1 << p) != 0);
                    (v.clone(), if hi { i.hi.clone() } else { i.lo.clone() })
                })
                .collect()
        })
        .collect()
}

/// Every combination of one item per slot.
pub fn cartesian(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &k in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..k).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

/// Optimum over memoryless player-1 schedulers of the optimum over
/// per-state corner choices, evaluated by dense solves. `max1`/`max2` select
/// maximisation for player 1 (actions) and player 2 (corners).
pub fn brute_force_game(m: &ParametricModel, r: &Region, max1: bool, max2: bool) -> f64 {
    let target = target(m);
    let n = m.num_states();
    let corners: Vec<Vec<Vec<Valuation>>> = m
        .states()
        .iter()
        .map(|s| s.choices().iter().map(|c| local_corners(r, c.params())).collect())
        .collect();
    let pick = |better: bool, a: f64, b: f64| if better { a.max(b) } else { a.min(b) };
    let action_counts: Vec<usize> = m.states().iter().map(|s| s.choices().len()).collect();
    let mut best1 = if max1 { f64::NEG_INFINITY } else { f64::INFINITY };
    for sigma in cartesian(&action_counts) {
        let corner_counts: Vec<usize> = (0..n).map(|s| corners[s][sigma[s]].len()).collect();
        let mut best2 = if max2 { f64::NEG_INFINITY } else { f64::INFINITY };
        for tau in cartesian(&corner_counts) {
            let rows: Vec<Vec<(usize, f64)>> = (0..n)
                .map(|s| instantiated_row(m, s, sigma[s], &corners[s][sigma[s]][tau[s]]))
                .collect();
            best2 = pick(max2, best2, dense_reach(&rows, &target)[m.initial()]);
        }
        best1 = pick(max1, best1, best2);
    }
    best1
}

/// Floating-point evaluation of a polynomial.
pub fn eval_f64(p: &paramlift::Poly, point: &std::collections::BTreeMap<String, f64>) -> f64 {
    p.terms()
        .map(|(mono, c)| mono.vars().iter().fold(f(c), |acc, v| acc * point[v]))
        .sum()
}

/// Reachability from the initial state of a chain-shaped `m` at `point`.
pub fn reach_at_f64(m: &ParametricModel, point: &std::collections::BTreeMap<String, f64>) -> f64 {
    let rows: Vec<Vec<(usize, f64)>> = m
        .states()
        .iter()
        .map(|s| {
            s.choices()[0]
                .transitions()
                .iter()
                .map(|t| (t.target, eval_f64(&t.prob, point)))
                .collect()
        })
        .collect();
    dense_reach(&rows, &target(m))[m.initial()]
}
