//! Solvers for parameter-free models: exact linear solve for chains, value
//! iteration for MDPs, stochastic games and expected rewards.

use std::collections::BTreeSet;

use num_traits::{One, Signed, ToPrimitive, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::graph::{mask, Support};
use crate::lifting::SubstitutedModel;
use crate::model::{ModelKind, ParametricModel, Player, Scheduler};
use crate::poly::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Max,
    Min,
}

impl Objective {
    fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Objective::Max => candidate > incumbent,
            Objective::Min => candidate < incumbent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("model still has parameters")]
    NotParameterFree,
    #[error("expected a Markov chain (one choice per state)")]
    NotAChain,
    #[error("value iteration did not converge after {iterations} sweeps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("target is not reached almost surely from the initial state")]
    TargetNotAlmostSure,
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Stop on the relative instead of the absolute per-sweep change.
    pub relative: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            epsilon: 1e-6,
            max_iterations: 1_000_000,
            relative: false,
        }
    }
}

impl SolverOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        SolverOptions {
            epsilon,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub values: Vec<f64>,
    /// Greedy choice index per state.
    pub choices: Vec<usize>,
    pub scheduler: Scheduler,
    pub iterations: usize,
    pub residual: f64,
}

/// Compressed row storage: states own ranges of choices, choices own ranges
/// of transitions.
#[derive(Debug, Clone)]
pub struct SparseModel {
    players: Vec<Player>,
    state_start: Vec<usize>,
    choice_start: Vec<usize>,
    actions: Vec<String>,
    targets: Vec<usize>,
    probs: Vec<f64>,
    rewards: Option<Vec<f64>>,
    initial: usize,
}

impl SparseModel {
    pub fn from_model(m: &ParametricModel) -> Result<Self, SolverError> {
        if !m.is_parameter_free() {
            return Err(SolverError::NotParameterFree);
        }
        let rewards = m.has_rewards().then(|| {
            (0..m.num_states())
                .flat_map(|s| {
                    let r = to_f64(&m.reward(s).constant_value().unwrap_or_else(Rational::zero));
                    std::iter::repeat_n(r, m.state(s).choices().len())
                })
                .collect()
        });
        Ok(Self::assemble(m, rewards))
    }

    pub fn from_substituted(sub: &SubstitutedModel) -> Self {
        let rewards = sub
            .choice_rewards
            .as_ref()
            .map(|rows| rows.iter().flatten().map(to_f64).collect());
        Self::assemble(&sub.model, rewards)
    }

    fn assemble(m: &ParametricModel, rewards: Option<Vec<f64>>) -> Self {
        let mut sm = SparseModel {
            players: Vec::with_capacity(m.num_states()),
            state_start: vec![0],
            choice_start: vec![0],
            actions: Vec::new(),
            targets: Vec::with_capacity(m.num_transitions()),
            probs: Vec::with_capacity(m.num_transitions()),
            rewards,
            initial: m.initial(),
        };
        for state in m.states() {
            sm.players.push(state.player());
            for choice in state.choices() {
                for t in choice.transitions() {
                    sm.targets.push(t.target);
                    sm.probs.push(to_f64(&t.prob.constant_value().unwrap_or_else(Rational::zero)));
                }
                sm.actions.push(choice.action().to_string());
                sm.choice_start.push(sm.targets.len());
            }
            sm.state_start.push(sm.actions.len());
        }
        sm
    }

    pub fn num_states(&self) -> usize {
        self.players.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn player(&self, s: usize) -> Player {
        self.players[s]
    }

    /// Global indices of the choices of `s`.
    pub fn choices(&self, s: usize) -> std::ops::Range<usize> {
        self.state_start[s]..self.state_start[s + 1]
    }

    pub fn row(&self, c: usize) -> (&[usize], &[f64]) {
        let range = self.choice_start[c]..self.choice_start[c + 1];
        (&self.targets[range.clone()], &self.probs[range])
    }

    pub fn reward(&self, c: usize) -> f64 {
        self.rewards.as_ref().map_or(0.0, |r| r[c])
    }

    pub fn support(&self) -> Support {
        Support::new(
            (0..self.num_states())
                .map(|s| self.choices(s).map(|c| self.row(c).0.to_vec()).collect())
                .collect(),
        )
    }

    fn scheduler(&self, choices: &[usize]) -> Scheduler {
        let mut sched = Scheduler::new();
        for (s, &c) in choices.iter().enumerate() {
            sched.set(s, self.actions[self.state_start[s] + c].clone());
        }
        sched
    }

    /// Gauss-Seidel order: strongly connected components, sinks first.
    fn sweep_order(&self) -> Vec<usize> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.num_states(), self.targets.len());
        let nodes: Vec<_> = (0..self.num_states()).map(|_| g.add_node(())).collect();
        for s in 0..self.num_states() {
            for c in self.choices(s) {
                for &t in self.row(c).0 {
                    g.add_edge(nodes[s], nodes[t], ());
                }
            }
        }
        tarjan_scc(&g)
            .into_iter()
            .flat_map(|scc| {
                let mut ids: Vec<usize> = scc.into_iter().map(|n| n.index()).collect();
                ids.sort_unstable();
                ids
            })
            .collect()
    }
}

fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Gauss-Seidel value iteration, one sweep at a time.
#[derive(Debug, Clone)]
pub struct ValueIterator<'a> {
    model: &'a SparseModel,
    objectives: [Objective; 2],
    fixed: Vec<Option<f64>>,
    order: Vec<usize>,
    values: Vec<f64>,
    target: Vec<bool>,
    with_rewards: bool,
    relative: bool,
    // choices usable at each state (reward mode excludes those leaving the
    // finite region)
    allowed: Vec<Vec<usize>>,
}

fn objective_of(objectives: [Objective; 2], player: Player) -> Objective {
    match player {
        Player::One => objectives[0],
        Player::Two => objectives[1],
    }
}

impl<'a> ValueIterator<'a> {
    /// Reachability of `target`; `objectives` are those of player 1 and 2.
    pub fn reachability(model: &'a SparseModel, target: &BTreeSet<usize>, objectives: [Objective; 2]) -> Self {
        let n = model.num_states();
        let t = mask(n, target.iter().copied());
        let g = model.support();
        let reacher: Vec<bool> = (0..n)
            .map(|s| objective_of(objectives, model.player(s)) == Objective::Max)
            .collect();
        let zero: Vec<bool> = g.game_positive(&t, &reacher).into_iter().map(|p| !p).collect();
        let one = g.game_almost_sure(&t, &reacher);
        let fixed = (0..n)
            .map(|s| {
                if t[s] || one[s] {
                    Some(1.0)
                } else if zero[s] {
                    Some(0.0)
                } else {
                    None
                }
            })
            .collect::<Vec<_>>();
        let values = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        ValueIterator {
            model,
            objectives,
            fixed,
            order: model.sweep_order(),
            values,
            target: t,
            with_rewards: false,
            relative: false,
            allowed: (0..n).map(|s| model.choices(s).collect()).collect(),
        }
    }

    /// Expected total reward until `target` for a single-player model.
    /// States from which `target` is not reached almost surely get `+inf`.
    pub fn expected_reward(
        model: &'a SparseModel,
        target: &BTreeSet<usize>,
        objective: Objective,
    ) -> Result<Self, SolverError> {
        let n = model.num_states();
        if (0..n).any(|s| model.player(s) == Player::Two) {
            return Err(SolverError::Unsupported(
                "expected rewards on stochastic games".into(),
            ));
        }
        let t = mask(n, target.iter().copied());
        let g = model.support();
        let finite = match objective {
            Objective::Max => g.prob1_all(&t),
            Objective::Min => g.prob1_exists(&t),
        };
        if !finite[model.initial()] {
            return Err(SolverError::TargetNotAlmostSure);
        }
        let allowed: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                model
                    .choices(s)
                    .filter(|&c| model.row(c).0.iter().all(|&u| finite[u]))
                    .collect()
            })
            .collect();
        if objective == Objective::Min {
            // cycles avoiding the target under the usable choices would admit
            // spurious fixed points below the true value
            let restricted = Support::new(
                allowed
                    .iter()
                    .map(|cs| cs.iter().map(|&c| model.row(c).0.to_vec()).collect())
                    .collect(),
            );
            let sure = restricted.prob1_all(&t);
            if (0..n).any(|s| finite[s] && !sure[s]) {
                return Err(SolverError::Unsupported(
                    "minimal expected rewards with end components outside the target".into(),
                ));
            }
        }
        let fixed: Vec<Option<f64>> = (0..n)
            .map(|s| {
                if t[s] {
                    Some(0.0)
                } else if !finite[s] {
                    Some(f64::INFINITY)
                } else {
                    None
                }
            })
            .collect();
        let values = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        Ok(ValueIterator {
            model,
            objectives: [objective; 2],
            fixed,
            order: model.sweep_order(),
            values,
            target: t,
            with_rewards: true,
            relative: false,
            allowed,
        })
    }

    pub fn relative(mut self, relative: bool) -> Self {
        self.relative = relative;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of choice `c` at state `s`, with a self-loop resolved in closed
    /// form.
    fn choice_value(&self, s: usize, c: usize) -> f64 {
        let (targets, probs) = self.model.row(c);
        let mut stay = 0.0;
        let mut v = if self.with_rewards { self.model.reward(c) } else { 0.0 };
        for (&t, &p) in targets.iter().zip(probs) {
            if t == s {
                stay += p;
            } else {
                v += p * self.values[t];
            }
        }
        if stay >= 1.0 {
            self.values[s]
        } else if stay > 0.0 {
            v / (1.0 - stay)
        } else {
            v
        }
    }

    fn best(&self, s: usize) -> (usize, f64) {
        let obj = objective_of(self.objectives, self.model.player(s));
        let first = self.model.state_start[s];
        let mut best: Option<(usize, f64)> = None;
        for &c in &self.allowed[s] {
            let v = self.choice_value(s, c);
            if best.is_none_or(|(_, b)| obj.better(v, b)) {
                best = Some((c - first, v));
            }
        }
        best.unwrap_or((0, self.values[s]))
    }

    /// Updates every undetermined state once in place; returns the largest
    /// change (relative if so configured).
    pub fn sweep(&mut self) -> f64 {
        let mut residual: f64 = 0.0;
        for i in 0..self.order.len() {
            let s = self.order[i];
            if self.fixed[s].is_some() {
                continue;
            }
            let (_, v) = self.best(s);
            let old = self.values[s];
            let mut change = (v - old).abs();
            if self.relative && v != 0.0 {
                change /= v.abs();
            }
            residual = residual.max(change);
            self.values[s] = v;
        }
        residual
    }

    /// Runs sweeps until the change drops below `epsilon`.
    pub fn run(mut self, options: &SolverOptions) -> Result<SolveResult, SolverError> {
        self.relative = options.relative;
        let mut residual = 0.0;
        let mut iterations = 0;
        if self.fixed.iter().any(Option::is_none) {
            let mut previous = f64::INFINITY;
            loop {
                residual = self.sweep();
                iterations += 1;
                // With per-sweep contraction rate rho the remaining error is
                // about residual / (1 - rho); require that below epsilon.
                let rho = if previous > 0.0 { residual / previous } else { 0.0 };
                let rho = rho.clamp(0.0, 1.0 - 1e-6);
                if residual < options.epsilon * (1.0 - rho) {
                    break;
                }
                previous = residual;
                if iterations >= options.max_iterations {
                    return Err(SolverError::NonConvergence { iterations, residual });
                }
            }
        }
        let choices = self.greedy_choices();
        Ok(SolveResult {
            scheduler: self.model.scheduler(&choices),
            values: self.values,
            choices,
            iterations,
            residual,
        })
    }

    /// Optimal choice per state under the current values; ties go to the
    /// lowest index.
    pub fn greedy_choices(&self) -> Vec<usize> {
        let n = self.model.num_states();
        let mut choices: Vec<usize> = (0..n).map(|s| self.best(s).0).collect();
        if self.with_rewards {
            return choices;
        }
        // Determined states need a choice that realizes their value rather
        // than any choice tying with it.
        let attractor = self.attractor_choices();
        for s in 0..n {
            let Some(v) = self.fixed[s] else { continue };
            let obj = objective_of(self.objectives, self.model.player(s));
            let first = self.model.state_start[s];
            let pick = match (obj, v == 1.0) {
                (Objective::Max, true) => attractor[s],
                (Objective::Min, false) => self
                    .model
                    .choices(s)
                    .find(|&c| self.model.row(c).0.iter().all(|&t| self.fixed[t] == Some(0.0)))
                    .map(|c| c - first),
                _ => None,
            };
            choices[s] = pick.unwrap_or(0);
        }
        choices
    }

    /// Choices decreasing the distance to the states valued 1 while staying
    /// among them.
    fn attractor_choices(&self) -> Vec<Option<usize>> {
        let n = self.model.num_states();
        let one: Vec<bool> = self.fixed.iter().map(|f| *f == Some(1.0)).collect();
        let mut reached = self.target.clone();
        let mut pick = vec![None; n];
        loop {
            let mut next = reached.clone();
            let mut changed = false;
            for s in (0..n).filter(|&s| one[s] && !reached[s]) {
                let first = self.model.state_start[s];
                let found = self.model.choices(s).find(|&c| {
                    let (targets, _) = self.model.row(c);
                    targets.iter().all(|&t| one[t]) && targets.iter().any(|&t| reached[t])
                });
                if let Some(c) = found {
                    pick[s] = Some(c - first);
                    next[s] = true;
                    changed = true;
                }
            }
            reached = next;
            if !changed {
                return pick;
            }
        }
    }
}

/// Maximal or minimal reachability probabilities of an MDP.
pub fn value_iter_mdp(
    m: &SparseModel,
    target: &BTreeSet<usize>,
    objective: Objective,
    options: &SolverOptions,
) -> Result<SolveResult, SolverError> {
    ValueIterator::reachability(m, target, [objective; 2]).run(options)
}

/// Reachability value of a game in which player 1 plays `p1` and player 2
/// plays `p2`.
pub fn value_iter_sg(
    g: &SparseModel,
    target: &BTreeSet<usize>,
    p1: Objective,
    p2: Objective,
    options: &SolverOptions,
) -> Result<SolveResult, SolverError> {
    ValueIterator::reachability(g, target, [p1, p2]).run(options)
}

/// Optimal expected total reward until `target`.
pub fn expreward_iter(
    m: &SparseModel,
    target: &BTreeSet<usize>,
    objective: Objective,
    options: &SolverOptions,
) -> Result<SolveResult, SolverError> {
    ValueIterator::expected_reward(m, target, objective)?.run(options)
}

fn chain_rows(m: &ParametricModel) -> Result<Vec<Vec<(usize, Rational)>>, SolverError> {
    if !m.is_parameter_free() {
        return Err(SolverError::NotParameterFree);
    }
    m.states()
        .iter()
        .map(|state| match state.choices() {
            [choice] => Ok(choice
                .transitions()
                .iter()
                .map(|t| (t.target, t.prob.constant_value().unwrap_or_else(Rational::zero)))
                .collect()),
            _ => Err(SolverError::NotAChain),
        })
        .collect()
}

/// Solves `x[s] = b[s] + sum P[s][t] x[t]` over `unknown` states, with the
/// other states fixed at `known`.
#[allow(clippy::needless_range_loop)]
fn solve_linear(
    rows: &[Vec<(usize, Rational)>],
    unknown: &[usize],
    known: &[Rational],
    constant: impl Fn(usize) -> Rational,
) -> Vec<Rational> {
    let k = unknown.len();
    let mut index = vec![usize::MAX; rows.len()];
    for (i, &s) in unknown.iter().enumerate() {
        index[s] = i;
    }
    // augmented matrix (I - P) | b
    let mut a: Vec<Vec<Rational>> = vec![vec![Rational::zero(); k + 1]; k];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] = Rational::one();
        a[i][k] = constant(s);
        for (t, p) in &rows[s] {
            if index[*t] == usize::MAX {
                a[i][k] += p * &known[*t];
            } else {
                a[i][index[*t]] -= p;
            }
        }
    }
    for col in 0..k {
        let pivot = (col..k)
            .find(|&r| !a[r][col].is_zero())
            .expect("system restricted to states reaching the target is regular");
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for j in col..=k {
            a[col][j] = &a[col][j] * &inv;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in col..=k {
                    let delta = &f * &a[col][j];
                    a[r][j] -= delta;
                }
            }
        }
    }
    a.into_iter().map(|row| row[k].clone()).collect()
}

/// Exact reachability probabilities of a parameter-free Markov chain.
pub fn solve_mc_exact(m: &ParametricModel, target: &BTreeSet<usize>) -> Result<Vec<Rational>, SolverError> {
    if m.kind() == ModelKind::Psg {
        return Err(SolverError::NotAChain);
    }
    let rows = chain_rows(m)?;
    let (prob0, prob1) = m.qualitative_reach(target);
    let mut known = vec![Rational::zero(); m.num_states()];
    for &s in prob1.iter().chain(target) {
        known[s] = Rational::one();
    }
    let unknown: Vec<usize> = (0..m.num_states())
        .filter(|s| !prob0.contains(s) && !prob1.contains(s) && !target.contains(s))
        .collect();
    let solved = solve_linear(&rows, &unknown, &known, |_| Rational::zero());
    for (&s, v) in unknown.iter().zip(solved) {
        known[s] = v;
    }
    Ok(known)
}

/// Exact expected reward until `target` of a parameter-free Markov chain;
/// `None` where the target is missed with positive probability.
pub fn solve_mc_reward_exact(
    m: &ParametricModel,
    target: &BTreeSet<usize>,
) -> Result<Vec<Option<Rational>>, SolverError> {
    let rows = chain_rows(m)?;
    let (_, prob1) = m.qualitative_reach(target);
    let unknown: Vec<usize> = (0..m.num_states())
        .filter(|s| prob1.contains(s) && !target.contains(s))
        .collect();
    let known = vec![Rational::zero(); m.num_states()];
    let rewards: Vec<Rational> = (0..m.num_states())
        .map(|s| m.reward(s).constant_value().unwrap_or_else(Rational::zero))
        .collect();
    if rewards.iter().any(Signed::is_negative) {
        return Err(SolverError::Unsupported("negative rewards".into()));
    }
    let solved = solve_linear(&rows, &unknown, &known, |s| rewards[s].clone());
    let mut out: Vec<Option<Rational>> = (0..m.num_states())
        .map(|s| target.contains(&s).then(Rational::zero))
        .collect();
    for (&s, v) in unknown.iter().zip(solved) {
        out[s] = Some(v);
    }
    Ok(out)
}
