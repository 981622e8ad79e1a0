//! Parametric Markov chains, MDPs and stochastic games.
//!
//! A [`ParametricModel`] stores, per state, a non-empty list of choices; each
//! choice is a sparse distribution whose entries are multi-affine
//! polynomials. Every distribution sums symbolically to one, so a valuation
//! is well-defined exactly when it keeps every stored entry positive.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::graph::{mask, Support};
use crate::poly::{parse_poly, Poly, PolyError, Rational, Valuation};

/// Action name given to transitions listed directly below a `state` line.
pub const IMPLICIT_ACTION: &str = "tau";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Pmc,
    Pmdp,
    Psg,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Pmc => "pmc",
            ModelKind::Pmdp => "pmdp",
            ModelKind::Psg => "psg",
        }
    }
}

impl FromStr for ModelKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "pmc" => Ok(ModelKind::Pmc),
            "pmdp" => Ok(ModelKind::Pmdp),
            "psg" => Ok(ModelKind::Psg),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    One,
    Two,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("state {state}, action `{action}`: outgoing probabilities sum to {sum}, not 1")]
    Distribution {
        state: usize,
        action: String,
        sum: Poly,
    },
    #[error("state {0} has no enabled action")]
    Deadlock(usize),
    #[error("{0}")]
    Kind(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("state {0} does not exist")]
    InvalidState(usize),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("valuation {valuation} is not well-defined: {location} evaluates to {value}")]
    NotWellDefined {
        location: String,
        value: Rational,
        valuation: Valuation,
    },
    #[error("scheduler does not fix an action at state {0}")]
    IncompleteScheduler(usize),
    #[error("action `{action}` is not enabled at state {state}")]
    InvalidAction { state: usize, action: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub target: usize,
    pub prob: Poly,
}

/// One enabled action of a state together with its distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choice {
    action: String,
    transitions: Vec<Transition>,
    // parameters occurring in the distribution, in model order
    params: Vec<String>,
}

impl Choice {
    pub fn action(&self) -> &str {
        &self.action
    }

    /// Entries sorted by target, all non-zero.
    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Parameters occurring in this distribution.
    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn prob_to(&self, target: usize) -> Option<&Poly> {
        self.transitions
            .binary_search_by_key(&target, |t| t.target)
            .ok()
            .map(|i| &self.transitions[i].prob)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    player: Player,
    choices: Vec<Choice>,
}

impl State {
    pub fn player(&self) -> Player {
        self.player
    }

    pub fn choices(&self) -> &[Choice] {
        &self.choices
    }

    pub fn choice(&self, action: &str) -> Option<&Choice> {
        self.choices.iter().find(|c| c.action == action)
    }
}

/// A memoryless deterministic scheduler: state -> chosen action.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scheduler(BTreeMap<usize, String>);

impl Scheduler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, state: usize, action: impl Into<String>) -> Self {
        self.0.insert(state, action.into());
        self
    }

    pub fn set(&mut self, state: usize, action: impl Into<String>) {
        self.0.insert(state, action.into());
    }

    pub fn get(&self, state: usize) -> Option<&str> {
        self.0.get(&state).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.0.iter().map(|(s, a)| (*s, a.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParametricModel {
    kind: ModelKind,
    parameters: Vec<String>,
    initial: usize,
    states: Vec<State>,
    labels: BTreeMap<String, BTreeSet<usize>>,
    rewards: Option<Vec<Poly>>,
}

impl ParametricModel {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, s: usize) -> &State {
        &self.states[s]
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.states
            .iter()
            .flat_map(|s| &s.choices)
            .map(|c| c.transitions.len())
            .sum()
    }

    pub fn labels(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Result<&BTreeSet<usize>, ModelError> {
        self.labels
            .get(name)
            .ok_or_else(|| ModelError::UnknownLabel(name.to_string()))
    }

    pub fn has_rewards(&self) -> bool {
        self.rewards.is_some()
    }

    /// State reward, zero when the model has none.
    pub fn reward(&self, s: usize) -> Poly {
        self.rewards
            .as_ref()
            .map(|r| r[s].clone())
            .unwrap_or_default()
    }

    pub fn is_parameter_free(&self) -> bool {
        self.states
            .iter()
            .flat_map(|s| &s.choices)
            .all(|c| c.params.is_empty())
            && self
                .rewards
                .iter()
                .flatten()
                .all(|r| r.is_constant())
    }

    /// Parameters occurring in any reward polynomial.
    pub fn reward_params(&self) -> BTreeSet<String> {
        self.rewards
            .iter()
            .flatten()
            .flat_map(|r| r.vars().into_iter().map(str::to_string))
            .collect()
    }

    /// Parameters occurring in any transition polynomial.
    pub fn transition_params(&self) -> BTreeSet<String> {
        self.states
            .iter()
            .flat_map(|s| &s.choices)
            .flat_map(|c| c.params.iter().cloned())
            .collect()
    }

    pub fn support(&self) -> Support {
        Support::new(
            self.states
                .iter()
                .map(|s| {
                    s.choices
                        .iter()
                        .map(|c| c.transitions.iter().map(|t| t.target).collect())
                        .collect()
                })
                .collect(),
        )
    }

    /// States reaching `target` with probability zero / one under every
    /// scheduler, read off the support graph.
    pub fn qualitative_reach(&self, target: &BTreeSet<usize>) -> (BTreeSet<usize>, BTreeSet<usize>) {
        let g = self.support();
        let t = mask(self.num_states(), target.iter().copied());
        let collect = |m: Vec<bool>| -> BTreeSet<usize> {
            m.into_iter()
                .enumerate()
                .filter_map(|(s, b)| b.then_some(s))
                .collect()
        };
        (collect(g.prob0_all(&t)), collect(g.prob1_all(&t)))
    }

    /// Replaces every polynomial by its value at `u`.
    pub fn instantiate(&self, u: &Valuation) -> Result<ParametricModel, ModelError> {
        let mut states = Vec::with_capacity(self.states.len());
        for (s, state) in self.states.iter().enumerate() {
            let mut choices = Vec::with_capacity(state.choices.len());
            for choice in &state.choices {
                let mut transitions = Vec::with_capacity(choice.transitions.len());
                for t in &choice.transitions {
                    let value = t.prob.eval(u)?;
                    if !value.is_positive() {
                        return Err(ModelError::NotWellDefined {
                            location: format!(
                                "P({s}, {}, {}) = {}",
                                choice.action, t.target, t.prob
                            ),
                            value,
                            valuation: u.clone(),
                        });
                    }
                    transitions.push(Transition {
                        target: t.target,
                        prob: Poly::constant(value),
                    });
                }
                choices.push(Choice {
                    action: choice.action.clone(),
                    transitions,
                    params: Vec::new(),
                });
            }
            states.push(State {
                player: state.player,
                choices,
            });
        }
        let rewards = match &self.rewards {
            Some(r) => Some(
                r.iter()
                    .map(|p| p.eval(u).map(Poly::constant))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        Ok(ParametricModel {
            kind: self.kind,
            parameters: Vec::new(),
            initial: self.initial,
            states,
            labels: self.labels.clone(),
            rewards,
        })
    }

    /// The pMC obtained by fixing an action at every nondeterministic state.
    pub fn induce_scheduler(&self, sched: &Scheduler) -> Result<ParametricModel, ModelError> {
        self.restrict(sched, |_| true, ModelKind::Pmc)
    }

    /// Fixes the choices of one player of a pSG, yielding a pMDP.
    pub fn induce_player_scheduler(
        &self,
        player: Player,
        sched: &Scheduler,
    ) -> Result<ParametricModel, ModelError> {
        if self.kind != ModelKind::Psg {
            return Err(ModelError::Kind(
                "per-player schedulers apply to stochastic games only".into(),
            ));
        }
        let mut out = self.restrict(sched, |p| p == player, ModelKind::Pmdp)?;
        if out.states.iter().all(|s| s.choices.len() == 1) {
            out.kind = ModelKind::Pmc;
        }
        Ok(out)
    }

    fn restrict(
        &self,
        sched: &Scheduler,
        applies: impl Fn(Player) -> bool,
        kind: ModelKind,
    ) -> Result<ParametricModel, ModelError> {
        for (s, action) in sched.iter() {
            let state = self.states.get(s).ok_or(ModelError::InvalidState(s))?;
            if state.choice(action).is_none() {
                return Err(ModelError::InvalidAction {
                    state: s,
                    action: action.to_string(),
                });
            }
        }
        let mut states = Vec::with_capacity(self.states.len());
        for (s, state) in self.states.iter().enumerate() {
            let choices = if applies(state.player) {
                match sched.get(s) {
                    Some(a) => vec![state.choice(a).expect("checked above").clone()],
                    None if state.choices.len() == 1 => state.choices.clone(),
                    None => return Err(ModelError::IncompleteScheduler(s)),
                }
            } else {
                state.choices.clone()
            };
            states.push(State {
                player: Player::One,
                choices,
            });
        }
        Ok(ParametricModel {
            kind,
            parameters: self.parameters.clone(),
            initial: self.initial,
            states,
            labels: self.labels.clone(),
            rewards: self.rewards.clone(),
        })
    }

    fn eliminable(&self, s: usize, protected: &[bool], row: &BTreeMap<usize, Poly>) -> bool {
        if protected[s] || self.states[s].choices.len() != 1 {
            return false;
        }
        if self.rewards.as_ref().is_some_and(|r| !r[s].is_zero()) {
            return false;
        }
        if !row.values().all(Poly::is_constant) {
            return false;
        }
        let self_loop = row
            .get(&s)
            .and_then(Poly::constant_value)
            .unwrap_or_else(Rational::zero);
        self_loop < Rational::one()
    }

    /// Eliminates unlabelled, non-initial, reward-free states with a single
    /// constant distribution, rerouting their incoming probability mass.
    pub fn eliminate_constant_states(&self) -> ParametricModel {
        if self.kind == ModelKind::Psg {
            return self.clone();
        }
        let n = self.num_states();
        let mut protected = mask(n, self.labels.values().flatten().copied());
        protected[self.initial] = true;

        // (state, choice) -> sparse row
        let mut rows: Vec<Vec<BTreeMap<usize, Poly>>> = self
            .states
            .iter()
            .map(|s| {
                s.choices
                    .iter()
                    .map(|c| {
                        c.transitions
                            .iter()
                            .map(|t| (t.target, t.prob.clone()))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut pred: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (s, choices) in rows.iter().enumerate() {
            for row in choices {
                for &t in row.keys() {
                    pred[t].insert(s);
                }
            }
        }

        let mut removed = vec![false; n];
        for s in 0..n {
            if rows[s].len() != 1 || !self.eliminable(s, &protected, &rows[s][0]) {
                continue;
            }
            let mut out = rows[s][0].clone();
            let loop_prob = out
                .remove(&s)
                .and_then(|p| p.constant_value())
                .unwrap_or_else(Rational::zero);
            let stay = Rational::one() - loop_prob;
            let exits: Vec<(usize, Rational)> = out
                .iter()
                .map(|(&t, p)| (t, p.constant_value().expect("constant") / &stay))
                .collect();
            for p in std::mem::take(&mut pred[s]) {
                if p == s {
                    continue;
                }
                for row in rows[p].iter_mut() {
                    let Some(f) = row.remove(&s) else { continue };
                    for (t, q) in &exits {
                        let add = f.scale(q);
                        let entry = row.entry(*t).or_default();
                        *entry = &*entry + &add;
                        if entry.is_zero() {
                            row.remove(t);
                        }
                        pred[*t].insert(p);
                    }
                }
            }
            for (t, _) in &exits {
                pred[*t].remove(&s);
            }
            rows[s].clear();
            removed[s] = true;
        }

        if !removed.iter().any(|&r| r) {
            return self.clone();
        }
        let mut index = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if !removed[s] {
                index[s] = next;
                next += 1;
            }
        }
        let mut builder = ModelBuilder::new(self.kind, self.parameters.clone());
        for s in 0..n {
            if removed[s] {
                continue;
            }
            let st = builder.add_state(self.states[s].player);
            for (choice, row) in self.states[s].choices.iter().zip(&rows[s]) {
                builder.add_choice(
                    st,
                    choice.action.clone(),
                    row.iter().map(|(t, p)| (index[*t], p.clone())).collect(),
                );
            }
            if let Some(r) = &self.rewards {
                builder.set_reward(st, r[s].clone());
            }
        }
        builder.set_initial(index[self.initial]);
        for (name, set) in &self.labels {
            builder.add_label(name.clone(), set.iter().map(|s| index[*s]));
        }
        builder
            .build()
            .expect("elimination preserves well-formedness")
    }
}

/// Incremental construction of a validated [`ParametricModel`].
/// Action name and successor list.
type PendingChoice = (String, Vec<(usize, Poly)>);

#[derive(Debug, Clone)]
pub struct ModelBuilder {
    kind: ModelKind,
    parameters: Vec<String>,
    initial: usize,
    players: Vec<Player>,
    choices: Vec<Vec<PendingChoice>>,
    labels: BTreeMap<String, BTreeSet<usize>>,
    rewards: BTreeMap<usize, Poly>,
}

impl ModelBuilder {
    pub fn new(kind: ModelKind, parameters: Vec<String>) -> Self {
        ModelBuilder {
            kind,
            parameters,
            initial: 0,
            players: Vec::new(),
            choices: Vec::new(),
            labels: BTreeMap::new(),
            rewards: BTreeMap::new(),
        }
    }

    pub fn add_state(&mut self, player: Player) -> usize {
        self.players.push(player);
        self.choices.push(Vec::new());
        self.players.len() - 1
    }

    pub fn add_states(&mut self, count: usize) -> std::ops::Range<usize> {
        let start = self.players.len();
        for _ in 0..count {
            self.add_state(Player::One);
        }
        start..self.players.len()
    }

    pub fn add_choice(&mut self, state: usize, action: impl Into<String>, dist: Vec<(usize, Poly)>) {
        self.choices[state].push((action.into(), dist));
    }

    pub fn set_initial(&mut self, state: usize) {
        self.initial = state;
    }

    pub fn add_label(&mut self, name: impl Into<String>, states: impl IntoIterator<Item = usize>) {
        self.labels.entry(name.into()).or_default().extend(states);
    }

    pub fn set_reward(&mut self, state: usize, reward: Poly) {
        self.rewards.insert(state, reward);
    }

    pub fn build(self) -> Result<ParametricModel, ModelError> {
        let n = self.players.len();
        if n == 0 {
            return Err(ModelError::Kind("model has no states".into()));
        }
        if self.initial >= n {
            return Err(ModelError::InvalidState(self.initial));
        }
        let known: BTreeSet<&str> = self.parameters.iter().map(String::as_str).collect();
        if known.len() != self.parameters.len() {
            return Err(ModelError::Kind("duplicate parameter declaration".into()));
        }
        let check_vars = |p: &Poly| -> Result<(), ModelError> {
            match p.vars().into_iter().find(|v| !known.contains(v)) {
                Some(v) => Err(ModelError::UnknownParameter(v.to_string())),
                None => Ok(()),
            }
        };

        let mut states = Vec::with_capacity(n);
        for (s, (player, raw_choices)) in self.players.iter().zip(self.choices).enumerate() {
            if raw_choices.is_empty() {
                return Err(ModelError::Deadlock(s));
            }
            match self.kind {
                ModelKind::Pmc if raw_choices.len() != 1 => {
                    return Err(ModelError::Kind(format!(
                        "state {s} of a pmc has {} actions",
                        raw_choices.len()
                    )))
                }
                ModelKind::Pmc | ModelKind::Pmdp if *player != Player::One => {
                    return Err(ModelError::Kind(format!(
                        "state {s} has a player tag but the model is not a psg"
                    )))
                }
                _ => {}
            }
            let mut choices: Vec<Choice> = Vec::with_capacity(raw_choices.len());
            for (action, dist) in raw_choices {
                if choices.iter().any(|c| c.action == action) {
                    return Err(ModelError::Kind(format!(
                        "state {s} declares action `{action}` twice"
                    )));
                }
                let mut row: BTreeMap<usize, Poly> = BTreeMap::new();
                for (target, prob) in dist {
                    if target >= n {
                        return Err(ModelError::InvalidState(target));
                    }
                    check_vars(&prob)?;
                    let entry = row.entry(target).or_default();
                    *entry = &*entry + &prob;
                }
                row.retain(|_, p| !p.is_zero());
                let sum: Poly = row.values().cloned().sum();
                if sum != Poly::one() {
                    return Err(ModelError::Distribution {
                        state: s,
                        action,
                        sum,
                    });
                }
                let used: BTreeSet<&str> = row.values().flat_map(|p| p.vars()).collect();
                let params = self
                    .parameters
                    .iter()
                    .filter(|p| used.contains(p.as_str()))
                    .cloned()
                    .collect();
                choices.push(Choice {
                    action,
                    transitions: row
                        .into_iter()
                        .map(|(target, prob)| Transition { target, prob })
                        .collect(),
                    params,
                });
            }
            states.push(State {
                player: *player,
                choices,
            });
        }
        for set in self.labels.values() {
            if let Some(&bad) = set.iter().find(|&&s| s >= n) {
                return Err(ModelError::InvalidState(bad));
            }
        }
        let rewards = if self.rewards.values().all(Poly::is_zero) {
            None
        } else {
            let mut r = vec![Poly::zero(); n];
            for (s, p) in self.rewards {
                if s >= n {
                    return Err(ModelError::InvalidState(s));
                }
                check_vars(&p)?;
                r[s] = p;
            }
            Some(r)
        };
        Ok(ParametricModel {
            kind: self.kind,
            parameters: self.parameters,
            initial: self.initial,
            states,
            labels: self.labels,
            rewards,
        })
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_action_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses the line-oriented model format.
pub fn parse_model(text: &str) -> Result<ParametricModel, ModelError> {
    let syntax = |line: usize, message: String| ModelError::Syntax { line, message };
    let mut kind: Option<ModelKind> = None;
    let mut parameters: Option<Vec<String>> = None;
    let mut initial: Option<usize> = None;
    let mut labels: Vec<(String, Vec<usize>)> = Vec::new();
    let mut rewards: Vec<(usize, usize, Poly)> = Vec::new();
    // state index -> (player tag, line, actions)
    #[allow(clippy::type_complexity)]
    let mut states: BTreeMap<usize, (Option<Player>, usize, Vec<(String, Vec<(usize, Poly)>)>)> =
        BTreeMap::new();
    let mut current: Option<usize> = None;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().expect("non-empty line");
        let parse_state = |w: &str| -> Result<usize, ModelError> {
            w.parse()
                .map_err(|_| syntax(lineno, format!("invalid state index `{w}`")))
        };
        match head {
            "@kind" => {
                let k = words.next().unwrap_or("");
                kind = Some(
                    k.parse()
                        .map_err(|_| syntax(lineno, format!("unknown model kind `{k}`")))?,
                );
            }
            "@parameters" => {
                let names: Vec<String> = words.map(str::to_string).collect();
                if let Some(bad) = names.iter().find(|n| !is_identifier(n)) {
                    return Err(syntax(lineno, format!("invalid parameter name `{bad}`")));
                }
                parameters = Some(names);
            }
            "@initial" => initial = Some(parse_state(words.next().unwrap_or(""))?),
            "@label" => {
                let name = words.next().unwrap_or("");
                if !is_identifier(name) {
                    return Err(syntax(lineno, format!("invalid label name `{name}`")));
                }
                let set = words.map(parse_state).collect::<Result<Vec<_>, _>>()?;
                labels.push((name.to_string(), set));
            }
            "@reward" => {
                let rest = line["@reward".len()..].trim();
                let (lhs, rhs) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax(lineno, "expected `@reward <state> : <poly>`".into()))?;
                let lhs: Vec<&str> = lhs.split_whitespace().collect();
                if lhs.len() != 1 {
                    return Err(syntax(
                        lineno,
                        "only state rewards are supported (`@reward <state> : <poly>`)".into(),
                    ));
                }
                let poly = parse_poly(rhs).map_err(|e| poly_error(lineno, e))?;
                rewards.push((lineno, parse_state(lhs[0])?, poly));
            }
            "state" => {
                let s = parse_state(words.next().unwrap_or(""))?;
                let player = match words.next() {
                    None => None,
                    Some("player1") => Some(Player::One),
                    Some("player2") => Some(Player::Two),
                    Some(other) => {
                        return Err(syntax(lineno, format!("unknown player tag `{other}`")))
                    }
                };
                if words.next().is_some() {
                    return Err(syntax(lineno, "trailing input after state declaration".into()));
                }
                if states.insert(s, (player, lineno, Vec::new())).is_some() {
                    return Err(syntax(lineno, format!("state {s} declared twice")));
                }
                current = Some(s);
            }
            "action" => {
                let s = current.ok_or_else(|| syntax(lineno, "action outside of a state".into()))?;
                let name = words.next().unwrap_or("");
                if !is_action_name(name) || words.next().is_some() {
                    return Err(syntax(lineno, format!("invalid action name `{name}`")));
                }
                states.get_mut(&s).expect("current").2.push((name.to_string(), Vec::new()));
            }
            _ if head.starts_with('@') => {
                return Err(syntax(lineno, format!("unknown directive `{head}`")))
            }
            _ => {
                let s = current
                    .ok_or_else(|| syntax(lineno, "transition outside of a state".into()))?;
                let (lhs, rhs) = line
                    .split_once(':')
                    .ok_or_else(|| syntax(lineno, "expected `<target> : <poly>`".into()))?;
                let target = parse_state(lhs.trim())?;
                let poly = parse_poly(rhs).map_err(|e| poly_error(lineno, e))?;
                let actions = &mut states.get_mut(&s).expect("current").2;
                if actions.is_empty() {
                    actions.push((IMPLICIT_ACTION.to_string(), Vec::new()));
                }
                actions.last_mut().expect("non-empty").1.push((target, poly));
            }
        }
    }

    let kind = kind.ok_or_else(|| syntax(0, "missing `@kind`".into()))?;
    let parameters = parameters.unwrap_or_default();
    let n = states.len();
    if let Some((&s, _)) = states.iter().find(|(&s, _)| s >= n) {
        return Err(syntax(0, format!("state indices must be 0..{n}, found {s}")));
    }
    let mut builder = ModelBuilder::new(kind, parameters);
    for (s, (player, lineno, actions)) in states {
        let player = match (kind, player) {
            (ModelKind::Psg, Some(p)) => p,
            (ModelKind::Psg, None) => {
                return Err(ModelError::Kind(format!(
                    "line {lineno}: state {s} of a psg needs a player tag"
                )))
            }
            (_, Some(_)) => {
                return Err(ModelError::Kind(format!(
                    "line {lineno}: player tags are only allowed in psg models"
                )))
            }
            (_, None) => Player::One,
        };
        builder.add_state(player);
        for (action, dist) in actions {
            builder.add_choice(s, action, dist);
        }
    }
    builder.set_initial(initial.unwrap_or(0));
    for (name, set) in labels {
        builder.add_label(name, set);
    }
    let mut seen = BTreeSet::new();
    for (lineno, s, poly) in rewards {
        if !seen.insert(s) {
            return Err(syntax(lineno, format!("duplicate reward for state {s}")));
        }
        builder.set_reward(s, poly);
    }
    builder.build()
}

fn poly_error(line: usize, e: PolyError) -> ModelError {
    match e {
        PolyError::Syntax { message, .. } => ModelError::Syntax { line, message },
        other => ModelError::Poly(other),
    }
}

impl FromStr for ParametricModel {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_model(s)
    }
}

impl fmt::Display for ParametricModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "@kind {}", self.kind.as_str())?;
        writeln!(f, "@parameters {}", self.parameters.join(" "))?;
        writeln!(f, "@initial {}", self.initial)?;
        for (name, set) in &self.labels {
            write!(f, "@label {name}")?;
            for s in set {
                write!(f, " {s}")?;
            }
            writeln!(f)?;
        }
        if let Some(rewards) = &self.rewards {
            for (s, r) in rewards.iter().enumerate() {
                if !r.is_zero() {
                    writeln!(f, "@reward {s} : {r}")?;
                }
            }
        }
        for (s, state) in self.states.iter().enumerate() {
            match (self.kind, state.player) {
                (ModelKind::Psg, Player::One) => writeln!(f, "state {s} player1")?,
                (ModelKind::Psg, Player::Two) => writeln!(f, "state {s} player2")?,
                _ => writeln!(f, "state {s}")?,
            }
            for choice in &state.choices {
                writeln!(f, "  action {}", choice.action)?;
                for t in &choice.transitions {
                    writeln!(f, "    {} : {}", t.target, t.prob)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_rational;

    pub(crate) const BOUNCE: &str = "\
@kind pmc
@parameters x y
@initial 0
@label target 3
state 0
  1 : x
  2 : 1 - x
state 1
  2 : y
  3 : 1 - y
state 2
  1 : y
  4 : 1 - y
state 3
  3 : 1
state 4
  4 : 1
";

    const GAME_PMDP: &str = "\
@kind pmdp
@parameters x y
@label target 3
state 0
  action alpha
    1 : x
    2 : 1 - x
  action beta
    0 : x*y
    1 : 1 - x*y
state 1
  2 : y
  3 : 1 - y
state 2
  1 : y
  4 : 1 - y
state 3
  3 : 1
state 4
  4 : 1
";

    const GAME_PSG: &str = "\
@kind psg
@parameters x y
@label target 3
state 0 player1
  action alpha
    1 : x
    2 : 1 - x
  action beta
    0 : x*y
    1 : 1 - x*y
state 1 player2
  2 : y
  3 : 1 - y
state 2 player2
  action alpha
    0 : 0.6
    2 : 0.4
  action beta
    1 : y
    4 : 1 - y
state 3 player1
  3 : 1
state 4 player1
  4 : 1
";

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn val(pairs: &[(&str, &str)]) -> Valuation {
        pairs.iter().map(|(k, v)| (k.to_string(), q(v))).collect()
    }

    #[test]
    fn parses_bounce() {
        let m = parse_model(BOUNCE).unwrap();
        assert_eq!(m.kind(), ModelKind::Pmc);
        assert_eq!(m.num_states(), 5);
        assert_eq!(m.state(0).choices()[0].params(), ["x"]);
        assert_eq!(m.state(1).choices()[0].params(), ["y"]);
        assert_eq!(m.state(2).choices()[0].params(), ["y"]);
        assert!(m.state(3).choices()[0].params().is_empty());
        assert_eq!(m.label("target").unwrap(), &BTreeSet::from([3]));
    }

    #[test]
    fn parses_bounce_game_pmdp() {
        let m = parse_model(GAME_PMDP).unwrap();
        let beta = m.state(0).choice("beta").unwrap();
        assert_eq!(beta.prob_to(0).unwrap(), &"x*y".parse::<Poly>().unwrap());
        assert_eq!(beta.params(), ["x", "y"]);
    }

    #[test]
    fn distribution_error() {
        let text = BOUNCE.replace("  2 : 1 - x\n", "  2 : 1 - 2*x\n");
        match parse_model(&text) {
            Err(ModelError::Distribution { state: 0, sum, .. }) => {
                assert_eq!(sum, "1 - x".parse().unwrap())
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        let deadlock = "@kind pmc\nstate 0\nstate 1\n  1 : 1\n";
        assert_eq!(parse_model(deadlock), Err(ModelError::Deadlock(0)));
        let tagged = "@kind pmdp\nstate 0 player2\n  0 : 1\n";
        assert!(matches!(parse_model(tagged), Err(ModelError::Kind(_))));
        let untagged = "@kind psg\nstate 0\n  0 : 1\n";
        assert!(matches!(parse_model(untagged), Err(ModelError::Kind(_))));
        let two_actions = "@kind pmc\nstate 0\n action a\n 0 : 1\n action b\n 0 : 1\n";
        assert!(matches!(parse_model(two_actions), Err(ModelError::Kind(_))));
        let square = "@kind pmc\n@parameters x\nstate 0\n  0 : x^2 + 1 - x^2\n";
        assert!(matches!(
            parse_model(square),
            Err(ModelError::Poly(PolyError::NotMultiAffine(_)))
        ));
        let unknown = "@kind pmc\n@parameters x\nstate 0\n  0 : z\n  1 : 1 - z\nstate 1\n  1 : 1\n";
        assert_eq!(
            parse_model(unknown),
            Err(ModelError::UnknownParameter("z".into()))
        );
        let trans_reward = "@kind pmc\n@reward 0 0 : 1\nstate 0\n 0 : 1\n";
        assert!(matches!(
            parse_model(trans_reward),
            Err(ModelError::Syntax { line: 2, .. })
        ));
        let gap = "@kind pmc\nstate 0\n 0 : 1\nstate 2\n 2 : 1\n";
        assert!(matches!(parse_model(gap), Err(ModelError::Syntax { .. })));
    }

    #[test]
    fn round_trip() {
        for text in [BOUNCE, GAME_PMDP, GAME_PSG] {
            let m = parse_model(text).unwrap();
            assert_eq!(parse_model(&m.to_string()).unwrap(), m);
        }
        let with_reward = format!("{BOUNCE}@reward 0 : 1/2 + z\n").replace("x y", "x y z");
        let m = parse_model(&with_reward).unwrap();
        assert!(m.has_rewards());
        assert_eq!(parse_model(&m.to_string()).unwrap(), m);
    }

    #[test]
    fn instantiation() {
        let m = parse_model(BOUNCE).unwrap();
        let mc = m.instantiate(&val(&[("x", "0.8"), ("y", "0.6")])).unwrap();
        assert!(mc.is_parameter_free());
        let c0 = &mc.state(0).choices()[0];
        assert_eq!(c0.prob_to(1).unwrap().constant_value(), Some(q("0.8")));
        assert_eq!(c0.prob_to(2).unwrap().constant_value(), Some(q("0.2")));
        assert_eq!(
            mc.state(1).choices()[0].prob_to(3).unwrap().constant_value(),
            Some(q("0.4"))
        );
        assert!(matches!(
            m.instantiate(&val(&[("x", "0"), ("y", "0")])),
            Err(ModelError::NotWellDefined { .. })
        ));
        assert!(matches!(
            m.instantiate(&val(&[("x", "0.5")])),
            Err(ModelError::Poly(PolyError::MissingParameter(_)))
        ));
        let free = m.instantiate(&val(&[("x", "0.5"), ("y", "0.5")])).unwrap();
        assert_eq!(free.instantiate(&Valuation::new()).unwrap(), free);
    }

    #[test]
    fn scheduler_induction() {
        let psg = parse_model(GAME_PSG).unwrap();
        let pmdp = parse_model(GAME_PMDP).unwrap();
        let pmc = parse_model(BOUNCE).unwrap();
        let both = Scheduler::new().with(2, "beta").with(0, "alpha");
        assert_same_chain(&psg.induce_scheduler(&both).unwrap(), &pmc);
        let rho = Scheduler::new().with(0, "alpha");
        assert_same_chain(&pmdp.induce_scheduler(&rho).unwrap(), &pmc);
        let sigma = Scheduler::new().with(2, "beta");
        let reduced = psg.induce_player_scheduler(Player::Two, &sigma).unwrap();
        assert_eq!(reduced.kind(), ModelKind::Pmdp);
        assert_same_chain(&reduced.induce_scheduler(&rho).unwrap(), &pmc);
        assert_eq!(pmc.induce_scheduler(&Scheduler::new()).unwrap(), pmc);

        assert_eq!(
            pmdp.induce_scheduler(&Scheduler::new()),
            Err(ModelError::IncompleteScheduler(0))
        );
        assert!(matches!(
            pmdp.induce_scheduler(&Scheduler::new().with(0, "gamma")),
            Err(ModelError::InvalidAction { state: 0, .. })
        ));
    }

    // equal up to action names and labels
    fn assert_same_chain(a: &ParametricModel, b: &ParametricModel) {
        assert_eq!(a.num_states(), b.num_states());
        for s in 0..a.num_states() {
            assert_eq!(
                a.state(s).choices()[0].transitions(),
                b.state(s).choices()[0].transitions()
            );
        }
    }

    #[test]
    fn qualitative_bounce() {
        let m = parse_model(BOUNCE).unwrap();
        let (p0, p1) = m.qualitative_reach(&BTreeSet::from([3]));
        assert_eq!(p0, BTreeSet::from([4]));
        assert_eq!(p1, BTreeSet::from([3]));
        let all: BTreeSet<usize> = (0..5).collect();
        assert_eq!(m.qualitative_reach(&all).1, all);
        let (p0, _) = m.qualitative_reach(&BTreeSet::from([1]));
        assert!(p0.contains(&3) && p0.contains(&4));
    }

    #[test]
    fn elimination_one_step() {
        let text = "\
@kind pmc
@parameters x
@label goal 2 3
state 0
  1 : x
  3 : 1 - x
state 1
  2 : 1/2
  3 : 1/2
state 2
  2 : 1
state 3
  3 : 1
";
        let m = parse_model(text).unwrap();
        let e = m.eliminate_constant_states();
        assert_eq!(e.num_states(), 3);
        let c = &e.state(0).choices()[0];
        assert_eq!(c.prob_to(1).unwrap(), &"1/2*x".parse::<Poly>().unwrap());
        assert_eq!(c.prob_to(2).unwrap(), &"1 - 1/2*x".parse::<Poly>().unwrap());
        assert_eq!(e.label("goal").unwrap(), &BTreeSet::from([1, 2]));
    }

    #[test]
    fn elimination_renormalises_self_loops() {
        let text = "\
@kind pmc
@parameters p
@label t 2
@label u 3
state 0
  1 : p
  3 : 1 - p
state 1
  1 : 1/4
  2 : 3/4
state 2
  2 : 1
state 3
  3 : 1
";
        let e = parse_model(text).unwrap().eliminate_constant_states();
        assert_eq!(
            e.state(0).choices()[0].prob_to(1).unwrap(),
            &"p".parse::<Poly>().unwrap()
        );
    }

    #[test]
    fn elimination_keeps_protected_states() {
        let m = parse_model(BOUNCE).unwrap();
        assert_eq!(m.eliminate_constant_states(), m);
        let text = "@kind pmc\n@label t 1\n@reward 2 : 1\nstate 0\n 2 : 1\nstate 1\n 1 : 1\nstate 2\n 1 : 1\n";
        let m = parse_model(text).unwrap();
        assert_eq!(m.eliminate_constant_states(), m);
    }
}
