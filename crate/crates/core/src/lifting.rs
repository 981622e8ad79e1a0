//! Parameter lifting: relaxation and substitution.
//!
//! Substitution replaces the parametric distribution of every state (or
//! state-action pair) by a nondeterministic choice between its instantiations
//! at the corners of a region. A pMC becomes an MDP; a pMDP becomes a
//! stochastic game whose second player picks the corners.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::model::{ModelBuilder, ModelError, ModelKind, ParametricModel, Player};
use crate::poly::{Poly, Rational, Valuation};
use crate::region::{CornerValuation, Region, RegionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiftError {
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Unsupported(String),
    #[error("parameters {0:?} occur in both rewards and transition probabilities")]
    RewardParameterOverlap(Vec<String>),
    #[error("target `{0}` is not reached almost surely from the initial state")]
    TargetNotAlmostSure(String),
    #[error("state {state}: probability {value} at corner {corner} is not positive")]
    NotWellDefined {
        state: usize,
        value: Rational,
        corner: Valuation,
    },
    #[error("state {state}: reward {value} at corner {corner} is negative")]
    NegativeReward {
        state: usize,
        value: Rational,
        corner: Valuation,
    },
}

/// A model in which every state owns private copies of the parameters.
#[derive(Debug, Clone)]
pub struct RelaxedModel {
    pub model: ParametricModel,
    /// (state, original parameter) -> fresh parameter
    pub renaming: BTreeMap<(usize, String), String>,
}

fn fresh_name(param: &str, state: usize) -> String {
    format!("{param}_s{state}")
}

impl RelaxedModel {
    /// The relaxed region: each copy inherits the bounds of its original.
    pub fn relax_region(&self, r: &Region) -> Result<Region, RegionError> {
        let bounds = self
            .model
            .parameters()
            .iter()
            .map(|fresh| {
                let original = self.original(fresh).expect("fresh name from renaming");
                r.interval(original)
                    .map(|i| (fresh.clone(), i.lo.clone(), i.hi.clone()))
                    .ok_or_else(|| RegionError::MissingParameter(original.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Region::new(bounds)
    }

    pub fn relax_valuation(&self, u: &Valuation) -> Valuation {
        self.renaming
            .iter()
            .filter_map(|((_, x), fresh)| u.get(x).map(|v| (fresh.clone(), v.clone())))
            .collect()
    }

    fn original(&self, fresh: &str) -> Option<&str> {
        self.renaming
            .iter()
            .find(|(_, f)| f.as_str() == fresh)
            .map(|((_, x), _)| x.as_str())
    }
}

/// Equips every state with its own copy of each parameter it uses.
pub fn relax(m: &ParametricModel) -> Result<RelaxedModel, LiftError> {
    if m.kind() == ModelKind::Psg {
        return Err(LiftError::Unsupported("relaxation of stochastic games".into()));
    }
    let mut renaming = BTreeMap::new();
    let mut fresh_params = Vec::new();
    for (s, state) in m.states().iter().enumerate() {
        let mut used: BTreeSet<&str> = state
            .choices()
            .iter()
            .flat_map(|c| c.params().iter().map(String::as_str))
            .collect();
        let reward = m.reward(s);
        used.extend(reward.vars());
        for x in m.parameters().iter().filter(|x| used.contains(x.as_str())) {
            let fresh = fresh_name(x, s);
            fresh_params.push(fresh.clone());
            renaming.insert((s, x.clone()), fresh);
        }
    }
    let mut builder = ModelBuilder::new(m.kind(), fresh_params);
    for (s, state) in m.states().iter().enumerate() {
        builder.add_state(state.player());
        let rename = |x: &str| fresh_name(x, s);
        for choice in state.choices() {
            builder.add_choice(
                s,
                choice.action(),
                choice
                    .transitions()
                    .iter()
                    .map(|t| (t.target, t.prob.rename(rename)))
                    .collect(),
            );
        }
        let reward = m.reward(s);
        if !reward.is_zero() {
            builder.set_reward(s, reward.rename(rename));
        }
    }
    builder.set_initial(m.initial());
    for (name, set) in m.labels() {
        builder.add_label(name.clone(), set.iter().copied());
    }
    Ok(RelaxedModel {
        model: builder.build()?,
        renaming,
    })
}

/// Where a state of a substituted model comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateOrigin {
    Original(usize),
    /// The intermediate player-2 state `<state, action>`.
    ActionOf { state: usize, action: String },
}

/// Parameter-free MDP or SG produced by substitution.
#[derive(Debug, Clone)]
pub struct SubstitutedModel {
    pub model: ParametricModel,
    /// `[state][choice]`: the corner a choice stands for, `None` for the
    /// action choices of player-1 states in a game.
    pub corners: Vec<Vec<Option<CornerValuation>>>,
    pub origin: Vec<StateOrigin>,
    /// `[state][choice]` rewards of a reward substitution.
    pub choice_rewards: Option<Vec<Vec<Rational>>>,
}

impl fmt::Display for SubstitutedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(rewards) = &self.choice_rewards {
            for (s, row) in rewards.iter().enumerate() {
                for (c, r) in row.iter().enumerate() {
                    let action = self.model.state(s).choices()[c].action();
                    writeln!(f, "# reward {s} {action} : {r}")?;
                }
            }
        }
        for (s, origin) in self.origin.iter().enumerate() {
            if let StateOrigin::ActionOf { state, action } = origin {
                writeln!(f, "# state {s} = <{state}, {action}>")?;
            }
        }
        write!(f, "{}", self.model)
    }
}

#[derive(Debug, Clone)]
struct SkeletonChoice {
    state: usize,
    action: String,
    // parameters branched over, model order
    params: Vec<String>,
    transitions: Vec<(usize, Poly)>,
    reward: Option<Poly>,
}

/// The region-independent part of a substitution: which parameters each
/// distribution depends on and where its corners go. Instantiated per
/// region with [`SubstitutionSkeleton::substitute`].
#[derive(Debug, Clone)]
pub struct SubstitutionSkeleton {
    source: ParametricModel,
    choices: Vec<Vec<SkeletonChoice>>,
    with_rewards: bool,
}

impl SubstitutionSkeleton {
    pub fn new(m: &ParametricModel) -> Result<Self, LiftError> {
        Self::build(m, false)
    }

    /// Skeleton whose corners also range over the reward parameters; only
    /// for pMCs.
    pub fn with_rewards(m: &ParametricModel) -> Result<Self, LiftError> {
        if m.kind() != ModelKind::Pmc {
            return Err(LiftError::Unsupported(
                "reward substitution is only defined for pMCs".into(),
            ));
        }
        Self::build(m, true)
    }

    fn build(m: &ParametricModel, with_rewards: bool) -> Result<Self, LiftError> {
        if m.kind() == ModelKind::Psg {
            return Err(LiftError::Unsupported(
                "substitution of stochastic games is not supported".into(),
            ));
        }
        let choices = m
            .states()
            .iter()
            .enumerate()
            .map(|(s, state)| {
                let reward = with_rewards.then(|| m.reward(s));
                state
                    .choices()
                    .iter()
                    .map(|c| {
                        let mut used: BTreeSet<&str> =
                            c.params().iter().map(String::as_str).collect();
                        if let Some(r) = &reward {
                            used.extend(r.vars());
                        }
                        SkeletonChoice {
                            state: s,
                            action: c.action().to_string(),
                            params: m
                                .parameters()
                                .iter()
                                .filter(|p| used.contains(p.as_str()))
                                .cloned()
                                .collect(),
                            transitions: c
                                .transitions()
                                .iter()
                                .map(|t| (t.target, t.prob.clone()))
                                .collect(),
                            reward: reward.clone(),
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(SubstitutionSkeleton {
            source: m.clone(),
            choices,
            with_rewards,
        })
    }

    pub fn source(&self) -> &ParametricModel {
        &self.source
    }

    /// Corner distributions of one source choice as `(corner, row, reward)`.
    #[allow(clippy::type_complexity)]
    fn expand(
        &self,
        choice: &SkeletonChoice,
        r: &Region,
        cap: usize,
    ) -> Result<Vec<(CornerValuation, Vec<(usize, Poly)>, Option<Rational>)>, LiftError> {
        let mut out = Vec::new();
        for corner in r.corners(&choice.params, cap)? {
            let mut row = Vec::with_capacity(choice.transitions.len());
            for (target, prob) in &choice.transitions {
                let value = prob.eval(&corner.valuation).map_err(ModelError::from)?;
                if !value.is_positive() {
                    return Err(LiftError::NotWellDefined {
                        state: choice.state,
                        value,
                        corner: corner.valuation,
                    });
                }
                row.push((*target, Poly::constant(value)));
            }
            let reward = match &choice.reward {
                Some(rew) => {
                    let value = rew.eval(&corner.valuation).map_err(ModelError::from)?;
                    if value.is_negative() {
                        return Err(LiftError::NegativeReward {
                            state: choice.state,
                            value,
                            corner: corner.valuation,
                        });
                    }
                    Some(value)
                }
                None => None,
            };
            out.push((corner, row, reward));
        }
        Ok(out)
    }

    pub fn substitute(&self, r: &Region, cap: usize) -> Result<SubstitutedModel, LiftError> {
        let r = r.aligned_to(self.source.parameters())?;
        match self.source.kind() {
            ModelKind::Pmc => self.substitute_chain(&r, cap),
            ModelKind::Pmdp => self.substitute_mdp(&r, cap),
            ModelKind::Psg => unreachable!("rejected at construction"),
        }
    }

    fn substitute_chain(&self, r: &Region, cap: usize) -> Result<SubstitutedModel, LiftError> {
        let m = &self.source;
        let mut builder = ModelBuilder::new(ModelKind::Pmdp, Vec::new());
        builder.add_states(m.num_states());
        let mut corners = Vec::with_capacity(m.num_states());
        let mut rewards = Vec::with_capacity(m.num_states());
        for (s, choices) in self.choices.iter().enumerate() {
            let mut state_corners = Vec::new();
            let mut state_rewards = Vec::new();
            for choice in choices {
                for (corner, row, reward) in self.expand(choice, r, cap)? {
                    builder.add_choice(s, corner.label(), row);
                    state_corners.push(Some(corner));
                    state_rewards.push(reward.unwrap_or_else(Rational::zero));
                }
            }
            corners.push(state_corners);
            rewards.push(state_rewards);
        }
        builder.set_initial(m.initial());
        for (name, set) in m.labels() {
            builder.add_label(name.clone(), set.iter().copied());
        }
        Ok(SubstitutedModel {
            model: builder.build()?,
            corners,
            origin: (0..m.num_states()).map(StateOrigin::Original).collect(),
            choice_rewards: self.with_rewards.then_some(rewards),
        })
    }

    fn substitute_mdp(&self, r: &Region, cap: usize) -> Result<SubstitutedModel, LiftError> {
        let m = &self.source;
        let n = m.num_states();
        let mut builder = ModelBuilder::new(ModelKind::Psg, Vec::new());
        for _ in 0..n {
            builder.add_state(Player::One);
        }
        let mut corners: Vec<Vec<Option<CornerValuation>>> = vec![Vec::new(); n];
        let mut origin: Vec<StateOrigin> = (0..n).map(StateOrigin::Original).collect();
        for (s, choices) in self.choices.iter().enumerate() {
            for choice in choices {
                let inner = builder.add_state(Player::Two);
                builder.add_choice(s, choice.action.clone(), vec![(inner, Poly::one())]);
                corners[s].push(None);
                origin.push(StateOrigin::ActionOf {
                    state: s,
                    action: choice.action.clone(),
                });
                let mut inner_corners = Vec::new();
                for (corner, row, _) in self.expand(choice, r, cap)? {
                    builder.add_choice(inner, corner.label(), row);
                    inner_corners.push(Some(corner));
                }
                corners.push(inner_corners);
            }
        }
        builder.set_initial(m.initial());
        for (name, set) in m.labels() {
            builder.add_label(name.clone(), set.iter().copied());
        }
        Ok(SubstitutedModel {
            model: builder.build()?,
            corners,
            origin,
            choice_rewards: None,
        })
    }
}

/// Substitution of a pMC on `r`: an MDP with one action per corner of the
/// parameters each state depends on.
pub fn substitute_pmc(m: &ParametricModel, r: &Region, cap: usize) -> Result<SubstitutedModel, LiftError> {
    if m.kind() != ModelKind::Pmc {
        return Err(LiftError::Unsupported("expected a pmc".into()));
    }
    SubstitutionSkeleton::new(m)?.substitute(r, cap)
}

/// Substitution of a pMDP on `r`: a game where player 1 keeps the original
/// actions and player 2 picks corners at the intermediate states.
pub fn substitute_pmdp(m: &ParametricModel, r: &Region, cap: usize) -> Result<SubstitutedModel, LiftError> {
    if m.kind() != ModelKind::Pmdp {
        return Err(LiftError::Unsupported("expected a pmdp".into()));
    }
    SubstitutionSkeleton::new(m)?.substitute(r, cap)
}

/// Checks the region-independent preconditions of reward substitution:
/// reward and probability parameters are disjoint and the target is reached
/// almost surely (a property of the topology on well-defined regions).
pub fn check_reward_preconditions(m: &ParametricModel, target_label: &str) -> Result<(), LiftError> {
    if m.kind() != ModelKind::Pmc {
        return Err(LiftError::Unsupported(
            "expected-reward properties are only supported on pMCs".into(),
        ));
    }
    let overlap: Vec<String> = m
        .reward_params()
        .intersection(&m.transition_params())
        .cloned()
        .collect();
    if !overlap.is_empty() {
        return Err(LiftError::RewardParameterOverlap(overlap));
    }
    let target = m.label(target_label)?;
    let (_, prob1) = m.qualitative_reach(target);
    if !prob1.contains(&m.initial()) {
        return Err(LiftError::TargetNotAlmostSure(target_label.to_string()));
    }
    Ok(())
}

/// Reward substitution of a pMC: corners range over transition and reward
/// parameters; each action carries the reward at its corner.
pub fn substitute_rewards(
    m: &ParametricModel,
    r: &Region,
    target_label: &str,
    cap: usize,
) -> Result<SubstitutedModel, LiftError> {
    check_reward_preconditions(m, target_label)?;
    SubstitutionSkeleton::with_rewards(m)?.substitute(r, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;
    use crate::poly::parse_rational;
    use crate::region::DEFAULT_CORNER_CAP;

    const CAP: usize = DEFAULT_CORNER_CAP;

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

    fn coin() -> ParametricModel {
        parse_model(
            "@kind pmc\n@parameters x\n@label target 2\nstate 0\n 1 : x\n 3 : 1 - x\n\
             state 1\n 2 : 1 - x\n 3 : x\nstate 2\n 2 : 1\nstate 3\n 3 : 1\n",
        )
        .unwrap()
    }

    fn row(m: &ParametricModel, s: usize, c: usize) -> Vec<(usize, Rational)> {
        m.state(s).choices()[c]
            .transitions()
            .iter()
            .map(|t| (t.target, t.prob.constant_value().unwrap()))
            .collect()
    }

    #[test]
    fn relaxation_of_bounce() {
        let rel = relax(&bounce()).unwrap();
        assert_eq!(rel.model.parameters(), ["x_s0", "y_s1", "y_s2"]);
        assert_eq!(rel.model.state(0).choices()[0].params(), ["x_s0"]);
        assert_eq!(rel.model.state(1).choices()[0].params(), ["y_s1"]);
        assert_eq!(rel.model.state(2).choices()[0].params(), ["y_s2"]);
        let r: Region = "0.1<=x<=0.8, 0.4<=y<=0.7".parse().unwrap();
        assert_eq!(
            rel.relax_region(&r).unwrap(),
            "0.1<=x_s0<=0.8, 0.4<=y_s1<=0.7, 0.4<=y_s2<=0.7".parse().unwrap()
        );
        let u = Valuation::new().with("x", q("0.8")).with("y", q("0.6"));
        let ru = rel.relax_valuation(&u);
        assert_eq!(ru.len(), 3);
        assert_eq!(
            rel.model.instantiate(&ru).unwrap().to_string(),
            bounce().instantiate(&u).unwrap().to_string()
        );
    }

    #[test]
    fn relaxation_of_coin_and_constant_models() {
        let rel = relax(&coin()).unwrap();
        assert_eq!(rel.model.parameters(), ["x_s0", "x_s1"]);
        let free = bounce()
            .instantiate(&Valuation::new().with("x", q("0.5")).with("y", q("0.5")))
            .unwrap();
        let rel = relax(&free).unwrap();
        assert!(rel.renaming.is_empty());
        assert_eq!(rel.model, free);
    }

    #[test]
    fn substitution_of_bounce() {
        let r: Region = "0.1<=x<=0.8, 0.4<=y<=0.7".parse().unwrap();
        let sub = substitute_pmc(&bounce(), &r, CAP).unwrap();
        let m = &sub.model;
        assert_eq!(m.kind(), ModelKind::Pmdp);
        assert_eq!(m.num_states(), 5);
        // lower corner first
        assert_eq!(row(m, 0, 0), vec![(1, q("0.1")), (2, q("0.9"))]);
        assert_eq!(row(m, 0, 1), vec![(1, q("0.8")), (2, q("0.2"))]);
        assert_eq!(row(m, 1, 0), vec![(2, q("0.4")), (3, q("0.6"))]);
        assert_eq!(row(m, 1, 1), vec![(2, q("0.7")), (3, q("0.3"))]);
        assert_eq!(row(m, 2, 0), vec![(1, q("0.4")), (4, q("0.6"))]);
        assert_eq!(row(m, 2, 1), vec![(1, q("0.7")), (4, q("0.3"))]);
        assert_eq!(m.state(3).choices().len(), 1);
        assert_eq!(m.state(0).choices()[1].action(), "1");
        assert_eq!(
            sub.corners[0][1].as_ref().unwrap().valuation,
            Valuation::new().with("x", q("0.8"))
        );
    }

    #[test]
    fn substitution_of_coin() {
        let r: Region = "0.3<=x<=0.6".parse().unwrap();
        let m = substitute_pmc(&coin(), &r, CAP).unwrap().model;
        assert_eq!(row(&m, 0, 0), vec![(1, q("0.3")), (3, q("0.7"))]);
        assert_eq!(row(&m, 0, 1), vec![(1, q("0.6")), (3, q("0.4"))]);
        assert_eq!(row(&m, 1, 0), vec![(2, q("0.7")), (3, q("0.3"))]);
        assert_eq!(row(&m, 1, 1), vec![(2, q("0.4")), (3, q("0.6"))]);
    }

    #[test]
    fn four_corners_for_a_product() {
        let m = parse_model(
            "@kind pmc\n@parameters x y\nstate 0\n 1 : x*y\n 0 : 1 - x*y\nstate 1\n 1 : 1\n",
        )
        .unwrap();
        let r: Region = "0.5<=x<=1, 0.2<=y<=0.4".parse().unwrap();
        let sub = substitute_pmc(&m, &r, CAP).unwrap();
        let probs: Vec<Rational> = (0..4).map(|c| row(&sub.model, 0, c)[1].1.clone()).collect();
        assert_eq!(probs, vec![q("0.1"), q("0.2"), q("0.2"), q("0.4")]);
        let labels: Vec<&str> = sub.model.state(0).choices().iter().map(|c| c.action()).collect();
        assert_eq!(labels, ["00", "01", "10", "11"]);
        assert!(matches!(
            substitute_pmc(&m, &r, 2),
            Err(LiftError::Region(RegionError::CombinatorialLimit { .. }))
        ));
    }

    #[test]
    fn degenerate_intervals_do_not_branch() {
        let r: Region = "0.5<=x<=0.5, 0.4<=y<=0.7".parse().unwrap();
        let sub = substitute_pmc(&bounce(), &r, CAP).unwrap();
        assert_eq!(sub.model.state(0).choices().len(), 1);
        assert_eq!(sub.model.state(1).choices().len(), 2);
    }

    fn fragment() -> ParametricModel {
        parse_model(
            "@kind pmdp\n@parameters x y\nstate 0\n action alpha\n  1 : x\n  2 : 1 - x\n\
             action beta\n  3 : y\n  4 : 1 - y\nstate 1\n 1 : 1\nstate 2\n 2 : 1\n\
             state 3\n 3 : 1\nstate 4\n 4 : 1\n",
        )
        .unwrap()
    }

    #[test]
    fn game_substitution_of_fragment() {
        let r: Region = "0.2<=x<=0.6, 0.3<=y<=0.9".parse().unwrap();
        let sub = substitute_pmdp(&fragment(), &r, CAP).unwrap();
        let g = &sub.model;
        assert_eq!(g.kind(), ModelKind::Psg);
        // 5 originals + one intermediate state per (state, action)
        assert_eq!(g.num_states(), 5 + 2 + 4);
        let s = g.state(0);
        assert_eq!(s.player(), Player::One);
        let alpha = s.choice("alpha").unwrap();
        assert_eq!(alpha.transitions().len(), 1);
        let inner = alpha.transitions()[0].target;
        assert_eq!(alpha.transitions()[0].prob, Poly::one());
        assert_eq!(g.state(inner).player(), Player::Two);
        assert_eq!(
            sub.origin[inner],
            StateOrigin::ActionOf {
                state: 0,
                action: "alpha".into()
            }
        );
        assert_eq!(g.state(inner).choices().len(), 2);
        assert_eq!(row(g, inner, 1), vec![(1, q("0.6")), (2, q("0.4"))]);
        let beta_inner = s.choice("beta").unwrap().transitions()[0].target;
        assert_eq!(row(g, beta_inner, 0), vec![(3, q("0.3")), (4, q("0.7"))]);
    }

    #[test]
    fn game_substitution_of_bounce_game() {
        let m = parse_model(
            "@kind pmdp\n@parameters x y\n@label target 3\nstate 0\n action alpha\n  1 : x\n  2 : 1 - x\n\
             action beta\n  0 : x*y\n  1 : 1 - x*y\nstate 1\n 2 : y\n 3 : 1 - y\n\
             state 2\n 1 : y\n 4 : 1 - y\nstate 3\n 3 : 1\nstate 4\n 4 : 1\n",
        )
        .unwrap();
        let r: Region = "0.1<=x<=0.8, 0.4<=y<=0.7".parse().unwrap();
        let sub = substitute_pmdp(&m, &r, CAP).unwrap();
        let beta = sub.model.state(0).choice("beta").unwrap().transitions()[0].target;
        assert_eq!(sub.model.state(beta).choices().len(), 4);
        let alpha = sub.model.state(0).choice("alpha").unwrap().transitions()[0].target;
        assert_eq!(sub.model.state(alpha).choices().len(), 2);
    }

    #[test]
    fn single_action_games_collapse_to_the_chain_substitution() {
        let m = bounce();
        let as_mdp = parse_model(&m.to_string().replace("@kind pmc", "@kind pmdp")).unwrap();
        let r: Region = "0.1<=x<=0.8, 0.4<=y<=0.7".parse().unwrap();
        let game = substitute_pmdp(&as_mdp, &r, CAP).unwrap();
        let mdp = substitute_pmc(&m, &r, CAP).unwrap();
        for s in 0..m.num_states() {
            let hop = &game.model.state(s).choices()[0].transitions()[0];
            assert_eq!(hop.prob, Poly::one());
            let inner = game.model.state(hop.target);
            let expected = mdp.model.state(s);
            assert_eq!(inner.choices().len(), expected.choices().len());
            for (a, b) in inner.choices().iter().zip(expected.choices()) {
                assert_eq!(a.transitions(), b.transitions());
                assert_eq!(a.action(), b.action());
            }
        }
    }

    #[test]
    fn reward_substitution() {
        let m = parse_model(
            "@kind pmc\n@parameters q\n@label t 1\n@reward 0 : q\nstate 0\n 1 : 1\nstate 1\n 1 : 1\n",
        )
        .unwrap();
        let r: Region = "1<=q<=2".parse().unwrap();
        let sub = substitute_rewards(&m, &r, "t", CAP).unwrap();
        assert_eq!(sub.model.state(0).choices().len(), 2);
        let rewards = sub.choice_rewards.unwrap();
        assert_eq!(rewards[0], vec![q("1"), q("2")]);
        assert_eq!(rewards[1], vec![q("0")]);

        let lp = parse_model(
            "@kind pmc\n@parameters x\n@label t 1\n@reward 0 : 1\nstate 0\n 0 : x\n 1 : 1 - x\nstate 1\n 1 : 1\n",
        )
        .unwrap();
        let r: Region = "1/2<=x<=9/10".parse().unwrap();
        let sub = substitute_rewards(&lp, &r, "t", CAP).unwrap();
        assert_eq!(row(&sub.model, 0, 0), vec![(0, q("1/2")), (1, q("1/2"))]);
        assert_eq!(row(&sub.model, 0, 1), vec![(0, q("9/10")), (1, q("1/10"))]);
        assert_eq!(sub.choice_rewards.unwrap()[0], vec![q("1"), q("1")]);
    }

    #[test]
    fn reward_preconditions() {
        let overlap = parse_model(
            "@kind pmc\n@parameters x\n@label t 1\n@reward 0 : x\nstate 0\n 0 : x\n 1 : 1 - x\nstate 1\n 1 : 1\n",
        )
        .unwrap();
        let r: Region = "0.2<=x<=0.4".parse().unwrap();
        assert_eq!(
            substitute_rewards(&overlap, &r, "t", CAP).unwrap_err(),
            LiftError::RewardParameterOverlap(vec!["x".into()])
        );
        let leaky = parse_model(
            "@kind pmc\n@parameters x\n@label t 1\n@reward 0 : 1\nstate 0\n 2 : x\n 1 : 1 - x\nstate 1\n 1 : 1\nstate 2\n 2 : 1\n",
        )
        .unwrap();
        assert_eq!(
            substitute_rewards(&leaky, &r, "t", CAP).unwrap_err(),
            LiftError::TargetNotAlmostSure("t".into())
        );
        let negative = parse_model(
            "@kind pmc\n@parameters c\n@label t 1\n@reward 0 : c\nstate 0\n 1 : 1\nstate 1\n 1 : 1\n",
        )
        .unwrap();
        let r: Region = "-1<=c<=1".parse().unwrap();
        assert!(matches!(
            substitute_rewards(&negative, &r, "t", CAP),
            Err(LiftError::NegativeReward { state: 0, .. })
        ));
    }

    #[test]
    fn substituted_models_serialize() {
        let r: Region = "0.1<=x<=0.8, 0.4<=y<=0.7".parse().unwrap();
        let sub = substitute_pmc(&bounce(), &r, CAP).unwrap();
        let text = sub.to_string();
        assert_eq!(parse_model(&text).unwrap(), sub.model);
    }
}
