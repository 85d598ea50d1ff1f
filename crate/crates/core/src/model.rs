//! Semantic layer between the compiled model and the engines: goal
//! absorption, reduction of a CTMC to its embedded chain, and the dual
//! reward structures used for long-run averages.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};

use thiserror::Error;

use crate::arith::Scalar;
use crate::lang::{CompiledModel, GoalFormula, LangError, ModelKind, PropertySpec};
use crate::state::StateCode;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("label `{0}` is not declared in the model")]
    UnknownLabel(String),
    #[error("reward structure `{0}` is not declared in the model")]
    UnknownRewardStruct(String),
}

/// What the engines need from a model: a pure successor function over
/// state codes, the reward pair, and the goal predicate. Goal states must
/// present themselves as absorbing weight-one self-loops with zero reward.
pub trait SemanticModel<S: Scalar> {
    fn bit_width(&self) -> u32;
    fn initial_state(&self) -> StateCode;
    /// Merged successor distribution; sums to one for every state.
    fn successors(&self, s: StateCode) -> Result<Vec<(StateCode, S)>, ModelError>;
    /// Accumulating reward (divided by the exit rate for CTMCs).
    fn reward_upper(&self, s: StateCode) -> Result<S, ModelError>;
    /// Time reward for long-run averages: 1 per step for DTMCs, expected
    /// residence time 1/Q(s) for CTMCs. Unused for reachability forms.
    fn reward_lower(&self, s: StateCode) -> Result<S, ModelError>;
    fn is_goal(&self, s: StateCode) -> Result<bool, ModelError>;
    /// True when the property carries the dual reward pair.
    fn is_long_run(&self) -> bool;

    /// Successors and rewards in one evaluation; the hot path of both
    /// exploration phases.
    fn expand(&self, s: StateCode) -> Result<Expansion<S>, ModelError> {
        Ok(Expansion {
            successors: self.successors(s)?,
            reward_u: self.reward_upper(s)?,
            reward_l: self.reward_lower(s)?,
        })
    }
}

/// A fully evaluated state: merged successor distribution plus rewards.
pub struct Expansion<S> {
    pub successors: Vec<(StateCode, S)>,
    pub reward_u: S,
    pub reward_l: S,
}

/// The effective analysis view of a compiled model under a property:
/// goal states absorbed, CTMC rates normalized away, rewards divided by
/// exit rates. Applying the construction to an already-absorbed view
/// changes nothing, so absorption is idempotent.
pub struct AnalysisModel<'m, S: Scalar> {
    model: &'m CompiledModel<S>,
    property: PropertySpec,
    goal_expr: Option<crate::lang::Expr>,
    reward_name: Option<String>,
    deadlock_warned: AtomicBool,
}

impl<'m, S: Scalar> AnalysisModel<'m, S> {
    /// Resolves a property against a model: looks up labels and reward
    /// structures, and fixes the effective successor/reward functions.
    pub fn new(
        model: &'m CompiledModel<S>,
        property: &PropertySpec,
    ) -> Result<Self, ModelError> {
        let goal_expr = match property {
            PropertySpec::ReachProb { goal } | PropertySpec::ExpReward { goal, .. } => {
                Some(match goal {
                    GoalFormula::Label(name) => model
                        .label(name)
                        .cloned()
                        .ok_or_else(|| ModelError::UnknownLabel(name.clone()))?,
                    GoalFormula::Expr(e) => e.clone(),
                })
            }
            PropertySpec::LongRunAvg { .. } => None,
        };
        let reward_name = match property {
            PropertySpec::ReachProb { .. } => None,
            PropertySpec::ExpReward { reward, .. } | PropertySpec::LongRunAvg { reward } => {
                if !model.has_reward_struct(reward) {
                    return Err(ModelError::UnknownRewardStruct(reward.clone()));
                }
                Some(reward.clone())
            }
        };
        Ok(AnalysisModel {
            model,
            property: property.clone(),
            goal_expr,
            reward_name,
            deadlock_warned: AtomicBool::new(false),
        })
    }

    pub fn property(&self) -> &PropertySpec {
        &self.property
    }

    pub fn compiled(&self) -> &'m CompiledModel<S> {
        self.model
    }

    /// Whether any expanded state was a deadlock (turned into a self-loop).
    pub fn saw_deadlock(&self) -> bool {
        self.deadlock_warned.load(Ordering::Relaxed)
    }

    fn raw_with_rate(&self, s: StateCode) -> Result<(Vec<(StateCode, S)>, Option<S>), ModelError> {
        let succ = self.model.successors(s)?;
        if succ.deadlock {
            self.deadlock_warned.store(true, Ordering::Relaxed);
            // A deadlocked CTMC state has no exit rate; it is made
            // absorbing with the rate treated as one.
            return Ok((succ.list, Some(S::one())));
        }
        match self.model.kind {
            ModelKind::Dtmc => Ok((succ.list, None)),
            ModelKind::Ctmc => {
                let mut q = S::zero();
                for (_, w) in &succ.list {
                    q = q.add(w);
                }
                let list = succ
                    .list
                    .into_iter()
                    .map(|(t, w)| Ok((t, w.div(&q).map_err(lang_div_error)?)))
                    .collect::<Result<Vec<_>, ModelError>>()?;
                Ok((list, Some(q)))
            }
        }
    }

    /// Exit rate of a state: `Some` for CTMCs (one for deadlocks), `None`
    /// for DTMCs.
    fn exit_rate(&self, s: StateCode) -> Result<Option<S>, ModelError> {
        Ok(self.raw_with_rate(s)?.1)
    }
}

fn lang_div_error(e: crate::arith::ArithError) -> ModelError {
    ModelError::Lang(LangError::Eval {
        pos: crate::lang::Pos { line: 0, col: 0 },
        msg: e.to_string(),
    })
}

impl<'m, S: Scalar> SemanticModel<S> for AnalysisModel<'m, S> {
    fn bit_width(&self) -> u32 {
        self.model.bit_width()
    }

    fn initial_state(&self) -> StateCode {
        self.model.initial_state()
    }

    fn successors(&self, s: StateCode) -> Result<Vec<(StateCode, S)>, ModelError> {
        if self.is_goal(s)? {
            return Ok(vec![(s, S::one())]);
        }
        Ok(self.raw_with_rate(s)?.0)
    }

    fn reward_upper(&self, s: StateCode) -> Result<S, ModelError> {
        let Some(name) = &self.reward_name else {
            return Ok(S::zero());
        };
        // Goal rewards are zeroed at absorption time: the accumulated
        // reward of a path stops before its first goal state.
        if self.is_goal(s)? {
            return Ok(S::zero());
        }
        let r = self.model.reward(name, s)?;
        match self.exit_rate(s)? {
            None => Ok(r),
            Some(q) => Ok(r.div(&q).map_err(lang_div_error)?),
        }
    }

    fn reward_lower(&self, s: StateCode) -> Result<S, ModelError> {
        if !self.is_long_run() {
            return Ok(S::zero());
        }
        match self.exit_rate(s)? {
            None => Ok(S::one()),
            Some(q) => Ok(S::one().div(&q).map_err(lang_div_error)?),
        }
    }

    fn is_goal(&self, s: StateCode) -> Result<bool, ModelError> {
        match &self.goal_expr {
            None => Ok(false),
            Some(e) => Ok(self.model.eval_predicate(e, s)?),
        }
    }

    fn is_long_run(&self) -> bool {
        matches!(self.property, PropertySpec::LongRunAvg { .. })
    }

    fn expand(&self, s: StateCode) -> Result<Expansion<S>, ModelError> {
        // Long-run properties carry no goal set, so an absorbed state can
        // only arise under the reachability forms, where the lower reward
        // is unused.
        if self.is_goal(s)? {
            return Ok(Expansion {
                successors: vec![(s, S::one())],
                reward_u: S::zero(),
                reward_l: S::zero(),
            });
        }
        let (successors, rate) = self.raw_with_rate(s)?;
        let raw_reward = match &self.reward_name {
            Some(name) => self.model.reward(name, s)?,
            None => S::zero(),
        };
        let (reward_u, reward_l) = match &rate {
            None => (
                raw_reward,
                if self.is_long_run() { S::one() } else { S::zero() },
            ),
            Some(q) => (
                raw_reward.div(q).map_err(lang_div_error)?,
                if self.is_long_run() {
                    S::one().div(q).map_err(lang_div_error)?
                } else {
                    S::zero()
                },
            ),
        };
        Ok(Expansion {
            successors,
            reward_u,
            reward_l,
        })
    }
}

/// In-memory model given by explicit tables; used by tests and generated
/// random chains. Rows must already be goal-absorbed.
#[derive(Clone, Debug)]
pub struct TableModel<S> {
    pub width: u32,
    pub initial: StateCode,
    pub rows: HashMap<StateCode, Vec<(StateCode, S)>>,
    pub reward_u: HashMap<StateCode, S>,
    pub reward_l: HashMap<StateCode, S>,
    pub goals: std::collections::HashSet<StateCode>,
    pub long_run: bool,
}

impl<S: Scalar> TableModel<S> {
    pub fn new(width: u32, initial: StateCode) -> Self {
        TableModel {
            width,
            initial,
            rows: HashMap::new(),
            reward_u: HashMap::new(),
            reward_l: HashMap::new(),
            goals: std::collections::HashSet::new(),
            long_run: false,
        }
    }
}

impl<S: Scalar> SemanticModel<S> for TableModel<S> {
    fn bit_width(&self) -> u32 {
        self.width
    }
    fn initial_state(&self) -> StateCode {
        self.initial
    }
    fn successors(&self, s: StateCode) -> Result<Vec<(StateCode, S)>, ModelError> {
        Ok(self.rows.get(&s).cloned().unwrap_or_default())
    }
    fn reward_upper(&self, s: StateCode) -> Result<S, ModelError> {
        Ok(self.reward_u.get(&s).cloned().unwrap_or_else(S::zero))
    }
    fn reward_lower(&self, s: StateCode) -> Result<S, ModelError> {
        Ok(self
            .reward_l
            .get(&s)
            .cloned()
            .unwrap_or_else(|| if self.long_run { S::one() } else { S::zero() }))
    }
    fn is_goal(&self, s: StateCode) -> Result<bool, ModelError> {
        Ok(self.goals.contains(&s))
    }
    fn is_long_run(&self) -> bool {
        self.long_run
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Rat;
    use crate::lang::{compile, parse_model, parse_property};

    fn ctmc_two_rates() -> &'static str {
        r#"
ctmc
module m
  x : [0..2] init 0;
  [] x=0 -> 2 : (x'=1) + 6 : (x'=2);
  [] x>0 -> 5 : (x'=0);
endmodule
rewards
  x=0 : 4;
endrewards
label "goal" = x=2;
"#
    }

    #[test]
    fn embedding_divides_by_exit_rate() {
        let ast = parse_model(ctmc_two_rates()).unwrap();
        let model = compile::<Rat>(&ast, &Default::default()).unwrap();
        let prop = parse_property("R=? [ S ]").unwrap();
        let am = AnalysisModel::new(&model, &prop).unwrap();
        let s0 = model.initial_state();
        let succ = am.successors(s0).unwrap();
        // Rates 2 and 6 normalize to 1/4 and 3/4.
        assert_eq!(succ[0].1, Rat::new(1, 4));
        assert_eq!(succ[1].1, Rat::new(3, 4));
        // r_u = R/Q = 4/8, r_l = 1/Q = 1/8.
        assert_eq!(am.reward_upper(s0).unwrap(), Rat::new(1, 2));
        assert_eq!(am.reward_lower(s0).unwrap(), Rat::new(1, 8));
        let mut sum = Rat::zero();
        for (_, p) in &succ {
            sum = sum.add(p);
        }
        assert!(sum.is_one());
    }

    #[test]
    fn one_state_ctmc_long_run_pair() {
        let text = "ctmc\nmodule m\n x : [0..0] init 0;\n [] true -> 5 : (x'=0);\nendmodule\nrewards\n true : 5;\nendrewards\n";
        let ast = parse_model(text).unwrap();
        let model = compile::<Rat>(&ast, &Default::default()).unwrap();
        let prop = parse_property("R=? [ S ]").unwrap();
        let am = AnalysisModel::new(&model, &prop).unwrap();
        let s = model.initial_state();
        assert_eq!(am.reward_upper(s).unwrap(), Rat::one());
        assert_eq!(am.reward_lower(s).unwrap(), Rat::new(1, 5));
    }

    #[test]
    fn goal_absorption_rewrites_successors_and_zeroes_reward() {
        let ast = parse_model(ctmc_two_rates()).unwrap();
        let model = compile::<Rat>(&ast, &Default::default()).unwrap();
        let prop = parse_property(r#"R=? [ F "goal" ]"#).unwrap();
        let am = AnalysisModel::new(&model, &prop).unwrap();
        let goal = model.encode(&[2]);
        assert!(am.is_goal(goal).unwrap());
        assert_eq!(am.successors(goal).unwrap(), vec![(goal, Rat::one())]);
        assert_eq!(am.reward_upper(goal).unwrap(), Rat::zero());
        // Non-goal states are untouched by absorption.
        let s1 = model.encode(&[1]);
        assert_eq!(am.successors(s1).unwrap().len(), 1);
    }

    #[test]
    fn dtmc_long_run_uses_unit_time() {
        let text = "dtmc\nmodule m\n x : [0..1] init 0;\n [] true -> 0.5 : (x'=0) + 0.5 : (x'=1);\nendmodule\nrewards\n x=1 : 3;\nendrewards\n";
        let ast = parse_model(text).unwrap();
        let model = compile::<Rat>(&ast, &Default::default()).unwrap();
        let prop = parse_property("R=? [ S ]").unwrap();
        let am = AnalysisModel::new(&model, &prop).unwrap();
        assert_eq!(am.reward_lower(model.initial_state()).unwrap(), Rat::one());
    }

    #[test]
    fn unknown_label_and_reward_are_errors() {
        let ast = parse_model(ctmc_two_rates()).unwrap();
        let model = compile::<Rat>(&ast, &Default::default()).unwrap();
        let p = parse_property(r#"P=? [ F "nope" ]"#).unwrap();
        assert!(matches!(
            AnalysisModel::new(&model, &p),
            Err(ModelError::UnknownLabel(_))
        ));
        let p = parse_property(r#"R{"nope"}=? [ S ]"#).unwrap();
        assert!(matches!(
            AnalysisModel::new(&model, &p),
            Err(ModelError::UnknownRewardStruct(_))
        ));
    }
}
