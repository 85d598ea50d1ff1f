//! Phase 2: explicit exploration interleaved with state elimination, and
//! the final value read-off for reachability probabilities, expected
//! rewards and long-run averages.
//!
//! The partial chain keeps only the frontier of the state space: a state
//! is eliminated as soon as it is fully explored and all of its original
//! predecessors are fully explored, which the predecessor-count diagram
//! from phase 1 detects exactly. Elimination redistributes self-loop mass,
//! merges incoming and outgoing transitions, and accumulates rewards so
//! that every property value is preserved.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::arith::Scalar;
use crate::dd::DdValue;
use crate::explore::ExploreResult;
use crate::model::{ModelError, SemanticModel};
use crate::state::StateCode;

#[derive(Debug, Error)]
pub enum ElimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("state space exceeds the configured cap of {0} states")]
    TooManyStates(u64),
    #[error("state {0:?} reached in the elimination phase but absent from the predecessor diagram")]
    PhaseMismatch(StateCode),
    #[error("phase 1 found {explore} states, phase 2 found {eliminate}")]
    StateCountMismatch { explore: u64, eliminate: u64 },
    #[error("probability {0} lost through a state with a unit self-loop and residual edges")]
    MassLost(String),
    #[error("long-run average: recurrence time of state {0:?} is zero")]
    ZeroRecurrenceTime(StateCode),
    #[error("long-run average read-off found state {0:?} without a unit self-loop")]
    NotRecurrent(StateCode),
    #[error("recurrence rewards of state {0:?} exceed the numeric range; rerun with the bigfloat or rational backend")]
    ValueRange(StateCode),
}

/// A property value: finite or infinite.
#[derive(Clone, Debug, PartialEq)]
pub enum CheckValue<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> CheckValue<S> {
    pub fn render(&self) -> String {
        match self {
            CheckValue::Finite(v) => v.render(),
            CheckValue::Infinite => "inf".to_string(),
        }
    }

    pub fn as_finite(&self) -> Option<&S> {
        match self {
            CheckValue::Finite(v) => Some(v),
            CheckValue::Infinite => None,
        }
    }
}

/// Explicit record of one live state.
#[derive(Clone, Debug)]
pub struct StateRecord<S> {
    /// Sparse outgoing distribution in first-insertion order.
    outgoing: Vec<(StateCode, S)>,
    reward_u: S,
    reward_l: S,
    /// Reverse adjacency in the current, partially rewired graph,
    /// excluding the state itself.
    preds: BTreeSet<StateCode>,
    /// Fully explored predecessors of the original graph.
    pred_seen: u64,
    /// Fully explored: reward and all outgoing transitions stored.
    explored: bool,
}

impl<S: Scalar> StateRecord<S> {
    fn stub() -> Self {
        StateRecord {
            outgoing: Vec::new(),
            reward_u: S::zero(),
            reward_l: S::zero(),
            preds: BTreeSet::new(),
            pred_seen: 0,
            explored: false,
        }
    }

    pub fn outgoing(&self) -> &[(StateCode, S)] {
        &self.outgoing
    }

    pub fn reward_u(&self) -> &S {
        &self.reward_u
    }

    pub fn reward_l(&self) -> &S {
        &self.reward_l
    }

    pub fn is_explored(&self) -> bool {
        self.explored
    }

    fn loop_weight(&self, s: StateCode) -> Option<&S> {
        self.outgoing
            .iter()
            .find(|(t, _)| *t == s)
            .map(|(_, w)| w)
    }

    /// Only transition is a self-loop.
    fn is_loop_only(&self, s: StateCode) -> bool {
        self.outgoing.len() == 1 && self.outgoing[0].0 == s
    }
}

/// The explicit, mutable partial state space.
pub struct PartialChain<S: Scalar> {
    states: HashMap<StateCode, StateRecord<S>>,
    initial: StateCode,
    long_run: bool,
    live_edges: usize,
    peak_states: usize,
    peak_edges: usize,
    /// States eliminated and removed over the whole run.
    removed: u64,
    /// Re-insertion guard, kept when invariant validation is on.
    tombstones: Option<HashSet<StateCode>>,
}

impl<S: Scalar> PartialChain<S> {
    fn new(initial: StateCode, long_run: bool, validate: bool) -> Self {
        PartialChain {
            states: HashMap::new(),
            initial,
            long_run,
            live_edges: 0,
            peak_states: 0,
            peak_edges: 0,
            removed: 0,
            tombstones: validate.then(HashSet::new),
        }
    }

    pub fn initial(&self) -> StateCode {
        self.initial
    }

    pub fn live_states(&self) -> usize {
        self.states.len()
    }

    pub fn live_transitions(&self) -> usize {
        self.live_edges
    }

    pub fn peak_states(&self) -> usize {
        self.peak_states
    }

    pub fn peak_transitions(&self) -> usize {
        self.peak_edges
    }

    pub fn removed_states(&self) -> u64 {
        self.removed
    }

    pub fn record(&self, s: StateCode) -> Option<&StateRecord<S>> {
        self.states.get(&s)
    }

    pub fn states(&self) -> impl Iterator<Item = (&StateCode, &StateRecord<S>)> {
        self.states.iter()
    }

    fn insert_stub(&mut self, s: StateCode) {
        if let Some(t) = &self.tombstones {
            assert!(
                !t.contains(&s),
                "state {s:?} re-inserted after elimination"
            );
        }
        let prev = self.states.insert(s, StateRecord::stub());
        debug_assert!(prev.is_none());
        self.peak_states = self.peak_states.max(self.states.len());
    }

    /// Adds `w` onto the edge `from -> to`, creating it if absent and
    /// maintaining reverse adjacency. Zero weights (float underflow of a
    /// product) are dropped.
    fn add_edge(&mut self, from: StateCode, to: StateCode, w: S) {
        if w.is_zero() {
            return;
        }
        let rec = self.states.get_mut(&from).expect("live source");
        match rec.outgoing.iter_mut().find(|(t, _)| *t == to) {
            Some((_, total)) => *total = total.add(&w),
            None => {
                rec.outgoing.push((to, w));
                self.live_edges += 1;
                self.peak_edges = self.peak_edges.max(self.live_edges);
                if to != from {
                    self.states
                        .get_mut(&to)
                        .expect("live target")
                        .preds
                        .insert(from);
                }
            }
        }
    }

    /// Removes the edge `from -> to` and returns its weight.
    fn remove_edge(&mut self, from: StateCode, to: StateCode) -> S {
        let rec = self.states.get_mut(&from).expect("live source");
        let idx = rec
            .outgoing
            .iter()
            .position(|(t, _)| *t == to)
            .expect("edge exists");
        let (_, w) = rec.outgoing.remove(idx);
        self.live_edges -= 1;
        if to != from {
            self.states
                .get_mut(&to)
                .expect("live target")
                .preds
                .remove(&from);
        }
        w
    }

    /// State elimination. Preconditions: `s` is live and fully explored,
    /// and every current predecessor of `s` is fully explored.
    ///
    /// A state whose only transition is a self-loop (or whose merged loop
    /// weight equals one exactly) is a collapsed bottom component: it has
    /// no successors to redirect transitions to, so only the reward merge
    /// into its predecessors applies and the state stays. Otherwise the
    /// loop mass is redistributed onto the other transitions, every
    /// incoming transition is replaced by direct transitions to the
    /// successors, and the state is removed unless kept.
    pub fn eliminate_state(&mut self, s: StateCode, keep: StateCode) -> Result<(), ElimError> {
        let rec = self.states.get(&s).expect("eliminating a live state");
        debug_assert!(rec.explored, "eliminating an unexplored state");
        debug_assert!(
            rec.preds
                .iter()
                .all(|p| self.states.get(p).is_some_and(|r| r.explored)),
            "eliminating {s:?} with unexplored predecessors"
        );

        // Self-loop handling. The redistribution branch requires the loop
        // weight to be strictly below one; rounding can merge a loop to
        // one or a hair above it, and both cases mean the state is a
        // collapsed bottom component.
        let mut absorbing = false;
        if let Some(loop_w) = self.states[&s].loop_weight(s).cloned() {
            if self.states[&s].is_loop_only(s) || !(loop_w < S::one()) {
                absorbing = true;
                // Inexact backends can merge a loop to exactly one while
                // residual dust edges remain; conservation bounds the dust,
                // which is dropped here.
                let dust: Vec<StateCode> = self.states[&s]
                    .outgoing
                    .iter()
                    .filter(|(t, _)| *t != s)
                    .map(|(t, _)| *t)
                    .collect();
                if !dust.is_empty() {
                    let mut mass = S::zero();
                    for t in dust {
                        let w = self.remove_edge(s, t);
                        mass = mass.add(&w);
                    }
                    if mass.abs_f64() > 1e-6 {
                        return Err(ElimError::MassLost(mass.render()));
                    }
                    eprintln!(
                        "warning: state {s:?} merged a unit self-loop next to residual mass {}; dropped",
                        mass.render()
                    );
                }
            } else {
                // Redistribute: the loop is taken an expected
                // p/(1-p) times before leaving.
                let denom = S::one().sub(&loop_w);
                let factor = loop_w.div(&denom).expect("loop weight below one");
                let rec = self.states.get_mut(&s).unwrap();
                for (t, w) in rec.outgoing.iter_mut() {
                    if *t != s {
                        *w = w.div(&denom).expect("loop weight below one");
                    }
                }
                rec.reward_u = rec.reward_u.add(&rec.reward_u.mul(&factor));
                if self.long_run {
                    rec.reward_l = rec.reward_l.add(&rec.reward_l.mul(&factor));
                }
                self.remove_edge(s, s);
                // Re-impose conservation: the redistributed weights sum to
                // one in exact arithmetic, and long elimination chains
                // amplify any drift when the search runs against the
                // chain's drift, so the rounding residue is scaled away
                // here.
                if !S::EXACT {
                    let rec = self.states.get_mut(&s).unwrap();
                    let mut sum = S::zero();
                    for (_, w) in rec.outgoing.iter() {
                        sum = sum.add(w);
                    }
                    if !sum.is_one() && !sum.is_zero() {
                        for (_, w) in rec.outgoing.iter_mut() {
                            *w = w.div(&sum).expect("checked nonzero");
                        }
                    }
                }
            }
        }

        // Redirect every predecessor around `s`.
        let preds: Vec<StateCode> = self.states[&s].preds.iter().copied().collect();
        for s_pre in preds {
            let p = self.remove_edge(s_pre, s);
            let succ: Vec<(StateCode, S)> = self.states[&s].outgoing.clone();
            for (t, w) in succ {
                self.add_edge(s_pre, t, p.mul(&w));
            }
            let (ru, rl) = {
                let rec = &self.states[&s];
                (rec.reward_u.clone(), rec.reward_l.clone())
            };
            let pre_rec = self.states.get_mut(&s_pre).unwrap();
            pre_rec.reward_u = pre_rec.reward_u.add(&p.mul(&ru));
            if self.long_run {
                pre_rec.reward_l = pre_rec.reward_l.add(&p.mul(&rl));
            }
        }

        // Remove the state when possible.
        if s != keep && !absorbing {
            debug_assert!(self.states[&s].preds.is_empty());
            let targets: Vec<StateCode> = self.states[&s]
                .outgoing
                .iter()
                .map(|(t, _)| *t)
                .collect();
            for t in &targets {
                self.states.get_mut(t).unwrap().preds.remove(&s);
            }
            let rec = self.states.remove(&s).unwrap();
            self.live_edges -= rec.outgoing.len();
            self.removed += 1;
            if let Some(tomb) = &mut self.tombstones {
                tomb.insert(s);
            }
        }
        Ok(())
    }

    /// Every fully explored live state's distribution must sum to one:
    /// exactly under the rational backend, within `1e-6` otherwise.
    pub fn check_conservation(&self) -> Result<(), String> {
        for (s, rec) in &self.states {
            if !rec.explored {
                continue;
            }
            let mut sum = S::zero();
            for (_, w) in &rec.outgoing {
                sum = sum.add(w);
            }
            let ok = if S::EXACT {
                sum.is_one()
            } else {
                (sum.to_f64() - 1.0).abs() <= 1e-6
            };
            if !ok {
                return Err(format!(
                    "distribution of {s:?} sums to {} after elimination",
                    sum.render()
                ));
            }
        }
        Ok(())
    }

    /// Reverse-adjacency consistency sweep (validation mode).
    fn check_reverse_adjacency(&self) {
        let mut expect: HashMap<StateCode, BTreeSet<StateCode>> = HashMap::new();
        for (s, rec) in &self.states {
            for (t, _) in &rec.outgoing {
                if t != s {
                    expect.entry(*t).or_default().insert(*s);
                }
            }
        }
        for (s, rec) in &self.states {
            let want = expect.remove(s).unwrap_or_default();
            assert_eq!(
                rec.preds, want,
                "reverse adjacency of {s:?} out of sync"
            );
        }
    }
}

/// Options for the combined exploration-elimination run.
pub struct ElimOptions {
    /// Abort when more states than this are discovered.
    pub max_states: u64,
    /// Run the expensive invariant sweeps (conservation, reverse
    /// adjacency, tombstones) after every elimination.
    pub validate: bool,
    /// Print the live chain after each elimination while at most this many
    /// states are live; zero disables tracing.
    pub trace_limit: usize,
}

impl Default for ElimOptions {
    fn default() -> Self {
        ElimOptions {
            max_states: 1 << 40,
            validate: false,
            trace_limit: 0,
        }
    }
}

/// Outcome of phase 2.
pub struct ElimResult<S: Scalar> {
    pub chain: PartialChain<S>,
    pub wall_time: Duration,
}

/// Runs the explicit breadth-first exploration in the same order as phase
/// 1, marking each state fully explored after expansion and eliminating
/// every fully explored state whose explored-predecessor count has reached
/// the diagram count. On termination every live state is the initial
/// state, a goal state, or a collapsed bottom component, and all of them
/// are direct successors of the initial state.
pub fn explore_eliminate<S: Scalar, M: SemanticModel<S>>(
    model: &M,
    pre: &ExploreResult,
    opts: &ElimOptions,
    mut trace: Option<&mut dyn FnMut(&PartialChain<S>, StateCode)>,
) -> Result<ElimResult<S>, ElimError> {
    let start = Instant::now();
    let initial = model.initial_state();
    let long_run = model.is_long_run();
    let mut chain = PartialChain::new(initial, long_run, opts.validate);
    chain.insert_stub(initial);
    let mut agenda: VecDeque<StateCode> = VecDeque::new();
    agenda.push_back(initial);
    let mut discovered: u64 = 1;

    while let Some(s) = agenda.pop_front() {
        let expansion = model.expand(s)?;
        {
            let rec = chain.states.get_mut(&s).unwrap();
            rec.reward_u = expansion.reward_u;
            rec.reward_l = expansion.reward_l;
        }
        let mut succ_order: Vec<StateCode> = Vec::with_capacity(expansion.successors.len());
        for (succ, w) in expansion.successors {
            succ_order.push(succ);
            if !chain.states.contains_key(&succ) {
                discovered += 1;
                if discovered > opts.max_states {
                    return Err(ElimError::TooManyStates(opts.max_states));
                }
                chain.insert_stub(succ);
                agenda.push_back(succ);
            }
            chain.add_edge(s, succ, w);
            if succ != s {
                chain.states.get_mut(&succ).unwrap().pred_seen += 1;
            }
        }
        chain.states.get_mut(&s).unwrap().explored = true;

        // Candidates whose explored-predecessor count just changed: the
        // state itself and its fully explored successors. Eligible are
        // those whose count matches the original-graph count from the
        // diagram. The set is frozen before eliminating; order is
        // successors first, in successor order, then the state itself.
        let mut order: Vec<StateCode> = Vec::new();
        for t in succ_order {
            if t != s && !order.contains(&t) {
                order.push(t);
            }
        }
        order.push(s);
        for s_e in order {
            let Some(rec) = chain.states.get(&s_e) else {
                continue;
            };
            if !rec.explored {
                continue;
            }
            let eligible = match pre.count(s_e) {
                DdValue::Count(c) => rec.pred_seen == c,
                DdValue::Unseen => return Err(ElimError::PhaseMismatch(s_e)),
            };
            if !eligible {
                continue;
            }
            chain.eliminate_state(s_e, initial)?;
            if opts.validate {
                chain
                    .check_conservation()
                    .map_err(ElimError::MassLost)?;
                chain.check_reverse_adjacency();
            }
            if let Some(cb) = trace.as_mut() {
                if opts.trace_limit > 0 && chain.live_states() <= opts.trace_limit {
                    cb(&chain, s_e);
                }
            }
        }
    }

    if discovered != pre.states {
        return Err(ElimError::StateCountMismatch {
            explore: pre.states,
            eliminate: discovered,
        });
    }
    if opts.validate {
        // Terminal shape: all live non-initial states are absorbing
        // self-loop states fed directly (and only) by the initial state.
        for (s, rec) in chain.states() {
            if *s == initial {
                continue;
            }
            assert!(
                rec.is_loop_only(*s),
                "surviving state {s:?} is not a collapsed component"
            );
            assert!(
                rec.preds.iter().all(|p| *p == initial),
                "surviving state {s:?} has a non-initial predecessor"
            );
        }
    }
    Ok(ElimResult {
        chain,
        wall_time: start.elapsed(),
    })
}

/// Probability of ever reaching a goal state, read from the transitions of
/// the initial state after elimination.
pub fn read_reach_prob<S: Scalar, M: SemanticModel<S>>(
    chain: &PartialChain<S>,
    model: &M,
) -> Result<S, ElimError> {
    let initial = chain.initial();
    if model.is_goal(initial)? {
        return Ok(S::one());
    }
    let rec = chain.record(initial).expect("initial state is live");
    let mut goal_mass = S::zero();
    let mut all_mass = S::zero();
    for (t, w) in rec.outgoing() {
        all_mass = all_mass.add(w);
        if model.is_goal(*t)? {
            goal_mass = goal_mass.add(w);
        }
    }
    if goal_mass.is_zero() {
        return Ok(goal_mass);
    }
    // The outgoing mass is one by conservation; dividing by the computed
    // sum removes residual drift in inexact backends.
    Ok(goal_mass.div(&all_mass).expect("positive outgoing mass"))
}

/// Expected accumulated reward until the goal set, or infinity when the
/// goal is missed with positive probability — visible after elimination as
/// a surviving non-goal successor (or residual self-loop) of the initial
/// state.
pub fn read_exp_reward<S: Scalar, M: SemanticModel<S>>(
    chain: &PartialChain<S>,
    model: &M,
) -> Result<CheckValue<S>, ElimError> {
    let initial = chain.initial();
    if model.is_goal(initial)? {
        return Ok(CheckValue::Finite(S::zero()));
    }
    let rec = chain.record(initial).expect("initial state is live");
    for (t, _) in rec.outgoing() {
        if *t == initial || !model.is_goal(*t)? {
            return Ok(CheckValue::Infinite);
        }
    }
    // Goal rewards are zero by construction; the sum term is kept for the
    // read-off formula's shape and contributes nothing.
    let mut value = rec.reward_u().clone();
    for (t, w) in rec.outgoing() {
        let goal_reward = chain
            .record(*t)
            .map(|r| r.reward_u().clone())
            .unwrap_or_else(S::zero);
        value = value.add(&w.mul(&goal_reward));
    }
    Ok(CheckValue::Finite(value))
}

/// Long-run average reward read-off. Two terminal shapes arise: the
/// initial state alone with a unit self-loop (value `u/l`), or the initial
/// state branching with probability `p_i` to collapsed components with
/// recurrence rewards `(u_i, l_i)` (value `sum p_i * u_i / l_i`). A
/// residual self-loop next to other successors is first redistributed by
/// one loop-elimination step so that exactly one of the shapes holds.
pub fn read_lra<S: Scalar>(chain: &PartialChain<S>) -> Result<S, ElimError> {
    let initial = chain.initial();
    let rec = chain.record(initial).expect("initial state is live");
    let recurrence_ratio = |s: StateCode, r: &StateRecord<S>| -> Result<S, ElimError> {
        let (u, l) = (r.reward_u(), r.reward_l());
        if !u.is_finite() || !l.is_finite() {
            return Err(ElimError::ValueRange(s));
        }
        if l.is_zero() {
            return Err(ElimError::ZeroRecurrenceTime(s));
        }
        Ok(u.div(l).expect("nonzero recurrence time"))
    };
    if rec.is_loop_only(initial) {
        return recurrence_ratio(initial, rec);
    }
    // A residual self-loop next to other successors is removed by one
    // loop-elimination step; numerically this is subsumed by normalizing
    // the branch weights, whose true sum is one by conservation.
    let mut branches: Vec<(StateCode, S)> = Vec::new();
    let mut branch_mass = S::zero();
    for (t, w) in rec.outgoing() {
        if *t != initial {
            branch_mass = branch_mass.add(w);
            branches.push((*t, w.clone()));
        }
    }
    if branch_mass.is_zero() || branch_mass.is_negative() {
        return Err(ElimError::ZeroRecurrenceTime(initial));
    }
    let mut value = S::zero();
    for (t, p) in branches {
        let trec = chain.record(t).ok_or(ElimError::NotRecurrent(t))?;
        if !trec.is_loop_only(t) {
            return Err(ElimError::NotRecurrent(t));
        }
        let ratio = recurrence_ratio(t, trec)?;
        let p = p.div(&branch_mass).expect("checked nonzero");
        value = value.add(&p.mul(&ratio));
    }
    Ok(value)
}

/// Fig-style rendering of the live chain for the trace mode.
pub fn format_chain<S: Scalar>(
    chain: &PartialChain<S>,
    describe: &dyn Fn(StateCode) -> String,
) -> String {
    let mut codes: Vec<StateCode> = chain.states().map(|(s, _)| *s).collect();
    codes.sort();
    let mut out = String::new();
    for s in codes {
        let rec = chain.record(s).unwrap();
        let edges = rec
            .outgoing()
            .iter()
            .map(|(t, w)| format!("{} -> {}", describe(*t), w.render()))
            .collect::<Vec<_>>()
            .join(", ");
        let rewards = if chain.long_run {
            format!(
                " r_u={} r_l={}",
                rec.reward_u().render(),
                rec.reward_l().render()
            )
        } else {
            format!(" r={}", rec.reward_u().render())
        };
        let mark = if rec.is_explored() { "" } else { " (frontier)" };
        out.push_str(&format!("  {}{mark}: {{{edges}}}{rewards}\n", describe(s)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{Rat, Scalar};
    use crate::explore::{explore, ExploreOptions};
    use crate::model::TableModel;

    fn s(v: u64) -> StateCode {
        StateCode(v)
    }

    /// The seven-state chain with exact rational weights; goal is the
    /// success state 6.
    fn zeroconf_rational(goals: &[u64]) -> TableModel<Rat> {
        let mut m = TableModel::new(3, s(5));
        let r = |n: i64, d: u64| Rat::from_ratio(n, d);
        m.rows.insert(s(5), vec![(s(6), r(7, 8)), (s(4), r(1, 8))]);
        for v in 2..=4u64 {
            m.rows
                .insert(s(v), vec![(s(5), r(4, 5)), (s(v - 1), r(1, 5))]);
        }
        m.rows.insert(s(1), vec![(s(5), r(4, 5)), (s(7), r(1, 5))]);
        m.rows.insert(s(6), vec![(s(6), Rat::one())]);
        m.rows.insert(s(7), vec![(s(7), Rat::one())]);
        m.reward_u.insert(s(5), Rat::one());
        for g in goals {
            m.goals.insert(s(*g));
        }
        m
    }

    fn run(model: &TableModel<Rat>) -> (ElimResult<Rat>, ExploreResult) {
        let pre = explore(model, &ExploreOptions::default()).unwrap();
        let opts = ElimOptions {
            validate: true,
            ..Default::default()
        };
        let res = explore_eliminate(model, &pre, &opts, None).unwrap();
        (res, pre)
    }

    /// Builds a fully explored chain directly from a table, bypassing the
    /// interleaved engine; used to test single eliminations.
    pub(crate) fn full_chain(model: &TableModel<Rat>) -> PartialChain<Rat> {
        let mut chain = PartialChain::new(model.initial, model.long_run, true);
        for code in model.rows.keys() {
            chain.insert_stub(*code);
        }
        let mut codes: Vec<StateCode> = model.rows.keys().copied().collect();
        codes.sort();
        for code in codes {
            for (t, w) in &model.rows[&code] {
                chain.add_edge(code, *t, w.clone());
            }
            let rec = chain.states.get_mut(&code).unwrap();
            rec.reward_u = model.reward_u.get(&code).cloned().unwrap_or_else(Rat::zero);
            rec.reward_l = model.reward_l.get(&code).cloned().unwrap_or_else(Rat::zero);
            rec.explored = true;
        }
        chain
    }

    #[test]
    fn eliminating_a_transient_state_rewires_its_predecessor() {
        // Eliminate state 4 out of {3 <- 0.2 - 4 - 0.8 -> i}: the
        // predecessor i gains 0.025 to 3 and a 0.1 self-loop.
        let model = zeroconf_rational(&[6]);
        let mut chain = full_chain(&model);
        chain.eliminate_state(s(4), s(5)).unwrap();
        assert!(chain.record(s(4)).is_none());
        let i = chain.record(s(5)).unwrap();
        let get = |t: u64| {
            i.outgoing()
                .iter()
                .find(|(x, _)| *x == s(t))
                .map(|(_, w)| w.clone())
        };
        assert_eq!(get(3), Some(Rat::new(1, 40))); // 0.025
        assert_eq!(get(5), Some(Rat::new(1, 10))); // 0.1 self-loop
        assert_eq!(get(4), None);
        chain.check_conservation().unwrap();
    }

    #[test]
    fn micro_regression_step_nine_to_ten() {
        // The configuration just before the initial state's elimination:
        // i: {ok: 0.875, 1: 0.001, i: 0.124} with reward 1,
        // 1: {bot: 0.2, i: 0.8}.
        let mut m: TableModel<Rat> = TableModel::new(3, s(5));
        let r = |n: i64, d: u64| Rat::from_ratio(n, d);
        m.rows.insert(
            s(5),
            vec![(s(6), r(7, 8)), (s(1), r(1, 1000)), (s(5), r(31, 250))],
        );
        m.rows.insert(s(1), vec![(s(7), r(1, 5)), (s(5), r(4, 5))]);
        m.rows.insert(s(6), vec![(s(6), Rat::one())]);
        m.rows.insert(s(7), vec![(s(7), Rat::one())]);
        m.reward_u.insert(s(5), Rat::one());
        let mut chain = full_chain(&m);

        chain.eliminate_state(s(5), s(5)).unwrap();
        // Kept initial state: loop redistributed, predecessor redirected.
        let i = chain.record(s(5)).unwrap();
        let get = |rec: &StateRecord<Rat>, t: u64| {
            rec.outgoing()
                .iter()
                .find(|(x, _)| *x == s(t))
                .map(|(_, w)| w.clone())
        };
        assert_eq!(get(i, 6), Some(Rat::new(875, 876)));
        assert_eq!(get(i, 1), Some(Rat::new(1, 876)));
        assert_eq!(get(i, 5), None);
        assert_eq!(*i.reward_u(), Rat::new(250, 219));
        let one = chain.record(s(1)).unwrap();
        assert_eq!(get(one, 6), Some(Rat::new(175, 219)));
        assert_eq!(get(one, 1), Some(Rat::new(1, 1095)));
        assert_eq!(get(one, 5), None);
        assert_eq!(*one.reward_u(), Rat::new(200, 219));
        chain.check_conservation().unwrap();

        // Finishing the elimination of state 1 yields the terminal chain.
        chain.eliminate_state(s(1), s(5)).unwrap();
        let i = chain.record(s(5)).unwrap();
        assert_eq!(get(i, 6), Some(Rat::new(4375, 4376)));
        assert_eq!(get(i, 7), Some(Rat::new(1, 4376)));
        assert_eq!(*i.reward_u(), Rat::new(136875, 119793)); // = 625/547
        chain.check_conservation().unwrap();
    }

    #[test]
    fn absorbing_state_elimination_is_reward_merge_only() {
        let model = zeroconf_rational(&[6]);
        let mut chain = full_chain(&model);
        chain.eliminate_state(s(6), s(5)).unwrap();
        // Still present with its self-loop; the incoming edge survives.
        let ok = chain.record(s(6)).unwrap();
        assert!(ok.is_loop_only(s(6)));
        let i = chain.record(s(5)).unwrap();
        assert!(i.outgoing().iter().any(|(t, _)| *t == s(6)));
        chain.check_conservation().unwrap();
    }

    #[test]
    fn full_pipeline_reaches_the_terminal_chain() {
        let model = zeroconf_rational(&[6]);
        let (res, pre) = run(&model);
        assert_eq!(pre.states, 7);
        let chain = &res.chain;
        // Terminal: initial plus the two absorbing states.
        assert_eq!(chain.live_states(), 3);
        let p = read_reach_prob(chain, &model).unwrap();
        assert_eq!(p, Rat::new(4375, 4376));
        // Peak window of the frontier: at most 4 live states.
        assert!(chain.peak_states() <= 4, "peak {}", chain.peak_states());
        // Expected tries to reach either absorbing end.
        let model_both = zeroconf_rational(&[6, 7]);
        let (res, _) = run(&model_both);
        let v = read_exp_reward(&res.chain, &model_both).unwrap();
        assert_eq!(v, CheckValue::Finite(Rat::new(625, 547)));
    }

    #[test]
    fn exp_reward_infinite_when_goal_missed() {
        // Goal {6} only: the failure state survives as a non-goal
        // successor of the initial state.
        let model = zeroconf_rational(&[6]);
        let (res, _) = run(&model);
        let v = read_exp_reward(&res.chain, &model).unwrap();
        assert_eq!(v, CheckValue::Infinite);
    }

    #[test]
    fn single_absorbing_initial_state() {
        let mut m: TableModel<Rat> = TableModel::new(1, s(0));
        m.rows.insert(s(0), vec![(s(0), Rat::one())]);
        m.goals.insert(s(0));
        let (res, _) = run(&m);
        assert_eq!(res.chain.live_states(), 1);
        assert_eq!(read_reach_prob(&res.chain, &m).unwrap(), Rat::one());
        assert_eq!(
            read_exp_reward(&res.chain, &m).unwrap(),
            CheckValue::Finite(Rat::zero())
        );
    }

    #[test]
    fn unreachable_goal_reads_zero() {
        let mut m: TableModel<Rat> = TableModel::new(2, s(0));
        m.rows.insert(s(0), vec![(s(1), Rat::one())]);
        m.rows.insert(s(1), vec![(s(1), Rat::one())]);
        // Goal state 2 exists in the code space but is unreachable.
        m.goals.insert(s(2));
        let (res, _) = run(&m);
        assert!(read_reach_prob(&res.chain, &m).unwrap().is_zero());
    }

    #[test]
    fn lra_single_state_shape() {
        let mut m: TableModel<Rat> = TableModel::new(1, s(0));
        m.long_run = true;
        m.rows.insert(s(0), vec![(s(0), Rat::one())]);
        m.reward_u.insert(s(0), Rat::from_u64(7));
        m.reward_l.insert(s(0), Rat::one());
        let (res, _) = run(&m);
        assert_eq!(read_lra(&res.chain).unwrap(), Rat::from_u64(7));
    }

    #[test]
    fn lra_branching_shape() {
        // Initial state branches half-half into two absorbing components
        // with recurrence pairs (4,2) and (6,3): value 0.5*2 + 0.5*2 = 2.
        let mut m: TableModel<Rat> = TableModel::new(2, s(0));
        m.long_run = true;
        let h = Rat::new(1, 2);
        m.rows.insert(s(0), vec![(s(1), h.clone()), (s(2), h)]);
        m.rows.insert(s(1), vec![(s(1), Rat::one())]);
        m.rows.insert(s(2), vec![(s(2), Rat::one())]);
        m.reward_u.insert(s(1), Rat::from_u64(4));
        m.reward_l.insert(s(1), Rat::from_u64(2));
        m.reward_u.insert(s(2), Rat::from_u64(6));
        m.reward_l.insert(s(2), Rat::from_u64(3));
        m.reward_l.insert(s(0), Rat::one());
        let (res, _) = run(&m);
        assert_eq!(read_lra(&res.chain).unwrap(), Rat::from_u64(2));
    }

    #[test]
    fn lra_two_state_cycle_collapses() {
        // 0 <-> 1 with p = 1/2 each way and rewards 3 at 0, 9 at 1:
        // steady state is uniform, so the long-run average is 6.
        let mut m: TableModel<Rat> = TableModel::new(1, s(0));
        m.long_run = true;
        let h = Rat::new(1, 2);
        m.rows.insert(s(0), vec![(s(0), h.clone()), (s(1), h.clone())]);
        m.rows.insert(s(1), vec![(s(1), h.clone()), (s(0), h)]);
        m.reward_u.insert(s(0), Rat::from_u64(3));
        m.reward_u.insert(s(1), Rat::from_u64(9));
        m.reward_l.insert(s(0), Rat::one());
        m.reward_l.insert(s(1), Rat::one());
        let (res, _) = run(&m);
        assert_eq!(read_lra(&res.chain).unwrap(), Rat::from_u64(6));
    }

    #[test]
    fn trace_callback_fires() {
        let model = zeroconf_rational(&[6]);
        let pre = explore(&model, &ExploreOptions::default()).unwrap();
        let opts = ElimOptions {
            trace_limit: 50,
            ..Default::default()
        };
        let mut snapshots = Vec::new();
        let mut cb = |chain: &PartialChain<Rat>, s_e: StateCode| {
            snapshots.push((s_e, chain.live_states()));
        };
        explore_eliminate(&model, &pre, &opts, Some(&mut cb)).unwrap();
        // One elimination per reachable state.
        assert_eq!(snapshots.len(), 7);
    }
}
