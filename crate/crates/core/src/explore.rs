//! Phase 1: breadth-first exploration that records, in the decision
//! diagram, every reachable state's number of distinct non-self
//! predecessors.
//!
//! The diagram doubles as the seen-set: a state is seen iff its lookup is
//! not `Unseen`. Self-loops are never counted, so an absorbing initial
//! state keeps count zero.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::arith::Scalar;
use crate::dd::{DdValue, MtbddManager, NodeRef};
use crate::model::{ModelError, SemanticModel};
use crate::state::StateCode;

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("state space exceeds the configured cap of {0} states")]
    TooManyStates(u64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub struct ExploreOptions {
    /// Abort when more states than this are discovered.
    pub max_states: u64,
    /// Run a mark-and-compact pass when the diagram arena outgrows this
    /// many nodes.
    pub dd_node_budget: usize,
    /// Print a progress line to stderr every this many expanded states;
    /// zero disables progress output.
    pub progress_interval: u64,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            max_states: 1 << 40,
            dd_node_budget: usize::MAX,
            progress_interval: 0,
        }
    }
}

/// Predecessor-count diagram plus exploration statistics.
pub struct ExploreResult {
    pub manager: MtbddManager,
    pub root: NodeRef,
    /// Reachable states.
    pub states: u64,
    /// Live inner nodes of the final diagram.
    pub node_count: usize,
    /// Arena high-water mark, including transient garbage.
    pub peak_nodes: usize,
    pub wall_time: Duration,
}

impl ExploreResult {
    pub fn count(&self, s: StateCode) -> DdValue {
        self.manager.lookup(self.root, s)
    }
}

/// Breadth-first search from the initial state using a FIFO agenda. For
/// each expanded state `s` and each successor other than `s` itself, the
/// successor is marked seen (count zero) when new and its count is
/// incremented once — `s` is a previously-unseen predecessor.
pub fn explore<S: Scalar, M: SemanticModel<S>>(
    model: &M,
    opts: &ExploreOptions,
) -> Result<ExploreResult, ExploreError> {
    let start = Instant::now();
    let mut manager = MtbddManager::new(model.bit_width());
    let initial = model.initial_state();
    let mut root = manager.set_count(manager.unseen(), initial, 0);
    let mut agenda: VecDeque<StateCode> = VecDeque::new();
    agenda.push_back(initial);
    let mut states: u64 = 1;
    let mut expanded: u64 = 0;

    while let Some(s) = agenda.pop_front() {
        for (succ, _weight) in model.successors(s)? {
            if succ == s {
                continue;
            }
            match manager.lookup(root, succ) {
                DdValue::Unseen => {
                    states += 1;
                    if states > opts.max_states {
                        return Err(ExploreError::TooManyStates(opts.max_states));
                    }
                    root = manager.set_count(root, succ, 1);
                    agenda.push_back(succ);
                }
                DdValue::Count(c) => {
                    root = manager.set_count(root, succ, c + 1);
                }
            }
        }
        expanded += 1;
        if opts.progress_interval > 0 && expanded % opts.progress_interval == 0 {
            eprintln!(
                "explore: {expanded} states expanded, {} dd nodes",
                manager.arena_len()
            );
        }
        if manager.arena_len() > opts.dd_node_budget {
            let roots = manager.compact(&[root]);
            root = roots[0];
        }
    }

    let node_count = manager.node_count(root);
    let peak_nodes = manager.peak_nodes();
    Ok(ExploreResult {
        manager,
        root,
        states,
        node_count,
        peak_nodes,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TableModel;
    use crate::state::StateCode;

    /// The seven-state address-configuration chain with the bit codes of
    /// the running example: check states 1..4, initial 5, success 6,
    /// failure 7.
    pub(crate) fn zeroconf_table() -> TableModel<f64> {
        let mut m = TableModel::new(3, StateCode(5));
        let s = |v: u64| StateCode(v);
        m.rows.insert(s(5), vec![(s(6), 0.875), (s(4), 0.125)]);
        for v in 2..=4u64 {
            m.rows.insert(s(v), vec![(s(5), 0.8), (s(v - 1), 0.2)]);
        }
        m.rows.insert(s(1), vec![(s(5), 0.8), (s(7), 0.2)]);
        m.rows.insert(s(6), vec![(s(6), 1.0)]);
        m.rows.insert(s(7), vec![(s(7), 1.0)]);
        m.reward_u.insert(s(5), 1.0);
        m.goals.insert(s(6));
        m
    }

    #[test]
    fn counts_of_the_example_chain() {
        let model = zeroconf_table();
        let res = explore(&model, &ExploreOptions::default()).unwrap();
        assert_eq!(res.states, 7);
        // Four check states feed the initial state; everything else has
        // one predecessor; code 0 stays unseen.
        for v in [1u64, 2, 3, 4, 6, 7] {
            assert_eq!(res.count(StateCode(v)), DdValue::Count(1), "state {v}");
        }
        assert_eq!(res.count(StateCode(5)), DdValue::Count(4));
        assert_eq!(res.count(StateCode(0)), DdValue::Unseen);
        assert_eq!(res.node_count, 5);
    }

    #[test]
    fn absorbing_initial_state_counts_zero() {
        let mut m: TableModel<f64> = TableModel::new(1, StateCode(0));
        m.rows.insert(StateCode(0), vec![(StateCode(0), 1.0)]);
        let res = explore(&m, &ExploreOptions::default()).unwrap();
        assert_eq!(res.states, 1);
        assert_eq!(res.count(StateCode(0)), DdValue::Count(0));
    }

    #[test]
    fn state_cap_is_enforced() {
        let model = zeroconf_table();
        let opts = ExploreOptions {
            max_states: 3,
            ..Default::default()
        };
        assert!(matches!(
            explore(&model, &opts),
            Err(ExploreError::TooManyStates(3))
        ));
    }

    #[test]
    fn node_budget_triggers_compaction() {
        let model = zeroconf_table();
        let opts = ExploreOptions {
            dd_node_budget: 8,
            ..Default::default()
        };
        let res = explore(&model, &opts).unwrap();
        // Compaction must not change the function.
        assert_eq!(res.count(StateCode(5)), DdValue::Count(4));
        assert_eq!(res.node_count, 5);
    }
}
