//! Probabilistic model checker for discrete- and continuous-time Markov
//! chains.
//!
//! The main engine computes reachability probabilities, expected rewards
//! and long-run average rewards in two phases. Phase 1 explores the
//! reachable states breadth-first and records each state's number of
//! distinct predecessors in a multi-terminal decision diagram. Phase 2
//! explores again with explicit data structures and eliminates every
//! state the moment all of its predecessors have been fully explored, so
//! only a small frontier of the chain is ever held in memory; the
//! property value is read off the transitions that remain around the
//! initial state.
//!
//! Reference engines (value iteration and exact linear solvers on a fully
//! built state space) live in [`oracles`] for cross-validation.

pub mod arith;
pub mod dd;
pub mod elim;
pub mod explore;
pub mod lang;
pub mod model;
pub mod oracles;
pub mod state;

pub use arith::{BigF, Rat, Scalar};
pub use elim::CheckValue;
pub use state::StateCode;
