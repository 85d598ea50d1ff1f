//! Reduced ordered multi-terminal decision diagrams over state bits.
//!
//! The manager stores one function from state codes to non-negative counts,
//! plus a distinguished `Unseen` terminal marking codes that do not belong
//! to the reachable state space. The exploration phase uses it to hold the
//! seen-set and the per-state predecessor counts in a single diagram:
//! a state is seen iff its lookup is not `Unseen`.
//!
//! Only single-path point updates are supported. Updates are persistent:
//! the previous root keeps evaluating to the previous function. There is no
//! automatic garbage collection; [`MtbddManager::compact`] reclaims nodes
//! unreachable from a set of roots and is invoked by callers when the arena
//! outgrows a configured budget.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::state::StateCode;

/// Reference to a node in the manager's arena.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct NodeRef(u32);

/// Result of evaluating the diagram at a state code.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DdValue {
    Unseen,
    Count(u64),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Node {
    Unseen,
    Terminal(u64),
    Inner { level: u32, low: NodeRef, high: NodeRef },
}

/// Hash-consed node arena with a unique table for inner nodes and a
/// terminal table for counts.
pub struct MtbddManager {
    width: u32,
    nodes: Vec<Node>,
    unique: HashMap<(u32, NodeRef, NodeRef), NodeRef>,
    terminals: HashMap<u64, NodeRef>,
    peak_nodes: usize,
}

impl MtbddManager {
    /// Creates a manager over `width` state bits. Bit 0 (the most
    /// significant bit of the code) is at the root level.
    pub fn new(width: u32) -> Self {
        assert!(width <= 64, "state codes are limited to 64 bits");
        let mut m = MtbddManager {
            width,
            nodes: Vec::new(),
            unique: HashMap::new(),
            terminals: HashMap::new(),
            peak_nodes: 0,
        };
        m.nodes.push(Node::Unseen); // NodeRef(0)
        m.peak_nodes = 1;
        m
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// The terminal mapping every state to `Unseen` (the empty diagram).
    pub fn unseen(&self) -> NodeRef {
        NodeRef(0)
    }

    /// The terminal for count `c`.
    pub fn terminal(&mut self, c: u64) -> NodeRef {
        if let Some(&r) = self.terminals.get(&c) {
            return r;
        }
        let r = NodeRef(self.nodes.len() as u32);
        self.nodes.push(Node::Terminal(c));
        self.terminals.insert(c, r);
        self.peak_nodes = self.peak_nodes.max(self.nodes.len());
        r
    }

    fn make_inner(&mut self, level: u32, low: NodeRef, high: NodeRef) -> NodeRef {
        if low == high {
            return low;
        }
        if let Some(&r) = self.unique.get(&(level, low, high)) {
            return r;
        }
        let r = NodeRef(self.nodes.len() as u32);
        self.nodes.push(Node::Inner { level, low, high });
        self.unique.insert((level, low, high), r);
        self.peak_nodes = self.peak_nodes.max(self.nodes.len());
        r
    }

    fn node(&self, r: NodeRef) -> Node {
        self.nodes[r.0 as usize]
    }

    /// Follows the bits of `s` from `root` and returns the terminal value.
    pub fn lookup(&self, root: NodeRef, s: StateCode) -> DdValue {
        let mut cur = root;
        loop {
            match self.node(cur) {
                Node::Unseen => return DdValue::Unseen,
                Node::Terminal(c) => return DdValue::Count(c),
                Node::Inner { level, low, high } => {
                    cur = if s.bit(level, self.width) { high } else { low };
                }
            }
        }
    }

    /// Returns a root where `s` maps to count `c` and every other state is
    /// unchanged. The original root remains valid.
    pub fn set_count(&mut self, root: NodeRef, s: StateCode, c: u64) -> NodeRef {
        self.update_path(root, s, 0, c)
    }

    fn update_path(&mut self, node: NodeRef, s: StateCode, level: u32, c: u64) -> NodeRef {
        if level == self.width {
            return self.terminal(c);
        }
        // A terminal or a node below `level` acts as a don't-care covering
        // this level: both children are the node itself.
        let (node_level, low, high) = match self.node(node) {
            Node::Inner { level: l, low, high } if l == level => (l, low, high),
            _ => (level, node, node),
        };
        debug_assert_eq!(node_level, level);
        let r = if s.bit(level, self.width) {
            let new_high = self.update_path(high, s, level + 1, c);
            self.make_inner(level, low, new_high)
        } else {
            let new_low = self.update_path(low, s, level + 1, c);
            self.make_inner(level, new_low, high)
        };
        r
    }

    /// Increments the count at `s` by one. `s` must already be seen.
    pub fn increment(&mut self, root: NodeRef, s: StateCode) -> NodeRef {
        match self.lookup(root, s) {
            DdValue::Count(c) => self.set_count(root, s, c + 1),
            DdValue::Unseen => panic!("increment of unseen state {s:?}"),
        }
    }

    /// Number of inner nodes reachable from `root`.
    pub fn node_count(&self, root: NodeRef) -> usize {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![root];
        let mut count = 0;
        while let Some(r) = stack.pop() {
            if seen[r.0 as usize] {
                continue;
            }
            seen[r.0 as usize] = true;
            if let Node::Inner { low, high, .. } = self.node(r) {
                count += 1;
                stack.push(low);
                stack.push(high);
            }
        }
        count
    }

    /// Total nodes currently in the arena, including garbage from
    /// persistent updates.
    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    /// High-water mark of the arena.
    pub fn peak_nodes(&self) -> usize {
        self.peak_nodes
    }

    /// Mark-and-compact pass: drops every node unreachable from `roots`
    /// and returns the remapped roots. All other `NodeRef`s become invalid.
    pub fn compact(&mut self, roots: &[NodeRef]) -> Vec<NodeRef> {
        let mut keep = vec![false; self.nodes.len()];
        keep[0] = true;
        let mut stack: Vec<NodeRef> = roots.to_vec();
        while let Some(r) = stack.pop() {
            if keep[r.0 as usize] {
                continue;
            }
            keep[r.0 as usize] = true;
            if let Node::Inner { low, high, .. } = self.node(r) {
                stack.push(low);
                stack.push(high);
            }
        }
        let mut remap = vec![NodeRef(u32::MAX); self.nodes.len()];
        let mut new_nodes = Vec::with_capacity(keep.iter().filter(|k| **k).count());
        for (i, node) in self.nodes.iter().enumerate() {
            if !keep[i] {
                continue;
            }
            let mapped = match *node {
                Node::Inner { level, low, high } => Node::Inner {
                    level,
                    low: remap[low.0 as usize],
                    high: remap[high.0 as usize],
                },
                n => n,
            };
            remap[i] = NodeRef(new_nodes.len() as u32);
            new_nodes.push(mapped);
        }
        self.nodes = new_nodes;
        self.unique.clear();
        self.terminals.clear();
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Inner { level, low, high } => {
                    self.unique.insert((level, low, high), NodeRef(i as u32));
                }
                Node::Terminal(c) => {
                    self.terminals.insert(c, NodeRef(i as u32));
                }
                Node::Unseen => {}
            }
        }
        roots.iter().map(|r| remap[r.0 as usize]).collect()
    }

    /// Scans the arena for canonicity violations: duplicate
    /// (level, low, high) triples, nodes with identical children, and
    /// child levels that do not strictly increase.
    pub fn assert_canonical(&self) {
        let mut seen = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Inner { level, low, high } = *node {
                assert_ne!(low, high, "redundant node {i} (low = high)");
                assert!(
                    seen.insert((level, low, high), i).is_none(),
                    "duplicate node for {:?}",
                    (level, low, high)
                );
                for child in [low, high] {
                    if let Node::Inner { level: cl, .. } = self.node(child) {
                        assert!(cl > level, "levels not strictly increasing at node {i}");
                    }
                }
            }
        }
    }

    /// DOT rendering of the diagram for debugging. Inner nodes are labelled
    /// `bit k`; dotted edges go to the low child.
    pub fn to_dot(&self, root: NodeRef) -> String {
        let mut out = String::from("digraph mtbdd {\n  node [shape=box];\n");
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![root];
        while let Some(r) = stack.pop() {
            if seen[r.0 as usize] {
                continue;
            }
            seen[r.0 as usize] = true;
            match self.node(r) {
                Node::Unseen => {
                    let _ = writeln!(out, "  n{} [label=\"unseen\"];", r.0);
                }
                Node::Terminal(c) => {
                    let _ = writeln!(out, "  n{} [label=\"{c}\"];", r.0);
                }
                Node::Inner { level, low, high } => {
                    let _ = writeln!(out, "  n{} [label=\"bit {level}\"];", r.0);
                    let _ = writeln!(out, "  n{} -> n{} [style=dotted];", r.0, low.0);
                    let _ = writeln!(out, "  n{} -> n{};", r.0, high.0);
                    stack.push(low);
                    stack.push(high);
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Builds the canonical diagram for a full truth table by Shannon
    /// expansion with memoization; independent of the point-update path.
    fn shannon_build(m: &mut MtbddManager, table: &[DdValue]) -> NodeRef {
        assert_eq!(table.len(), 1usize << m.width());
        fn rec(
            m: &mut MtbddManager,
            table: &[DdValue],
            memo: &mut HashMap<(u32, u64), NodeRef>,
            level: u32,
            prefix: u64,
        ) -> NodeRef {
            if level == m.width() {
                return match table[prefix as usize] {
                    DdValue::Unseen => m.unseen(),
                    DdValue::Count(c) => m.terminal(c),
                };
            }
            if let Some(&r) = memo.get(&(level, prefix)) {
                return r;
            }
            let low = rec(m, table, memo, level + 1, prefix << 1);
            let high = rec(m, table, memo, level + 1, (prefix << 1) | 1);
            let r = m.make_inner(level, low, high);
            memo.insert((level, prefix), r);
            r
        }
        let mut memo = HashMap::new();
        rec(m, table, &mut memo, 0, 0)
    }

    /// The predecessor-count function of the seven-state example chain:
    /// codes 1..4 and 6, 7 map to one predecessor, code 5 to four, code 0
    /// is unused.
    fn example_table() -> Vec<DdValue> {
        let mut t = vec![DdValue::Unseen; 8];
        for c in [1u64, 2, 3, 4, 6, 7] {
            t[c as usize] = DdValue::Count(1);
        }
        t[5] = DdValue::Count(4);
        t
    }

    fn build_by_updates(m: &mut MtbddManager, table: &[DdValue]) -> NodeRef {
        let mut root = m.unseen();
        for (code, v) in table.iter().enumerate() {
            if let DdValue::Count(c) = v {
                root = m.set_count(root, StateCode(code as u64), *c);
            }
        }
        root
    }

    #[test]
    fn example_diagram_lookup() {
        let mut m = MtbddManager::new(3);
        let root = build_by_updates(&mut m, &example_table());
        assert_eq!(m.lookup(root, StateCode(5)), DdValue::Count(4));
        assert_eq!(m.lookup(root, StateCode(3)), DdValue::Count(1));
        assert_eq!(m.lookup(root, StateCode(0)), DdValue::Unseen);
    }

    #[test]
    fn empty_diagram_is_unseen_everywhere() {
        let m = MtbddManager::new(3);
        for c in 0..8 {
            assert_eq!(m.lookup(m.unseen(), StateCode(c)), DdValue::Unseen);
        }
        assert_eq!(m.node_count(m.unseen()), 0);
    }

    #[test]
    fn example_diagram_has_five_inner_nodes() {
        // One bit-0 node, two bit-1 nodes, two bit-2 nodes.
        let mut m = MtbddManager::new(3);
        let root = build_by_updates(&mut m, &example_table());
        assert_eq!(m.node_count(root), 5);
        // Matches the Shannon-built canonical diagram node for node.
        let canonical = shannon_build(&mut m, &example_table());
        assert_eq!(root, canonical);
    }

    #[test]
    fn set_count_is_persistent_and_idempotent() {
        let mut m = MtbddManager::new(4);
        let r0 = m.unseen();
        let r1 = m.set_count(r0, StateCode(9), 2);
        assert_eq!(m.lookup(r1, StateCode(9)), DdValue::Count(2));
        assert_eq!(m.lookup(r0, StateCode(9)), DdValue::Unseen);
        // Re-setting the same value is a hash-consing hit.
        let r2 = m.set_count(r1, StateCode(9), 2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn increment_twice_from_zero() {
        let mut m = MtbddManager::new(3);
        let mut root = m.set_count(m.unseen(), StateCode(6), 0);
        root = m.increment(root, StateCode(6));
        root = m.increment(root, StateCode(6));
        assert_eq!(m.lookup(root, StateCode(6)), DdValue::Count(2));
    }

    #[test]
    #[should_panic(expected = "unseen")]
    fn increment_unseen_panics() {
        let mut m = MtbddManager::new(3);
        m.increment(m.unseen(), StateCode(1));
    }

    #[test]
    fn increment_preserves_other_states() {
        // Full-enumeration sweep on a 10-bit manager.
        let mut m = MtbddManager::new(10);
        let mut root = m.unseen();
        for c in (0..1024).step_by(7) {
            root = m.set_count(root, StateCode(c), c % 5);
        }
        let before: Vec<DdValue> = (0..1024).map(|c| m.lookup(root, StateCode(c))).collect();
        let root2 = m.increment(root, StateCode(700));
        for c in 0..1024u64 {
            let expect = if c == 700 {
                DdValue::Count(700 % 5 + 1)
            } else {
                before[c as usize]
            };
            assert_eq!(m.lookup(root2, StateCode(c)), expect, "state {c}");
        }
        m.assert_canonical();
    }

    #[test]
    fn compaction_preserves_function() {
        let mut m = MtbddManager::new(8);
        let mut root = m.unseen();
        for c in 0..256u64 {
            root = m.set_count(root, StateCode(c), c / 3);
        }
        let before: Vec<DdValue> = (0..256).map(|c| m.lookup(root, StateCode(c))).collect();
        let garbage = m.arena_len();
        let roots = m.compact(&[root]);
        root = roots[0];
        assert!(m.arena_len() < garbage);
        for c in 0..256u64 {
            assert_eq!(m.lookup(root, StateCode(c)), before[c as usize]);
        }
        m.assert_canonical();
    }

    #[test]
    fn random_function_matches_shannon_build() {
        // Deterministic pseudo-random tables over 6 bits.
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for _ in 0..20 {
            let table: Vec<DdValue> = (0..64)
                .map(|_| match next() % 4 {
                    0 => DdValue::Unseen,
                    k => DdValue::Count(k % 3),
                })
                .collect();
            let mut m = MtbddManager::new(6);
            let by_updates = build_by_updates(&mut m, &table);
            let by_shannon = shannon_build(&mut m, &table);
            assert_eq!(by_updates, by_shannon);
            assert_eq!(m.node_count(by_updates), m.node_count(by_shannon));
        }
    }

    #[test]
    fn dot_export_mentions_all_levels() {
        let mut m = MtbddManager::new(3);
        let root = build_by_updates(&mut m, &example_table());
        let dot = m.to_dot(root);
        for lbl in ["bit 0", "bit 1", "bit 2", "\"4\"", "unseen"] {
            assert!(dot.contains(lbl), "missing {lbl} in dot output");
        }
    }
}
