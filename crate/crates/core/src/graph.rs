//! Finite directed acyclic graphs over dense node indices.
//!
//! A [`Dag`] is an unchecked edge list. [`Dag::validate`] turns it into a
//! [`ValidatedDag`], which fixes a topological order (Kahn's method, lowest
//! index first) and precomputes parent, child, ancestor and descendant sets.
//! A validated graph is immutable.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

/// Dense node index in `0..node_count`.
pub type NodeId = usize;

/// An edge list over `node_count` nodes. Duplicate edges collapse.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dag {
    node_count: usize,
    edges: BTreeSet<(NodeId, NodeId)>,
}

impl Dag {
    pub fn new(node_count: usize) -> Self {
        Dag {
            node_count,
            edges: BTreeSet::new(),
        }
    }

    pub fn with_edges(node_count: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        Dag {
            node_count,
            edges: edges.into_iter().collect(),
        }
    }

    pub fn add_edge(&mut self, from: NodeId, to: NodeId) -> &mut Self {
        self.edges.insert((from, to));
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn validate(&self) -> Result<ValidatedDag> {
        let n = self.node_count;
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(from, to) in &self.edges {
            if from >= n || to >= n {
                return Err(Error::BadEdge {
                    from,
                    to,
                    node_count: n,
                });
            }
            if from == to {
                return Err(Error::Cycle { cycle: vec![from] });
            }
            parents[to].push(from);
            children[from].push(to);
        }
        // BTreeSet iteration already yields ascending order per endpoint,
        // but sort anyway so the parent order contract never depends on it.
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        let mut in_degree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<NodeId>> = (0..n).filter(|&v| in_degree[v] == 0).map(Reverse).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(Reverse(v)) = ready.pop() {
            topo.push(v);
            for &c in &children[v] {
                in_degree[c] -= 1;
                if in_degree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        if topo.len() < n {
            return Err(Error::Cycle {
                cycle: find_cycle(&parents, &in_degree),
            });
        }

        let mut position = vec![0; n];
        for (pos, &v) in topo.iter().enumerate() {
            position[v] = pos;
        }

        let mut ancestors = vec![FixedBitSet::with_capacity(n); n];
        for &v in &topo {
            let mut acc = FixedBitSet::with_capacity(n);
            for &p in &parents[v] {
                acc.union_with(&ancestors[p]);
                acc.insert(p);
            }
            ancestors[v] = acc;
        }
        let mut descendants = vec![FixedBitSet::with_capacity(n); n];
        for &v in topo.iter().rev() {
            let mut acc = FixedBitSet::with_capacity(n);
            for &c in &children[v] {
                acc.union_with(&descendants[c]);
                acc.insert(c);
            }
            descendants[v] = acc;
        }

        Ok(ValidatedDag {
            node_count: n,
            edges: self.edges.iter().copied().collect(),
            parents,
            children,
            topo,
            position,
            ancestors,
            descendants,
        })
    }
}

/// Walks parent pointers among the nodes Kahn's method could not remove.
/// Every such node has a remaining parent, so the walk must revisit a node.
fn find_cycle(parents: &[Vec<NodeId>], in_degree: &[usize]) -> Vec<NodeId> {
    let stuck = |v: NodeId| in_degree[v] > 0;
    let start = (0..parents.len()).find(|&v| stuck(v)).expect("a stuck node exists");
    let mut seen_at = vec![usize::MAX; parents.len()];
    let mut walk = Vec::new();
    let mut v = start;
    while seen_at[v] == usize::MAX {
        seen_at[v] = walk.len();
        walk.push(v);
        v = *parents[v]
            .iter()
            .find(|&&p| stuck(p))
            .expect("stuck node has a stuck parent");
    }
    // The walk follows edges backwards; reverse to list the cycle forwards.
    let mut cycle = walk[seen_at[v]..].to_vec();
    cycle.reverse();
    let min_pos = cycle
        .iter()
        .enumerate()
        .min_by_key(|(_, &node)| node)
        .map(|(i, _)| i)
        .unwrap_or(0);
    cycle.rotate_left(min_pos);
    cycle
}

/// A DAG with a fixed topological order and memoized ancestry.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedDag {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
    position: Vec<usize>,
    ancestors: Vec<FixedBitSet>,
    descendants: Vec<FixedBitSet>,
}

impl ValidatedDag {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// Position of `node` in the topological order.
    pub fn position(&self, node: NodeId) -> usize {
        self.position[node]
    }

    /// Parents in ascending index order. Mechanisms receive their parent
    /// values in exactly this order.
    pub fn parents(&self, node: NodeId) -> &[NodeId] {
        &self.parents[node]
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.children[node]
    }

    pub fn ancestors(&self, node: NodeId) -> &FixedBitSet {
        &self.ancestors[node]
    }

    pub fn descendants(&self, node: NodeId) -> &FixedBitSet {
        &self.descendants[node]
    }

    pub fn is_ancestor(&self, ancestor: NodeId, node: NodeId) -> bool {
        self.ancestors[node].contains(ancestor)
    }

    /// Union of `anc(i)` over the given nodes. The nodes themselves are not
    /// included unless one is an ancestor of another.
    pub fn ancestors_of_set(&self, nodes: impl IntoIterator<Item = NodeId>) -> FixedBitSet {
        let mut acc = FixedBitSet::with_capacity(self.node_count);
        for v in nodes {
            acc.union_with(&self.ancestors[v]);
        }
        acc
    }

    pub fn descendants_of_set(&self, nodes: impl IntoIterator<Item = NodeId>) -> FixedBitSet {
        let mut acc = FixedBitSet::with_capacity(self.node_count);
        for v in nodes {
            acc.union_with(&self.descendants[v]);
        }
        acc
    }

    /// Number of directed paths (of at least one edge) from `from` to `to`,
    /// saturating at `u128::MAX`.
    pub fn path_count(&self, from: NodeId, to: NodeId) -> u128 {
        if from == to || !self.ancestors[to].contains(from) {
            return 0;
        }
        let mut count = vec![0u128; self.node_count];
        count[from] = 1;
        for &v in &self.topo[self.position[from] + 1..=self.position[to]] {
            count[v] = self.parents[v]
                .iter()
                .fold(0u128, |acc, &p| acc.saturating_add(count[p]));
        }
        count[to]
    }

    /// True iff exactly one directed path leads from `from` to `to`.
    pub fn unique_path_to(&self, from: NodeId, to: NodeId) -> bool {
        self.path_count(from, to) == 1
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node < self.node_count {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "node {node} out of range 0..{}",
                self.node_count
            )))
        }
    }

    pub fn to_dag(&self) -> Dag {
        Dag::with_edges(self.node_count, self.edges.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> ValidatedDag {
        Dag::with_edges(3, [(0, 1), (1, 2)]).validate().unwrap()
    }

    fn diamond() -> ValidatedDag {
        Dag::with_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).validate().unwrap()
    }

    fn set(bits: &FixedBitSet) -> Vec<usize> {
        bits.ones().collect()
    }

    #[test]
    fn chain_topological_order() {
        assert_eq!(chain().topological_order(), &[0, 1, 2]);
    }

    #[test]
    fn lowest_index_tie_break() {
        let g = Dag::with_edges(4, [(3, 0), (2, 1)]).validate().unwrap();
        assert_eq!(g.topological_order(), &[2, 1, 3, 0]);
    }

    #[test]
    fn self_loop_is_cycle() {
        let err = Dag::with_edges(1, [(0, 0)]).validate().unwrap_err();
        assert_eq!(err, Error::Cycle { cycle: vec![0] });
    }

    #[test]
    fn three_cycle_is_named() {
        let err = Dag::with_edges(3, [(0, 1), (1, 2), (2, 0)]).validate().unwrap_err();
        assert_eq!(err, Error::Cycle { cycle: vec![0, 1, 2] });
    }

    #[test]
    fn cycle_behind_acyclic_prefix() {
        let err = Dag::with_edges(5, [(0, 1), (1, 2), (2, 3), (3, 1), (3, 4)])
            .validate()
            .unwrap_err();
        assert_eq!(err, Error::Cycle { cycle: vec![1, 2, 3] });
    }

    #[test]
    fn out_of_range_edge() {
        let err = Dag::with_edges(2, [(0, 2)]).validate().unwrap_err();
        assert!(matches!(err, Error::BadEdge { from: 0, to: 2, .. }));
    }

    #[test]
    fn parents_sorted() {
        assert_eq!(diamond().parents(3), &[1, 2]);
        assert!(chain().parents(0).is_empty());
        assert_eq!(chain().parents(2), &[1]);
        let g = Dag::with_edges(4, [(3, 0), (1, 0), (2, 0)]).validate().unwrap();
        assert_eq!(g.parents(0), &[1, 2, 3]);
    }

    #[test]
    fn ancestor_sets() {
        assert_eq!(set(chain().ancestors(2)), vec![0, 1]);
        assert_eq!(set(diamond().ancestors(3)), vec![0, 1, 2]);
        assert!(diamond().ancestors(0).is_clear());
        assert_eq!(set(&diamond().ancestors_of_set([1, 2])), vec![0]);
        assert_eq!(set(diamond().descendants(0)), vec![1, 2, 3]);
    }

    #[test]
    fn unique_paths() {
        assert!(chain().unique_path_to(0, 2));
        assert!(!diamond().unique_path_to(0, 3));
        assert_eq!(diamond().path_count(0, 3), 2);
        let g = Dag::with_edges(2, []).validate().unwrap();
        assert!(!g.unique_path_to(0, 1));
        assert!(!chain().unique_path_to(2, 0));
    }
}
