//! Sum-product networks over binary variables.
//!
//! A graph is built once with [`SpnGraph::new`], which checks the structure
//! (no cycles, no dangling children, a single root reaching every node) and
//! caches node scopes together with a [`ValidationReport`]. Inference is only
//! available on valid graphs; graphs are immutable afterwards, so the cache
//! never goes stale.

mod inference;
mod json;
mod trees;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use inference::MpeResult;
pub use trees::{evaluate_terms, InducedTrees, Rank1Term, TreeCount};

/// Index of a node inside [`SpnGraph::nodes`].
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpnNode {
    /// Weighted mixture; weights are non-negative.
    Sum { children: Vec<(NodeId, f64)> },
    Product { children: Vec<NodeId> },
    /// Bernoulli leaf evaluating `p·x + (1−p)·x̄`.
    Leaf { variable: usize, p: f64 },
}

impl SpnNode {
    pub fn sum(children: impl IntoIterator<Item = (NodeId, f64)>) -> Self {
        SpnNode::Sum {
            children: children.into_iter().collect(),
        }
    }

    pub fn product(children: impl IntoIterator<Item = NodeId>) -> Self {
        SpnNode::Product {
            children: children.into_iter().collect(),
        }
    }

    pub fn leaf(variable: usize, p: f64) -> Self {
        SpnNode::Leaf { variable, p }
    }

    fn child_ids(&self) -> Vec<NodeId> {
        match self {
            SpnNode::Sum { children } => children.iter().map(|&(c, _)| c).collect(),
            SpnNode::Product { children } => children.clone(),
            SpnNode::Leaf { .. } => Vec::new(),
        }
    }
}

/// Set of variable indices, stored as a bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scope {
    words: Vec<u64>,
}

impl Scope {
    fn empty(d: usize) -> Self {
        Self {
            words: vec![0; d.div_ceil(64).max(1)],
        }
    }

    fn insert(&mut self, v: usize) {
        self.words[v / 64] |= 1 << (v % 64);
    }

    fn union_with(&mut self, other: &Scope) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    fn is_disjoint(&self, other: &Scope) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn contains(&self, v: usize) -> bool {
        self.words
            .get(v / 64)
            .is_some_and(|w| w & (1 << (v % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| i * 64 + b)
        })
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// Children of a sum node have different scopes.
    Incomplete,
    /// Children of a product node share a variable.
    NotDecomposable,
    /// Root scope does not cover every declared variable.
    UncoveredVariables,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: NodeId,
    pub kind: ViolationKind,
    pub detail: String,
}

/// Completeness and decomposability violations; empty iff the SPN is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            let kind = match v.kind {
                ViolationKind::Incomplete => "incomplete sum",
                ViolationKind::NotDecomposable => "non-decomposable product",
                ViolationKind::UncoveredVariables => "uncovered variables",
            };
            write!(f, "node {}: {kind} ({})", v.node, v.detail)?;
        }
        Ok(())
    }
}

/// Size figures used when reporting on a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpnStats {
    pub nodes: usize,
    pub sum_nodes: usize,
    pub product_nodes: usize,
    pub leaves: usize,
    pub weights: usize,
    /// Number of nodes on the longest root-to-leaf path.
    pub layers: usize,
}

#[derive(Debug, Clone)]
pub struct SpnGraph {
    nodes: Vec<SpnNode>,
    root: NodeId,
    num_variables: usize,
    /// Reachable nodes, children before parents.
    order: Vec<NodeId>,
    scopes: Vec<Scope>,
    report: ValidationReport,
}

impl SpnGraph {
    /// Checks structural well-formedness and computes scopes.
    ///
    /// Structural defects (cycles, dangling ids, out-of-range variables,
    /// empty child lists, bad parameters, unreachable nodes) are errors.
    /// Completeness and decomposability are recorded in [`Self::validate`].
    pub fn new(num_variables: usize, root: NodeId, nodes: Vec<SpnNode>) -> Result<Self> {
        if num_variables == 0 {
            return Err(Error::Malformed("an SPN needs at least one variable".into()));
        }
        if root >= nodes.len() {
            return Err(Error::Malformed(format!(
                "root {root} is not one of the {} nodes",
                nodes.len()
            )));
        }
        for (id, node) in nodes.iter().enumerate() {
            match node {
                SpnNode::Sum { children } => {
                    if children.is_empty() {
                        return Err(Error::Malformed(format!("sum node {id} has no children")));
                    }
                    for &(c, w) in children {
                        if c >= nodes.len() {
                            return Err(Error::DanglingChild { node: id, child: c });
                        }
                        if !(w.is_finite() && w >= 0.0) {
                            return Err(Error::Malformed(format!(
                                "sum node {id} has weight {w}; weights must be finite and non-negative"
                            )));
                        }
                    }
                }
                SpnNode::Product { children } => {
                    if children.is_empty() {
                        return Err(Error::Malformed(format!("product node {id} has no children")));
                    }
                    if let Some(&c) = children.iter().find(|&&c| c >= nodes.len()) {
                        return Err(Error::DanglingChild { node: id, child: c });
                    }
                }
                SpnNode::Leaf { variable, p } => {
                    if *variable >= num_variables {
                        return Err(Error::VariableOutOfRange {
                            node: id,
                            variable: *variable,
                            num_variables,
                        });
                    }
                    if !(0.0..=1.0).contains(p) {
                        return Err(Error::Malformed(format!(
                            "leaf node {id} has p = {p}; expected a probability"
                        )));
                    }
                }
            }
        }

        let order = post_order(&nodes, root)?;
        if order.len() != nodes.len() {
            let mut seen = vec![false; nodes.len()];
            order.iter().for_each(|&n| seen[n] = true);
            let orphan = seen.iter().position(|s| !s).unwrap_or_default();
            return Err(Error::Malformed(format!(
                "node {orphan} is not reachable from root {root}"
            )));
        }

        let mut graph = Self {
            nodes,
            root,
            num_variables,
            order,
            scopes: Vec::new(),
            report: ValidationReport::default(),
        };
        graph.compute_scopes();
        Ok(graph)
    }

    /// Like [`Self::new`] but also rejects incomplete or non-decomposable graphs.
    pub fn new_valid(num_variables: usize, root: NodeId, nodes: Vec<SpnNode>) -> Result<Self> {
        let graph = Self::new(num_variables, root, nodes)?;
        graph.ensure_valid()?;
        Ok(graph)
    }

    fn compute_scopes(&mut self) {
        let d = self.num_variables;
        let mut scopes = vec![Scope::empty(d); self.nodes.len()];
        let mut violations = Vec::new();
        for &id in &self.order {
            let scope = match &self.nodes[id] {
                SpnNode::Leaf { variable, .. } => {
                    let mut s = Scope::empty(d);
                    s.insert(*variable);
                    s
                }
                SpnNode::Sum { children } => {
                    let first = &scopes[children[0].0];
                    let mut s = first.clone();
                    for (pos, &(c, _)) in children.iter().enumerate().skip(1) {
                        if scopes[c] != *first {
                            violations.push(Violation {
                                node: id,
                                kind: ViolationKind::Incomplete,
                                detail: format!(
                                    "child 0 has scope {first}, child {pos} has scope {}",
                                    scopes[c]
                                ),
                            });
                        }
                        s.union_with(&scopes[c]);
                    }
                    s
                }
                SpnNode::Product { children } => {
                    let mut s = Scope::empty(d);
                    for (pos, &c) in children.iter().enumerate() {
                        if !s.is_disjoint(&scopes[c]) {
                            violations.push(Violation {
                                node: id,
                                kind: ViolationKind::NotDecomposable,
                                detail: format!(
                                    "child {pos} scope {} overlaps earlier children {s}",
                                    scopes[c]
                                ),
                            });
                        }
                        s.union_with(&scopes[c]);
                    }
                    s
                }
            };
            scopes[id] = scope;
        }
        let covered = scopes[self.root].len();
        if covered != d {
            violations.push(Violation {
                node: self.root,
                kind: ViolationKind::UncoveredVariables,
                detail: format!("root scope {} covers {covered} of {d} variables", scopes[self.root]),
            });
        }
        self.scopes = scopes;
        self.report = ValidationReport { violations };
    }

    /// Completeness/decomposability report computed at construction.
    pub fn validate(&self) -> &ValidationReport {
        &self.report
    }

    pub fn is_valid(&self) -> bool {
        self.report.is_valid()
    }

    pub fn ensure_valid(&self) -> Result<()> {
        if self.report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidSpn(self.report.clone()))
        }
    }

    pub fn nodes(&self) -> &[SpnNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &SpnNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn num_variables(&self) -> usize {
        self.num_variables
    }

    pub fn scope(&self, id: NodeId) -> &Scope {
        &self.scopes[id]
    }

    /// Nodes ordered children-first.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn stats(&self) -> SpnStats {
        let mut stats = SpnStats {
            nodes: self.nodes.len(),
            sum_nodes: 0,
            product_nodes: 0,
            leaves: 0,
            weights: 0,
            layers: 0,
        };
        let mut depth = vec![0usize; self.nodes.len()];
        for &id in &self.order {
            let children = self.nodes[id].child_ids();
            depth[id] = 1 + children.iter().map(|&c| depth[c]).max().unwrap_or(0);
            match &self.nodes[id] {
                SpnNode::Sum { children } => {
                    stats.sum_nodes += 1;
                    stats.weights += children.len();
                }
                SpnNode::Product { .. } => stats.product_nodes += 1,
                SpnNode::Leaf { .. } => stats.leaves += 1,
            }
        }
        stats.layers = depth[self.root];
        stats
    }

    /// Rebuilds the graph with new sum weights, keeping the structure.
    pub(crate) fn with_sum_weights(&self, weights: impl Fn(NodeId, usize, f64) -> f64) -> Self {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, node)| match node {
                SpnNode::Sum { children } => SpnNode::Sum {
                    children: children
                        .iter()
                        .enumerate()
                        .map(|(pos, &(c, w))| (c, weights(id, pos, w)))
                        .collect(),
                },
                other => other.clone(),
            })
            .collect();
        Self {
            nodes,
            ..self.clone()
        }
    }
}

/// Iterative DFS post-order from `root`, failing on cycles.
fn post_order(nodes: &[SpnNode], root: NodeId) -> Result<Vec<NodeId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; nodes.len()];
    let mut order = Vec::with_capacity(nodes.len());
    let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
    let children: Vec<Vec<NodeId>> = nodes.iter().map(SpnNode::child_ids).collect();
    mark[root] = Mark::Open;
    while let Some(&mut (id, ref mut next)) = stack.last_mut() {
        if let Some(&c) = children[id].get(*next) {
            *next += 1;
            match mark[c] {
                Mark::New => {
                    mark[c] = Mark::Open;
                    stack.push((c, 0));
                }
                Mark::Open => return Err(Error::Cycle(c)),
                Mark::Done => {}
            }
        } else {
            mark[id] = Mark::Done;
            order.push(id);
            stack.pop();
        }
    }
    Ok(order)
}

/// Small reference networks used in documentation and tests.
pub mod fixtures {
    use super::*;

    /// Two-component mixture over three variables:
    /// `0.8·[x1]·B₂(0.3)·B₃(0.6) + 0.2·[x̄1]·B₂(0.5)·B₃(0.9)`,
    /// where `B_k(p)` is a Bernoulli leaf on variable `k` and the indicator
    /// leaves for `x1` are Bernoulli leaves with `p ∈ {0, 1}`.
    pub fn two_component_mixture() -> SpnGraph {
        two_component_mixture_with_weights(0.8, 0.2)
    }

    pub fn two_component_mixture_with_weights(w_left: f64, w_right: f64) -> SpnGraph {
        let nodes = vec![
            SpnNode::leaf(0, 1.0),
            SpnNode::leaf(1, 0.3),
            SpnNode::leaf(2, 0.6),
            SpnNode::leaf(0, 0.0),
            SpnNode::leaf(1, 0.5),
            SpnNode::leaf(2, 0.9),
            SpnNode::product([0, 1, 2]),
            SpnNode::product([3, 4, 5]),
            SpnNode::sum([(6, w_left), (7, w_right)]),
        ];
        SpnGraph::new_valid(3, 8, nodes).expect("fixture is valid")
    }

    pub fn single_leaf(p: f64) -> SpnGraph {
        SpnGraph::new_valid(1, 0, vec![SpnNode::leaf(0, p)]).expect("fixture is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn mixture_fixture_is_valid() {
        let spn = two_component_mixture();
        assert!(spn.validate().is_valid());
        assert_eq!(spn.scope(spn.root()).len(), 3);
        let stats = spn.stats();
        assert_eq!(stats.leaves, 6);
        assert_eq!(stats.weights, 2);
        assert_eq!(stats.layers, 3);
    }

    #[test]
    fn single_leaf_is_valid() {
        assert!(single_leaf(0.3).validate().is_valid());
    }

    #[test]
    fn incomplete_sum_reported() {
        // sum over scopes {1} and {1,2}
        let nodes = vec![
            SpnNode::leaf(1, 0.5),
            SpnNode::leaf(1, 0.5),
            SpnNode::leaf(2, 0.5),
            SpnNode::product([1, 2]),
            SpnNode::sum([(0, 0.5), (3, 0.5)]),
        ];
        let spn = SpnGraph::new(3, 4, nodes).unwrap();
        let report = spn.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| v.node == 4 && v.kind == ViolationKind::Incomplete));
        assert!(spn.ensure_valid().is_err());
    }

    #[test]
    fn non_decomposable_product_reported() {
        let nodes = vec![
            SpnNode::leaf(0, 0.5),
            SpnNode::leaf(0, 0.2),
            SpnNode::product([0, 1]),
        ];
        let spn = SpnGraph::new(1, 2, nodes).unwrap();
        assert_eq!(spn.validate().violations[0].kind, ViolationKind::NotDecomposable);
    }

    #[test]
    fn uncovered_variable_reported() {
        let spn = SpnGraph::new(2, 0, vec![SpnNode::leaf(0, 0.5)]).unwrap();
        assert_eq!(
            spn.validate().violations[0].kind,
            ViolationKind::UncoveredVariables
        );
    }

    #[test]
    fn structural_errors() {
        let cyc = vec![SpnNode::product([1]), SpnNode::sum([(0, 1.0)])];
        assert!(matches!(SpnGraph::new(1, 0, cyc), Err(Error::Cycle(_))));

        let dangling = vec![SpnNode::product([3])];
        assert!(matches!(
            SpnGraph::new(1, 0, dangling),
            Err(Error::DanglingChild { node: 0, child: 3 })
        ));

        let out_of_range = vec![SpnNode::leaf(5, 0.5)];
        assert!(matches!(
            SpnGraph::new(2, 0, out_of_range),
            Err(Error::VariableOutOfRange { variable: 5, .. })
        ));

        let unreachable = vec![SpnNode::leaf(0, 0.5), SpnNode::leaf(0, 0.5)];
        assert!(matches!(
            SpnGraph::new(1, 0, unreachable),
            Err(Error::Malformed(_))
        ));

        let negative = vec![SpnNode::leaf(0, 0.5), SpnNode::sum([(0, -1.0)])];
        assert!(SpnGraph::new(1, 1, negative).is_err());
    }

    #[test]
    fn shared_children_are_fine() {
        // DAG: both products reuse leaf 2
        let nodes = vec![
            SpnNode::leaf(0, 0.9),
            SpnNode::leaf(0, 0.1),
            SpnNode::leaf(1, 0.5),
            SpnNode::product([0, 2]),
            SpnNode::product([1, 2]),
            SpnNode::sum([(3, 0.4), (4, 0.6)]),
        ];
        let spn = SpnGraph::new_valid(2, 5, nodes).unwrap();
        assert_eq!(spn.topological_order().len(), 6);
    }
}
