//! Leaf-terminated induced trees.
//!
//! An induced tree keeps one child of every sum node it reaches and every
//! child of every product node. Terminating at the Bernoulli leaves, each
//! tree is a rank-1 tensor: its weight product times one `(p, 1−p)` vector
//! per variable. Summing the terms reproduces the network polynomial.

use serde::{Deserialize, Serialize};

use super::{NodeId, SpnGraph, SpnNode};
use crate::assignment::Assignment;
use crate::error::{Error, Result};

/// Number of induced trees, or an overflow marker when it exceeds `u128`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeCount {
    Exact(u128),
    Overflow,
}

impl TreeCount {
    pub fn exact(self) -> Option<u128> {
        match self {
            TreeCount::Exact(n) => Some(n),
            TreeCount::Overflow => None,
        }
    }
}

/// One induced tree as a weighted rank-1 tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rank1Term {
    /// Product of the selected sum-edge weights.
    pub coefficient: f64,
    /// `(p, 1−p)` of the selected leaf for each variable.
    pub leaf_vectors: Vec<[f64; 2]>,
}

impl Rank1Term {
    pub fn new(coefficient: f64, leaf_vectors: Vec<[f64; 2]>) -> Self {
        Self {
            coefficient,
            leaf_vectors,
        }
    }

    /// `c · Π_k ⟨v_k, (x_k, x̄_k)⟩`.
    pub fn evaluate(&self, a: &Assignment) -> f64 {
        self.leaf_vectors
            .iter()
            .zip(a.pairs())
            .fold(self.coefficient, |acc, (v, p)| acc * (v[0] * p[0] + v[1] * p[1]))
    }
}

impl SpnGraph {
    /// `τ = S_1(1)`: the bottom-up pass with unit weights and unit leaves.
    pub fn count_induced_trees(&self) -> Result<TreeCount> {
        self.ensure_valid()?;
        let mut counts: Vec<Option<u128>> = vec![None; self.nodes.len()];
        for &id in &self.order {
            counts[id] = match &self.nodes[id] {
                SpnNode::Leaf { .. } => Some(1),
                SpnNode::Product { children } => children
                    .iter()
                    .try_fold(1u128, |acc, &c| acc.checked_mul(counts[c]?)),
                SpnNode::Sum { children } => children
                    .iter()
                    .try_fold(0u128, |acc, &(c, _)| acc.checked_add(counts[c]?)),
            };
        }
        Ok(counts[self.root].map_or(TreeCount::Overflow, TreeCount::Exact))
    }

    /// Lazily enumerates every induced tree as a [`Rank1Term`].
    ///
    /// The count can be exponential in the network size; use
    /// [`Self::count_induced_trees`] first when in doubt.
    pub fn induced_trees(&self) -> Result<InducedTrees<'_>> {
        self.ensure_valid()?;
        let mut trees = InducedTrees {
            spn: self,
            choice: vec![0; self.nodes.len()],
            sums: Vec::new(),
            finished: false,
        };
        trees.retrace();
        Ok(trees)
    }
}

/// Depth-first odometer over sum-node choices.
///
/// The current tree is described by the choices of the sum nodes it visits,
/// listed in preorder. Advancing increments the last choice that can still
/// move, resets everything after it and re-traces the tree; this walks the
/// choice sequences in lexicographic order, so each tree is produced once.
pub struct InducedTrees<'a> {
    spn: &'a SpnGraph,
    choice: Vec<usize>,
    /// Sum nodes of the current tree in preorder.
    sums: Vec<NodeId>,
    finished: bool,
}

impl InducedTrees<'_> {
    fn retrace(&mut self) {
        self.sums.clear();
        let mut stack = vec![self.spn.root];
        while let Some(id) = stack.pop() {
            match &self.spn.nodes[id] {
                SpnNode::Leaf { .. } => {}
                SpnNode::Product { children } => stack.extend(children.iter().rev()),
                SpnNode::Sum { children } => {
                    self.sums.push(id);
                    stack.push(children[self.choice[id]].0);
                }
            }
        }
    }

    fn current(&self) -> Rank1Term {
        let d = self.spn.num_variables;
        let mut coefficient = 1.0;
        let mut leaf_vectors = vec![[1.0, 1.0]; d];
        let mut stack = vec![self.spn.root];
        while let Some(id) = stack.pop() {
            match &self.spn.nodes[id] {
                SpnNode::Leaf { variable, p } => leaf_vectors[*variable] = [*p, 1.0 - p],
                SpnNode::Product { children } => stack.extend(children.iter().rev()),
                SpnNode::Sum { children } => {
                    let (c, w) = children[self.choice[id]];
                    coefficient *= w;
                    stack.push(c);
                }
            }
        }
        Rank1Term {
            coefficient,
            leaf_vectors,
        }
    }

    fn advance(&mut self) {
        while let Some(id) = self.sums.pop() {
            let fan_out = match &self.spn.nodes[id] {
                SpnNode::Sum { children } => children.len(),
                _ => unreachable!("only sum nodes are recorded"),
            };
            if self.choice[id] + 1 < fan_out {
                self.choice[id] += 1;
                self.retrace();
                return;
            }
            self.choice[id] = 0;
        }
        self.finished = true;
    }
}

impl Iterator for InducedTrees<'_> {
    type Item = Rank1Term;

    fn next(&mut self) -> Option<Rank1Term> {
        if self.finished {
            return None;
        }
        let term = self.current();
        self.advance();
        Some(term)
    }
}

/// Sum of all term evaluations; the induced-tree side of the
/// network-polynomial identity.
pub fn evaluate_terms(terms: &[Rank1Term], a: &Assignment) -> Result<f64> {
    if let Some(t) = terms.iter().find(|t| t.leaf_vectors.len() != a.len()) {
        return Err(Error::DimensionMismatch {
            expected: t.leaf_vectors.len(),
            found: a.len(),
        });
    }
    Ok(terms.iter().map(|t| t.evaluate(a)).sum())
}
