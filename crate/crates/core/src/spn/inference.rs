use super::{NodeId, SpnGraph, SpnNode};
use crate::assignment::{Assignment, Evidence};
use crate::error::{Error, Result};

/// Result of a most-probable-explanation query.
#[derive(Debug, Clone, PartialEq)]
pub struct MpeResult {
    /// Complete state, one 0/1 entry per variable.
    pub state: Vec<u8>,
    /// Unnormalized max-product value of the root.
    pub value: f64,
}

impl SpnGraph {
    fn check_dims(&self, found: usize) -> Result<()> {
        if found != self.num_variables {
            return Err(Error::DimensionMismatch {
                expected: self.num_variables,
                found,
            });
        }
        Ok(())
    }

    /// Value of every node in one bottom-up pass.
    fn upward(&self, a: &Assignment) -> Vec<f64> {
        let mut values = vec![0.0; self.nodes.len()];
        for &id in &self.order {
            values[id] = match &self.nodes[id] {
                SpnNode::Leaf { variable, p } => {
                    let [x, xbar] = a.pair(*variable);
                    p * x + (1.0 - p) * xbar
                }
                SpnNode::Product { children } => children.iter().map(|&c| values[c]).product(),
                SpnNode::Sum { children } => children.iter().map(|&(c, w)| w * values[c]).sum(),
            };
        }
        values
    }

    /// Network polynomial `S_w(x)` at the given indicator pairs.
    pub fn evaluate(&self, a: &Assignment) -> Result<f64> {
        self.ensure_valid()?;
        self.check_dims(a.len())?;
        Ok(self.upward(a)[self.root])
    }

    /// `Z = S_w(1)`.
    pub fn partition_function(&self) -> Result<f64> {
        self.evaluate(&Assignment::all_ones(self.num_variables))
    }

    /// `P(evidence)`, with unobserved variables summed out.
    pub fn marginal(&self, evidence: &Evidence) -> Result<f64> {
        self.check_dims(evidence.len())?;
        let z = self.partition_function()?;
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::ZeroPartition);
        }
        Ok(self.evaluate(&Assignment::from_evidence(evidence))? / z)
    }

    /// Normalized probability of a complete 0/1 state.
    pub fn probability(&self, state: &[u8]) -> Result<f64> {
        self.marginal(&Evidence::from_state(state))
    }

    /// Rescales every sum node so its weights add up to one while keeping
    /// `S_w(x)/Z` unchanged.
    ///
    /// Each child weight is multiplied by the child's own partition value
    /// before renormalizing, so unnormalized sub-networks are absorbed into
    /// the parent weights.
    pub fn normalize(&self) -> Result<SpnGraph> {
        self.ensure_valid()?;
        for (id, node) in self.nodes.iter().enumerate() {
            if let SpnNode::Sum { children } = node {
                if children.iter().map(|&(_, w)| w).sum::<f64>() <= 0.0 {
                    return Err(Error::ZeroWeightSum(id));
                }
            }
        }
        let z = self.upward(&Assignment::all_ones(self.num_variables));
        let totals: Vec<f64> = self
            .nodes
            .iter()
            .map(|node| match node {
                SpnNode::Sum { children } => children.iter().map(|&(c, w)| w * z[c]).sum(),
                _ => 1.0,
            })
            .collect();
        for (id, &t) in totals.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::ZeroWeightSum(id));
            }
        }
        let children_of = |id: NodeId, pos: usize| match &self.nodes[id] {
            SpnNode::Sum { children } => children[pos].0,
            _ => unreachable!("weights only exist on sum nodes"),
        };
        Ok(self.with_sum_weights(|id, pos, w| w * z[children_of(id, pos)] / totals[id]))
    }

    /// Most probable explanation by max-product evaluation and a top-down
    /// argmax trace. Ties go to the lowest child index, and to `x = 1` at a
    /// leaf with `p = 0.5`.
    pub fn mpe(&self, evidence: &Evidence) -> Result<MpeResult> {
        self.ensure_valid()?;
        self.check_dims(evidence.len())?;
        let mut values = vec![0.0; self.nodes.len()];
        for &id in &self.order {
            values[id] = match &self.nodes[id] {
                SpnNode::Leaf { variable, p } => match evidence.get(*variable) {
                    Some(true) => *p,
                    Some(false) => 1.0 - p,
                    None => p.max(1.0 - p),
                },
                SpnNode::Product { children } => children.iter().map(|&c| values[c]).product(),
                SpnNode::Sum { children } => children
                    .iter()
                    .map(|&(c, w)| w * values[c])
                    .fold(f64::NEG_INFINITY, f64::max),
            };
        }

        let mut state: Vec<Option<u8>> = evidence
            .values()
            .iter()
            .map(|v| v.map(u8::from))
            .collect();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match &self.nodes[id] {
                SpnNode::Leaf { variable, p } => {
                    if evidence.get(*variable).is_none() {
                        state[*variable] = Some(u8::from(*p >= 1.0 - p));
                    }
                }
                SpnNode::Product { children } => stack.extend(children.iter().rev()),
                SpnNode::Sum { children } => {
                    let mut best = 0;
                    let mut best_value = f64::NEG_INFINITY;
                    for (pos, &(c, w)) in children.iter().enumerate() {
                        let v = w * values[c];
                        if v > best_value {
                            best = pos;
                            best_value = v;
                        }
                    }
                    stack.push(children[best].0);
                }
            }
        }
        let state = state
            .into_iter()
            .map(|v| v.expect("valid SPN covers every variable"))
            .collect();
        Ok(MpeResult {
            state,
            value: values[self.root],
        })
    }
}
