//! Common query interface for SPNs and tensor trains.

use crate::assignment::{Assignment, Evidence};
use crate::error::Result;
use crate::spn::SpnGraph;
use crate::tt::TensorTrain;

/// A non-negative function of `d` indicator pairs; probabilities are values
/// divided by the partition function.
pub trait Model: Sync {
    fn num_variables(&self) -> usize;

    /// Unnormalized value at an indicator assignment.
    fn value(&self, a: &Assignment) -> Result<f64>;

    fn value_at_state(&self, state: &[u8]) -> Result<f64> {
        self.value(&Assignment::from_state(state))
    }

    fn partition(&self) -> Result<f64> {
        self.value(&Assignment::all_ones(self.num_variables()))
    }

    /// `P(x)` for a complete state.
    fn probability_of(&self, state: &[u8]) -> Result<f64> {
        Ok(self.value_at_state(state)? / self.partition()?)
    }

    /// Probability of partial evidence; missing variables get `(1, 1)`.
    fn marginal_of(&self, evidence: &Evidence) -> Result<f64> {
        Ok(self.value(&Assignment::from_evidence(evidence))? / self.partition()?)
    }
}

impl Model for SpnGraph {
    fn num_variables(&self) -> usize {
        SpnGraph::num_variables(self)
    }

    fn value(&self, a: &Assignment) -> Result<f64> {
        self.evaluate(a)
    }
}

impl Model for TensorTrain {
    fn num_variables(&self) -> usize {
        TensorTrain::num_variables(self)
    }

    fn value(&self, a: &Assignment) -> Result<f64> {
        self.evaluate(a)
    }

    fn value_at_state(&self, state: &[u8]) -> Result<f64> {
        self.evaluate_state(state)
    }

    fn partition(&self) -> Result<f64> {
        Ok(TensorTrain::partition(self))
    }
}
