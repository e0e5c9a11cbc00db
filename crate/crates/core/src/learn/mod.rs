//! LearnSPN-style structure learning.
//!
//! The learner alternates two splits of the data matrix:
//!
//! * chopping groups variables into independent sets with pairwise G-tests
//!   and becomes a product node;
//! * slicing clusters instances with k-means and becomes a sum node weighted
//!   by cluster sizes.
//!
//! Single variables become Laplace-smoothed Bernoulli leaves. When neither
//! split applies the variables are fully factorized.

mod cluster;
mod dataset;
mod gtest;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spn::{NodeId, SpnGraph, SpnNode};

pub use cluster::{slice, Cluster};
pub use dataset::Dataset;
pub use gtest::{chop, g_test, g_test_on};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnConfig {
    /// Variables are dependent when their G statistic exceeds this value.
    pub g_test_threshold: f64,
    /// Smaller instance sets are factorized instead of sliced.
    pub min_instances_to_slice: usize,
    pub num_clusters: usize,
    pub kmeans_restarts: usize,
    /// Pseudo-count added to both outcomes of every leaf.
    pub laplace_alpha: f64,
    pub rng_seed: u64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            g_test_threshold: 4.0,
            min_instances_to_slice: 50,
            num_clusters: 2,
            kmeans_restarts: 5,
            laplace_alpha: 1.0,
            rng_seed: 0,
        }
    }
}

impl LearnConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.g_test_threshold > 0.0 && self.g_test_threshold.is_finite()) {
            return Err(Error::InvalidConfig("g_test_threshold must be positive".into()));
        }
        if self.num_clusters < 2 {
            return Err(Error::InvalidConfig("num_clusters must be at least 2".into()));
        }
        if !(self.laplace_alpha >= 0.0 && self.laplace_alpha.is_finite()) {
            return Err(Error::InvalidConfig("laplace_alpha must be non-negative".into()));
        }
        Ok(())
    }
}

struct Learner<'a> {
    data: &'a Dataset,
    cfg: &'a LearnConfig,
    rng: ChaCha8Rng,
    nodes: Vec<SpnNode>,
}

impl Learner<'_> {
    fn push(&mut self, node: SpnNode) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn leaf(&mut self, instances: &[usize], variable: usize) -> NodeId {
        let ones = instances
            .iter()
            .filter(|&&r| self.data.get(r, variable) == 1)
            .count() as f64;
        let alpha = self.cfg.laplace_alpha;
        let n = instances.len() as f64;
        let p = if n + 2.0 * alpha > 0.0 {
            (ones + alpha) / (n + 2.0 * alpha)
        } else {
            0.5
        };
        self.push(SpnNode::leaf(variable, p))
    }

    fn factorize(&mut self, instances: &[usize], variables: &[usize]) -> NodeId {
        let leaves: Vec<NodeId> = variables.iter().map(|&v| self.leaf(instances, v)).collect();
        self.push(SpnNode::product(leaves))
    }

    fn learn(&mut self, instances: &[usize], variables: &[usize]) -> Result<NodeId> {
        if instances.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let [variable] = variables {
            return Ok(self.leaf(instances, *variable));
        }

        let components = chop(self.data, instances, variables, self.cfg);
        if components.len() > 1 {
            let children = components
                .iter()
                .map(|c| self.learn(instances, c))
                .collect::<Result<Vec<_>>>()?;
            return Ok(self.push(SpnNode::product(children)));
        }

        if instances.len() >= self.min_slice_size() {
            let clusters = slice(self.data, instances, variables, self.cfg, &mut self.rng);
            if clusters.len() > 1 {
                let mut children = Vec::with_capacity(clusters.len());
                for cluster in &clusters {
                    children.push((self.learn(&cluster.instances, variables)?, cluster.weight));
                }
                return Ok(self.push(SpnNode::sum(children)));
            }
        }
        Ok(self.factorize(instances, variables))
    }

    fn min_slice_size(&self) -> usize {
        self.cfg.min_instances_to_slice.max(self.cfg.num_clusters)
    }
}

/// Learns a valid, normalized SPN over all variables of `data`.
///
/// Deterministic for a fixed dataset and configuration (including the seed).
pub fn learn_spn(data: &Dataset, cfg: &LearnConfig) -> Result<SpnGraph> {
    cfg.check()?;
    let mut learner = Learner {
        data,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        nodes: Vec::new(),
    };
    let instances: Vec<usize> = (0..data.num_rows()).collect();
    let variables: Vec<usize> = (0..data.num_variables()).collect();
    let root = learner.learn(&instances, &variables)?;
    SpnGraph::new_valid(data.num_variables(), root, learner.nodes)
}
