//! The fitting problem: which states the train is fitted on and the SPN
//! probabilities it should reproduce there.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConversionConfig, YScaling};
use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::learn::Dataset;
use crate::spn::SpnGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleTag {
    TrainSample,
    NonSample,
}

/// Fitting targets over a set of distinct states.
///
/// Repeated dataset rows are stored once with their multiplicity as weight,
/// so `objective = Σ_l weight_l · (f(x_l) − y_l)²` equals the sum over the
/// rows with duplicates kept.
#[derive(Debug, Clone)]
pub struct ConversionProblem {
    d: usize,
    states: Vec<u8>,
    weights: Vec<f64>,
    targets: Vec<f64>,
    tags: Vec<SampleTag>,
    y_scale: f64,
    num_rows: usize,
    mass_weight: f64,
}

impl ConversionProblem {
    /// Builds a problem from explicit states (e.g. every state of a small
    /// model). Duplicates are merged.
    pub fn from_states(spn: &SpnGraph, states: &[Vec<u8>], tags: &[SampleTag], y_scaling: YScaling) -> Result<Self> {
        let d = spn.num_variables();
        if d == 0 {
            return Err(Error::InvalidAssignment("states need at least one variable".into()));
        }
        if states.len() != tags.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                found: tags.len(),
            });
        }
        let mut index: HashMap<&[u8], usize> = HashMap::new();
        let mut flat = Vec::new();
        let mut weights = Vec::new();
        let mut merged_tags = Vec::new();
        for (s, &tag) in states.iter().zip(tags) {
            if s.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.len(),
                });
            }
            if s.iter().any(|&v| v > 1) {
                return Err(Error::InvalidAssignment(format!("state {s:?} is not binary")));
            }
            match index.get(s.as_slice()) {
                Some(&l) => weights[l] += 1.0,
                None => {
                    index.insert(s, weights.len());
                    flat.extend_from_slice(s);
                    weights.push(1.0);
                    merged_tags.push(tag);
                }
            }
        }
        let z = spn.partition_function()?;
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::ZeroPartition);
        }
        let mut targets: Vec<f64> = flat
            .par_chunks(d)
            .map(|s| spn.evaluate(&Assignment::from_state(s)).map(|v| v / z))
            .collect::<Result<_>>()?;
        let mut y_scale = 1.0;
        if y_scaling == YScaling::MaxNormalize {
            let max = targets.iter().copied().fold(0.0, f64::max);
            if max > 0.0 {
                y_scale = max;
                targets.iter_mut().for_each(|y| *y /= max);
            }
        }
        Ok(Self {
            d,
            states: flat,
            weights,
            targets,
            tags: merged_tags,
            y_scale,
            num_rows: states.len(),
            mass_weight: 0.0,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.d
    }

    /// Number of distinct states.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Number of rows with duplicates counted.
    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn state(&self, l: usize) -> &[u8] {
        &self.states[l * self.d..(l + 1) * self.d]
    }

    /// Column `l` of `S⁽ᵏ⁾`: `(x_k, x̄_k)`.
    pub fn column(&self, k: usize, l: usize) -> [f64; 2] {
        if self.states[l * self.d + k] == 1 {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    }

    pub fn weight(&self, l: usize) -> f64 {
        self.weights[l]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn tags(&self) -> &[SampleTag] {
        &self.tags
    }

    /// Factor the targets were divided by (1 unless max-normalized).
    /// Adds the row `w · (Z_F − Z_target)²` to the objective, where `Z_F`
    /// is the train's total mass and `Z_target = 1 / y_scale`.
    pub fn with_mass_weight(mut self, w: f64) -> Self {
        self.mass_weight = w;
        self
    }

    pub fn mass_weight(&self) -> f64 {
        self.mass_weight
    }

    /// Total mass of the (scaled) targets over all states.
    pub fn mass_target(&self) -> f64 {
        1.0 / self.y_scale
    }

    pub fn y_scale(&self) -> f64 {
        self.y_scale
    }

    pub fn assignments(&self) -> Vec<Assignment> {
        (0..self.len()).map(|l| Assignment::from_state(self.state(l))).collect()
    }
}

/// `count` distinct uniformly random states, none of which is a row of
/// `data`.
pub fn generate_non_samples(data: &Dataset, count: usize, rng: &mut impl Rng) -> Result<Vec<Vec<u8>>> {
    let d = data.num_variables();
    if count == 0 {
        return Ok(Vec::new());
    }
    let seen = data.distinct_rows();
    let available = if d >= 128 {
        u128::MAX
    } else {
        (1u128 << d) - seen.len() as u128
    };
    if count as u128 > available {
        return Err(Error::NonSampleBudget {
            requested: count,
            available,
            d,
        });
    }

    // Dense regime: enumerate the complement and draw without replacement.
    if d <= 24 && (count as u128) * 4 > available {
        let mut complement: Vec<u64> = (0..1u64 << d)
            .filter(|&j| !seen.contains(index_to_state(j, d).as_slice()))
            .collect();
        for i in 0..count {
            let j = rng.random_range(i..complement.len());
            complement.swap(i, j);
        }
        return Ok(complement[..count].iter().map(|&j| index_to_state(j, d)).collect());
    }

    let budget = 1000usize.saturating_mul(count).max(1_000_000);
    let mut out = Vec::with_capacity(count);
    let mut drawn: HashSet<Vec<u8>> = HashSet::with_capacity(count);
    for _ in 0..budget {
        let s: Vec<u8> = (0..d).map(|_| u8::from(rng.random_bool(0.5))).collect();
        if seen.contains(s.as_slice()) || drawn.contains(&s) {
            continue;
        }
        drawn.insert(s.clone());
        out.push(s);
        if out.len() == count {
            return Ok(out);
        }
    }
    Err(Error::NonSampleBudget {
        requested: count,
        available,
        d,
    })
}

fn index_to_state(j: u64, d: usize) -> Vec<u8> {
    (0..d).map(|k| ((j >> k) & 1) as u8).collect()
}

/// All dataset rows plus `⌈ratio · rows⌉` non-samples, with SPN targets.
pub fn build_problem(spn: &SpnGraph, data: &Dataset, cfg: &ConversionConfig) -> Result<ConversionProblem> {
    build_problem_with_rng(spn, data, cfg, &mut cfg.rng())
}

pub(crate) fn build_problem_with_rng(
    spn: &SpnGraph,
    data: &Dataset,
    cfg: &ConversionConfig,
    rng: &mut impl Rng,
) -> Result<ConversionProblem> {
    cfg.check()?;
    if spn.num_variables() != data.num_variables() {
        return Err(Error::DimensionMismatch {
            expected: spn.num_variables(),
            found: data.num_variables(),
        });
    }
    let count = (cfg.non_sample_ratio * data.num_rows() as f64).ceil() as usize;
    let non_samples = generate_non_samples(data, count, rng)?;
    let mut states: Vec<Vec<u8>> = data.rows().map(<[u8]>::to_vec).collect();
    let mut tags = vec![SampleTag::TrainSample; states.len()];
    tags.extend(std::iter::repeat_n(SampleTag::NonSample, non_samples.len()));
    states.extend(non_samples);
    let problem = ConversionProblem::from_states(spn, &states, &tags, cfg.y_scaling)?;
    Ok(problem.with_mass_weight(cfg.mass_weight))
}
