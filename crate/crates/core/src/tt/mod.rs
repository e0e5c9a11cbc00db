//! Non-negative tensor trains over binary modes.
//!
//! Core `k` has shape `R_k × 2 × R_{k+1}` with `R_1 = R_{d+1} = 1`. Mode index
//! 0 pairs with `x_k` and index 1 with `x̄_k`, so the complete state
//! `x_k = 1` selects mode index 0. Evaluating at an [`Assignment`] contracts
//! every core with its indicator pair and multiplies the resulting matrices
//! left to right.
//!
//! Core indices in this API are 0-based.

mod json;
mod normalize;
mod oracle;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::spn::Rank1Term;

pub use oracle::{khatri_rao_system, DEFAULT_FULL_LIMIT, DEFAULT_KHATRI_RAO_LIMIT};

/// One 3-way core, stored row-major as `(left, mode, right)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Core {
    left: usize,
    right: usize,
    data: Vec<f64>,
}

impl Core {
    pub fn new(left: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        if left == 0 || right == 0 {
            return Err(Error::InvalidTensorTrain("ranks must be at least 1".into()));
        }
        if data.len() != left * 2 * right {
            return Err(Error::InvalidTensorTrain(format!(
                "core of shape {left}×2×{right} needs {} entries, found {}",
                left * 2 * right,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidTensorTrain(format!(
                "core entries must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self { left, right, data })
    }

    pub fn zeros(left: usize, right: usize) -> Self {
        Self {
            left,
            right,
            data: vec![0.0; left * 2 * right],
        }
    }

    pub fn left_rank(&self) -> usize {
        self.left
    }

    pub fn right_rank(&self) -> usize {
        self.right
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, i: usize, s: usize) -> f64 {
        self.data[(r * 2 + i) * self.right + s]
    }

    #[inline]
    pub fn set(&mut self, r: usize, i: usize, s: usize, v: f64) {
        self.data[(r * 2 + i) * self.right + s] = v;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Flattens with the left index fastest, then mode, then right:
    /// position `r + R_k·(i + 2·s)`.
    pub fn to_vec_left_fastest(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.data.len()];
        for r in 0..self.left {
            for i in 0..2 {
                for s in 0..self.right {
                    out[r + self.left * (i + 2 * s)] = self.get(r, i, s);
                }
            }
        }
        out
    }

    pub fn from_vec_left_fastest(left: usize, right: usize, v: &[f64]) -> Result<Self> {
        let mut core = Core::zeros(left, right);
        if v.len() != core.data.len() {
            return Err(Error::InvalidTensorTrain(format!(
                "expected {} entries, found {}",
                core.data.len(),
                v.len()
            )));
        }
        for r in 0..left {
            for i in 0..2 {
                for s in 0..right {
                    core.set(r, i, s, v[r + left * (i + 2 * s)]);
                }
            }
        }
        Core::new(left, right, core.data)
    }

    /// `row · (x·G[:,0,:] + x̄·G[:,1,:])`.
    pub(crate) fn apply_left(&self, row: &[f64], pair: [f64; 2], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.right, 0.0);
        for (r, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (i, &w) in pair.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let base = (r * 2 + i) * self.right;
                let f = a * w;
                for (o, &g) in out.iter_mut().zip(&self.data[base..base + self.right]) {
                    *o += f * g;
                }
            }
        }
    }
}

/// Total and nonzero entry counts over all cores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCount {
    pub total: usize,
    pub nonzero: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorTrain {
    cores: Vec<Core>,
    /// Multiplier recorded by [`TensorTrain::canonicalize`]: the represented
    /// unnormalized function is `scale · tt_eval(x)`. Evaluation itself never
    /// applies it.
    scale: f64,
}

impl TensorTrain {
    pub fn new(cores: Vec<Core>) -> Result<Self> {
        Self::with_scale(cores, 1.0)
    }

    pub fn with_scale(cores: Vec<Core>, scale: f64) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidTensorTrain("a tensor train needs at least one core".into()));
        }
        if cores[0].left != 1 || cores[cores.len() - 1].right != 1 {
            return Err(Error::InvalidTensorTrain("boundary ranks must be 1".into()));
        }
        for (k, pair) in cores.windows(2).enumerate() {
            if pair[0].right != pair[1].left {
                return Err(Error::InvalidTensorTrain(format!(
                    "core {k} has right rank {} but core {} has left rank {}",
                    pair[0].right,
                    k + 1,
                    pair[1].left
                )));
            }
        }
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::InvalidTensorTrain(format!("scale {scale} must be finite and non-negative")));
        }
        Ok(Self { cores, scale })
    }

    /// I.i.d. uniform `[0, 1)` cores with the given interior rank.
    pub fn random(d: usize, interior_rank: usize, rng: &mut impl Rng) -> Self {
        let ranks: Vec<usize> = (0..=d)
            .map(|k| if k == 0 || k == d { 1 } else { interior_rank.max(1) })
            .collect();
        Self::random_with_ranks(&ranks, rng)
    }

    /// `ranks` holds `R_1..R_{d+1}`; the boundary entries must be 1.
    pub fn random_with_ranks(ranks: &[usize], rng: &mut impl Rng) -> Self {
        let cores = ranks
            .windows(2)
            .map(|w| Core {
                left: w[0],
                right: w[1],
                data: (0..w[0] * 2 * w[1]).map(|_| rng.random::<f64>()).collect(),
            })
            .collect();
        Self::new(cores).expect("random ranks are consistent")
    }

    /// Random mixture of `rank` fully factorized components: interior cores
    /// are diagonal with i.i.d. uniform `[0, 1)` entries, the first core holds
    /// uniform mixing weights per state and the last a uniform column.
    pub fn random_mixture(d: usize, rank: usize, rng: &mut impl Rng) -> Self {
        let rank = if d == 1 { 1 } else { rank.max(1) };
        let cores = (0..d)
            .map(|k| {
                let left = if k == 0 { 1 } else { rank };
                let right = if k + 1 == d { 1 } else { rank };
                let mut core = Core::zeros(left, right);
                for r in 0..left {
                    for i in 0..2 {
                        for s in 0..right {
                            if left == 1 || right == 1 || r == s {
                                core.set(r, i, s, rng.random::<f64>());
                            }
                        }
                    }
                }
                core
            })
            .collect();
        Self::new(cores).expect("mixture ranks are consistent")
    }

    pub fn num_variables(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn core(&self, k: usize) -> &Core {
        &self.cores[k]
    }

    #[cfg(test)]
    pub(crate) fn cores_mut(&mut self) -> &mut [Core] {
        &mut self.cores
    }

    /// Replaces core `k`, keeping its shape.
    pub fn replace_core(&mut self, k: usize, core: Core) -> Result<()> {
        let old = &self.cores[k];
        if old.left != core.left || old.right != core.right {
            return Err(Error::InvalidTensorTrain(format!(
                "core {k} must stay {}×2×{}",
                old.left, old.right
            )));
        }
        self.cores[k] = core;
        Ok(())
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn set_scale(&mut self, scale: f64) {
        self.scale = scale;
    }

    /// `R_1..R_{d+1}`.
    pub fn ranks(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(self.cores.iter().map(|c| c.right))
            .collect()
    }

    /// `f(x)`: left-to-right product of the contracted cores.
    pub fn evaluate(&self, a: &Assignment) -> Result<f64> {
        if a.len() != self.cores.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cores.len(),
                found: a.len(),
            });
        }
        let mut row = vec![1.0];
        let mut next = Vec::new();
        for (core, &pair) in self.cores.iter().zip(a.pairs()) {
            core.apply_left(&row, pair, &mut next);
            std::mem::swap(&mut row, &mut next);
        }
        Ok(row[0])
    }

    /// `f(x)` at a complete 0/1 state.
    pub fn evaluate_state(&self, state: &[u8]) -> Result<f64> {
        if state.len() != self.cores.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cores.len(),
                found: state.len(),
            });
        }
        let mut row = vec![1.0];
        let mut next = Vec::new();
        for (core, &v) in self.cores.iter().zip(state) {
            let i = usize::from(v == 0);
            next.clear();
            next.resize(core.right, 0.0);
            for (r, &a) in row.iter().enumerate() {
                let base = (r * 2 + i) * core.right;
                for (o, &g) in next.iter_mut().zip(&core.data[base..base + core.right]) {
                    *o += a * g;
                }
            }
            std::mem::swap(&mut row, &mut next);
        }
        Ok(row[0])
    }

    /// `Z = f(1, …, 1)`.
    pub fn partition(&self) -> f64 {
        self.evaluate(&Assignment::all_ones(self.cores.len()))
            .expect("dimensions match by construction")
    }

    pub fn parameter_count(&self) -> ParameterCount {
        ParameterCount {
            total: self.cores.iter().map(Core::len).sum(),
            nonzero: self
                .cores
                .iter()
                .flat_map(|c| &c.data)
                .filter(|&&v| v > 0.0)
                .count(),
        }
    }

    /// Stacks rank-1 terms block-diagonally: interior ranks equal the number
    /// of terms and each coefficient is absorbed into the first core.
    pub fn from_rank1_sum(terms: &[Rank1Term]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidTensorTrain("need at least one rank-1 term".into()))?;
        let d = first.leaf_vectors.len();
        if d == 0 {
            return Err(Error::InvalidTensorTrain("terms have no variables".into()));
        }
        for (t, term) in terms.iter().enumerate() {
            if term.leaf_vectors.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: term.leaf_vectors.len(),
                });
            }
            let negative = !(term.coefficient >= 0.0)
                || term.leaf_vectors.iter().flatten().any(|v| !(*v >= 0.0));
            if negative {
                return Err(Error::InvalidTensorTrain(format!("term {t} has a negative entry")));
            }
        }
        let tau = terms.len();
        if d == 1 {
            let mut core = Core::zeros(1, 1);
            for term in terms {
                for i in 0..2 {
                    let v = core.get(0, i, 0) + term.coefficient * term.leaf_vectors[0][i];
                    core.set(0, i, 0, v);
                }
            }
            return Self::new(vec![core]);
        }
        let mut cores = Vec::with_capacity(d);
        for k in 0..d {
            let (left, right) = match k {
                0 => (1, tau),
                _ if k == d - 1 => (tau, 1),
                _ => (tau, tau),
            };
            let mut core = Core::zeros(left, right);
            for (t, term) in terms.iter().enumerate() {
                let r = if k == 0 { 0 } else { t };
                let s = if k == d - 1 { 0 } else { t };
                let c = if k == 0 { term.coefficient } else { 1.0 };
                for i in 0..2 {
                    core.set(r, i, s, c * term.leaf_vectors[k][i]);
                }
            }
            cores.push(core);
        }
        Self::new(cores)
    }
}
