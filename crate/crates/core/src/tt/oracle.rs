//! Exponential-size oracles for small `d`: the full tensor and the global
//! Khatri-Rao least-squares system.

use super::TensorTrain;
use crate::assignment::Assignment;
use crate::error::{Error, Result};

pub const DEFAULT_FULL_LIMIT: usize = 20;
pub const DEFAULT_KHATRI_RAO_LIMIT: usize = 12;

impl TensorTrain {
    /// All `2^d` entries of the represented tensor.
    ///
    /// Entry `j` holds `F(i_1, …, i_d)` with `j = Σ_k i_k 2^(k−1)` (first
    /// index fastest). Mode index `i_k = 0` is the `x_k` slot, so it
    /// corresponds to the state `x_k = 1`.
    pub fn full(&self, limit: usize) -> Result<Vec<f64>> {
        let d = self.num_variables();
        if d > limit || d >= 63 {
            return Err(Error::LimitExceeded {
                what: "full tensor",
                d,
                limit,
            });
        }
        let mut state = vec![0u8; d];
        Ok((0..1u64 << d)
            .map(|j| {
                for (k, v) in state.iter_mut().enumerate() {
                    *v = 1 - ((j >> k) & 1) as u8;
                }
                self.evaluate_state(&state).expect("dimensions match")
            })
            .collect())
    }
}

/// `Sᵀ vec(F)` with `S = S⁽ᵈ⁾ ⊙ … ⊙ S⁽¹⁾` materialized explicitly.
///
/// Column `l` of `S⁽ᵏ⁾` is the indicator pair of variable `k` in
/// `samples[l]`. The result equals evaluating the train at every sample and
/// is used to check the vectorization convention of the ALS subproblems.
pub fn khatri_rao_system(samples: &[Assignment], tt: &TensorTrain, limit: usize) -> Result<Vec<f64>> {
    let d = tt.num_variables();
    if d > limit {
        return Err(Error::LimitExceeded {
            what: "Khatri-Rao system",
            d,
            limit,
        });
    }
    if let Some(a) = samples.iter().find(|a| a.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: a.len(),
        });
    }
    let n = samples.len();
    // column-major 2^k × N, grown one factor at a time: S ← S⁽ᵏ⁾ ⊙ S
    let mut rows = 1usize;
    let mut s = vec![1.0; n];
    for k in 0..d {
        let mut next = vec![0.0; 2 * rows * n];
        for (l, a) in samples.iter().enumerate() {
            let pair = a.pair(k);
            let col = &s[l * rows..(l + 1) * rows];
            let out = &mut next[l * 2 * rows..(l + 1) * 2 * rows];
            for (i, &w) in pair.iter().enumerate() {
                for (o, &c) in out[i * rows..(i + 1) * rows].iter_mut().zip(col) {
                    *o = w * c;
                }
            }
        }
        s = next;
        rows *= 2;
    }
    let vec_f = tt.full(limit)?;
    Ok((0..n)
        .map(|l| {
            s[l * rows..(l + 1) * rows]
                .iter()
                .zip(&vec_f)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect())
}
