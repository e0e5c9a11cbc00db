//! Left/right normalization and the canonical (normalized tSPN) form.
//!
//! A left step on core `k` sums each vertical slice `G_k(:, :, α)`, divides
//! the slice by its sum `b(α)` and multiplies row `α` of core `k+1` by the
//! same amount, so the represented tensor is unchanged. Slices summing to
//! zero are deleted from both cores, shrinking `R_{k+1}`. Right steps mirror
//! this towards the left.

use super::{Core, TensorTrain};
use crate::error::{Error, Result};

impl TensorTrain {
    /// Left-normalizes core `k` (`k < d − 1`) and returns the new train with
    /// the number of removed zero slices.
    pub fn left_normalize_step(&self, k: usize) -> Result<(TensorTrain, usize)> {
        self.left_normalize_step_with(k, 0.0)
    }

    /// As [`Self::left_normalize_step`], treating slice sums `≤ zero_threshold`
    /// as zero.
    pub fn left_normalize_step_with(&self, k: usize, zero_threshold: f64) -> Result<(TensorTrain, usize)> {
        let mut tt = self.clone();
        let removed = tt.left_normalize_in_place(k, zero_threshold)?;
        Ok((tt, removed))
    }

    /// Right-normalizes core `k` (`k ≥ 1`).
    pub fn right_normalize_step(&self, k: usize) -> Result<(TensorTrain, usize)> {
        self.right_normalize_step_with(k, 0.0)
    }

    pub fn right_normalize_step_with(&self, k: usize, zero_threshold: f64) -> Result<(TensorTrain, usize)> {
        let mut tt = self.clone();
        let removed = tt.right_normalize_in_place(k, zero_threshold)?;
        Ok((tt, removed))
    }

    pub(crate) fn left_normalize_in_place(&mut self, k: usize, zero_threshold: f64) -> Result<usize> {
        let d = self.cores.len();
        if k + 1 >= d {
            return Err(Error::InvalidTensorTrain(format!(
                "left normalization needs a right neighbour; core {k} of {d}"
            )));
        }
        let core = &self.cores[k];
        let b: Vec<f64> = (0..core.right)
            .map(|s| {
                (0..core.left)
                    .flat_map(|r| (0..2).map(move |i| (r, i)))
                    .map(|(r, i)| core.get(r, i, s))
                    .sum()
            })
            .collect();
        let keep: Vec<usize> = (0..b.len()).filter(|&s| b[s] > zero_threshold).collect();
        if keep.is_empty() {
            return Err(Error::Collapsed { core: k });
        }

        let mut new_core = Core::zeros(core.left, keep.len());
        for r in 0..core.left {
            for i in 0..2 {
                for (s_new, &s) in keep.iter().enumerate() {
                    new_core.set(r, i, s_new, core.get(r, i, s) / b[s]);
                }
            }
        }
        let next = &self.cores[k + 1];
        let mut new_next = Core::zeros(keep.len(), next.right);
        for (r_new, &r) in keep.iter().enumerate() {
            for i in 0..2 {
                for s in 0..next.right {
                    new_next.set(r_new, i, s, next.get(r, i, s) * b[r]);
                }
            }
        }
        let removed = b.len() - keep.len();
        self.cores[k] = new_core;
        self.cores[k + 1] = new_next;
        Ok(removed)
    }

    pub(crate) fn right_normalize_in_place(&mut self, k: usize, zero_threshold: f64) -> Result<usize> {
        let d = self.cores.len();
        if k == 0 || k >= d {
            return Err(Error::InvalidTensorTrain(format!(
                "right normalization needs a left neighbour; core {k} of {d}"
            )));
        }
        let core = &self.cores[k];
        let b: Vec<f64> = (0..core.left)
            .map(|r| core.data[r * 2 * core.right..(r + 1) * 2 * core.right].iter().sum())
            .collect();
        let keep: Vec<usize> = (0..b.len()).filter(|&r| b[r] > zero_threshold).collect();
        if keep.is_empty() {
            return Err(Error::Collapsed { core: k });
        }

        let mut new_core = Core::zeros(keep.len(), core.right);
        for (r_new, &r) in keep.iter().enumerate() {
            for i in 0..2 {
                for s in 0..core.right {
                    new_core.set(r_new, i, s, core.get(r, i, s) / b[r]);
                }
            }
        }
        let prev = &self.cores[k - 1];
        let mut new_prev = Core::zeros(prev.left, keep.len());
        for r in 0..prev.left {
            for i in 0..2 {
                for (s_new, &s) in keep.iter().enumerate() {
                    new_prev.set(r, i, s_new, prev.get(r, i, s) * b[s]);
                }
            }
        }
        let removed = b.len() - keep.len();
        self.cores[k] = new_core;
        self.cores[k - 1] = new_prev;
        Ok(removed)
    }

    /// Brings the train into normalized form around `mixed` (0-based): cores
    /// to the left are left-normalized, cores to the right right-normalized,
    /// and the mixed core is divided by its entry sum. That sum (the
    /// partition function) is multiplied into [`TensorTrain::scale`].
    pub fn canonicalize(&self, mixed: usize) -> Result<TensorTrain> {
        self.canonicalize_with(mixed, 0.0)
    }

    pub fn canonicalize_with(&self, mixed: usize, zero_threshold: f64) -> Result<TensorTrain> {
        let d = self.cores.len();
        if mixed >= d {
            return Err(Error::InvalidTensorTrain(format!(
                "mixed core {mixed} outside 0..{d}"
            )));
        }
        let z = self.partition();
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::ZeroPartition);
        }
        let mut tt = self.clone();
        for k in 0..mixed {
            tt.left_normalize_in_place(k, zero_threshold)?;
        }
        for k in ((mixed + 1)..d).rev() {
            tt.right_normalize_in_place(k, zero_threshold)?;
        }
        let total = tt.cores[mixed].total();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::ZeroPartition);
        }
        tt.cores[mixed].data.iter_mut().for_each(|v| *v /= total);
        tt.scale *= total;
        Ok(tt)
    }

    /// Largest deviation from the normalized-form constraints around
    /// `mixed`: vertical slice sums of left cores, horizontal slice sums of
    /// right cores and the mixed core's total, each compared with 1.
    pub fn normalized_form_error(&self, mixed: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, core) in self.cores.iter().enumerate() {
            if k < mixed {
                for s in 0..core.right {
                    let sum: f64 = (0..core.left)
                        .flat_map(|r| (0..2).map(move |i| (r, i)))
                        .map(|(r, i)| core.get(r, i, s))
                        .sum();
                    worst = worst.max((sum - 1.0).abs());
                }
            } else if k > mixed {
                for r in 0..core.left {
                    let sum: f64 = core.data[r * 2 * core.right..(r + 1) * 2 * core.right].iter().sum();
                    worst = worst.max((sum - 1.0).abs());
                }
            } else {
                worst = worst.max((core.total() - 1.0).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{state_from_index, Assignment};
    use crate::spn::fixtures::two_component_mixture;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    fn random_assignment(d: usize, rng: &mut impl Rng) -> Assignment {
        Assignment::new((0..d).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect()).unwrap()
    }

    /// Core 0 of shape 1×2×3 with vertical slice sums (2, 0, 0.5).
    fn train_with_zero_slice() -> TensorTrain {
        let c0 = Core::new(1, 3, vec![1.5, 0.0, 0.2, 0.5, 0.0, 0.3]).unwrap();
        let c1 = Core::new(3, 1, vec![0.1, 0.9, 0.4, 0.6, 0.7, 0.3]).unwrap();
        TensorTrain::new(vec![c0, c1]).unwrap()
    }

    #[test]
    fn left_step_drops_zero_slice() {
        let tt = train_with_zero_slice();
        let (out, removed) = tt.left_normalize_step(0).unwrap();
        assert_eq!(removed, 1);
        assert_eq!(out.ranks(), vec![1, 2, 1]);
        assert!(out.normalized_form_error(1) >= 0.0);
        for s in 0..2 {
            let sum = out.core(0).get(0, 0, s) + out.core(0).get(0, 1, s);
            assert!((sum - 1.0).abs() < 1e-15);
        }
        for state in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let a = tt.evaluate_state(&state).unwrap();
            let b = out.evaluate_state(&state).unwrap();
            assert!(rel_close(a, b, 1e-12));
        }
    }

    #[test]
    fn left_step_on_normalized_core_is_identity() {
        let c0 = Core::new(1, 2, vec![0.25, 0.6, 0.75, 0.4]).unwrap();
        let c1 = Core::new(2, 1, vec![0.1, 0.9, 0.4, 0.6]).unwrap();
        let tt = TensorTrain::new(vec![c0, c1]).unwrap();
        let (out, removed) = tt.left_normalize_step(0).unwrap();
        assert_eq!(removed, 0);
        assert_eq!(out, tt);
    }

    #[test]
    fn right_step_drops_zero_slice() {
        // mirror: core 1 of shape 3×2×1 with horizontal slice sums (2, 0, 0.5)
        let c0 = Core::new(1, 3, vec![0.1, 0.4, 0.7, 0.9, 0.6, 0.3]).unwrap();
        let c1 = Core::new(3, 1, vec![1.5, 0.5, 0.0, 0.0, 0.2, 0.3]).unwrap();
        let tt = TensorTrain::new(vec![c0, c1]).unwrap();
        let (out, removed) = tt.right_normalize_step(1).unwrap();
        assert_eq!(removed, 1);
        assert_eq!(out.ranks(), vec![1, 2, 1]);
        for r in 0..2 {
            let sum = out.core(1).get(r, 0, 0) + out.core(1).get(r, 1, 0);
            assert!((sum - 1.0).abs() < 1e-15);
        }
        for state in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert!(rel_close(
                tt.evaluate_state(&state).unwrap(),
                out.evaluate_state(&state).unwrap(),
                1e-12
            ));
        }
    }

    #[test]
    fn right_step_on_normalized_core_is_identity() {
        let c0 = Core::new(1, 2, vec![0.3, 0.6, 0.2, 0.4]).unwrap();
        let c1 = Core::new(2, 1, vec![0.1, 0.9, 0.4, 0.6]).unwrap();
        let tt = TensorTrain::new(vec![c0, c1]).unwrap();
        let (out, removed) = tt.right_normalize_step(1).unwrap();
        assert_eq!(removed, 0);
        assert_eq!(out, tt);
    }

    #[test]
    fn steps_preserve_random_trains() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let tt = TensorTrain::random(4, 3, &mut rng);
        let states: Vec<Assignment> = (0..20).map(|_| random_assignment(4, &mut rng)).collect();
        for k in 0..3 {
            let (left, _) = tt.left_normalize_step(k).unwrap();
            let (right, _) = tt.right_normalize_step(k + 1).unwrap();
            for a in &states {
                let v = tt.evaluate(a).unwrap();
                assert!(rel_close(v, left.evaluate(a).unwrap(), 1e-12));
                assert!(rel_close(v, right.evaluate(a).unwrap(), 1e-12));
            }
        }
    }

    #[test]
    fn collapsed_core_is_an_error() {
        let c0 = Core::zeros(1, 2);
        let c1 = Core::new(2, 1, vec![0.1, 0.9, 0.4, 0.6]).unwrap();
        let tt = TensorTrain::new(vec![c0, c1]).unwrap();
        assert!(matches!(tt.left_normalize_step(0), Err(Error::Collapsed { core: 0 })));
        assert!(matches!(tt.canonicalize(1), Err(Error::ZeroPartition)));
    }

    #[test]
    fn bad_step_positions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tt = TensorTrain::random(3, 2, &mut rng);
        assert!(tt.left_normalize_step(2).is_err());
        assert!(tt.right_normalize_step(0).is_err());
        assert!(tt.canonicalize(3).is_err());
    }

    #[test]
    fn mixture_train_canonical_form() {
        let spn = two_component_mixture();
        let terms: Vec<_> = spn.induced_trees().unwrap().collect();
        let tt = TensorTrain::from_rank1_sum(&terms).unwrap();
        let canon = tt.canonicalize(0).unwrap();
        assert!((canon.partition() - 1.0).abs() < 1e-10);
        assert!(canon.normalized_form_error(0) < 1e-12);
        let mut state = [0u8; 3];
        for i in 0..8 {
            state_from_index(i, 3, &mut state);
            assert!(rel_close(
                tt.evaluate_state(&state).unwrap(),
                canon.evaluate_state(&state).unwrap(),
                1e-10
            ));
        }
    }

    #[test]
    fn canonicalize_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tt = TensorTrain::random(5, 3, &mut rng);
        for mixed in 0..5 {
            let once = tt.canonicalize(mixed).unwrap();
            let twice = once.canonicalize(mixed).unwrap();
            for (a, b) in once.cores().iter().zip(twice.cores()) {
                for (x, y) in a.data().iter().zip(b.data()) {
                    assert!((x - y).abs() <= 1e-12);
                }
            }
            assert!((once.cores()[mixed].total() - 1.0).abs() < 1e-12);
            assert!((twice.scale() - once.scale()).abs() <= 1e-12 * once.scale());
            assert!((once.scale() - tt.partition()).abs() <= 1e-12 * tt.partition());
        }
    }
}
