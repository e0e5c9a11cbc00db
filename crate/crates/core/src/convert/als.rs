//! One-core-at-a-time non-negative least-squares updates.
//!
//! For state `l` the train value factors as
//! `f(x_l) = a_{<k,l} · F⁽ᵏ⁾(s_l⁽ᵏ⁾) · a_{>k,l}`, so with the other cores fixed
//! it is linear in `vec(F⁽ᵏ⁾)` with row `a_{>k,l}ᵀ ⊗ s_l⁽ᵏ⁾ᵀ ⊗ a_{<k,l}`.
//! Because `s` is one-hot, states with `x_k = 1` and `x_k = 0` touch
//! disjoint halves of the core and the subproblem splits into two
//! independent NNLS problems of `R_k·R_{k+1}` unknowns each.
//!
//! The optional total-mass row has `s = (1, 1)` and couples the halves.
//! Each half is then reduced to its triangular QR factor and the two are
//! solved together with that row appended.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::problem::ConversionProblem;
use crate::error::{Error, Result};
use crate::nnls::{nnls_solve, NnlsOptions};
use crate::tt::{Core, TensorTrain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Train plus per-state partial contractions.
///
/// `left[k]` holds `a_{<k,l}` (length `R_k`) for every state, row-major by
/// state; `right[k]` holds `a_{>k,l}` (length `R_{k+1}`).
#[derive(Debug, Clone)]
pub struct AlsState {
    pub tt: TensorTrain,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
    pub objective_history: Vec<f64>,
    pub nnls_iterations: usize,
    pub sweep: usize,
}

impl AlsState {
    pub fn new(tt: TensorTrain, problem: &ConversionProblem) -> Result<Self> {
        if tt.num_variables() != problem.num_variables() {
            return Err(Error::DimensionMismatch {
                expected: problem.num_variables(),
                found: tt.num_variables(),
            });
        }
        let d = tt.num_variables();
        let mut state = Self {
            tt,
            left: vec![Vec::new(); d],
            right: vec![Vec::new(); d],
            objective_history: Vec::new(),
            nnls_iterations: 0,
            sweep: 0,
        };
        state.rebuild_caches(problem);
        let obj = objective(&state.tt, problem);
        state.objective_history.push(obj);
        Ok(state)
    }

    pub fn objective(&self) -> f64 {
        *self.objective_history.last().expect("history starts with the initial objective")
    }

    /// Recomputes every cache from the current cores.
    pub fn rebuild_caches(&mut self, problem: &ConversionProblem) {
        let d = self.tt.num_variables();
        let n = problem.len();
        self.left[0] = vec![1.0; n];
        for k in 1..d {
            self.left[k] = extend_left(&self.left[k - 1], self.tt.core(k - 1), k - 1, problem);
        }
        self.right[d - 1] = vec![1.0; n];
        for k in (0..d - 1).rev() {
            self.right[k] = extend_right(&self.right[k + 1], self.tt.core(k + 1), k + 1, problem);
        }
    }

    /// `a_{<k,l}`.
    pub fn left_cache(&self, k: usize, l: usize) -> &[f64] {
        let r = self.tt.core(k).left_rank();
        &self.left[k][l * r..(l + 1) * r]
    }

    /// `a_{>k,l}`.
    pub fn right_cache(&self, k: usize, l: usize) -> &[f64] {
        let r = self.tt.core(k).right_rank();
        &self.right[k][l * r..(l + 1) * r]
    }

    /// Checks the caches used at position `k` against direct contractions
    /// for up to 64 states spread over the problem.
    pub fn caches_consistent(&self, k: usize, problem: &ConversionProblem) -> bool {
        let n = problem.len();
        let step = n.div_ceil(64).max(1);
        (0..n).step_by(step).all(|l| {
            let state = problem.state(l);
            let mut left = vec![1.0];
            let mut next = Vec::new();
            for (j, core) in self.tt.cores()[..k].iter().enumerate() {
                core.apply_left(&left, problem.column(j, l), &mut next);
                std::mem::swap(&mut left, &mut next);
            }
            let mut right = vec![1.0];
            for j in (k + 1..self.tt.num_variables()).rev() {
                let core = self.tt.core(j);
                let i = usize::from(state[j] == 0);
                right = (0..core.left_rank())
                    .map(|r| (0..core.right_rank()).map(|s| core.get(r, i, s) * right[s]).sum())
                    .collect();
            }
            close(&left, self.left_cache(k, l)) && close(&right, self.right_cache(k, l))
        })
    }
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-300))
}

fn extend_left(prev: &[f64], core: &Core, k: usize, problem: &ConversionProblem) -> Vec<f64> {
    let (rl, rr) = (core.left_rank(), core.right_rank());
    let mut out = vec![0.0; problem.len() * rr];
    out.par_chunks_mut(rr).enumerate().for_each(|(l, o)| {
        let i = usize::from(problem.state(l)[k] == 0);
        for (r, &a) in prev[l * rl..(l + 1) * rl].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let base = (r * 2 + i) * rr;
            for (o, &g) in o.iter_mut().zip(&core.data()[base..base + rr]) {
                *o += a * g;
            }
        }
    });
    out
}

fn extend_right(next: &[f64], core: &Core, k: usize, problem: &ConversionProblem) -> Vec<f64> {
    let (rl, rr) = (core.left_rank(), core.right_rank());
    let mut out = vec![0.0; problem.len() * rl];
    out.par_chunks_mut(rl).enumerate().for_each(|(l, o)| {
        let i = usize::from(problem.state(l)[k] == 0);
        let col = &next[l * rr..(l + 1) * rr];
        for (r, o) in o.iter_mut().enumerate() {
            let base = (r * 2 + i) * rr;
            *o = core.data()[base..base + rr].iter().zip(col).map(|(g, c)| g * c).sum();
        }
    });
    out
}

/// Weighted squared residual `Σ_l w_l (f(x_l) − y_l)²`, plus the
/// total-mass term when enabled.
pub fn objective(tt: &TensorTrain, problem: &ConversionProblem) -> f64 {
    let residuals: Vec<f64> = (0..problem.len())
        .into_par_iter()
        .map(|l| {
            let f = tt.evaluate_state(problem.state(l)).expect("dimensions checked");
            let r = f - problem.targets()[l];
            problem.weight(l) * r * r
        })
        .collect();
    let mut total: f64 = residuals.iter().sum();
    if problem.mass_weight() > 0.0 {
        let r = tt.partition() - problem.mass_target();
        total += problem.mass_weight() * r * r;
    }
    total
}

/// Sums of the cores left and right of `k` over both modes.
fn mass_contexts(tt: &TensorTrain, k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut left = vec![1.0];
    for core in &tt.cores()[..k] {
        left = (0..core.right_rank())
            .map(|s| {
                (0..core.left_rank())
                    .map(|r| left[r] * (core.get(r, 0, s) + core.get(r, 1, s)))
                    .sum()
            })
            .collect();
    }
    let mut right = vec![1.0];
    for core in tt.cores()[k + 1..].iter().rev() {
        right = (0..core.left_rank())
            .map(|r| {
                (0..core.right_rank())
                    .map(|s| (core.get(r, 0, s) + core.get(r, 1, s)) * right[s])
                    .sum()
            })
            .collect();
    }
    (left, right)
}

/// Row of the core-`k` subproblem for state `l`, indexed
/// `r + R_k·(i + 2·s)` to match [`Core::to_vec_left_fastest`].
pub fn assemble_row(l: usize, k: usize, state: &AlsState, problem: &ConversionProblem) -> Vec<f64> {
    let a_left = state.left_cache(k, l);
    let a_right = state.right_cache(k, l);
    let rl = a_left.len();
    let pair = problem.column(k, l);
    let mut row = vec![0.0; rl * 2 * a_right.len()];
    for (s, &b) in a_right.iter().enumerate() {
        for (i, &w) in pair.iter().enumerate() {
            for (r, &a) in a_left.iter().enumerate() {
                row[r + rl * (i + 2 * s)] = b * w * a;
            }
        }
    }
    row
}

/// Solves for core `k`, normalizes it towards the sweep direction (removing
/// zero slices), refreshes the affected cache and records the objective.
pub fn update_core(k: usize, direction: Direction, state: &mut AlsState, problem: &ConversionProblem) -> Result<()> {
    let d = state.tt.num_variables();
    debug_assert!(state.caches_consistent(k, problem), "stale caches at core {k}");
    let core = state.tt.core(k).clone();
    let (rl, rr) = (core.left_rank(), core.right_rank());
    let block = rl * rr;
    let mut new_core = core.clone();
    let mut objective = 0.0;

    let mut blocks = Vec::with_capacity(2);
    for i in 0..2 {
        let mode_value = u8::from(i == 0);
        let rows: Vec<usize> = (0..problem.len())
            .filter(|&l| problem.state(l)[k] == mode_value)
            .collect();
        let mut a = vec![0.0; rows.len() * block];
        a.par_chunks_mut(block).zip(rows.par_iter()).for_each(|(out, &l)| {
            let sw = problem.weight(l).sqrt();
            let a_left = state.left_cache(k, l);
            for (s, &b) in state.right_cache(k, l).iter().enumerate() {
                for (r, &al) in a_left.iter().enumerate() {
                    out[r + rl * s] = sw * b * al;
                }
            }
        });
        let y: Vec<f64> = rows
            .iter()
            .map(|&l| problem.weight(l).sqrt() * problem.targets()[l])
            .collect();
        blocks.push((DMatrix::from_row_slice(rows.len(), block, &a), DVector::from_vec(y)));
    }
    let support = |i: usize| -> Vec<usize> { (0..block).filter(|&c| core.get(c % rl, i, c / rl) > 0.0).collect() };

    let mut solutions = Vec::with_capacity(2);
    if problem.mass_weight() > 0.0 {
        // reduce each half to R, Qᵀy; the dropped tail of Qᵀy is a constant
        let reduced: Vec<(DMatrix<f64>, DVector<f64>)> = blocks
            .iter()
            .map(|(a, y)| {
                if a.nrows() > block {
                    let qr = a.clone().qr();
                    let qty = qr.q().tr_mul(y);
                    (qr.r(), qty)
                } else {
                    (a.clone(), y.clone())
                }
            })
            .collect();
        let n0 = reduced[0].0.nrows();
        let n1 = reduced[1].0.nrows();
        let mut a = DMatrix::zeros(n0 + n1 + 1, 2 * block);
        let mut y = DVector::zeros(n0 + n1 + 1);
        a.view_mut((0, 0), (n0, block)).copy_from(&reduced[0].0);
        a.view_mut((n0, block), (n1, block)).copy_from(&reduced[1].0);
        y.rows_mut(0, n0).copy_from(&reduced[0].1);
        y.rows_mut(n0, n1).copy_from(&reduced[1].1);
        let (ml, mr) = mass_contexts(&state.tt, k);
        let sw = problem.mass_weight().sqrt();
        for (s, &b) in mr.iter().enumerate() {
            for (r, &al) in ml.iter().enumerate() {
                a[(n0 + n1, r + rl * s)] = sw * b * al;
                a[(n0 + n1, block + r + rl * s)] = sw * b * al;
            }
        }
        y[n0 + n1] = sw * problem.mass_target();
        let mut warm = support(0);
        warm.extend(support(1).into_iter().map(|c| c + block));
        let sol = solve(&a, &y, warm, state, k)?;
        // recomputed on the full rows: ‖y‖² − ‖Qᵀy‖² would cancel badly
        for (i, (ai, yi)) in blocks.iter().enumerate() {
            let xi = DVector::from_column_slice(&sol.x[i * block..(i + 1) * block]);
            objective += (ai * xi - yi).norm_squared();
        }
        let last = n0 + n1;
        let mass: f64 = (0..2 * block).map(|c| a[(last, c)] * sol.x[c]).sum();
        objective += (mass - y[last]).powi(2);
        solutions.push(sol.x[..block].to_vec());
        solutions.push(sol.x[block..].to_vec());
    } else {
        for (i, (a, y)) in blocks.into_iter().enumerate() {
            if a.nrows() == 0 {
                solutions.push((0..block).map(|c| core.get(c % rl, i, c / rl)).collect());
                continue;
            }
            let sol = solve(&a, &y, support(i), state, k)?;
            objective += sol.residual_norm * sol.residual_norm;
            solutions.push(sol.x);
        }
    }
    for (i, x) in solutions.iter().enumerate() {
        for (c, &v) in x.iter().enumerate() {
            new_core.set(c % rl, i, c / rl, v);
        }
    }

    let new_core = Core::new(rl, rr, new_core.data().to_vec())?;
    state.tt.replace_core(k, new_core)?;
    match direction {
        Direction::Forward if k + 1 < d => {
            state.tt.left_normalize_in_place(k, 0.0)?;
            state.left[k + 1] = extend_left(&state.left[k], state.tt.core(k), k, problem);
        }
        Direction::Backward if k > 0 => {
            state.tt.right_normalize_in_place(k, 0.0)?;
            state.right[k - 1] = extend_right(&state.right[k], state.tt.core(k), k, problem);
        }
        _ => {
            if state.tt.core(k).total() == 0.0 {
                return Err(Error::Collapsed { core: k });
            }
        }
    }
    state.objective_history.push(objective);
    Ok(())
}

fn solve(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    warm: Vec<usize>,
    state: &mut AlsState,
    k: usize,
) -> Result<crate::nnls::NnlsSolution> {
    let sol = nnls_solve(
        a,
        y,
        &NnlsOptions {
            initial_passive: Some(warm),
            ..NnlsOptions::default()
        },
    )?;
    state.nnls_iterations += sol.iterations;
    if !sol.converged {
        return Err(Error::NnlsNotConverged {
            sweep: state.sweep,
            core: k,
            iterations: sol.iterations,
        });
    }
    Ok(sol)
}

/// Forward half-sweep over cores `0..d−1`, then backward over `d−1..1`.
/// A single-core train is updated once per sweep.
pub fn sweep(state: &mut AlsState, problem: &ConversionProblem) -> Result<()> {
    let d = state.tt.num_variables();
    if d == 1 {
        return update_core(0, Direction::Forward, state, problem);
    }
    state.rebuild_caches(problem);
    for k in 0..d - 1 {
        update_core(k, Direction::Forward, state, problem)?;
    }
    state.rebuild_caches(problem);
    for k in (1..d).rev() {
        update_core(k, Direction::Backward, state, problem)?;
    }
    Ok(())
}
