//! Dense non-negative least squares, `min ‖Ax − y‖₂ s.t. x ≥ 0`, by the
//! Lawson–Hanson active-set method.
//!
//! Tall systems (`N > M`) are first reduced to the `M × M` triangular factor
//! of a Householder QR, which leaves the objective unchanged up to a
//! constant. Each passive-set least-squares subproblem is solved with a
//! column-pivoted QR; rank-deficient passive sets fall back to the
//! minimum-norm solution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct NnlsOptions {
    /// KKT tolerance; defaults to `10·ε·‖A‖∞·max(N, M)`.
    pub tol: Option<f64>,
    /// Defaults to `3M`.
    pub max_outer_iters: Option<usize>,
    /// Columns to start in the passive set (e.g. the previous solution's
    /// support).
    pub initial_passive: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    /// False when the iteration limit was hit before the KKT conditions held;
    /// `x` is then the best feasible iterate.
    pub converged: bool,
    pub iterations: usize,
    pub tol: f64,
}

pub fn default_tolerance(a: &DMatrix<f64>) -> f64 {
    let (n, m) = a.shape();
    let norm_inf = a
        .row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    10.0 * f64::EPSILON * norm_inf * n.max(m) as f64
}

/// Solves `min ‖Ax − y‖₂` subject to `x ≥ 0`.
pub fn nnls_solve(a: &DMatrix<f64>, y: &DVector<f64>, options: &NnlsOptions) -> Result<NnlsSolution> {
    let (n, m) = a.shape();
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig("NNLS needs a non-empty matrix".into()));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("NNLS matrix"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("NNLS target"));
    }
    let tol = options.tol.unwrap_or_else(|| default_tolerance(a));
    let max_outer = options.max_outer_iters.unwrap_or(3 * m).max(1);

    let (b, c) = if n > m {
        let qr = a.clone().qr();
        let mut qty = y.clone();
        qr.q_tr_mul(&mut qty);
        (qr.r(), qty.rows(0, m).into_owned())
    } else {
        (a.clone(), y.clone())
    };

    let mut solver = ActiveSet {
        b: &b,
        c: &c,
        passive: vec![false; m],
        x: DVector::zeros(m),
    };
    if let Some(initial) = &options.initial_passive {
        solver.warm_start(initial);
    }
    let (converged, iterations) = solver.run(tol, max_outer);

    let x: Vec<f64> = solver.x.iter().copied().collect();
    let residual_norm = (a * &solver.x - y).norm();
    Ok(NnlsSolution {
        x,
        residual_norm,
        converged,
        iterations,
        tol,
    })
}

struct ActiveSet<'a> {
    b: &'a DMatrix<f64>,
    c: &'a DVector<f64>,
    passive: Vec<bool>,
    x: DVector<f64>,
}

impl ActiveSet<'_> {
    fn passive_columns(&self) -> Vec<usize> {
        (0..self.passive.len()).filter(|&j| self.passive[j]).collect()
    }

    /// Least squares restricted to the passive columns; zero elsewhere.
    fn solve_passive(&self) -> DVector<f64> {
        let cols = self.passive_columns();
        let mut z = DVector::zeros(self.passive.len());
        if cols.is_empty() {
            return z;
        }
        let sub = self.b.select_columns(&cols);
        let sol = least_squares(&sub, self.c);
        for (&j, v) in cols.iter().zip(sol.iter()) {
            z[j] = *v;
        }
        z
    }

    /// Starts from the given support, dropping columns whose least-squares
    /// coefficient is not positive until the restricted solution is feasible.
    fn warm_start(&mut self, initial: &[usize]) {
        for &j in initial {
            if j < self.passive.len() {
                self.passive[j] = true;
            }
        }
        loop {
            let z = self.solve_passive();
            let bad: Vec<usize> = self
                .passive_columns()
                .into_iter()
                .filter(|&j| z[j] <= 0.0)
                .collect();
            if bad.is_empty() {
                self.x = z;
                return;
            }
            for j in bad {
                self.passive[j] = false;
            }
        }
    }

    fn run(&mut self, tol: f64, max_outer: usize) -> (bool, usize) {
        let m = self.passive.len();
        let max_inner = 3 * m;
        let mut blocked = vec![false; m];
        let mut iterations = 0;
        loop {
            let w = self.b.tr_mul(&(self.c - self.b * &self.x));
            let candidate = (0..m)
                .filter(|&j| !self.passive[j] && !blocked[j])
                .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
            let Some(j) = candidate.filter(|&j| w[j] > tol) else {
                return (true, iterations);
            };
            if iterations >= max_outer {
                return (false, iterations);
            }
            iterations += 1;

            self.passive[j] = true;
            let mut first = true;
            for _ in 0..max_inner {
                let z = self.solve_passive();
                let infeasible: Vec<usize> = self
                    .passive_columns()
                    .into_iter()
                    .filter(|&i| z[i] <= 0.0)
                    .collect();
                if infeasible.is_empty() {
                    self.x = z;
                    blocked.iter_mut().for_each(|b| *b = false);
                    break;
                }
                if first && infeasible == [j] {
                    // rounding made the entering column useless; skip it
                    self.passive[j] = false;
                    blocked[j] = true;
                    break;
                }
                first = false;
                let mut alpha = f64::INFINITY;
                let mut leaving = infeasible[0];
                for &i in &infeasible {
                    let step = self.x[i] / (self.x[i] - z[i]);
                    if step < alpha {
                        alpha = step;
                        leaving = i;
                    }
                }
                let alpha = alpha.clamp(0.0, 1.0);
                self.x += (&z - &self.x) * alpha;
                self.passive[leaving] = false;
                for i in 0..m {
                    if !self.passive[i] || self.x[i] <= 0.0 {
                        self.passive[i] = false;
                        self.x[i] = 0.0;
                    }
                }
            }
        }
    }
}

/// Least-squares solution of `a z ≈ c` by Householder QR with column
/// pivoting; minimum-norm (complete orthogonal decomposition) when `a` is
/// numerically rank deficient.
fn least_squares(a: &DMatrix<f64>, c: &DVector<f64>) -> DVector<f64> {
    let (n, p) = a.shape();
    let mut r = a.clone();
    let mut rhs = c.clone();
    let mut perm: Vec<usize> = (0..p).collect();
    let steps = n.min(p);
    let mut norms: Vec<f64> = (0..p).map(|j| r.column(j).norm_squared()).collect();
    let mut rank = steps;
    let mut first_diag = 0.0;
    for k in 0..steps {
        let pivot = (k..p)
            .max_by(|&i, &j| norms[i].total_cmp(&norms[j]).then(j.cmp(&i)))
            .expect("non-empty range");
        if pivot != k {
            r.swap_columns(k, pivot);
            norms.swap(k, pivot);
            perm.swap(k, pivot);
        }
        let alpha = r.view((k, k), (n - k, 1)).norm();
        if k == 0 {
            first_diag = alpha;
        }
        if alpha <= 10.0 * f64::EPSILON * n.max(p) as f64 * first_diag || alpha == 0.0 {
            rank = k;
            break;
        }
        // Householder vector v = x + sign(x0)‖x‖e0, applied as I − 2vvᵀ/vᵀv
        let x0 = r[(k, k)];
        let beta = if x0 >= 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] -= beta;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            for j in k..p {
                let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * r[(k + t, j)]).sum();
                let f = 2.0 * dot / vnorm2;
                for (t, vi) in v.iter().enumerate() {
                    r[(k + t, j)] -= f * vi;
                }
            }
            let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * rhs[k + t]).sum();
            let f = 2.0 * dot / vnorm2;
            for (t, vi) in v.iter().enumerate() {
                rhs[k + t] -= f * vi;
            }
        }
        for j in (k + 1)..p {
            norms[j] = r.view((k + 1, j), (n - k - 1, 1)).norm_squared();
        }
    }

    let mut out = DVector::zeros(p);
    if rank < p {
        if rank == 0 {
            return out;
        }
        // [R11 R12]ᵀ = Z T, so a P = Q₁ Tᵀ Zᵀ and the minimum-norm solution
        // is Z w with Tᵀ w = (Qᵀc)[..rank]
        let top_t = DMatrix::from_fn(p, rank, |j, i| if j >= i { r[(i, j)] } else { 0.0 });
        let qr = top_t.qr();
        let w = qr
            .r()
            .transpose()
            .solve_lower_triangular(&rhs.rows(0, rank).into_owned())
            .unwrap_or_else(|| DVector::zeros(rank));
        let u = qr.q() * w;
        for (k, &col) in perm.iter().enumerate() {
            out[col] = u[k];
        }
        return out;
    }

    let mut z = vec![0.0; p];
    for k in (0..p).rev() {
        let mut acc = rhs[k];
        for j in (k + 1)..p {
            acc -= r[(k, j)] * z[j];
        }
        z[k] = acc / r[(k, k)];
    }
    for (k, &col) in perm.iter().enumerate() {
        out[col] = z[k];
    }
    out
}
