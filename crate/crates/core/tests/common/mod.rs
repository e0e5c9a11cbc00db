#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use tspn::convert::{convert, ConversionConfig, ConversionReport};
use tspn::eval::{report, EvalReport, ProfileSets, SetSummary, SetTag, DEFAULT_TV_LIMIT};
use tspn::learn::{learn_spn, Dataset, LearnConfig};
use tspn::spn::{SpnGraph, SpnNode};
use tspn::TensorTrain;

/// Random NNLS instance; column scales vary so some problems are poorly
/// conditioned, and a few columns are exact duplicates.
pub fn random_nnls(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> (DMatrix<f64>, DVector<f64>) {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    let mut a = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    if m > 1 && rng.random_bool(0.1) {
        let src = rng.random_range(0..m);
        let dst = rng.random_range(0..m);
        let col = a.column(src).into_owned();
        a.set_column(dst, &col);
    }
    let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    (a, y)
}

/// Exhaustive oracle: some minimizer has linearly independent support
/// columns, so it suffices to solve every independent subset by plain QR
/// and keep the best feasible fit.
pub fn exhaustive_nnls(a: &DMatrix<f64>, y: &DVector<f64>) -> (Vec<f64>, f64) {
    let m = a.ncols();
    let mut best = (vec![0.0; m], y.norm_squared());
    for mask in 1u32..(1 << m) {
        let cols: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
        let sub = a.select_columns(&cols);
        if !full_column_rank(&sub) {
            continue;
        }
        let qr = sub.qr();
        let z = qr.r().solve_upper_triangular(&(qr.q().transpose() * y)).unwrap();
        if z.iter().any(|&v| v <= 0.0) {
            continue;
        }
        let mut x = vec![0.0; m];
        for (&j, v) in cols.iter().zip(z.iter()) {
            x[j] = *v;
        }
        let obj = (a * DVector::from_column_slice(&x) - y).norm_squared();
        if obj < best.1 {
            best = (x, obj);
        }
    }
    best
}

/// Column rank test from the diagonal of an unpivoted QR.
pub fn full_column_rank(a: &DMatrix<f64>) -> bool {
    if a.nrows() < a.ncols() {
        return false;
    }
    let r = a.clone().qr().r();
    let diag: Vec<f64> = r.diagonal().iter().map(|v| v.abs()).collect();
    let top = diag.iter().cloned().fold(0.0, f64::max);
    top > 0.0 && diag.iter().all(|&v| v > 1e-6 * top)
}

/// Largest KKT violation relative to `tol` (≤ 1 means satisfied).
pub fn kkt_violation(a: &DMatrix<f64>, y: &DVector<f64>, x: &[f64], tol: f64) -> f64 {
    let xv = DVector::from_column_slice(x);
    let g = a.tr_mul(&(a * xv - y));
    let mut worst = 0.0f64;
    for (i, &xi) in x.iter().enumerate() {
        if xi < 0.0 {
            return f64::INFINITY;
        }
        let v = if xi > 0.0 { g[i].abs() } else { (-g[i]).max(0.0) };
        worst = worst.max(v / tol);
    }
    worst
}

/// Random valid SPN over `d` variables: alternating sum/product layers built
/// by recursive scope splitting.
pub fn random_spn(rng: &mut ChaCha8Rng, d: usize, max_children: usize) -> SpnGraph {
    let mut nodes = Vec::new();
    let vars: Vec<usize> = (0..d).collect();
    let root = build(rng, &vars, true, max_children, 0, &mut nodes);
    SpnGraph::new_valid(d, root, nodes).unwrap()
}

fn build(
    rng: &mut ChaCha8Rng,
    vars: &[usize],
    sum: bool,
    max_children: usize,
    depth: usize,
    nodes: &mut Vec<SpnNode>,
) -> usize {
    let push = |nodes: &mut Vec<SpnNode>, n: SpnNode| {
        nodes.push(n);
        nodes.len() - 1
    };
    if vars.len() == 1 && (!sum || depth > 3 || rng.random_bool(0.5)) {
        let p = rng.random_range(0.0..1.0);
        return push(nodes, SpnNode::leaf(vars[0], p));
    }
    if sum {
        let k = rng.random_range(1..=max_children);
        let children: Vec<(usize, f64)> = (0..k)
            .map(|_| {
                let c = build(rng, vars, false, max_children, depth + 1, nodes);
                (c, rng.random_range(0.05..1.0))
            })
            .collect();
        push(nodes, SpnNode::sum(children))
    } else {
        if vars.len() == 1 {
            return build(rng, vars, true, max_children, depth + 1, nodes);
        }
        let mut shuffled = vars.to_vec();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let parts = rng.random_range(2..=shuffled.len().min(3));
        let mut cuts: Vec<usize> = (1..shuffled.len()).collect();
        for i in (1..cuts.len()).rev() {
            cuts.swap(i, rng.random_range(0..=i));
        }
        let mut cuts: Vec<usize> = cuts[..parts - 1].to_vec();
        cuts.sort_unstable();
        let mut children = Vec::new();
        let mut start = 0;
        for end in cuts.into_iter().chain(std::iter::once(shuffled.len())) {
            let c = build(rng, &shuffled[start..end], true, max_children, depth + 1, nodes);
            children.push(c);
            start = end;
        }
        push(nodes, SpnNode::product(children))
    }
}

pub fn random_tt(rng: &mut ChaCha8Rng, d: usize, max_rank: usize) -> TensorTrain {
    let mut ranks = vec![1];
    for _ in 1..d {
        ranks.push(rng.random_range(1..=max_rank));
    }
    ranks.push(1);
    TensorTrain::random_with_ranks(&ranks, rng)
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) || (a - b).abs() < 1e-300
}

/// Sparse binary data from a random mixture of product Bernoullis; most
/// entries are 0, as in survey-style benchmarks.
pub fn mixture_data(rng: &mut ChaCha8Rng, d: usize, components: usize, rows: usize) -> Vec<Vec<u8>> {
    let weights: Vec<f64> = (0..components).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let probs: Vec<Vec<f64>> = (0..components)
        .map(|_| (0..d).map(|_| rng.random_range(0.0f64..1.0).powi(6)).collect())
        .collect();
    (0..rows)
        .map(|_| {
            let mut u = rng.random_range(0.0..total);
            let mut c = 0;
            while c + 1 < components && u >= weights[c] {
                u -= weights[c];
                c += 1;
            }
            probs[c].iter().map(|&p| u8::from(rng.random_bool(p))).collect()
        })
        .collect()
}

pub struct PipelineRun {
    pub spn: SpnGraph,
    pub tt: TensorTrain,
    pub conversion: ConversionReport,
    pub eval: EvalReport,
    pub learn_seconds: f64,
    pub convert_seconds: f64,
    pub eval_seconds: f64,
}

impl PipelineRun {
    pub fn seconds(&self) -> f64 {
        self.learn_seconds + self.convert_seconds + self.eval_seconds
    }

    pub fn summary(&self, tag: SetTag) -> &SetSummary {
        self.eval.summaries.iter().find(|s| s.set == tag).expect("every set is summarized")
    }
}

/// learn → convert → eval with the library defaults, as the CLI runs it.
pub fn run_pipeline(train: &Dataset, test: &Dataset, convert_cfg: &ConversionConfig) -> tspn::Result<PipelineRun> {
    let t = Instant::now();
    let spn = learn_spn(train, &LearnConfig::default())?;
    let learn_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let (tt, conversion) = convert(&spn, train, convert_cfg)?;
    let convert_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let sets = ProfileSets::from_split(train, test, convert_cfg.non_sample_ratio, convert_cfg.rng_seed)?;
    let eval = report(&spn, &tt, &sets, DEFAULT_TV_LIMIT)?;
    Ok(PipelineRun {
        spn,
        tt,
        conversion,
        eval,
        learn_seconds,
        convert_seconds,
        eval_seconds: t.elapsed().as_secs_f64(),
    })
}

/// Largest increase between consecutive objective values, relative to
/// `max(1, first value)`.
pub fn worst_increase(history: &[f64]) -> f64 {
    let base = history.first().copied().unwrap_or(0.0).max(1.0);
    history.windows(2).map(|w| (w[1] - w[0]) / base).fold(f64::NEG_INFINITY, f64::max)
}
