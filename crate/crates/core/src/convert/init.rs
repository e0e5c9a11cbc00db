//! Data-driven starting point: a mixture of independent Bernoullis fitted
//! by EM.

use rand::Rng;

use super::als::objective;
use super::problem::{ConversionProblem, SampleTag};
use crate::spn::Rank1Term;
use crate::tt::TensorTrain;

const MAX_ITERATIONS: usize = 100;
const REL_TOL: f64 = 1e-6;
/// Keeps every entry strictly positive: an exact zero would never recover
/// under the sweeps.
const FLOOR: f64 = 1e-3;

/// `rank`-component Bernoulli mixture as a block-diagonal train. Two fits
/// are made, one counting the train-sample rows by multiplicity and one
/// counting every listed state by its target value; the one with the lower
/// objective is returned. Rows alone can be uninformative (all states
/// listed once), targets alone overweight rare states.
pub fn bernoulli_mixture(problem: &ConversionProblem, rank: usize, rng: &mut impl Rng) -> TensorTrain {
    let by_rows: Vec<f64> = (0..problem.len())
        .map(|l| match problem.tags()[l] {
            SampleTag::TrainSample => problem.weight(l),
            _ => 0.0,
        })
        .collect();
    let first = em(problem, &by_rows, rank, rng);
    if !problem.targets().iter().any(|&y| y > 0.0) {
        return first;
    }
    let second = em(problem, problem.targets(), rank, rng);
    if objective(&second, problem) < objective(&first, problem) {
        second
    } else {
        first
    }
}

fn em(problem: &ConversionProblem, weights: &[f64], rank: usize, rng: &mut impl Rng) -> TensorTrain {
    let d = problem.num_variables();
    let weight = |l: usize| weights[l];
    let rows: Vec<usize> = (0..problem.len()).filter(|&l| weight(l) > 0.0).collect();
    let total: f64 = rows.iter().map(|&l| weight(l)).sum();
    let mut pi = vec![1.0 / rank as f64; rank];
    let mut p: Vec<Vec<f64>> = (0..rank)
        .map(|_| (0..d).map(|_| rng.random_range(0.25..0.75)).collect())
        .collect();
    let mut last = f64::NEG_INFINITY;
    let mut post = vec![0.0; rank];
    for _ in 0..MAX_ITERATIONS {
        let mut mass = vec![0.0; rank];
        let mut ones = vec![vec![0.0; d]; rank];
        let mut loglik = 0.0;
        for &l in &rows {
            let x = problem.state(l);
            for (c, lp) in post.iter_mut().enumerate() {
                *lp = pi[c].ln()
                    + x.iter()
                        .zip(&p[c])
                        .map(|(&v, &q)| if v == 1 { q.ln() } else { (1.0 - q).ln() })
                        .sum::<f64>();
            }
            let top = post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let norm: f64 = post.iter().map(|lp| (lp - top).exp()).sum();
            let w = weight(l);
            loglik += w * (top + norm.ln());
            for (c, lp) in post.iter().enumerate() {
                let r = w * (lp - top).exp() / norm;
                mass[c] += r;
                for (o, &v) in ones[c].iter_mut().zip(x) {
                    if v == 1 {
                        *o += r;
                    }
                }
            }
        }
        for c in 0..rank {
            pi[c] = (mass[c] / total).max(FLOOR / rank as f64);
            for k in 0..d {
                p[c][k] = if mass[c] > 0.0 { ones[c][k] / mass[c] } else { 0.5 };
                p[c][k] = p[c][k].clamp(FLOOR, 1.0 - FLOOR);
            }
        }
        if (loglik - last).abs() <= REL_TOL * loglik.abs() {
            break;
        }
        last = loglik;
    }
    let z: f64 = pi.iter().sum();
    let terms: Vec<Rank1Term> = pi
        .iter()
        .zip(&p)
        .map(|(&w, q)| Rank1Term::new(w / z * problem.mass_target(), q.iter().map(|&q| [q, 1.0 - q]).collect()))
        .collect();
    TensorTrain::from_rank1_sum(&terms).expect("terms share d and are non-negative")
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::convert::YScaling;
    use crate::Assignment;
    use crate::spn::fixtures;

    #[test]
    fn recovers_a_clear_two_component_mixture() {
        let spn = fixtures::two_component_mixture();
        let mut states = Vec::new();
        for _ in 0..30 {
            states.push(vec![1, 0, 1]);
            states.push(vec![1, 1, 1]);
            states.push(vec![0, 0, 0]);
        }
        let tags = vec![SampleTag::TrainSample; states.len()];
        let problem = ConversionProblem::from_states(&spn, &states, &tags, YScaling::None).unwrap();
        let rng = || ChaCha8Rng::seed_from_u64(0);
        let p000 = |tt: &TensorTrain| tt.evaluate_state(&[0, 0, 0]).unwrap();

        // by rows, 000 is a third of the data and its own component
        let rows: Vec<f64> = (0..problem.len()).map(|l| problem.weight(l)).collect();
        let by_rows = em(&problem, &rows, 2, &mut rng());
        assert!((p000(&by_rows) - 1.0 / 3.0).abs() < 0.01, "{}", p000(&by_rows));

        // by target, it carries its share of the SPN's mass on these states
        let listed: f64 = [[1, 0, 1], [1, 1, 1], [0, 0, 0]]
            .iter()
            .map(|x| spn.evaluate(&Assignment::from_state(x)).unwrap())
            .sum();
        let want = spn.evaluate(&Assignment::from_state(&[0, 0, 0])).unwrap() / listed;
        let by_target = em(&problem, problem.targets(), 2, &mut rng());
        assert!((p000(&by_target) - want).abs() < 0.01, "{} vs {want}", p000(&by_target));

        let tt = bernoulli_mixture(&problem, 2, &mut rng());
        assert_eq!(tt.ranks(), vec![1, 2, 2, 1]);
        assert!((tt.partition() - 1.0).abs() < 1e-12);
        let best = objective(&by_rows, &problem).min(objective(&by_target, &problem));
        assert!(objective(&tt, &problem) <= best * (1.0 + 1e-9));
        for j in 0..8u8 {
            let x: Vec<u8> = (0..3).map(|k| (j >> k) & 1).collect();
            assert!(tt.evaluate_state(&x).unwrap() > 0.0);
        }
    }
}
