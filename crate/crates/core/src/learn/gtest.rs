use super::{Dataset, LearnConfig};

/// G statistic of the 2×2 contingency table of variables `i` and `j` over
/// all rows.
pub fn g_test(data: &Dataset, i: usize, j: usize) -> f64 {
    let rows: Vec<usize> = (0..data.num_rows()).collect();
    g_test_on(data, &rows, i, j)
}

/// G statistic restricted to the given instances.
///
/// `G = 2 Σ n_ab ln(n_ab N / (n_a· n_·b))`; empty cells contribute nothing.
pub fn g_test_on(data: &Dataset, instances: &[usize], i: usize, j: usize) -> f64 {
    let mut table = [[0usize; 2]; 2];
    for &r in instances {
        table[data.get(r, i) as usize][data.get(r, j) as usize] += 1;
    }
    g_from_table(table)
}

fn g_from_table(table: [[usize; 2]; 2]) -> f64 {
    let n = (table[0][0] + table[0][1] + table[1][0] + table[1][1]) as f64;
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let mut g = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let observed = table[a][b] as f64;
            if observed > 0.0 {
                let expected = rows[a] as f64 * cols[b] as f64 / n;
                g += observed * (observed / expected).ln();
            }
        }
    }
    (2.0 * g).max(0.0)
}

/// Groups `variables` into connected components of the dependency graph
/// whose edges join pairs with `G > threshold`.
///
/// Components are listed in order of their first member; a single component
/// means the variables cannot be split.
pub fn chop(
    data: &Dataset,
    instances: &[usize],
    variables: &[usize],
    cfg: &LearnConfig,
) -> Vec<Vec<usize>> {
    let m = variables.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let ones: Vec<usize> = variables
        .iter()
        .map(|&v| instances.iter().filter(|&&r| data.get(r, v) == 1).count())
        .collect();
    let n = instances.len();
    for a in 0..m {
        for b in (a + 1)..m {
            if find(&mut parent, a) == find(&mut parent, b) {
                continue;
            }
            let both = instances
                .iter()
                .filter(|&&r| data.get(r, variables[a]) == 1 && data.get(r, variables[b]) == 1)
                .count();
            let table = [
                [n + both - ones[a] - ones[b], ones[b] - both],
                [ones[a] - both, both],
            ];
            if g_from_table(table) > cfg.g_test_threshold {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }

    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; m];
    for a in 0..m {
        let r = find(&mut parent, a);
        if slot[r] == usize::MAX {
            slot[r] = components.len();
            components.push(Vec::new());
        }
        components[slot[r]].push(variables[a]);
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table_data(table: [[usize; 2]; 2]) -> Dataset {
        let mut rows = Vec::new();
        for a in 0..2u8 {
            for b in 0..2u8 {
                rows.extend(std::iter::repeat_n(vec![a, b], table[a as usize][b as usize]));
            }
        }
        Dataset::from_rows(rows).unwrap()
    }

    #[test]
    fn balanced_table_is_independent() {
        let data = table_data([[5, 5], [5, 5]]);
        assert_eq!(g_test(&data, 0, 1), 0.0);
    }

    #[test]
    fn identical_columns() {
        // direct evaluation: two cells of 50, each 50·ln(50·100/(50·50)) = 50 ln 2
        let expected = 2.0 * (2.0 * 50.0 * 2f64.ln());
        let data = table_data([[50, 0], [0, 50]]);
        let g = g_test(&data, 0, 1);
        assert!((g - expected).abs() < 1e-9);
        assert!((g - 138.629).abs() < 1e-3);
    }

    #[test]
    fn degenerate_margin_contributes_zero() {
        let data = table_data([[0, 0], [7, 3]]);
        assert_eq!(g_test(&data, 0, 1), 0.0);
    }

    #[test]
    fn independent_columns_rarely_exceed_threshold() {
        let trials = 200;
        let mut below = 0;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows = (0..1000)
                .map(|_| vec![rng.random_bool(0.5) as u8, rng.random_bool(0.3) as u8])
                .collect();
            let data = Dataset::from_rows(rows).unwrap();
            if g_test(&data, 0, 1) < 4.0 {
                below += 1;
            }
        }
        assert!(below as f64 >= 0.95 * trials as f64, "{below}/{trials}");
    }

    #[test]
    fn chop_cases() {
        let cfg = LearnConfig::default();
        let correlated = table_data([[50, 0], [0, 50]]);
        let all: Vec<usize> = (0..100).collect();
        assert_eq!(chop(&correlated, &all, &[0, 1], &cfg), vec![vec![0, 1]]);

        let constant = Dataset::from_rows(vec![vec![1, 0]; 20]).unwrap();
        let all: Vec<usize> = (0..20).collect();
        assert_eq!(chop(&constant, &all, &[0, 1], &cfg), vec![vec![0], vec![1]]);

        // blocks {0, 2} and {1, 3}
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows = (0..500)
            .map(|_| {
                let a = rng.random_bool(0.5) as u8;
                let b = rng.random_bool(0.4) as u8;
                vec![a, b, a, b]
            })
            .collect();
        let blocks = Dataset::from_rows(rows).unwrap();
        let all: Vec<usize> = (0..500).collect();
        assert_eq!(
            chop(&blocks, &all, &[0, 1, 2, 3], &cfg),
            vec![vec![0, 2], vec![1, 3]]
        );
    }
}
