//! Minimum-cost bipartite assignment (Hungarian method with potentials).

/// Costs at or above this value mark forbidden pairs.
pub const FORBIDDEN: f64 = 1e30;

/// Assigns each row to at most one column minimizing the total cost.
///
/// `cost[r][c]` must be finite; entries `>= FORBIDDEN` are never returned
/// as matches. Works for any shape: the shorter side is fully assigned on
/// the padded problem and forbidden pairs are dropped afterwards.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, |r| r.len());
    if rows == 0 {
        return Vec::new();
    }
    if cols == 0 {
        return vec![None; rows];
    }
    let transposed = rows > cols;
    let (n, m) = if transposed { (cols, rows) } else { (rows, cols) };
    let at = |i: usize, j: usize| -> f64 {
        let v = if transposed { cost[j][i] } else { cost[i][j] };
        v.min(FORBIDDEN)
    };

    // 1-based arrays; p[j] is the row matched to column j.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut result = vec![None; rows];
    for j in 1..=m {
        if p[j] == 0 {
            continue;
        }
        let (r, c) = if transposed { (j - 1, p[j] - 1) } else { (p[j] - 1, j - 1) };
        if cost[r][c] < FORBIDDEN {
            result[r] = Some(c);
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(cost: &[Vec<f64>], a: &[Option<usize>]) -> f64 {
        a.iter().enumerate().filter_map(|(r, c)| c.map(|c| cost[r][c])).sum()
    }

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn go(cost: &[Vec<f64>], r: usize, used: &mut Vec<bool>) -> f64 {
            if r == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for c in 0..cost[r].len() {
                if !used[c] {
                    used[c] = true;
                    best = best.min(cost[r][c] + go(cost, r + 1, used));
                    used[c] = false;
                }
            }
            best
        }
        go(cost, 0, &mut vec![false; cost[0].len()])
    }

    #[test]
    fn square_matches_brute_force() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = min_cost_assignment(&cost);
        assert_eq!(total(&cost, &a), brute_force(&cost));
        assert_eq!(total(&cost, &a), 5.0);
    }

    #[test]
    fn rectangular_both_ways() {
        let wide = vec![vec![0.5, 0.1, 0.9, 0.3], vec![0.2, 0.4, 0.8, 0.05]];
        let a = min_cost_assignment(&wide);
        assert_eq!(a, vec![Some(1), Some(3)]);
        let tall: Vec<Vec<f64>> = (0..4).map(|c| wide.iter().map(|r| r[c]).collect()).collect();
        let b = min_cost_assignment(&tall);
        assert_eq!(b, vec![None, Some(0), None, Some(1)]);
    }

    #[test]
    fn forbidden_pairs_stay_unmatched() {
        let cost = vec![vec![FORBIDDEN, 1.0], vec![FORBIDDEN, FORBIDDEN]];
        assert_eq!(min_cost_assignment(&cost), vec![Some(1), None]);
    }

    #[test]
    fn pseudo_random_against_brute_force() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (1u64 << 31) as f64
        };
        for n in 1..6 {
            let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n + 1).map(|_| next()).collect()).collect();
            let a = min_cost_assignment(&cost);
            assert!((total(&cost, &a) - brute_force(&cost)).abs() < 1e-12);
        }
    }
}
