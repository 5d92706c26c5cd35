//! Exact bipartite matching on square cost matrices.

use crate::linalg::Matrix;

/// Minimum-cost perfect matching: `result[row] = column`.
///
/// Shortest augmenting paths with row/column potentials; `O(n³)`.
pub fn min_cost_assignment(cost: &Matrix) -> Vec<usize> {
    let n = cost.rows();
    assert!(cost.is_square(), "assignment needs a square cost matrix");
    if n == 0 {
        return Vec::new();
    }
    // 1-based; index 0 is the virtual source column
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut result = vec![0usize; n];
    for j in 1..=n {
        result[col_owner[j] - 1] = j - 1;
    }
    result
}

/// Whether a perfect matching exists using only edges with `allowed(i, j)`.
pub fn has_perfect_matching(n: usize, allowed: impl Fn(usize, usize) -> bool) -> bool {
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| allowed(i, j)).collect())
        .collect();
    let mut match_col: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, &adj, &mut seen, &mut match_col) {
            return false;
        }
    }
    true
}

fn augment(
    i: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    match_col: &mut [Option<usize>],
) -> bool {
    for &j in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        let free = match match_col[j] {
            None => true,
            Some(other) => augment(other, adj, seen, match_col),
        };
        if free {
            match_col[j] = Some(i);
            return true;
        }
    }
    false
}
