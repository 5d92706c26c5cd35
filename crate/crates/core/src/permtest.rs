//! Permutation test for a difference between two groups of diagrams.
//!
//! The statistic is the mean within-group distance, averaged over both
//! groups; small values mean cohesive groups. Every evaluation works from a
//! precomputed distance matrix so re-partitions never touch the metric.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::DiagramMetric;
use crate::persistence::PersistenceDiagram;

/// Losses within this relative distance of the observed one count as ties.
pub const LOSS_TIE_RTOL: f64 = 1e-12;
pub const DEFAULT_PARTITION_CAP: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestMode {
    Randomized,
    Exact,
}

impl fmt::Display for TestMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMode::Randomized => "randomized",
            TestMode::Exact => "exact",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestResult {
    pub observed_loss: f64,
    /// Re-partitions with loss at most the observed one.
    pub count_leq: u64,
    /// Shuffles drawn, or partitions enumerated.
    pub total: u64,
    pub p_value: f64,
    pub mode: TestMode,
    pub metric: String,
    pub seed: Option<u64>,
    pub n1: usize,
    pub n2: usize,
}

impl TestResult {
    /// `permtest.csv`: one header and one data row.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "mode",
            "metric",
            "n1",
            "n2",
            "observed_loss",
            "count",
            "total",
            "p_value",
            "seed",
        ])?;
        w.write_record([
            self.mode.to_string(),
            self.metric.clone(),
            self.n1.to_string(),
            self.n2.to_string(),
            crate::io::fmt_f64(self.observed_loss),
            self.count_leq.to_string(),
            self.total.to_string(),
            crate::io::fmt_f64(self.p_value),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Mean distance over ordered pairs of distinct members; 0 for a singleton.
fn group_average(dm: &Matrix, group: &[usize]) -> f64 {
    let n = group.len();
    if n < 2 {
        return 0.0;
    }
    let mut sorted = group.to_vec();
    sorted.sort_unstable();
    let mut sum = 0.0;
    for (a, &i) in sorted.iter().enumerate() {
        for &j in &sorted[a + 1..] {
            sum += dm[(i, j)];
        }
    }
    2.0 * sum / (n * (n - 1)) as f64
}

/// `F = ½ (avg(G1) + avg(G2))` read from a distance matrix.
pub fn loss_from_matrix(dm: &Matrix, g1: &[usize], g2: &[usize]) -> f64 {
    0.5 * (group_average(dm, g1) + group_average(dm, g2))
}

/// The same loss, evaluating the metric on every pair.
pub fn group_loss(
    d1: &[PersistenceDiagram],
    d2: &[PersistenceDiagram],
    metric: &DiagramMetric,
) -> Result<f64> {
    if d1.is_empty() || d2.is_empty() {
        return Err(Error::invalid("both groups need at least one diagram"));
    }
    let avg = |g: &[PersistenceDiagram]| -> Result<f64> {
        let n = g.len();
        if n < 2 {
            return Ok(0.0);
        }
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += metric.distance(&g[i], &g[j])?;
            }
        }
        Ok(2.0 * sum / (n * (n - 1)) as f64)
    };
    Ok(0.5 * (avg(d1)? + avg(d2)?))
}

fn validate_groups(dm: &Matrix, g1: &[usize], g2: &[usize]) -> Result<()> {
    if g1.is_empty() || g2.is_empty() {
        return Err(Error::invalid("both groups need at least one member"));
    }
    let n = dm.rows();
    let mut seen = vec![false; n];
    for &i in g1.iter().chain(g2) {
        if i >= n {
            return Err(Error::invalid(format!(
                "group index {i} outside a {n}-row matrix"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid(format!(
                "index {i} appears twice in the groups"
            )));
        }
    }
    Ok(())
}

fn is_tie_or_below(loss: f64, observed: f64) -> bool {
    loss <= observed + LOSS_TIE_RTOL * observed.abs()
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// Randomized test on a precomputed matrix.
///
/// Draws `n_shuffles` uniform re-partitions of `g1 ∪ g2` into sizes
/// `(|g1|, |g2|)`, skipping the observed partition itself (and its mirror when
/// the sizes agree); `p = (Z + 1) / (N + 1)`.
pub fn permutation_test_matrix(
    dm: &Matrix,
    g1: &[usize],
    g2: &[usize],
    n_shuffles: usize,
    seed: u64,
) -> Result<TestResult> {
    validate_groups(dm, g1, g2)?;
    if n_shuffles == 0 {
        return Err(Error::invalid("the number of shuffles must be at least 1"));
    }
    let (n1, n2) = (g1.len(), g2.len());
    let trivial = if n1 == n2 { 2 } else { 1 };
    if binomial(n1 + n2, n1) <= trivial {
        return Err(Error::invalid(format!(
            "groups of sizes {n1} and {n2} admit no non-trivial re-partition"
        )));
    }
    let observed = loss_from_matrix(dm, g1, g2);
    let mut pool: Vec<usize> = g1.iter().chain(g2).copied().collect();
    pool.sort_unstable();
    let mut obs1 = g1.to_vec();
    obs1.sort_unstable();
    let mut obs2 = g2.to_vec();
    obs2.sort_unstable();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0u64;
    let mut drawn = 0usize;
    while drawn < n_shuffles {
        pool.shuffle(&mut rng);
        let (a, b) = pool.split_at(n1);
        let mut s1 = a.to_vec();
        s1.sort_unstable();
        if s1 == obs1 || (n1 == n2 && s1 == obs2) {
            continue;
        }
        drawn += 1;
        if is_tie_or_below(loss_from_matrix(dm, &s1, b), observed) {
            count += 1;
        }
    }
    Ok(TestResult {
        observed_loss: observed,
        count_leq: count,
        total: n_shuffles as u64,
        p_value: (count + 1) as f64 / (n_shuffles + 1) as f64,
        mode: TestMode::Randomized,
        metric: "precomputed".into(),
        seed: Some(seed),
        n1,
        n2,
    })
}

/// Exact test on a precomputed matrix: every labelled partition of
/// `g1 ∪ g2` into sizes `(|g1|, |g2|)`, observed one included.
pub fn exact_permutation_test_matrix(
    dm: &Matrix,
    g1: &[usize],
    g2: &[usize],
    cap: u128,
) -> Result<TestResult> {
    validate_groups(dm, g1, g2)?;
    let (n1, n2) = (g1.len(), g2.len());
    let partitions = binomial(n1 + n2, n1);
    if partitions > cap {
        return Err(Error::PartitionCap { partitions, cap });
    }
    let observed = loss_from_matrix(dm, g1, g2);
    let mut pool: Vec<usize> = g1.iter().chain(g2).copied().collect();
    pool.sort_unstable();
    let n = pool.len();

    let mut count = 0u64;
    let mut total = 0u64;
    let mut chosen: Vec<usize> = (0..n1).collect();
    let mut s1 = Vec::with_capacity(n1);
    let mut s2 = Vec::with_capacity(n2);
    loop {
        s1.clear();
        s2.clear();
        let mut c = 0;
        for (pos, &member) in pool.iter().enumerate() {
            if c < n1 && chosen[c] == pos {
                s1.push(member);
                c += 1;
            } else {
                s2.push(member);
            }
        }
        total += 1;
        if is_tie_or_below(loss_from_matrix(dm, &s1, &s2), observed) {
            count += 1;
        }
        // next combination in lexicographic order
        let mut i = n1;
        loop {
            if i == 0 {
                return Ok(TestResult {
                    observed_loss: observed,
                    count_leq: count,
                    total,
                    p_value: count as f64 / total as f64,
                    mode: TestMode::Exact,
                    metric: "precomputed".into(),
                    seed: None,
                    n1,
                    n2,
                });
            }
            i -= 1;
            if chosen[i] < n - n1 + i {
                break;
            }
        }
        chosen[i] += 1;
        for j in (i + 1)..n1 {
            chosen[j] = chosen[j - 1] + 1;
        }
    }
}

fn stacked_matrix(
    d1: &[PersistenceDiagram],
    d2: &[PersistenceDiagram],
    metric: &DiagramMetric,
) -> Result<(Matrix, Vec<usize>, Vec<usize>)> {
    let all: Vec<&PersistenceDiagram> = d1.iter().chain(d2).collect();
    let n = all.len();
    let mut dm = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = metric.distance(all[i], all[j])?;
            dm[(i, j)] = v;
            dm[(j, i)] = v;
        }
    }
    Ok((dm, (0..d1.len()).collect(), (d1.len()..n).collect()))
}

pub fn permutation_test(
    d1: &[PersistenceDiagram],
    d2: &[PersistenceDiagram],
    metric: &DiagramMetric,
    n_shuffles: usize,
    seed: u64,
) -> Result<TestResult> {
    let (dm, g1, g2) = stacked_matrix(d1, d2, metric)?;
    let mut r = permutation_test_matrix(&dm, &g1, &g2, n_shuffles, seed)?;
    r.metric = metric.to_string();
    Ok(r)
}

pub fn exact_permutation_test(
    d1: &[PersistenceDiagram],
    d2: &[PersistenceDiagram],
    metric: &DiagramMetric,
) -> Result<TestResult> {
    exact_permutation_test_with_cap(d1, d2, metric, DEFAULT_PARTITION_CAP)
}

pub fn exact_permutation_test_with_cap(
    d1: &[PersistenceDiagram],
    d2: &[PersistenceDiagram],
    metric: &DiagramMetric,
    cap: u128,
) -> Result<TestResult> {
    let (dm, g1, g2) = stacked_matrix(d1, d2, metric)?;
    let mut r = exact_permutation_test_matrix(&dm, &g1, &g2, cap)?;
    r.metric = metric.to_string();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Points 0..a carry diagram A, the rest diagram B, `d(A, B) = 1`.
    fn two_block(a: usize, b: usize) -> Matrix {
        Matrix::from_fn(
            a + b,
            a + b,
            |i, j| if (i < a) == (j < a) { 0.0 } else { 1.0 },
        )
    }

    #[test]
    fn loss_arithmetic() {
        let dm = Matrix::from_rows(&[
            vec![0.0, 2.0, 5.0],
            vec![2.0, 0.0, 7.0],
            vec![5.0, 7.0, 0.0],
        ])
        .unwrap();
        assert_eq!(loss_from_matrix(&dm, &[0, 1], &[2]), 1.0);
        assert_eq!(loss_from_matrix(&dm, &[2], &[1, 0]), 1.0);
        assert_eq!(loss_from_matrix(&two_block(2, 3), &[0, 1], &[2, 3, 4]), 0.0);
    }

    #[test]
    fn exact_two_against_three() {
        let r = exact_permutation_test_matrix(&two_block(2, 3), &[0, 1], &[2, 3, 4], 1000).unwrap();
        assert_eq!((r.total, r.count_leq), (10, 1));
        assert_eq!(r.p_value, 0.1);
    }

    #[test]
    fn randomized_separated_groups() {
        for n in [1usize, 7, 100] {
            let r = permutation_test_matrix(&two_block(2, 3), &[0, 1], &[2, 3, 4], n, 9).unwrap();
            assert_eq!(r.count_leq, 0);
            assert_eq!(r.p_value, 1.0 / (n as f64 + 1.0));
        }
        let r = permutation_test_matrix(&two_block(3, 3), &[0, 1, 2], &[3, 4, 5], 50, 1).unwrap();
        assert_eq!(r.count_leq, 0);
    }

    #[test]
    fn randomized_is_deterministic_per_seed() {
        let dm = Matrix::from_fn(6, 6, |i, j| ((i as f64) - (j as f64)).abs().sqrt());
        let a = permutation_test_matrix(&dm, &[0, 2, 4], &[1, 3, 5], 40, 3).unwrap();
        let b = permutation_test_matrix(&dm, &[0, 2, 4], &[1, 3, 5], 40, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_counts_match_binomial() {
        let dm = Matrix::from_fn(8, 8, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 * (i != j) as u8 as f64
        });
        let dm = Matrix::from_fn(8, 8, |i, j| dm[(i, j)].max(dm[(j, i)]));
        let r = exact_permutation_test_matrix(&dm, &[0, 1, 2], &[3, 4, 5, 6, 7], 1000).unwrap();
        assert_eq!(r.total, 56);
        assert!(r.count_leq >= 1);
    }

    #[test]
    fn errors() {
        let dm = two_block(1, 1);
        assert!(permutation_test_matrix(&dm, &[0], &[1], 10, 0).is_err());
        assert!(permutation_test_matrix(&dm, &[0], &[], 10, 0).is_err());
        assert!(permutation_test_matrix(&two_block(2, 2), &[0, 1], &[1, 2], 10, 0).is_err());
        assert!(matches!(
            exact_permutation_test_matrix(&two_block(2, 3), &[0, 1], &[2, 3, 4], 9),
            Err(Error::PartitionCap {
                partitions: 10,
                cap: 9
            })
        ));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(11, 5), 462);
        assert_eq!(binomial(8, 3), 56);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(300, 150), u128::MAX);
    }

    #[test]
    fn csv_row() {
        let r = exact_permutation_test_matrix(&two_block(2, 3), &[0, 1], &[2, 3, 4], 1000).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "mode,metric,n1,n2,observed_loss,count,total,p_value,seed\n\
             exact,precomputed,2,3,0,1,10,1.0000000000000001e-1,\n"
        );
    }
}
