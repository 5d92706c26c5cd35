//! Wasserstein and bottleneck distances between persistence diagrams.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{has_perfect_matching, min_cost_assignment};
use crate::error::{Error, Result};
use crate::io::LabeledMatrix;
use crate::linalg::Matrix;
use crate::persistence::PersistenceDiagram;

/// Norm on the (birth, death) plane used to price a single match.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundMetric {
    /// `L_q` with the same `q` as the outer Wasserstein exponent.
    #[default]
    Lq,
    LInf,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiagramMetric {
    Bottleneck,
    Wasserstein { q: f64, ground: GroundMetric },
}

impl Default for DiagramMetric {
    fn default() -> Self {
        DiagramMetric::Wasserstein {
            q: 2.0,
            ground: GroundMetric::Lq,
        }
    }
}

impl fmt::Display for DiagramMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagramMetric::Bottleneck => write!(f, "bottleneck"),
            DiagramMetric::Wasserstein { q, ground } => {
                let g = match ground {
                    GroundMetric::Lq => "lq",
                    GroundMetric::LInf => "linf",
                };
                write!(f, "wasserstein(q={q},ground={g})")
            }
        }
    }
}

impl DiagramMetric {
    pub fn distance(&self, d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Result<f64> {
        match *self {
            DiagramMetric::Bottleneck => bottleneck(d1, d2),
            DiagramMetric::Wasserstein { q, ground } => wasserstein(d1, d2, q, ground),
        }
    }
}

/// What to do with infinite-death classes before measuring distances.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum EssentialPolicy {
    #[default]
    Exclude,
    /// Replace infinite deaths with this value.
    Cap(f64),
}

impl EssentialPolicy {
    pub fn apply(&self, d: &PersistenceDiagram) -> PersistenceDiagram {
        match *self {
            EssentialPolicy::Exclude => d.finite(),
            EssentialPolicy::Cap(c) => d.capped(c),
        }
    }
}

/// Nearest diagonal point of `(b, d)`.
pub fn diagonal_projection((b, d): (f64, f64)) -> (f64, f64) {
    let m = 0.5 * (b + d);
    (m, m)
}

pub fn ground_distance(x: (f64, f64), y: (f64, f64), ground: GroundMetric, q: f64) -> f64 {
    let (dx, dy) = ((x.0 - y.0).abs(), (x.1 - y.1).abs());
    match ground {
        GroundMetric::LInf => dx.max(dy),
        GroundMetric::Lq if q == 1.0 => dx + dy,
        GroundMetric::Lq if q == 2.0 => dx.hypot(dy),
        GroundMetric::Lq => (dx.powf(q) + dy.powf(q)).powf(1.0 / q),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Point(usize),
    /// Diagonal projection of the given point of the opposite diagram.
    Diagonal(usize),
}

/// Diagonal-augmented square matching between two diagrams.
#[derive(Clone, Debug)]
pub struct MatchingProblem {
    /// Points of the first diagram, then projections of the second's points.
    pub left: Vec<Slot>,
    /// Points of the second diagram, then projections of the first's points.
    pub right: Vec<Slot>,
    /// Ground distances; zero between two diagonal slots.
    pub cost: Matrix,
    pub ground: GroundMetric,
    pub q: f64,
}

impl MatchingProblem {
    pub fn new(p1: &[(f64, f64)], p2: &[(f64, f64)], ground: GroundMetric, q: f64) -> Self {
        let (n1, n2) = (p1.len(), p2.len());
        let n = n1 + n2;
        let left: Vec<Slot> = (0..n1)
            .map(Slot::Point)
            .chain((0..n2).map(Slot::Diagonal))
            .collect();
        let right: Vec<Slot> = (0..n2)
            .map(Slot::Point)
            .chain((0..n1).map(Slot::Diagonal))
            .collect();
        let locate_left = |s: Slot| match s {
            Slot::Point(i) => p1[i],
            Slot::Diagonal(j) => diagonal_projection(p2[j]),
        };
        let locate_right = |s: Slot| match s {
            Slot::Point(j) => p2[j],
            Slot::Diagonal(i) => diagonal_projection(p1[i]),
        };
        let cost = Matrix::from_fn(n, n, |i, j| match (left[i], right[j]) {
            (Slot::Diagonal(_), Slot::Diagonal(_)) => 0.0,
            (a, b) => ground_distance(locate_left(a), locate_right(b), ground, q),
        });
        MatchingProblem {
            left,
            right,
            cost,
            ground,
            q,
        }
    }

    pub fn size(&self) -> usize {
        self.left.len()
    }
}

fn points_of(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let mut dims = d1.dims();
    dims.extend(d2.dims());
    if dims.len() > 1 {
        return Err(Error::MixedDimensions(dims.into_iter().collect()));
    }
    for p in d1.pairs.iter().chain(&d2.pairs) {
        if p.death.is_infinite() {
            return Err(Error::InfiniteDeath);
        }
        if p.birth.is_nan() || p.death.is_nan() || p.birth.is_infinite() {
            return Err(Error::invalid("diagram point is not finite"));
        }
    }
    Ok((d1.points(), d2.points()))
}

/// `q`-Wasserstein distance on finite diagrams of one homology dimension.
pub fn wasserstein(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    q: f64,
    ground: GroundMetric,
) -> Result<f64> {
    if !(q >= 1.0) || q.is_infinite() {
        return Err(Error::invalid(format!(
            "wasserstein exponent must be in [1, inf), got {q}"
        )));
    }
    let (mut p1, mut p2) = points_of(d1, d2)?;
    // canonical orientation: ties between optimal matchings can otherwise
    // round differently in the two argument orders
    let key = |p: &mut Vec<(f64, f64)>| {
        p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    };
    key(&mut p1);
    key(&mut p2);
    let ordered = |a: &[(f64, f64)], b: &[(f64, f64)]| {
        a.len().cmp(&b.len()).then_with(|| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    };
    if ordered(&p1, &p2).is_gt() {
        std::mem::swap(&mut p1, &mut p2);
    }
    let problem = MatchingProblem::new(&p1, &p2, ground, q);
    let powered = Matrix::from_fn(problem.size(), problem.size(), |i, j| {
        let c = problem.cost[(i, j)];
        if q == 1.0 {
            c
        } else {
            c.powf(q)
        }
    });
    let assignment = min_cost_assignment(&powered);
    // summation order fixed by sorting so equal matchings give bit-equal sums
    let mut terms: Vec<f64> = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| powered[(i, j)])
        .collect();
    terms.sort_by(f64::total_cmp);
    let total: f64 = terms.iter().sum();
    Ok(if q == 1.0 { total } else { total.powf(1.0 / q) })
}

/// Bottleneck distance: smallest `t` admitting a matching with every `L∞`
/// cost at most `t`.
pub fn bottleneck(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Result<f64> {
    let (p1, p2) = points_of(d1, d2)?;
    let problem = MatchingProblem::new(&p1, &p2, GroundMetric::LInf, 1.0);
    let n = problem.size();
    if n == 0 {
        return Ok(0.0);
    }
    let mut candidates: Vec<f64> = problem.cost.as_slice().to_vec();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let feasible = |t: f64| has_perfect_matching(n, |i, j| problem.cost[(i, j)] <= t);
    // the largest candidate is always feasible
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo])
}

/// Symmetric matrix of pairwise diagram distances, rows in input order.
pub fn distance_matrix(
    diagrams: &[(String, PersistenceDiagram)],
    metric: &DiagramMetric,
    essentials: EssentialPolicy,
) -> Result<LabeledMatrix> {
    let n = diagrams.len();
    if n < 2 {
        return Err(Error::invalid(
            "a distance matrix needs at least two diagrams",
        ));
    }
    let prepared: Vec<PersistenceDiagram> =
        diagrams.iter().map(|(_, d)| essentials.apply(d)).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| metric.distance(&prepared[i], &prepared[j]))
        .collect::<Result<_>>()?;
    let mut m = Matrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Ok(LabeledMatrix {
        labels: diagrams.iter().map(|(l, _)| l.clone()).collect(),
        values: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dg(points: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::from_points(1, points)
    }

    const L2: GroundMetric = GroundMetric::Lq;

    #[test]
    fn identical_diagrams_are_at_zero() {
        let d = dg(&[(0.1, 0.5), (0.2, 0.9)]);
        assert_eq!(wasserstein(&d, &d, 2.0, L2).unwrap(), 0.0);
        assert_eq!(bottleneck(&d, &d).unwrap(), 0.0);
    }

    #[test]
    fn single_point_against_empty() {
        let d = dg(&[(0.0, 2.0)]);
        let e = dg(&[]);
        assert!((wasserstein(&d, &e, 2.0, L2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(bottleneck(&d, &e).unwrap(), 1.0);
    }

    #[test]
    fn direct_match_beats_diagonal() {
        let a = dg(&[(0.0, 2.0)]);
        assert!((wasserstein(&a, &dg(&[(0.0, 3.0)]), 2.0, L2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(bottleneck(&a, &dg(&[(0.0, 2.5)])).unwrap(), 0.5);
    }

    #[test]
    fn both_empty() {
        assert_eq!(wasserstein(&dg(&[]), &dg(&[]), 2.0, L2).unwrap(), 0.0);
        assert_eq!(bottleneck(&dg(&[]), &dg(&[])).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = dg(&[(0.0, 1.0)]);
        assert!(wasserstein(&d, &d, 0.5, L2).is_err());
        let inf = dg(&[(0.0, f64::INFINITY)]);
        assert!(matches!(
            wasserstein(&inf, &d, 2.0, L2),
            Err(Error::InfiniteDeath)
        ));
        assert!(matches!(bottleneck(&d, &inf), Err(Error::InfiniteDeath)));
        let d0 = PersistenceDiagram::from_points(0, &[(0.0, 1.0)]);
        assert!(matches!(
            bottleneck(&d, &d0),
            Err(Error::MixedDimensions(_))
        ));
    }

    #[test]
    fn augmented_problem_shape() {
        let p = MatchingProblem::new(&[(0.0, 1.0), (0.0, 2.0)], &[(1.0, 3.0)], L2, 2.0);
        assert_eq!(p.size(), 3);
        assert_eq!(p.left[2], Slot::Diagonal(0));
        assert_eq!(p.right[1], Slot::Diagonal(0));
        assert_eq!(p.cost[(2, 1)], 0.0);
        assert_eq!(p.cost[(2, 2)], 0.0);
    }

    #[test]
    fn linf_ground_wasserstein() {
        let d = dg(&[(0.0, 2.0)]);
        let e = dg(&[]);
        assert_eq!(wasserstein(&d, &e, 1.0, GroundMetric::LInf).unwrap(), 1.0);
        assert_eq!(wasserstein(&d, &e, 1.0, GroundMetric::Lq).unwrap(), 2.0);
    }

    #[test]
    fn distance_matrix_is_symmetric_and_labelled() {
        let ds = vec![
            ("a".to_owned(), dg(&[(0.0, 1.0)])),
            ("b".to_owned(), dg(&[(0.0, 3.0)])),
            ("c".to_owned(), dg(&[])),
        ];
        let m = distance_matrix(&ds, &DiagramMetric::default(), EssentialPolicy::Exclude).unwrap();
        assert_eq!(m.labels, vec!["a", "b", "c"]);
        for i in 0..3 {
            assert_eq!(m.values[(i, i)], 0.0);
            for j in 0..3 {
                assert_eq!(m.values[(i, j)], m.values[(j, i)]);
            }
        }
        let direct = wasserstein(&ds[0].1, &ds[1].1, 2.0, L2).unwrap();
        assert_eq!(m.values[(0, 1)], direct);
        assert!(distance_matrix(
            &ds[..1],
            &DiagramMetric::Bottleneck,
            EssentialPolicy::Exclude
        )
        .is_err());
    }

    #[test]
    fn essential_policy() {
        let ds = vec![
            ("a".to_owned(), dg(&[(0.0, f64::INFINITY)])),
            ("b".to_owned(), dg(&[])),
        ];
        let ex =
            distance_matrix(&ds, &DiagramMetric::Bottleneck, EssentialPolicy::Exclude).unwrap();
        assert_eq!(ex.values[(0, 1)], 0.0);
        let cap =
            distance_matrix(&ds, &DiagramMetric::Bottleneck, EssentialPolicy::Cap(4.0)).unwrap();
        assert_eq!(cap.values[(0, 1)], 2.0);
    }
}
