use langshape::cloud::PointCloud;
use langshape::metrics::{DiagramMetric, GroundMetric};
use langshape::persistence::{diagram, pairwise_distances, rips_filtration, PersistenceDiagram};
use proptest::prelude::*;

fn points() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((0.0f64..3.0, 0.01f64..2.0), 0..=6)
        .prop_map(|v| v.into_iter().map(|(b, l)| (b, b + l)).collect())
}

fn metrics() -> Vec<DiagramMetric> {
    let mut out = vec![DiagramMetric::Bottleneck];
    for q in [1.0, 2.0, 3.5] {
        for ground in [GroundMetric::Lq, GroundMetric::LInf] {
            out.push(DiagramMetric::Wasserstein { q, ground });
        }
    }
    out
}

fn dgm(p: &[(f64, f64)]) -> PersistenceDiagram {
    PersistenceDiagram::from_points(1, p)
}

/// `(min over bijections Σ ‖x − φ(x)‖₂^q)^{1/q}` between equal-size clouds.
fn cloud_wasserstein(a: &[(f64, f64)], b: &[(f64, f64)], q: f64) -> f64 {
    fn go(
        i: usize,
        a: &[(f64, f64)],
        b: &[(f64, f64)],
        used: &mut [bool],
        acc: f64,
        q: f64,
        best: &mut f64,
    ) {
        if i == a.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                let d = ((a[i].0 - b[j].0).powi(2) + (a[i].1 - b[j].1).powi(2)).sqrt();
                go(i + 1, a, b, used, acc + d.powf(q), q, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, a, b, &mut vec![false; b.len()], 0.0, q, &mut best);
    best.powf(1.0 / q)
}

/// Finite dimension-`p` diagram of the Rips filtration, in radius units.
fn rips_diagram(coords: &[(f64, f64)], p: usize) -> PersistenceDiagram {
    let cloud = PointCloud::from_coords(coords.iter().map(|&(x, y)| vec![x, y]).collect()).unwrap();
    let f = rips_filtration(&pairwise_distances(&cloud), 2, f64::INFINITY).unwrap();
    diagram(&f, p).unwrap().finite().to_radius_scale()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metric_axioms(a in points(), b in points(), c in points(), rot in 0usize..6) {
        let (da, db, dc) = (dgm(&a), dgm(&b), dgm(&c));
        // the same multiset listed in another order
        let mut a2 = a.clone();
        if !a2.is_empty() {
            let k = rot % a2.len();
            a2.rotate_left(k);
        }
        let da2 = dgm(&a2);
        for m in metrics() {
            let ab = m.distance(&da, &db).unwrap();
            let ba = m.distance(&db, &da).unwrap();
            let bc = m.distance(&db, &dc).unwrap();
            let ac = m.distance(&da, &dc).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, ba, "{} not symmetric", m);
            prop_assert!(ac <= ab + bc + 1e-9, "{}: {} > {} + {}", m, ac, ab, bc);
            prop_assert_eq!(m.distance(&da, &da).unwrap(), 0.0);
            prop_assert_eq!(m.distance(&da, &da2).unwrap(), 0.0);
            if ab == 0.0 {
                let mut x = a.clone();
                let mut y = b.clone();
                x.sort_by(|p, q| p.partial_cmp(q).unwrap());
                y.sort_by(|p, q| p.partial_cmp(q).unwrap());
                prop_assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn wasserstein_stability(
        (a, b) in (2usize..=6).prop_flat_map(|m| {
            let cloud = proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), m);
            (cloud.clone(), cloud)
        }),
        shrink in 0.0f64..1.0,
    ) {
        // pull b towards a so that near and far clouds are both exercised
        let b: Vec<(f64, f64)> = a
            .iter()
            .zip(&b)
            .map(|(p, q)| (p.0 + shrink * (q.0 - p.0), p.1 + shrink * (q.1 - p.1)))
            .collect();
        let m = a.len() as f64;
        for q in [1.0, 2.0] {
            let w = cloud_wasserstein(&a, &b, q);
            let bound = 2f64.powf(m / (q + 1.0)) * w + 1e-9;
            let metric = DiagramMetric::Wasserstein { q, ground: GroundMetric::Lq };
            for p in 0..=1 {
                let d = metric.distance(&rips_diagram(&a, p), &rips_diagram(&b, p)).unwrap();
                prop_assert!(d <= bound, "q={} p={}: {} > {}", q, p, d, bound);
            }
        }
    }
}
