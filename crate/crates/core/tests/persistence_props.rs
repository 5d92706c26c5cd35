use std::collections::HashSet;

use langshape::cloud::PointCloud;
use langshape::persistence::{
    chain_boundary, essential_representative, pairwise_distances, reduce_with,
    representative_cycle, rips_filtration, Filtration, PersistenceDiagram, ReductionOptions,
    Simplex,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cloud(coords: &[(f64, f64)]) -> PointCloud {
    PointCloud::from_coords(coords.iter().map(|&(x, y)| vec![x, y]).collect()).unwrap()
}

fn continuous_cloud() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..=12)
}

/// Integer coordinates, so distances tie and points may coincide.
fn grid_cloud() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((0u8..3, 0u8..3), 2..=8)
        .prop_map(|v| v.into_iter().map(|(x, y)| (x as f64, y as f64)).collect())
}

fn rips(coords: &[(f64, f64)]) -> Filtration {
    rips_filtration(&pairwise_distances(&cloud(coords)), 2, f64::INFINITY).unwrap()
}

fn options() -> Vec<ReductionOptions> {
    let mut out = Vec::new();
    for clearing in [false, true] {
        for track_cycles in [false, true] {
            out.push(ReductionOptions {
                clearing,
                track_cycles,
            });
        }
    }
    out
}

fn multiset(d: &PersistenceDiagram) -> Vec<(usize, f64, f64)> {
    let mut v: Vec<_> = d.pairs.iter().map(|p| (p.dim, p.birth, p.death)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

proptest! {
    #[test]
    fn double_boundary_vanishes(verts in proptest::collection::btree_set(0usize..20, 1..=6)) {
        let s = Simplex::new(verts.into_iter().collect()).unwrap();
        prop_assert!(chain_boundary(&s.boundary()).is_empty());
    }

    #[test]
    fn lowest_rows_are_unique(coords in continuous_cloud()) {
        let f = rips(&coords);
        for opts in options() {
            let r = reduce_with(&f, opts);
            let mut seen = HashSet::new();
            for j in 0..f.len() {
                if let Some(low) = r.low(j) {
                    prop_assert!(seen.insert(low), "low {} repeated", low);
                }
            }
        }
    }

    #[test]
    fn zeroth_diagram_counts_points(coords in continuous_cloud()) {
        let f = rips(&coords);
        let d0 = reduce_with(&f, ReductionOptions::default()).diagram(0).unwrap();
        prop_assert_eq!(d0.len(), coords.len());
        prop_assert_eq!(d0.pairs.iter().filter(|p| p.is_essential()).count(), 1);
    }

    #[test]
    fn pair_values_come_from_simplices(coords in continuous_cloud()) {
        let f = rips(&coords);
        let r = reduce_with(&f, ReductionOptions { clearing: true, track_cycles: false });
        for p in 0..=1 {
            for pair in r.diagram(p).unwrap().pairs {
                let b = pair.birth_simplex.unwrap();
                prop_assert_eq!(f.simplex(b).dim(), p);
                prop_assert_eq!(f.value(b), pair.birth);
                if let Some(d) = pair.death_simplex {
                    prop_assert_eq!(f.simplex(d).dim(), p + 1);
                    prop_assert_eq!(f.value(d), pair.death);
                }
            }
        }
        // the complex is built to the full scale: no dimension-1 class survives
        prop_assert!(r.diagram(1).unwrap().pairs.iter().all(|p| !p.is_essential()));
    }

    #[test]
    fn representatives_are_cycles(coords in continuous_cloud(), cut in 0.2f64..1.5) {
        // a cut-off scale leaves some loops essential
        let f = rips_filtration(&pairwise_distances(&cloud(&coords)), 2, cut).unwrap();
        let r = reduce_with(&f, ReductionOptions { clearing: false, track_cycles: true });
        for pair in r.diagram(1).unwrap().pairs {
            let c = if pair.is_essential() {
                essential_representative(&r, &pair).unwrap()
            } else {
                representative_cycle(&r, &pair).unwrap()
            };
            prop_assert!(!c.simplices.is_empty());
            prop_assert!(c.is_cycle());
            prop_assert!(chain_boundary(&c.simplices).is_empty());
            prop_assert!(c.simplices.iter().all(|s| s.dim() == 1));
        }
    }

    #[test]
    fn tie_order_does_not_change_diagrams(coords in grid_cloud(), seed in any::<u64>()) {
        let f = rips(&coords);
        let reference = reduce_with(&f, ReductionOptions::default()).diagrams_through(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let mut entries: Vec<(usize, f64, Vec<usize>)> =
                f.iter().map(|(s, t)| (s.dim(), t, s.vertices().to_vec())).collect();
            // shuffle, then restore (value, dimension) order: ties land in random order
            entries.shuffle(&mut rng);
            entries.sort_by(|a, b| (a.1, a.0).partial_cmp(&(b.1, b.0)).unwrap());
            let g = Filtration::from_ordered(entries.into_iter().map(|(_, t, v)| (v, t)).collect()).unwrap();
            for opts in options() {
                let d = reduce_with(&g, opts).diagrams_through(1).unwrap();
                prop_assert_eq!(multiset(&d), multiset(&reference));
            }
        }
    }
}
