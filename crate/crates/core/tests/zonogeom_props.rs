//! Randomized property suite for the set-arithmetic layer, checked
//! against brute-force oracles (vertex enumeration, rejection sampling).

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use gpzkf::zonogeom::{BoxSet, Strip, Zonotope};

const CASES: u32 = 128;

fn zonotope_strategy(
    dim: std::ops::RangeInclusive<usize>,
    gens: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Zonotope<f64>> {
    (dim, gens).prop_flat_map(|(n, k)| {
        (
            proptest::collection::vec(-5.0f64..5.0, n),
            proptest::collection::vec(-3.0f64..3.0, n * k),
        )
            .prop_map(move |(c, g)| {
                Zonotope::new(
                    DVector::from_vec(c),
                    DMatrix::from_vec(n, k, g),
                )
                .unwrap()
            })
    })
}

fn point_of(z: &Zonotope<f64>, xi: &DVector<f64>) -> DVector<f64> {
    z.center() + z.generators() * xi
}

/// All 2^k sign assignments; exact vertex candidates of the zonotope.
fn sign_points(z: &Zonotope<f64>) -> Vec<DVector<f64>> {
    let k = z.num_generators();
    (0..1usize << k)
        .map(|mask| {
            let xi = DVector::from_fn(k, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 });
            point_of(z, &xi)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn constructed_points_are_contained(
        z in zonotope_strategy(1..=3, 0..=5),
        raw in proptest::collection::vec(-1.0f64..=1.0, 5),
    ) {
        let xi = DVector::from_iterator(z.num_generators(), raw.into_iter().take(z.num_generators()));
        let p = point_of(&z, &xi);
        prop_assert!(z.contains_point(&p).unwrap());
    }

    #[test]
    fn points_beyond_the_hull_are_rejected(
        z in zonotope_strategy(1..=3, 0..=5),
        axis in 0usize..3,
        margin in 0.01f64..10.0,
    ) {
        let j = axis % z.dim();
        let hull = z.interval_hull();
        let mut p = z.center().clone();
        p[j] += hull.radius()[j] + margin;
        prop_assert!(!z.contains_point(&p).unwrap());
    }

    #[test]
    fn interval_hull_matches_vertex_enumeration(
        z in zonotope_strategy(1..=3, 0..=8),
    ) {
        let hull = z.interval_hull();
        let vertices = sign_points(&z);
        for j in 0..z.dim() {
            let attained = vertices
                .iter()
                .map(|v| (v[j] - z.center()[j]).abs())
                .fold(0.0f64, f64::max);
            // the row-abs-sum radius is attained by the matching sign vertex
            prop_assert!((hull.radius()[j] - attained).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_map_commutes_with_point_evaluation(
        z in zonotope_strategy(2..=2, 0..=4),
        raw_a in proptest::collection::vec(-2.0f64..2.0, 4),
        raw_b in proptest::collection::vec(-2.0f64..2.0, 2),
        raw_xi in proptest::collection::vec(-1.0f64..=1.0, 4),
    ) {
        let a = DMatrix::from_vec(2, 2, raw_a);
        let b = DVector::from_vec(raw_b);
        let xi = DVector::from_iterator(z.num_generators(), raw_xi.into_iter().take(z.num_generators()));
        let mapped = z.affine_map(&a, &b).unwrap();
        let direct = &a * point_of(&z, &xi) + &b;
        let via_image = point_of(&mapped, &xi);
        prop_assert!((direct - &via_image).amax() < 1e-10);
        prop_assert!(mapped.contains_point(&via_image).unwrap());
    }

    #[test]
    fn minkowski_sum_contains_pointwise_sums(
        a in zonotope_strategy(2..=2, 0..=4),
        b in zonotope_strategy(2..=2, 0..=4),
        raw in proptest::collection::vec(-1.0f64..=1.0, 8),
    ) {
        let xa = DVector::from_iterator(a.num_generators(), raw.iter().copied().take(a.num_generators()));
        let xb = DVector::from_iterator(b.num_generators(), raw.iter().rev().copied().take(b.num_generators()));
        let sum = a.minkowski_sum(&b).unwrap();
        let p = point_of(&a, &xa) + point_of(&b, &xb);
        prop_assert!(sum.contains_point(&p).unwrap());
    }

    #[test]
    fn order_reduction_keeps_every_vertex(
        z in zonotope_strategy(2..=3, 4..=8),
        slack in 0usize..=3,
    ) {
        let cap = z.dim() + slack;
        let reduced = z.reduce_order(cap).unwrap();
        prop_assert!(reduced.num_generators() <= cap);
        for v in sign_points(&z) {
            prop_assert!(reduced.contains_point(&v).unwrap());
        }
    }

    #[test]
    fn strip_intersection_is_an_outer_approximation(
        z in zonotope_strategy(2..=2, 1..=4),
        raw_map in proptest::collection::vec(-2.0f64..2.0, 2),
        offset_shift in -0.5f64..0.5,
        radius in 0.05f64..2.0,
    ) {
        let map = DMatrix::from_vec(1, 2, raw_map);
        // aim the strip at the center so the intersection is non-empty
        let offset = DVector::from_element(1, (&map * z.center())[0] + offset_shift);
        let bound = BoxSet::zero_centered(DVector::from_element(1, radius)).unwrap();
        let strip = Strip::new(map, offset, bound).unwrap();
        let result = z.intersect_strip(&strip).unwrap();

        for v in sign_points(&z) {
            if strip.contains(&v) {
                prop_assert!(result.zonotope.contains_point(&v).unwrap());
            }
        }
        // and a fine grid of interior points
        let k = z.num_generators();
        for mask in 0..1usize << k {
            let xi = DVector::from_fn(k, |i, _| {
                if mask >> i & 1 == 1 { 0.5 } else { -0.5 }
            });
            let p = point_of(&z, &xi);
            if strip.contains(&p) {
                prop_assert!(result.zonotope.contains_point(&p).unwrap());
            }
        }
    }

    #[test]
    fn norm_bound_dominates_every_vertex(
        z in zonotope_strategy(2..=3, 0..=6),
        raw in proptest::collection::vec(-5.0f64..5.0, 3),
    ) {
        let xbar = DVector::from_iterator(z.dim(), raw.into_iter().take(z.dim()));
        let bound = z.norm_from(&xbar);
        for v in sign_points(&z) {
            prop_assert!((v - &xbar).norm() <= bound + 1e-12);
        }
    }

    #[test]
    fn box_zonotope_round_trip(
        raw_c in proptest::collection::vec(-5.0f64..5.0, 3),
        raw_r in proptest::collection::vec(0.0f64..3.0, 3),
    ) {
        let b = BoxSet::new(DVector::from_vec(raw_c), DVector::from_vec(raw_r)).unwrap();
        let z = b.to_zonotope();
        let hull = z.interval_hull();
        prop_assert!((hull.center() - b.center()).amax() < 1e-15);
        prop_assert!((hull.radius() - b.radius()).amax() < 1e-15);
    }
}
