//! Property tests for the algebraic backbone: extended-real arithmetic,
//! convex-combination axioms, entropy separation, and text round-trips.

use entroad::convex::{BoundingBox, ConvexSpace, State};
use entroad::system::{
    coarse_grain, measurement_entropy, sum_systems, tank_bath_limit_gap, StochasticMap,
    ThermostaticSystem,
};
use entroad::xreal::{ExtReal, Finite, NegInf, PosInf};
use proptest::prelude::*;

fn ext_real() -> impl Strategy<Value = ExtReal> {
    prop_oneof![
        2 => Just(NegInf),
        2 => Just(PosInf),
        6 => (-1e6f64..1e6).prop_map(Finite),
    ]
}

fn close(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    match (a, b) {
        (Finite(x), Finite(y)) => (x - y).abs() <= tol,
        (x, y) => x == y,
    }
}

proptest! {
    #[test]
    fn combine_is_symmetric(a in ext_real(), b in ext_real(), lambda in 0.0f64..=1.0) {
        let lhs = ExtReal::combine(lambda, a, b).unwrap();
        let rhs = ExtReal::combine(1.0 - lambda, b, a).unwrap();
        prop_assert!(close(lhs, rhs, 1e-9));
    }

    #[test]
    fn combine_is_idempotent(a in ext_real(), lambda in 0.0f64..=1.0) {
        prop_assert_eq!(ExtReal::combine(lambda, a, a).unwrap(), a);
    }

    #[test]
    fn combine_exchange_law(
        x in ext_real(),
        y in ext_real(),
        z in ext_real(),
        lambda in 0.0f64..=1.0,
        mu in 0.0f64..=1.0,
    ) {
        let lambda_p = lambda * mu;
        prop_assume!((1.0 - lambda_p).abs() > 1e-9);
        let mu_p = 1.0 - (1.0 - lambda) / (1.0 - lambda_p);
        prop_assume!((0.0..=1.0).contains(&mu_p));
        let lhs = ExtReal::combine(lambda, ExtReal::combine(mu, x, y).unwrap(), z).unwrap();
        let rhs = ExtReal::combine(lambda_p, x, ExtReal::combine(mu_p, y, z).unwrap()).unwrap();
        prop_assert!(close(lhs, rhs, 1e-6), "{lhs:?} vs {rhs:?}");
    }

    #[test]
    fn addition_is_a_commutative_monoid(a in ext_real(), b in ext_real(), c in ext_real()) {
        prop_assert_eq!(a + b, b + a);
        prop_assert!(close((a + b) + c, a + (b + c), 1e-6));
        prop_assert_eq!(a + Finite(0.0), a);
    }

    #[test]
    fn sup_distributes_over_union(xs in prop::collection::vec(ext_real(), 0..8),
                                  ys in prop::collection::vec(ext_real(), 0..8)) {
        let union = ExtReal::sup(xs.iter().chain(&ys).copied());
        let split = ExtReal::sup([
            ExtReal::sup(xs.iter().copied()),
            ExtReal::sup(ys.iter().copied()),
        ]);
        prop_assert_eq!(union, split);
    }

    #[test]
    fn text_round_trips(v in ext_real()) {
        let text = v.to_string();
        let back: ExtReal = text.parse().unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn membership_survives_combination(seed in 0u64..4096, lambda in 0.0f64..=1.0) {
        // Convexity of every representable set, driven through sampling.
        let spaces = [
            ConvexSpace::Simplex { n: 2 },
            ConvexSpace::Orthant { n: 2 },
            ConvexSpace::product(ConvexSpace::Orthant { n: 1 }, ConvexSpace::Simplex { n: 1 }),
        ];
        let space = &spaces[(seed % 3) as usize];
        let region = BoundingBox::cube(space.ambient_dim(), 1e-3, 1.0);
        let pts = space.sample(&region, seed, 2).unwrap();
        let mid = space.combine(lambda, &pts[0], &pts[1]).unwrap();
        prop_assert!(space.contains(&mid).unwrap());
    }

    #[test]
    fn product_membership_is_conjunction(a in 0.01f64..2.0, p in 0.0f64..1.0) {
        let space = ConvexSpace::product(
            ConvexSpace::Orthant { n: 1 },
            ConvexSpace::Simplex { n: 1 },
        );
        let x = State::new(vec![a, p, 1.0 - p]);
        prop_assert!(space.contains(&x).unwrap());
        let bad = State::new(vec![-a, p, 1.0 - p]);
        prop_assert!(!space.contains(&bad).unwrap());
    }

    #[test]
    fn sum_entropy_separates_exactly(u1 in 0.1f64..5.0, u2 in 0.1f64..5.0,
                                     c1 in 0.1f64..4.0, c2 in 0.1f64..4.0) {
        let a = ThermostaticSystem::tank("a", c1);
        let b = ThermostaticSystem::tank("b", c2);
        let joint = sum_systems(&a, &b);
        let lhs = joint.evaluate(&State::new(vec![u1, u2])).unwrap();
        let rhs = a.evaluate(&State::new(vec![u1])).unwrap()
            + b.evaluate(&State::new(vec![u2])).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn shannon_peaks_at_uniform(raw in prop::collection::vec(0.01f64..1.0, 3)) {
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let sys = ThermostaticSystem::shannon("p", 2);
        let at_p = sys.evaluate(&State::new(p)).unwrap();
        let at_uniform = sys
            .evaluate(&State::new(vec![1.0 / 3.0; 3]))
            .unwrap();
        prop_assert!(at_uniform >= at_p);
    }

    #[test]
    fn coarse_graining_never_raises_the_measurement_entropy(
        raw in prop::collection::vec(0.01f64..1.0, 3),
        merge in 0usize..3,
    ) {
        let total: f64 = raw.iter().sum();
        let p = State::new(raw.iter().map(|v| v / total).collect());
        let e = StochasticMap::identity(2);
        let m: Vec<usize> = (0..3).map(|i| if i == merge { 0 } else { i.min(1) }).collect();
        let f = coarse_grain(&e, &m).unwrap();
        let base = measurement_entropy(std::slice::from_ref(&e), &p).unwrap();
        let with = measurement_entropy(&[e.clone(), f], &p).unwrap();
        prop_assert!(with <= base);
    }

    #[test]
    fn tank_bath_gap_shrinks_in_heat_capacity(c in 5.0f64..500.0, du in -0.9f64..2.0) {
        let small = tank_bath_limit_gap(c, 1.0, du).unwrap();
        let large = tank_bath_limit_gap(10.0 * c, 1.0, du).unwrap();
        prop_assert!(large <= small + 1e-12);
    }
}
