use finelab_core::space::{build_grid, geometry_report, metric_ball, region_from_descriptor, GridSpec};
use finelab_core::{AnalyticSet, Region, WeightedGraphSpace};
use proptest::prelude::*;

fn square(h: f64) -> WeightedGraphSpace {
    build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, h)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balls_grow_with_radius(center in 0usize..289, r1 in 0.01..3.0f64, dr in 0.0..1.0f64) {
        let s = square(0.125);
        let small = metric_ball(&s, center, r1).unwrap();
        let big = metric_ball(&s, center, r1 + dr).unwrap();
        prop_assert!(small.is_subset(&big));
        prop_assert!(small.contains(center));
    }

    #[test]
    fn measure_is_additive(a in prop::collection::vec(any::<bool>(), 289), b in prop::collection::vec(any::<bool>(), 289)) {
        let s = square(0.125);
        let ra = Region::from_mask(&a);
        let rb = Region::from_mask(&b);
        let lhs = s.measure(&ra.union(&rb)) + s.measure(&ra.intersection(&rb));
        let rhs = s.measure(&ra) + s.measure(&rb);
        // sums of the same multiset of dyadic cell measures are exact
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn descriptors_commute_with_dilation(angle in 0.1..3.0f64, start in -3.0..3.0f64, inner in 0.05..0.4f64) {
        let coarse = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, 1.0 / 16.0)).unwrap();
        let fine = build_grid(&GridSpec::cube(&[0.0, 0.0], 0.5, 1.0 / 32.0)).unwrap();
        let sets = [
            AnalyticSet::Sector { apex: vec![0.0, 0.0], start, angle },
            AnalyticSet::Annulus { center: vec![0.0, 0.0], inner, outer: 2.0 * inner },
        ];
        for set in &sets {
            let a = region_from_descriptor(&coarse, set).unwrap();
            let scaled = match set {
                AnalyticSet::Annulus { center, inner, outer } => AnalyticSet::Annulus {
                    center: center.clone(),
                    inner: inner / 2.0,
                    outer: outer / 2.0,
                },
                other => other.clone(),
            };
            let b = region_from_descriptor(&fine, &scaled).unwrap();
            prop_assert_eq!(a.nodes(), b.nodes());
        }
    }
}

#[test]
fn geometry_report_is_reproducible() {
    let s = square(1.0 / 16.0);
    let a = geometry_report(&s, 20, 42, 2.0).unwrap();
    let b = geometry_report(&s, 20, 42, 2.0).unwrap();
    assert_eq!(a, b);
    let c = geometry_report(&s, 20, 43, 2.0).unwrap();
    assert_ne!(a, c);
}

#[test]
fn total_measure_matches_the_box() {
    for h in [0.5, 0.25, 1.0 / 64.0] {
        let s = square(h);
        assert!((s.total_measure() - 4.0).abs() < 1e-12);
    }
}
