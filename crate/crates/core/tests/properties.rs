mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn ordered_data_stay_ordered(p in ordered_pairs()) {
        let v = ordering_violation(&p);
        prop_assert!(v <= 1e-10, "lower exceeds upper by {v:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn zero_number_never_increases(p in crossing_pairs()) {
        let z = zero_counts(&p);
        prop_assert!(z.windows(2).all(|w| w[1] <= w[0]), "{z:?}");
    }

    #[test]
    fn gauge_shift_commutes_with_the_flow(flow in flows(), a in -3.0..3.0f64, b in -2.0..2.0f64) {
        let d = gauge_defect(flow, a, b);
        prop_assert!(d <= 1e-8, "{d:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10, ..ProptestConfig::default() })]

    #[test]
    fn finite_differences_match_the_boundary_integral(s in smooth_cases()) {
        let gap = volterra_gap(&s);
        prop_assert!(gap <= 1e-4, "{s:?}: {gap:e}");
    }
}
