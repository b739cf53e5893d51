mod common;

use approx::assert_relative_eq;
use fusetrack::filter::{chi2_threshold, gate, GateDecision};
use fusetrack::stats::chi2_quantile;
use proptest::prelude::*;

#[test]
fn thresholds_at_95_percent() {
    assert_relative_eq!(chi2_threshold(2, 0.95).unwrap(), 5.991465, epsilon = 1e-6);
    assert_relative_eq!(chi2_threshold(3, 0.95).unwrap(), 7.814728, epsilon = 1e-6);
    assert_relative_eq!(
        chi2_threshold(2, 0.95).unwrap(),
        common::chi2_quantile_bisect(2, 0.95),
        epsilon = 1e-9
    );
    assert_relative_eq!(
        chi2_threshold(3, 0.95).unwrap(),
        common::chi2_quantile_bisect(3, 0.95),
        epsilon = 1e-9
    );
}

#[test]
fn gate_examples_against_oracle_thresholds() {
    assert!(9.0 > common::chi2_quantile_bisect(2, 0.95));
    assert_eq!(gate(9.0, 2, 0.95).unwrap(), GateDecision::Reject);
    assert!(7.0 < common::chi2_quantile_bisect(3, 0.95));
    assert_eq!(gate(7.0, 3, 0.95).unwrap(), GateDecision::Accept);
}

proptest! {
    #[test]
    fn quantile_matches_closed_form_cdf(p in 0.01f64..0.999, dof in 2u32..=3) {
        let got = chi2_quantile(dof as f64, p).unwrap();
        let want = common::chi2_quantile_bisect(dof, p);
        prop_assert!((got - want).abs() < 1e-8 * want.max(1.0), "{got} vs {want}");
        prop_assert!((common::chi2_cdf(got, dof) - p).abs() < 1e-9);
    }

    #[test]
    fn gate_is_monotone_in_nis(a in 0.0f64..30.0, b in 0.0f64..30.0, dim in 2usize..=3) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if gate(hi, dim, 0.95).unwrap() == GateDecision::Accept {
            prop_assert_eq!(gate(lo, dim, 0.95).unwrap(), GateDecision::Accept);
        }
    }
}
