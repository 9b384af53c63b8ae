//! Structural properties of the closed forms.

use num::rational::BigRational;
use probpark::analytics::{
    exact_law, open_expected_time_single, open_prob_all, open_prob_all_reversed, open_prob_single,
    unbounded_prob_series, Ruin,
};
use probpark::parking::{mirror, PreferenceList};
use probpark::scalar::{ratio_to_f64, StepProbability};
use probpark::walk::Boundary;
use proptest::prelude::*;

fn identity_outcome() -> impl Strategy<Value = PreferenceList> {
    (1usize..=7)
        .prop_flat_map(|n| (1..=n).map(|i| 1..=i).collect::<Vec<_>>())
        .prop_map(|v| PreferenceList::new(v).unwrap())
}

fn exact_p() -> impl Strategy<Value = BigRational> {
    (1i64..=40).prop_flat_map(|den| {
        (0..=den).prop_map(move |num| BigRational::new(num.into(), den.into()))
    })
}

proptest! {
    #[test]
    fn hit_is_monotone_in_start_and_drift(i in 1u64..40, p in 0.0f64..=1.0, dp in 0.0f64..0.2) {
        let p2 = (p + dp).min(1.0);
        for s in 1..=i {
            let h = f64::hit(i, s, &p);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&h));
            if s > 1 {
                prop_assert!(h + 1e-12 >= f64::hit(i, s - 1, &p));
            }
            prop_assert!(f64::hit(i, s, &p2) + 1e-12 >= h);
        }
    }

    #[test]
    fn mirrored_list_at_complement_gives_same_probability(
        alpha in identity_outcome(),
        p in exact_p(),
    ) {
        let sp = StepProbability::Exact(p);
        let direct = open_prob_all(&alpha, &sp).unwrap();
        let reversed = open_prob_all_reversed(&mirror(&alpha), &sp.complement()).unwrap();
        prop_assert_eq!(direct, reversed);
    }

    #[test]
    fn occupancy_law_agrees_with_product_formula(alpha in identity_outcome(), p in exact_p()) {
        let sp = StepProbability::Exact(p.clone());
        let law = exact_law(&alpha, Boundary::Open, &p).unwrap();
        let closed = open_prob_all(&alpha, &sp).unwrap();
        prop_assert_eq!(&law.all_parked(), closed.as_exact().unwrap());
    }

    #[test]
    fn float_and_exact_times_agree(i in 2u64..12, num in 1i64..20) {
        let p = BigRational::new(num.into(), 20.into());
        let f = ratio_to_f64(&p);
        for s in 1..=i {
            let e = ratio_to_f64(&BigRational::cond_time(i, s, &p));
            let x = f64::cond_time(i, s, &f);
            prop_assert!((e - x).abs() <= 1e-10 * e.max(1.0), "i={} s={} p={}", i, s, f);
        }
    }
}

#[test]
fn near_half_gap_is_first_order() {
    let delta = 1e-6;
    for i in 1..=30u64 {
        for s in 1..=i {
            let exact_half = s as f64 / i as f64;
            for sign in [-1.0, 1.0] {
                let p = 0.5 + sign * delta;
                let h = open_prob_single(i, s, &StepProbability::float(p).unwrap())
                    .unwrap()
                    .as_f64();
                assert!((h - exact_half).abs() <= i as f64 * delta, "i={i} s={s}");
                // float evaluation matches exact arithmetic at the same p
                let num = if sign < 0.0 { 499_999 } else { 500_001 };
                let pr = StepProbability::Exact(BigRational::new(num.into(), 1_000_000.into()));
                let e = open_prob_single(i, s, &pr).unwrap().as_f64();
                assert!((h - e).abs() < 1e-12, "i={i} s={s} {h} {e}");
            }
        }
    }
}

#[test]
fn expected_time_vanishes_at_own_spot() {
    for i in 1..10u64 {
        let t = open_expected_time_single(i, i, &StepProbability::float(0.3).unwrap()).unwrap();
        assert_eq!(t.as_f64(), 0.0);
    }
}

#[test]
fn series_tolerance_is_honoured() {
    for &p in &[0.1, 0.25, 0.4] {
        for d in 1..=6u64 {
            let s = unbounded_prob_series(d, p, 1e-12, 1_000_000).unwrap();
            assert!(s.converged && s.tail_bound <= 1e-12);
            assert!((s.value - (p / (1.0 - p)).powi(d as i32)).abs() < 1e-10);
        }
    }
}
