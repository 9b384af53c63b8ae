//! Properties of the simulator that hold run by run.

use probpark::parking::{classical_park, PreferenceList};
use probpark::walk::{
    batch_simulate, run_protocol, BatchStats, Boundary, Terminal, WalkParameters,
};
use proptest::prelude::*;

fn identity_outcome() -> impl Strategy<Value = PreferenceList> {
    (1usize..=10)
        .prop_flat_map(|n| (1..=n).map(|i| 1..=i).collect::<Vec<_>>())
        .prop_map(|v| PreferenceList::new(v).unwrap())
}

fn any_list() -> impl Strategy<Value = PreferenceList> {
    (1usize..=10)
        .prop_flat_map(|n| proptest::collection::vec(1..=n, n))
        .prop_map(|v| PreferenceList::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn open_identity_outcome_cars_park_in_their_own_spot(
        alpha in identity_outcome(),
        p in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let params = WalkParameters::new(p, Boundary::Open).unwrap();
        let out = run_protocol(&alpha, &params, seed, 0).unwrap();
        // holds while every earlier car has parked; a car that leaves frees
        // its spot for a later one
        for (car, rec) in out.trajectories.iter().enumerate() {
            match rec.terminal {
                Terminal::Parked(s) => prop_assert_eq!(s, car + 1),
                _ => break,
            }
        }
    }

    #[test]
    fn deterministic_drift_is_classical(alpha in any_list(), seed in any::<u64>()) {
        let params = WalkParameters::new(1.0, Boundary::Open).unwrap();
        let out = run_protocol(&alpha, &params, seed, 3).unwrap();
        let classical = classical_park(&alpha);
        prop_assert_eq!(&out.outcome, &classical.outcome);
        for rec in &out.trajectories {
            match rec.terminal {
                Terminal::Parked(s) => prop_assert_eq!(rec.steps_taken as usize, s - rec.start),
                Terminal::Escaped => prop_assert!(classical.failed_cars.contains(&rec.car)),
                Terminal::CapExceeded => prop_assert!(false, "cap hit at p = 1"),
            }
        }
    }

    #[test]
    fn trajectories_move_one_spot_at_a_time(
        alpha in any_list(),
        p in 0.05f64..0.95,
        seed in any::<u64>(),
        unbounded in any::<bool>(),
    ) {
        let b = if unbounded { Boundary::Unbounded } else { Boundary::Open };
        let params = WalkParameters::new(p, b).unwrap().with_trace(true);
        let out = run_protocol(&alpha, &params, seed, 1).unwrap();
        for rec in &out.trajectories {
            let pos = rec.positions.as_ref().unwrap();
            prop_assert_eq!(pos[0], rec.start as i64);
            prop_assert_eq!(pos.len() as u64, rec.steps_taken + 1);
            prop_assert!(pos.windows(2).all(|w| (w[0] - w[1]).abs() == 1));
            if let Terminal::Parked(s) = rec.terminal {
                prop_assert_eq!(*pos.last().unwrap(), s as i64);
            }
        }
        prop_assert_eq!(
            out.total_steps,
            out.trajectories.iter().map(|r| r.steps_taken).sum::<u64>()
        );
    }
}

#[test]
fn batches_are_bit_identical_and_order_free() {
    let alpha = PreferenceList::new(vec![1, 1, 2, 1, 3]).unwrap();
    for b in [Boundary::Open, Boundary::Unbounded] {
        let params = WalkParameters::new(0.45, b).unwrap();
        let a = batch_simulate(&alpha, &params, 42, 5_000).unwrap();
        let again = batch_simulate(&alpha, &params, 42, 5_000).unwrap();
        assert_eq!(a, again);
        // same trials folded sequentially, in reverse
        let mut seq = BatchStats::empty(alpha.n());
        for t in (0..5_000).rev() {
            seq.record(&run_protocol(&alpha, &params, 42, t).unwrap());
        }
        assert_eq!(a, seq);
        let other = batch_simulate(&alpha, &params, 43, 5_000).unwrap();
        assert_ne!(a, other);
    }
}

#[test]
fn cap_is_rarely_hit_with_drift() {
    let alpha = PreferenceList::new(vec![1; 20]).unwrap();
    for b in [Boundary::Open, Boundary::Unbounded] {
        let params = WalkParameters::new(0.55, b).unwrap();
        let stats = batch_simulate(&alpha, &params, 7, 2_000).unwrap();
        assert_eq!(stats.cap_exceeded, 0, "{b}");
    }
}
