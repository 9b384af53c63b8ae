//! Exact law of the set of parked cars for an arbitrary preference list.
//!
//! A car arriving on an occupied spot is trapped in the maximal occupied
//! block around it until it steps off either end, so each car is a
//! gambler's ruin on that block. Propagating the distribution over
//! (occupied spots, parked cars) car by car gives every joint probability
//! of the park indicators exactly.

use std::collections::BTreeMap;

use super::Ruin;
use crate::error::{Error, Result};
use crate::parking::PreferenceList;
use crate::scalar::Field;
use crate::walk::Boundary;

/// Largest street handled by [`exact_law`].
pub const MAX_EXACT_N: usize = 20;

/// Distribution of the parked-car bitmask (bit `i-1` for car `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyLaw<F> {
    pub n: usize,
    pub patterns: BTreeMap<u64, F>,
}

impl<F: Field> OccupancyLaw<F> {
    /// `Pr[every car in mask parks]`.
    pub fn subset(&self, mask: u64) -> F {
        self.patterns
            .iter()
            .filter(|(m, _)| *m & mask == mask)
            .fold(F::zero(), |acc, (_, pr)| acc + pr.clone())
    }

    /// `Pr[X_car = 1]`, `car` 1-indexed.
    pub fn marginal(&self, car: usize) -> F {
        self.subset(1 << (car - 1))
    }

    pub fn all_parked(&self) -> F {
        self.subset(full_mask(self.n))
    }

    /// `Pr[N = k]` for `k = 0..=n`.
    pub fn parked_count_distribution(&self) -> Vec<F> {
        let mut out = vec![F::zero(); self.n + 1];
        for (m, pr) in &self.patterns {
            let k = m.count_ones() as usize;
            out[k] = out[k].clone() + pr.clone();
        }
        out
    }

    /// `E[N] = sum_i Pr[X_i = 1]`.
    pub fn mean_parked(&self) -> F {
        (1..=self.n).fold(F::zero(), |acc, i| acc + self.marginal(i))
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct State {
    occupied: u64,
    parked: u64,
    halted: bool,
}

fn add<F: Field>(map: &mut BTreeMap<State, F>, st: State, pr: F) {
    if pr.is_zero() {
        return;
    }
    let slot = map.entry(st).or_insert_with(F::zero);
    *slot = slot.clone() + pr;
}

pub fn exact_law<F: Ruin>(
    alpha: &PreferenceList,
    boundary: Boundary,
    p: &F,
) -> Result<OccupancyLaw<F>> {
    let n = alpha.n();
    if n > MAX_EXACT_N {
        return Err(Error::TooLarge(format!(
            "exact occupancy law enumerates up to 2^n states; n = {n} exceeds {MAX_EXACT_N}"
        )));
    }
    let q = p.complement();
    let two_p = F::from_count(2) * p.clone();
    let drifts_right_or_fair = two_p >= F::one();
    let drifts_left_or_fair = two_p <= F::one();
    let bit = |spot: usize| 1u64 << (spot - 1);

    let mut dist: BTreeMap<State, F> = BTreeMap::new();
    dist.insert(
        State {
            occupied: 0,
            parked: 0,
            halted: false,
        },
        F::one(),
    );
    for car in 1..=n {
        let s = alpha.pref(car);
        let mut next = BTreeMap::new();
        for (st, pr) in dist {
            if st.halted {
                add(&mut next, st, pr);
                continue;
            }
            let park = |spot: usize| State {
                occupied: st.occupied | bit(spot),
                parked: st.parked | bit(car),
                halted: false,
            };
            if st.occupied & bit(s) == 0 {
                add(&mut next, park(s), pr);
                continue;
            }
            let mut a = s;
            while a > 1 && st.occupied & bit(a - 1) != 0 {
                a -= 1;
            }
            let mut b = s;
            while b < n && st.occupied & bit(b + 1) != 0 {
                b += 1;
            }
            let left_free = a > 1;
            let right_free = b < n;
            let lost = match boundary {
                Boundary::Open => st,
                Boundary::Unbounded => State { halted: true, ..st },
            };
            match (boundary, left_free, right_free) {
                (_, false, false) => {
                    return Err(crate::error::domain(
                        "no free spot left for the car to park in",
                    ))
                }
                (Boundary::Open, _, _) | (Boundary::Unbounded, true, true) => {
                    let len = (b - a + 2) as u64;
                    let x = (s - a + 1) as u64;
                    let right = F::hit(len, x, p);
                    let left = F::one() - right.clone();
                    let right_state = if right_free { park(b + 1) } else { lost };
                    let left_state = if left_free { park(a - 1) } else { lost };
                    add(&mut next, right_state, pr.clone() * right);
                    add(&mut next, left_state, pr * left);
                }
                (Boundary::Unbounded, false, true) => {
                    // block touches spot 1; the walk can wander off to -inf
                    let reach = if drifts_right_or_fair {
                        F::one()
                    } else {
                        Field::powi(&(p.clone() / q.clone()), (b + 1 - s) as u64)
                    };
                    add(&mut next, park(b + 1), pr.clone() * reach.clone());
                    add(&mut next, lost, pr * (F::one() - reach));
                }
                (Boundary::Unbounded, true, false) => {
                    let reach = if drifts_left_or_fair {
                        F::one()
                    } else {
                        Field::powi(&(q.clone() / p.clone()), (s - a + 1) as u64)
                    };
                    add(&mut next, park(a - 1), pr.clone() * reach.clone());
                    add(&mut next, lost, pr * (F::one() - reach));
                }
            }
        }
        dist = next;
    }
    let mut patterns = BTreeMap::new();
    for (st, pr) in dist {
        let slot = patterns.entry(st.parked).or_insert_with(F::zero);
        *slot = slot.clone() + pr;
    }
    Ok(OccupancyLaw { n, patterns })
}
