//! Closed-form and series evaluation of the parking probabilities and times.

pub mod occupancy;
pub mod open;
pub mod paths;
pub mod unbounded;

use num::rational::BigRational;
use num::{One, Zero};

use crate::scalar::{Field, HALF_CROSSOVER};

pub use occupancy::{exact_law, OccupancyLaw};
pub use open::{
    open_expected_time_all, open_expected_time_all_half_closed_form, open_expected_time_single,
    open_prob_all, open_prob_all_reversed, open_prob_single, open_time_variance_all,
    open_time_variance_single, verify_open_time_solution, ResidualReport,
};
pub use paths::{
    bounded_path_count, catalan_convolution, expected_time_via_paths, ruin_path_count,
    BoundedPathTable, RuinPathTable,
};
pub use unbounded::{
    unbounded_expected_time, unbounded_expected_time_all, unbounded_prob_all,
    unbounded_prob_series, unbounded_prob_single, unbounded_variance, unbounded_variance_all,
    SeriesResult, UnboundedProbability,
};

/// Gambler's-ruin quantities on `{0, ..., i}` with right-step probability `p`.
/// The `f64` implementation uses cancellation-free forms; the rational one is
/// the textbook formula evaluated exactly.
pub trait Ruin: Field {
    /// Probability of hitting `i` before `0` from `s`.
    fn hit(i: u64, s: u64, p: &Self) -> Self;
    /// Expected hitting time of `i` from `s`, conditioned on hitting `i`
    /// before `0`.
    fn cond_time(i: u64, s: u64, p: &Self) -> Self;
}

impl Ruin for BigRational {
    fn hit(i: u64, s: u64, p: &Self) -> Self {
        if s == 0 {
            return Zero::zero();
        }
        if s >= i {
            return One::one();
        }
        if Field::is_half(p) {
            return Self::from_count(s) / Self::from_count(i);
        }
        let q = p.complement();
        let num = Field::powi(p, i - s) * (Field::powi(p, s) - Field::powi(&q, s));
        num / (Field::powi(p, i) - Field::powi(&q, i))
    }

    fn cond_time(i: u64, s: u64, p: &Self) -> Self {
        if s == 0 || s >= i {
            return Zero::zero();
        }
        if Field::is_half(p) {
            let (i, s) = (Self::from_count(i), Self::from_count(s));
            return (i.clone() * i - s.clone() * s) / Self::from_count(3);
        }
        let q = p.complement();
        // the expression only depends on the drift magnitude, so evaluate it
        // with a ratio below 1, which also covers p = 0 and p = 1
        let (r, gap) = if *p > q {
            (q.clone() / p.clone(), p.clone() - q)
        } else {
            (p.clone() / q.clone(), q - p.clone())
        };
        let term = |k: u64| {
            let rk = Field::powi(&r, k);
            Self::from_count(k) * (Self::one() + rk.clone()) / (Self::one() - rk)
        };
        (term(i) - term(s)) / gap
    }
}

/// `x coth x - 1`, accurate near 0.
fn xcoth_minus_one(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x2 / 3.0 - x2 * x2 / 45.0 + 2.0 * x2 * x2 * x2 / 945.0
    } else {
        x / x.tanh() - 1.0
    }
}

/// `ln(q/p)` without forming `q/p` near 1/2.
fn log_ratio(p: f64) -> f64 {
    ((1.0 - 2.0 * p) / p).ln_1p()
}

impl Ruin for f64 {
    fn hit(i: u64, s: u64, p: &Self) -> Self {
        let p = *p;
        if s == 0 {
            return 0.0;
        }
        if s >= i {
            return 1.0;
        }
        if (p - 0.5).abs() < HALF_CROSSOVER {
            return s as f64 / i as f64;
        }
        if p == 0.0 {
            return 0.0;
        }
        if p == 1.0 {
            return 1.0;
        }
        // (1 - r^s) / (1 - r^i) with r = q/p = e^l
        let l = log_ratio(p);
        let (i, s) = (i as f64, s as f64);
        if l < 0.0 {
            (s * l).exp_m1() / (i * l).exp_m1()
        } else {
            (-(i - s) * l).exp() * (-s * l).exp_m1() / (-i * l).exp_m1()
        }
    }

    fn cond_time(i: u64, s: u64, p: &Self) -> Self {
        let p = *p;
        if s == 0 || s >= i {
            return 0.0;
        }
        let (i, s) = (i as f64, s as f64);
        if (p - 0.5).abs() < HALF_CROSSOVER {
            return (i * i - s * s) / 3.0;
        }
        if p == 0.0 || p == 1.0 {
            return i - s;
        }
        // g = -2 / (l (p - q)) * (phi(i l / 2) - phi(s l / 2)), phi(x) = x coth x - 1
        let l = log_ratio(p);
        let gap = 2.0 * p - 1.0;
        -2.0 / (l * gap) * (xcoth_minus_one(i * l / 2.0) - xcoth_minus_one(s * l / 2.0))
    }
}

/// Solves a tridiagonal system `sub[k] x[k-1] + diag[k] x[k] + sup[k] x[k+1] = rhs[k]`.
pub(crate) fn solve_tridiagonal<F: Field>(sub: &[F], diag: &[F], sup: &[F], rhs: &[F]) -> Vec<F> {
    let m = diag.len();
    if m == 0 {
        return Vec::new();
    }
    let mut c = vec![F::zero(); m];
    let mut d = vec![F::zero(); m];
    c[0] = sup[0].clone() / diag[0].clone();
    d[0] = rhs[0].clone() / diag[0].clone();
    for k in 1..m {
        let denom = diag[k].clone() - sub[k].clone() * c[k - 1].clone();
        c[k] = sup[k].clone() / denom.clone();
        d[k] = (rhs[k].clone() - sub[k].clone() * d[k - 1].clone()) / denom;
    }
    let mut x = vec![F::zero(); m];
    x[m - 1] = d[m - 1].clone();
    for k in (0..m - 1).rev() {
        x[k] = d[k].clone() - c[k].clone() * x[k + 1].clone();
    }
    x
}

/// First and second moments of the hitting time of `i`, conditioned on
/// hitting `i` before `0`, for every start `0..=i`. Solved from the linear
/// system of the conditioned (Doob-transformed) walk, independently of the
/// closed forms. Entries at `s = 0` are meaningless and left at zero.
/// `None` when some start in `1..i` cannot reach `i`.
pub(crate) fn conditional_time_moments<F: Ruin>(i: u64, p: &F) -> Option<(Vec<F>, Vec<F>)> {
    let q = p.complement();
    let w: Vec<F> = (0..=i).map(|s| F::hit(i, s, p)).collect();
    if (1..i as usize).any(|s| w[s].is_zero()) {
        return None;
    }
    let inner = (i as usize).saturating_sub(1);
    let mut sub = Vec::with_capacity(inner);
    let mut diag = Vec::with_capacity(inner);
    let mut sup = Vec::with_capacity(inner);
    for s in 1..i as usize {
        let up = p.clone() * w[s + 1].clone() / w[s].clone();
        let down = q.clone() * w[s - 1].clone() / w[s].clone();
        sub.push(F::zero() - down);
        diag.push(F::one());
        sup.push(F::zero() - up);
    }
    // m_i = 0 and the s = 0 side has zero weight, so no boundary terms
    let ones = vec![F::one(); inner];
    let m1 = solve_tridiagonal(&sub, &diag, &sup, &ones);
    let rhs2: Vec<F> = m1
        .iter()
        .map(|m| F::from_count(2) * m.clone() - F::one())
        .collect();
    let m2 = solve_tridiagonal(&sub, &diag, &sup, &rhs2);
    let pad = |v: Vec<F>| {
        let mut out = vec![F::zero()];
        out.extend(v);
        out.push(F::zero());
        out
    };
    Some((pad(m1), pad(m2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    #[test]
    fn float_hit_matches_rational() {
        for &(a, b) in &[(1, 3), (2, 3), (1, 10), (9, 10), (1, 2), (0, 1), (1, 1)] {
            let pr = rational(a, b);
            let pf = a as f64 / b as f64;
            for i in 1..12u64 {
                for s in 0..=i {
                    let e = crate::scalar::ratio_to_f64(&BigRational::hit(i, s, &pr));
                    let f = f64::hit(i, s, &pf);
                    assert!((e - f).abs() < 1e-13, "i={i} s={s} p={pf}: {e} vs {f}");
                    let e = crate::scalar::ratio_to_f64(&BigRational::cond_time(i, s, &pr));
                    let f = f64::cond_time(i, s, &pf);
                    assert!(
                        (e - f).abs() < 1e-10 * e.max(1.0),
                        "i={i} s={s} p={pf}: {e} vs {f}"
                    );
                }
            }
        }
    }

    #[test]
    fn float_forms_stay_accurate_near_half() {
        // both sides are analytic in p, compare against a Taylor-free oracle:
        // the exact rational value at a nearby rational p
        let pr = BigRational::new(500_001.into(), 1_000_000.into());
        let pf = 0.500_001;
        for i in 2..10u64 {
            for s in 1..i {
                let e = crate::scalar::ratio_to_f64(&BigRational::cond_time(i, s, &pr));
                let f = f64::cond_time(i, s, &pf);
                assert!((e - f).abs() < 1e-9, "{e} vs {f}");
                let e = crate::scalar::ratio_to_f64(&BigRational::hit(i, s, &pr));
                let f = f64::hit(i, s, &pf);
                assert!((e - f).abs() < 1e-12, "{e} vs {f}");
            }
        }
    }

    #[test]
    fn moments_solver_reproduces_closed_form_exactly() {
        for &(a, b) in &[(1, 3), (1, 2), (3, 4), (1, 1)] {
            let p = rational(a, b);
            for i in 1..8u64 {
                let (m1, _) = conditional_time_moments(i, &p).unwrap();
                for s in 1..=i {
                    assert_eq!(
                        m1[s as usize],
                        BigRational::cond_time(i, s, &p),
                        "i={i} s={s}"
                    );
                }
            }
        }
    }

    #[test]
    fn moments_unavailable_when_target_unreachable() {
        assert!(conditional_time_moments(3, &rational(0, 1)).is_none());
        assert!(conditional_time_moments(1, &rational(0, 1)).is_some());
    }

    #[test]
    fn single_step_conditioned_time_is_deterministic() {
        let (m1, m2) = conditional_time_moments(2, &rational(2, 3)).unwrap();
        assert_eq!(m1[1], rational(1, 1));
        assert_eq!(m2[1], rational(1, 1));
    }
}
