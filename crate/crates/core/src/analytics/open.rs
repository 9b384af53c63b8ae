//! Open-boundary model: each car walks inside `[0, i]` and must reach its
//! own spot `i` before falling off at `0`.

use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::Serialize;

use super::{conditional_time_moments, Ruin};
use crate::error::{domain, Result};
use crate::parking::{classify, PreferenceList};
use crate::scalar::{eval_mode, ratio_to_f64, ProbabilityValue, StepProbability};

fn check_start(i: u64, s: u64) -> Result<()> {
    if i == 0 || s == 0 || s > i {
        return Err(domain(format!("start spot {s} must lie in [1, {i}]")));
    }
    Ok(())
}

fn check_identity_outcome(alpha: &PreferenceList) -> Result<()> {
    if !classify(alpha).is_identity_outcome {
        return Err(domain(format!(
            "{alpha} is not an identity-outcome parking function (need alpha_i <= i)"
        )));
    }
    Ok(())
}

/// Probability that a car starting at `s` reaches `i` before `0`.
pub fn open_prob_single(i: u64, s: u64, p: &StepProbability) -> Result<ProbabilityValue> {
    check_start(i, s)?;
    eval_mode(
        p,
        |p| Ok(BigRational::hit(i, s, p)),
        |p| Ok(f64::hit(i, s, &p)),
    )
}

fn cars(alpha: &PreferenceList) -> impl Iterator<Item = (u64, u64)> + '_ {
    (1..=alpha.n()).map(|i| (i as u64, alpha.pref(i) as u64))
}

/// Probability that every car parks, for `alpha` in PF_n(id).
pub fn open_prob_all(alpha: &PreferenceList, p: &StepProbability) -> Result<ProbabilityValue> {
    check_identity_outcome(alpha)?;
    eval_mode(
        p,
        |p| {
            Ok(cars(alpha).fold(BigRational::one(), |acc, (i, s)| {
                acc * BigRational::hit(i, s, p)
            }))
        },
        |p| Ok(cars(alpha).map(|(i, s)| f64::hit(i, s, &p)).product()),
    )
}

/// All-park probability for the mirrored protocol: cars enter from the right
/// and car `i` must reach spot `n - i + 1` before leaving at `n + 1`. `p` is
/// still the probability of a rightward step. Defined on preference lists
/// with `beta_i >= n - i + 1`.
pub fn open_prob_all_reversed(
    beta: &PreferenceList,
    p: &StepProbability,
) -> Result<ProbabilityValue> {
    let n = beta.n();
    if !crate::parking::is_reverse_identity_outcome(beta) {
        return Err(domain(format!(
            "{beta} does not have reversed-identity outcome (need beta_i >= n - i + 1)"
        )));
    }
    // distances measured from the right boundary n + 1; progress is leftward
    let legs: Vec<(u64, u64)> = (1..=n)
        .map(|i| (i as u64, (n + 1 - beta.pref(i)) as u64))
        .collect();
    let forward = p.complement();
    eval_mode(
        &forward,
        |f| {
            Ok(legs.iter().fold(BigRational::one(), |acc, &(i, s)| {
                acc * BigRational::hit(i, s, f)
            }))
        },
        |f| Ok(legs.iter().map(|&(i, s)| f64::hit(i, s, &f)).product()),
    )
}

/// Expected steps for a car starting at `s` to reach `i`, given that it does
/// so before reaching `0`. At `p = 0` (where the conditioning event is null
/// for `s < i`) the value is the limit `i - s`.
pub fn open_expected_time_single(i: u64, s: u64, p: &StepProbability) -> Result<ProbabilityValue> {
    check_start(i, s)?;
    eval_mode(
        p,
        |p| Ok(BigRational::cond_time(i, s, p)),
        |p| Ok(f64::cond_time(i, s, &p)),
    )
}

/// Expected total steps given that every car parks.
pub fn open_expected_time_all(
    alpha: &PreferenceList,
    p: &StepProbability,
) -> Result<ProbabilityValue> {
    check_identity_outcome(alpha)?;
    eval_mode(
        p,
        |p| {
            Ok(cars(alpha).fold(BigRational::zero(), |acc, (i, s)| {
                acc + BigRational::cond_time(i, s, p)
            }))
        },
        |p| Ok(cars(alpha).map(|(i, s)| f64::cond_time(i, s, &p)).sum()),
    )
}

/// `(2n^3 + 3n^2 + n)/18 - (1/3) sum alpha_i^2`, the `p = 1/2` total.
pub fn open_expected_time_all_half_closed_form(alpha: &PreferenceList) -> Result<BigRational> {
    check_identity_outcome(alpha)?;
    let n = alpha.n() as i64;
    let sq: i64 = alpha.as_slice().iter().map(|&a| (a * a) as i64).sum();
    let head = BigRational::new((2 * n * n * n + 3 * n * n + n).into(), 18.into());
    Ok(head - BigRational::new(sq.into(), 3.into()))
}

fn variance_single<F: Ruin>(i: u64, s: u64, p: &F) -> Result<F> {
    if s == i {
        return Ok(F::zero());
    }
    let (m1, m2) = conditional_time_moments(i, p).ok_or_else(|| {
        domain(format!(
            "a car starting at {s} cannot reach {i}; conditional variance undefined"
        ))
    })?;
    let (m, mm) = (m1[s as usize].clone(), m2[s as usize].clone());
    Ok(mm - m.clone() * m)
}

/// Variance of the hitting time of `i` from `s`, conditioned on hitting `i`
/// first. Domain error when that event is null.
pub fn open_time_variance_single(i: u64, s: u64, p: &StepProbability) -> Result<ProbabilityValue> {
    check_start(i, s)?;
    eval_mode(
        p,
        |p| variance_single(i, s, p),
        |p| variance_single(i, s, &p),
    )
}

/// Variance of the total steps given that every car parks. The cars'
/// conditioned walks are independent, so the per-car variances add.
pub fn open_time_variance_all(
    alpha: &PreferenceList,
    p: &StepProbability,
) -> Result<ProbabilityValue> {
    check_identity_outcome(alpha)?;
    eval_mode(
        p,
        |p| {
            cars(alpha).try_fold(BigRational::zero(), |acc, (i, s)| {
                Ok(acc + variance_single(i, s, p)?)
            })
        },
        |p| cars(alpha).try_fold(0.0, |acc, (i, s)| Ok(acc + variance_single(i, s, &p)?)),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub i: u64,
    pub residuals: Vec<ProbabilityValue>,
    pub max_abs_residual: f64,
    /// In exact mode, whether every residual is exactly zero.
    pub exact_zero: Option<bool>,
    pub tolerance: f64,
    pub passed: bool,
}

fn residuals<F: Ruin>(i: u64, p: &F) -> Vec<F> {
    let q = p.complement();
    let w = |s: u64| F::hit(i, s, p);
    let g = |s: u64| F::cond_time(i, s, p);
    (1..i)
        .map(|s| {
            let lhs = g(s) * w(s);
            let rhs = p.clone() * w(s + 1) * g(s + 1) + q.clone() * w(s - 1) * g(s - 1) + w(s);
            lhs - rhs
        })
        .collect()
}

/// Plugs the closed-form conditional times into the first-step equations
/// `g_s w_s = p w_{s+1} g_{s+1} + q w_{s-1} g_{s-1} + w_s` for `1 <= s < i`.
pub fn verify_open_time_solution(i: u64, p: &StepProbability, tol: f64) -> Result<ResidualReport> {
    if i < 2 {
        return Err(domain("the first-step system needs i >= 2"));
    }
    let (residuals, exact_zero): (Vec<ProbabilityValue>, Option<bool>) = match p {
        StepProbability::Exact(r) => {
            let res = residuals(i, r);
            let zero = res.iter().all(|x| x.is_zero());
            (
                res.into_iter().map(ProbabilityValue::Exact).collect(),
                Some(zero),
            )
        }
        StepProbability::Float(f) => (
            residuals(i, f)
                .into_iter()
                .map(ProbabilityValue::Float)
                .collect(),
            None,
        ),
    };
    let max_abs = residuals
        .iter()
        .map(|r| match r {
            ProbabilityValue::Exact(x) => ratio_to_f64(&x.abs()),
            ProbabilityValue::Float(x) => x.abs(),
        })
        .fold(0.0, f64::max);
    let passed = exact_zero.unwrap_or(max_abs <= tol);
    Ok(ResidualReport {
        i,
        residuals,
        max_abs_residual: max_abs,
        exact_zero,
        tolerance: tol,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parking::{identity_outcome_lists, mirror};
    use crate::scalar::rational;

    fn sp(s: &str) -> StepProbability {
        s.parse().unwrap()
    }

    fn pl(v: &[usize]) -> PreferenceList {
        PreferenceList::new(v.to_vec()).unwrap()
    }

    fn exact(v: ProbabilityValue) -> BigRational {
        v.as_exact().unwrap().clone()
    }

    #[test]
    fn single_probability_examples() {
        assert_eq!(
            exact(open_prob_single(4, 2, &sp("1/2")).unwrap()),
            rational(1, 2)
        );
        for i in 1..6 {
            assert_eq!(
                exact(open_prob_single(i, i, &sp("2/7")).unwrap()),
                rational(1, 1)
            );
        }
        assert_eq!(
            exact(open_prob_single(2, 1, &sp("2/3")).unwrap()),
            rational(2, 3)
        );
        assert!(open_prob_single(3, 0, &sp("1/2")).is_err());
        assert!(open_prob_single(3, 4, &sp("1/2")).is_err());
    }

    #[test]
    fn all_park_examples() {
        for n in 1..6 {
            let id = PreferenceList::identity(n).unwrap();
            assert_eq!(
                exact(open_prob_all(&id, &sp("1/5")).unwrap()),
                rational(1, 1)
            );
        }
        assert_eq!(
            exact(open_prob_all(&pl(&[1, 1]), &sp("1/2")).unwrap()),
            rational(1, 2)
        );
        assert_eq!(
            exact(open_prob_all(&pl(&[1, 1, 1]), &sp("1/2")).unwrap()),
            rational(1, 6)
        );
        assert!(open_prob_all(&pl(&[2, 1]), &sp("1/2")).is_err());
    }

    #[test]
    fn half_probability_is_product_of_preferences_over_factorial() {
        for n in 1..=5 {
            let fact: i64 = (1..=n as i64).product();
            for alpha in identity_outcome_lists(n) {
                let prod: i64 = alpha.as_slice().iter().map(|&a| a as i64).product();
                assert_eq!(
                    exact(open_prob_all(&alpha, &sp("1/2")).unwrap()),
                    rational(prod, fact)
                );
            }
        }
    }

    #[test]
    fn mirrored_protocol_agrees() {
        for n in 1..=5 {
            for alpha in identity_outcome_lists(n) {
                for p in ["1/3", "1/2", "4/5"] {
                    let p = sp(p);
                    let direct = open_prob_all(&alpha, &p).unwrap();
                    let rev = open_prob_all_reversed(&mirror(&alpha), &p.complement()).unwrap();
                    assert_eq!(direct, rev);
                }
            }
        }
        assert!(open_prob_all_reversed(&pl(&[1, 1]), &sp("1/2")).is_err());
    }

    #[test]
    fn expected_time_examples() {
        assert_eq!(
            exact(open_expected_time_single(2, 1, &sp("1/2")).unwrap()),
            rational(1, 1)
        );
        assert_eq!(
            exact(open_expected_time_single(2, 1, &sp("2/3")).unwrap()),
            rational(1, 1)
        );
        assert_eq!(
            exact(open_expected_time_single(5, 5, &sp("2/3")).unwrap()),
            rational(0, 1)
        );
        let id = PreferenceList::identity(4).unwrap();
        assert_eq!(
            exact(open_expected_time_all(&id, &sp("3/7")).unwrap()),
            rational(0, 1)
        );
        let a = pl(&[1, 1]);
        assert_eq!(
            exact(open_expected_time_all(&a, &sp("1/2")).unwrap()),
            rational(1, 1)
        );
        assert_eq!(
            open_expected_time_all_half_closed_form(&a).unwrap(),
            rational(1, 1)
        );
        let a = pl(&[1, 1, 1]);
        assert_eq!(
            exact(open_expected_time_all(&a, &sp("1/2")).unwrap()),
            rational(11, 3)
        );
        assert_eq!(
            open_expected_time_all_half_closed_form(&a).unwrap(),
            rational(11, 3)
        );
    }

    #[test]
    fn half_closed_form_matches_per_car_sum() {
        for n in 1..=6 {
            for alpha in identity_outcome_lists(n) {
                assert_eq!(
                    exact(open_expected_time_all(&alpha, &sp("1/2")).unwrap()),
                    open_expected_time_all_half_closed_form(&alpha).unwrap()
                );
            }
        }
    }

    #[test]
    fn residuals_exact_and_float() {
        let r = verify_open_time_solution(5, &sp("0.5"), 1e-12).unwrap();
        assert!(r.passed && r.max_abs_residual < 1e-12);
        let r = verify_open_time_solution(10, &sp("0.9"), 1e-10).unwrap();
        assert!(r.passed, "{}", r.max_abs_residual);
        for p in ["1/3", "1/2", "3/4", "1/7"] {
            for i in 2..=6 {
                let r = verify_open_time_solution(i, &sp(p), 0.0).unwrap();
                assert_eq!(r.exact_zero, Some(true), "i={i} p={p}");
            }
        }
        assert!(verify_open_time_solution(1, &sp("1/2"), 1e-12).is_err());
    }

    #[test]
    fn variance_examples() {
        // one step regardless of p
        assert_eq!(
            exact(open_time_variance_single(2, 1, &sp("1/3")).unwrap()),
            rational(0, 1)
        );
        assert_eq!(
            exact(open_time_variance_single(4, 4, &sp("1/3")).unwrap()),
            rational(0, 1)
        );
        // p = 1: deterministic slide
        assert_eq!(
            exact(open_time_variance_single(6, 2, &sp("1/1")).unwrap()),
            rational(0, 1)
        );
        assert!(open_time_variance_single(3, 1, &sp("0")).is_err());
    }

    #[test]
    fn variance_at_half_matches_enumeration() {
        // i = 3, s = 1, p = 1/2: paths 1 -> 3 staying in {1, 2} are
        // R (L R)^k R, with probability (1/2)^(2k+2) and length 2k + 2;
        // conditioned on arrival (w = 1/3) the length is 2 + 2K, K ~ Geom(3/4)
        // on {0, 1, ...}, so Var = 4 Var(K) = 4 (1/4) / (3/4)^2 = 16/9.
        assert_eq!(
            exact(open_time_variance_single(3, 1, &sp("1/2")).unwrap()),
            rational(16, 9)
        );
    }
}
