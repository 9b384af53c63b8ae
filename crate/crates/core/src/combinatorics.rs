//! Catalan numbers, weakly increasing parking functions and lucky cars.
//!
//! Counting is done in big integers and probabilities in exact rationals;
//! floats appear only in the asymptotic evaluators.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::analytics::paths::ln_big;
use crate::error::{domain, validation, Error, Result};
use crate::parking::{wipfs, LuckySet};

/// `C(n, k)` as a big integer; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for t in 0..k {
        acc = acc * BigUint::from(n - t) / BigUint::from(t + 1);
    }
    acc
}

/// The `n`-th Catalan number `binom(2n, n) / (n + 1)`.
pub fn catalan(n: u64) -> BigUint {
    binomial(2 * n, n) / BigUint::from(n + 1)
}

/// Catalan triangle entry `((n-k+1)/(n+1)) binom(n+k, k)` for `k <= n`,
/// zero otherwise.
pub fn catalan_triangle(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    binomial(n + k, k) * BigUint::from(n - k + 1) / BigUint::from(n + 1)
}

fn big_ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Memo of Catalan numbers and triangle rows, filled by the additive
/// recurrences rather than the closed forms.
#[derive(Debug, Clone)]
pub struct CatalanTable {
    // triangle[n][k] for 0 <= k <= n
    triangle: Vec<Vec<BigUint>>,
}

impl Default for CatalanTable {
    fn default() -> Self {
        Self::new()
    }
}

impl CatalanTable {
    pub fn new() -> Self {
        CatalanTable {
            triangle: vec![vec![BigUint::one()]],
        }
    }

    fn fill(&mut self, n: usize) {
        while self.triangle.len() <= n {
            let m = self.triangle.len();
            let prev = &self.triangle[m - 1];
            let mut row = Vec::with_capacity(m + 1);
            row.push(BigUint::one());
            for k in 1..=m {
                let above = prev.get(k).cloned().unwrap_or_default();
                let left: &BigUint = &row[k - 1];
                row.push(left + above);
            }
            self.triangle.push(row);
        }
    }

    pub fn triangle(&mut self, n: usize, k: usize) -> BigUint {
        if k > n {
            return BigUint::zero();
        }
        self.fill(n);
        self.triangle[n][k].clone()
    }

    /// `C_n`, the diagonal of the triangle.
    pub fn catalan(&mut self, n: usize) -> BigUint {
        self.triangle(n, n)
    }
}

/// Number of weakly increasing parking functions of length `n` whose `i`-th
/// entry equals `j`.
pub fn count_wipf_entry(n: u64, i: u64, j: u64) -> Result<BigUint> {
    if j < 1 || j > i || i > n {
        return Err(domain(format!(
            "need 1 <= j <= i <= n (got n={n}, i={i}, j={j})"
        )));
    }
    let front = int((i - j + 1) * (i - j + 2)) / int(i * (n - j + 2));
    let value = front
        * BigRational::from_integer(BigInt::from(binomial(i + j - 2, j - 1)))
        * BigRational::from_integer(BigInt::from(binomial(2 * n - i - j + 1, n - i)));
    if !value.is_integer() {
        return Err(Error::Inconsistent(format!(
            "entry count for (n={n}, i={i}, j={j}) is not an integer: {value}"
        )));
    }
    Ok(value
        .to_integer()
        .to_biguint()
        .expect("counts are non-negative"))
}

/// Counts `f_n(j)` of weakly increasing parking functions with last entry `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LastEntryDistribution {
    pub n: u64,
    /// `counts[j - 1] = f_n(j)`.
    pub counts: Vec<BigUint>,
}

impl LastEntryDistribution {
    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }

    pub fn probabilities(&self) -> Vec<BigRational> {
        let total = self.total();
        self.counts
            .iter()
            .map(|c| big_ratio(c.clone(), total.clone()))
            .collect()
    }
}

/// `f_n(1) = 1`, `f_n(j) = f_n(j-1) + f_{n-1}(j)` for `1 < j < n`,
/// `f_n(n) = f_n(n-1)`.
pub fn last_entry_distribution(n: u64) -> Result<LastEntryDistribution> {
    if n < 1 {
        return Err(domain("n must be at least 1"));
    }
    let mut row = vec![BigUint::one()];
    for m in 2..=n as usize {
        let mut next = Vec::with_capacity(m);
        next.push(BigUint::one());
        for j in 2..m {
            let v = &next[j - 2] + &row[j - 1];
            next.push(v);
        }
        let last = next[m - 2].clone();
        next.push(last);
        row = next;
    }
    Ok(LastEntryDistribution { n, counts: row })
}

/// `E[alpha_n]` for a uniform weakly increasing parking function.
pub fn expected_last_entry(n: u64) -> Result<BigRational> {
    let dist = last_entry_distribution(n)?;
    let weighted: BigUint = dist
        .counts
        .iter()
        .enumerate()
        .map(|(idx, c)| c * BigUint::from(idx as u64 + 1))
        .sum();
    Ok(big_ratio(weighted, dist.total()))
}

/// The printed expression `n(n-1)/(n+2)`, which is `E[alpha_n] - 1`.
pub fn expected_last_entry_paper_printed(n: u64) -> BigRational {
    int(n * n.saturating_sub(1)) / int(n + 2)
}

/// Probability that a uniform weakly increasing parking function has lucky
/// set exactly `lucky`.
pub fn lucky_set_probability(n: u64, lucky: &LuckySet) -> Result<BigRational> {
    if let Some(bad) = lucky.members.iter().find(|&&m| m < 1 || m as u64 > n) {
        return Err(validation(format!("lucky car {bad} outside [1, {n}]")));
    }
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    if !lucky.contains(1) {
        return Ok(BigRational::zero());
    }
    let ls = &lucky.members;
    let mut num = BigUint::one();
    for (idx, &l) in ls.iter().enumerate() {
        let next = ls.get(idx + 1).map(|&x| x as u64).unwrap_or(n + 1);
        num *= catalan(next - l as u64 - 1);
    }
    Ok(big_ratio(num, catalan(n)))
}

fn lucky_count_with<F>(n: u64, factor: F) -> Result<Vec<BigRational>>
where
    F: Fn(u64, u64) -> BigRational,
{
    if n < 1 {
        return Err(domain("n must be at least 1"));
    }
    let c = BigRational::from_integer(BigInt::from(catalan(n)));
    Ok((1..=n)
        .map(|k| {
            let b = BigRational::from_integer(BigInt::from(binomial(2 * n - k - 1, n - k)));
            b * factor(n, k) / c.clone()
        })
        .collect())
}

/// `Pr[|L| = k]` for `k = 1..=n` (entry `k - 1`): `binom(2n-k-1, n-k) (k/n) / C_n`.
pub fn lucky_count_distribution(n: u64) -> Result<Vec<BigRational>> {
    lucky_count_with(n, |n, k| int(k) / int(n))
}

/// The same with the printed factor `n/k`, kept for comparison.
pub fn lucky_count_distribution_paper_printed(n: u64) -> Result<Vec<BigRational>> {
    lucky_count_with(n, |n, k| int(n) / int(k))
}

/// Expected number of lucky cars, summed from the distribution.
pub fn expected_lucky(n: u64) -> Result<BigRational> {
    Ok(lucky_count_distribution(n)?
        .into_iter()
        .enumerate()
        .fold(BigRational::zero(), |acc, (idx, pr)| {
            acc + pr * int(idx as u64 + 1)
        }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsymptoticFormula {
    /// `Pr[uniform parking function is weakly increasing] ~ (4/n)^n / (e sqrt(pi n))`.
    WipfFraction,
    /// `Pr[alpha_n = j]` for fixed `j`, via a Poisson mass with mean `n+j-2`.
    LastEntryFixed,
    /// `Pr[alpha_n = n - j] ~ (j-1) / (sqrt 2 4^n)` for fixed `j`.
    LastEntryNearTop,
    /// `Pr[alpha_n = j]` with `n, j` both growing.
    LastEntryGrowing,
}

impl std::str::FromStr for AsymptoticFormula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "wipf-fraction" => AsymptoticFormula::WipfFraction,
            "last-entry-fixed" => AsymptoticFormula::LastEntryFixed,
            "last-entry-near-top" => AsymptoticFormula::LastEntryNearTop,
            "last-entry-growing" => AsymptoticFormula::LastEntryGrowing,
            _ => return Err(validation(format!("unknown asymptotic formula {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticEstimate {
    pub formula: AsymptoticFormula,
    pub n: u64,
    pub j: Option<u64>,
    pub value: f64,
    /// The exact probability the expression approximates.
    pub exact: f64,
    /// `exact / value`; `None` when the estimate is 0.
    pub ratio: Option<f64>,
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|t| (t as f64).ln()).sum()
}

/// `ln(num / den)` for big integers, finite even when both overflow `f64`.
fn ln_ratio(num: &BigUint, den: &BigUint) -> f64 {
    ln_big(num) - ln_big(den)
}

/// `ln Pr[Poisson(lambda) = k]`, with `0^0 = 1`.
fn ln_poisson(lambda: f64, k: u64) -> f64 {
    let head = if k == 0 { 0.0 } else { k as f64 * lambda.ln() };
    head - lambda - ln_factorial(k)
}

pub fn asymptotic_evaluators(
    formula: AsymptoticFormula,
    n: u64,
    j: Option<u64>,
) -> Result<AsymptoticEstimate> {
    if n < 1 {
        return Err(domain("n must be at least 1"));
    }
    let nf = n as f64;
    let need_j = |lo: u64, hi: u64| -> Result<u64> {
        let j = j.ok_or_else(|| validation("this formula needs j"))?;
        if j < lo || j > hi {
            return Err(domain(format!("j must lie in [{lo}, {hi}] (got {j})")));
        }
        Ok(j)
    };
    let last_entry_exact = |j: u64| -> Result<f64> {
        let dist = last_entry_distribution(n)?;
        Ok(ln_ratio(&dist.counts[j as usize - 1], &dist.total()).exp())
    };
    let (value, exact) = match formula {
        AsymptoticFormula::WipfFraction => {
            let ln_est = -1.0 - 0.5 * (std::f64::consts::PI * nf).ln() + nf * (4.0 / nf).ln();
            let pf = BigUint::from(n + 1).pow((n - 1) as u32);
            (ln_est.exp(), ln_ratio(&catalan(n), &pf).exp())
        }
        AsymptoticFormula::LastEntryFixed => {
            let j = need_j(1, n)?;
            let lambda = (n + j - 2) as f64;
            let ln_est =
                0.5 * (std::f64::consts::PI * nf).ln() + ((n - j + 1) as f64).ln() + lambda
                    - nf * 4f64.ln()
                    + ln_poisson(lambda, j - 1);
            (ln_est.exp(), last_entry_exact(j)?)
        }
        AsymptoticFormula::LastEntryNearTop => {
            let j = need_j(1, n - 1)?;
            let value = (j - 1) as f64 / (std::f64::consts::SQRT_2 * 4f64.powf(nf));
            (value, last_entry_exact(n - j)?)
        }
        AsymptoticFormula::LastEntryGrowing => {
            let j = need_j(1, n)?;
            if n + j < 3 {
                return Err(domain("n + j - 2 must be positive"));
            }
            let lambda = (n + j - 2) as f64;
            let ln_est = (nf + 1.0).ln()
                + (nf + j as f64 - 1.0)
                + ((n - j + 1) as f64).ln()
                + 0.5 * (2.0 * std::f64::consts::PI * nf).ln()
                - lambda.ln()
                - nf * 4f64.ln()
                + ln_poisson(lambda, j - 1);
            (ln_est.exp(), last_entry_exact(j)?)
        }
    };
    Ok(AsymptoticEstimate {
        formula,
        n,
        j,
        value,
        exact,
        ratio: (value > 0.0).then(|| exact / value),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub n_max: u64,
    pub checked: u64,
}

/// Checks, for every `1 <= n <= n_max`,
/// `sum_{j<n} j binom(j+n-1, j) = (n-1) n binom(2n-1, n-1) / (n+1)` and
/// `sum_{j<n} j^2 binom(j+n-1, j) = (n-1) n^3 binom(2n-1, n-1) / ((n+1)(n+2))`.
pub fn identity_checks(n_max: u64) -> Result<IdentityReport> {
    if n_max < 1 {
        return Err(domain("n_max must be at least 1"));
    }
    let mut failures = Vec::new();
    for n in 1..=n_max {
        let mut s1 = BigUint::zero();
        let mut s2 = BigUint::zero();
        // b = binom(j+n-1, j), advanced by b * (j+n) / (j+1)
        let mut b = BigUint::one();
        for j in 0..n {
            s1 += &b * BigUint::from(j);
            s2 += &b * BigUint::from(j * j);
            b = b * BigUint::from(j + n) / BigUint::from(j + 1);
        }
        let c = BigRational::from_integer(BigInt::from(binomial(2 * n - 1, n - 1)));
        let rhs1 = int((n - 1) * n) * c.clone() / int(n + 1);
        let rhs2 = int((n - 1) * n * n * n) * c / int((n + 1) * (n + 2));
        let lhs1 = BigRational::from_integer(BigInt::from(s1));
        let lhs2 = BigRational::from_integer(BigInt::from(s2));
        if lhs1 != rhs1 || lhs2 != rhs2 {
            failures.push(n);
        }
    }
    if !failures.is_empty() {
        return Err(Error::Inconsistent(format!(
            "binomial identities fail for n in {failures:?}"
        )));
    }
    Ok(IdentityReport {
        n_max,
        checked: 2 * n_max,
    })
}

/// Largest `n` for which enumeration over all weakly increasing parking
/// functions is attempted.
pub const MAX_ENUMERATION_N: u64 = 15;

/// Whether, over all weakly increasing parking functions of length `n`,
/// `{alpha_{i_1} <= m, ..., alpha_{i_k} <= m}` is the same event as
/// `{alpha_{i_k} <= m}`.
pub fn conditional_monotonicity_check(n: u64, m: u64, indices: &[u64]) -> Result<bool> {
    if indices.is_empty() {
        return Err(validation("need at least one index"));
    }
    if indices.windows(2).any(|w| w[0] > w[1]) {
        return Err(validation("indices must be non-decreasing"));
    }
    if indices[0] < 1 || *indices.last().unwrap() > n {
        return Err(validation(format!("indices must lie in [1, {n}]")));
    }
    if m < indices[0] || m > n {
        return Err(domain(format!("need i_1 <= m <= n (got m={m})")));
    }
    if n > MAX_ENUMERATION_N {
        return Err(Error::TooLarge(format!(
            "enumeration limited to n <= {MAX_ENUMERATION_N}"
        )));
    }
    let last = *indices.last().unwrap() as usize;
    Ok(wipfs(n as usize).iter().all(|alpha| {
        let all = indices.iter().all(|&i| alpha.pref(i as usize) as u64 <= m);
        let top = alpha.pref(last) as u64 <= m;
        all == top
    }))
}
