//! Path-counting routes to the same quantities: first-passage counts for the
//! unbounded model and strip-confined counts for the open boundary.

use num::bigint::BigUint;
use num::{One, ToPrimitive, Zero};

use super::unbounded::SeriesResult;
use super::Ruin;
use crate::combinatorics::binomial;
use crate::error::{domain, Result};

/// Memoized `c(b, k)`: walks of `b` steps from height `k` that first touch
/// `0` at step `b`.
#[derive(Debug, Clone, Default)]
pub struct RuinPathTable {
    // rows[b][k] for 0 <= k <= b
    rows: Vec<Vec<BigUint>>,
}

impl RuinPathTable {
    pub fn new() -> Self {
        RuinPathTable {
            rows: vec![vec![BigUint::one()]],
        }
    }

    pub fn get(&mut self, b: usize, k: usize) -> BigUint {
        if k > b {
            return BigUint::zero();
        }
        while self.rows.len() <= b {
            let prev = self.rows.last().expect("row 0 always present");
            let b_new = self.rows.len();
            let at = |k: usize| prev.get(k).cloned().unwrap_or_default();
            let row: Vec<BigUint> = (0..=b_new)
                .map(|k| {
                    if k == 0 {
                        BigUint::zero()
                    } else {
                        at(k - 1) + at(k + 1)
                    }
                })
                .collect();
            self.rows.push(row);
        }
        self.rows[b][k].clone()
    }
}

fn non_negative(name: &str, v: i64) -> Result<usize> {
    usize::try_from(v).map_err(|_| domain(format!("{name} must be non-negative (got {v})")))
}

pub fn ruin_path_count(b: i64, k: i64) -> Result<BigUint> {
    let (b, k) = (non_negative("b", b)?, non_negative("k", k)?);
    Ok(RuinPathTable::new().get(b, k))
}

/// `d/(l+d) * C(2l+d-1, l)`, the `l`-th term of the `d`-th Catalan
/// self-convolution.
pub fn catalan_convolution(d: i64, l: i64) -> Result<BigUint> {
    if d < 1 {
        return Err(domain(format!("d must be at least 1 (got {d})")));
    }
    let l = non_negative("l", l)? as u64;
    let d = d as u64;
    let num = binomial(2 * l + d - 1, l) * BigUint::from(d);
    let den = BigUint::from(l + d);
    debug_assert!((&num % &den).is_zero());
    Ok(num / den)
}

/// Counts `a(j, k)` of walks starting at `s` with `j` left steps and net
/// displacement `k`, every position before the last inside `[1, i-1]` and
/// the last inside `[1, i]`. Row `j` is indexed by `k` in `1-s ..= i-s`.
#[derive(Debug, Clone)]
pub struct BoundedPathTable {
    i: usize,
    s: usize,
    rows: Vec<Vec<BigUint>>,
}

impl BoundedPathTable {
    pub fn new(i: usize, s: usize) -> Result<Self> {
        if i < 2 || s < 1 || s >= i {
            return Err(domain(format!(
                "need i >= 2 and a start in [1, i-1] (got i={i}, s={s})"
            )));
        }
        let mut t = BoundedPathTable {
            i,
            s,
            rows: Vec::new(),
        };
        t.rows.push(t.next_row(None));
        Ok(t)
    }

    fn width(&self) -> usize {
        self.i
    }

    /// Position reached by the walks in column `idx`.
    fn pos(&self, idx: usize) -> usize {
        idx + 1
    }

    fn next_row(&self, prev: Option<&[BigUint]>) -> Vec<BigUint> {
        let w = self.width();
        let interior = |pos: usize| (1..self.i).contains(&pos);
        let mut row = vec![BigUint::zero(); w];
        for idx in 0..w {
            let pos = self.pos(idx);
            row[idx] = match prev {
                None => {
                    if pos >= self.s {
                        BigUint::one()
                    } else {
                        BigUint::zero()
                    }
                }
                Some(prev) => {
                    let mut v = BigUint::zero();
                    if pos >= 2 && interior(pos - 1) {
                        v += &row[idx - 1];
                    }
                    if interior(pos + 1) {
                        v += &prev[idx + 1];
                    }
                    v
                }
            };
        }
        row
    }

    /// Row `j`, extending the memo as needed.
    pub fn row(&mut self, j: usize) -> &[BigUint] {
        while self.rows.len() <= j {
            let next = self.next_row(Some(self.rows.last().expect("row 0 present")));
            self.rows.push(next);
        }
        &self.rows[j]
    }

    /// `a(j, k)`; zero outside the strip.
    pub fn get(&mut self, j: usize, k: i64) -> BigUint {
        let pos = self.s as i64 + k;
        if pos < 1 || pos > self.i as i64 {
            return BigUint::zero();
        }
        self.row(j)[(pos - 1) as usize].clone()
    }

    /// Walks that arrive at `i` with `j` left steps.
    pub fn arrivals(&mut self, j: usize) -> BigUint {
        let last = self.i - 1;
        self.row(j)[last].clone()
    }
}

/// Walks from spot 1 with `j` left steps and net right displacement `k`,
/// confined to `[1, i-1]` except for a possible final arrival at `i`.
pub fn bounded_path_count(i: i64, j: i64, k: i64) -> Result<BigUint> {
    if i < 2 {
        return Err(domain(format!(
            "segment height must be at least 2 (got {i})"
        )));
    }
    let j = non_negative("j", j)?;
    if k < 0 || k > i - 1 {
        return Err(domain(format!("k must lie in [0, {}] (got {k})", i - 1)));
    }
    Ok(BoundedPathTable::new(i as usize, 1)?.get(j, k))
}

pub(crate) fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 60;
    (x >> shift as usize).to_f64().unwrap_or(1.0).ln() + shift as f64 * std::f64::consts::LN_2
}

pub const DEFAULT_PATH_TERM_BUDGET: usize = 20_000;

/// Conditional expected parking time of a car starting at `s` with target
/// `i`, summed over arrival paths grouped by their number `j` of left steps:
/// `sum_j a_j p^(j+D) q^j (2j+D) / w_s` with `D = i - s`.
///
/// The omitted tail is estimated as `t r / (1 - r)` from the current term
/// `t` and term ratio `r`, once the ratios have decreased for several
/// consecutive terms; the ratios then stay decreasing as the dominant
/// eigenvalue of the confined walk takes over.
pub fn expected_time_via_paths(i: u64, s: u64, p: f64, tol: f64) -> Result<SeriesResult> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("step probability {p} outside [0, 1]")));
    }
    if i == 0 || s == 0 || s > i {
        return Err(domain(format!("start spot {s} must lie in [1, {i}]")));
    }
    if s == i {
        return Ok(SeriesResult {
            value: 0.0,
            terms_used: 0,
            tail_bound: 0.0,
            converged: true,
        });
    }
    let w = f64::hit(i, s, &p);
    if w == 0.0 {
        return Err(domain(format!(
            "a car starting at {s} cannot reach {i} at p = {p}; conditional time undefined"
        )));
    }
    let q = 1.0 - p;
    let delta = (i - s) as f64;
    let mut table = BoundedPathTable::new(i as usize, s as usize)?;
    let ln_p = p.ln();
    let ln_q = q.ln();
    let ln_w = w.ln();

    let term_at = |count: &BigUint, j: usize| -> f64 {
        if count.is_zero() {
            return 0.0;
        }
        let jf = j as f64;
        let mut ln = ln_big(count) + (jf + delta) * ln_p - ln_w;
        if j > 0 {
            ln += jf * ln_q;
        }
        (2.0 * jf + delta) * ln.exp()
    };

    // only the all-right path exists when the strip has one interior spot
    // or left steps are impossible
    if i == 2 || q == 0.0 {
        let value = term_at(&table.arrivals(0), 0);
        return Ok(SeriesResult {
            value,
            terms_used: 1,
            tail_bound: 0.0,
            converged: true,
        });
    }

    let mut value = 0.0;
    let mut prev_term = 0.0;
    let mut prev_ratio = f64::INFINITY;
    let mut decreasing = 0u32;
    let mut tail = f64::INFINITY;
    for j in 0..DEFAULT_PATH_TERM_BUDGET {
        let count = table.arrivals(j);
        let term = term_at(&count, j);
        value += term;
        if j > 0 && prev_term > 0.0 && term > 0.0 {
            let ratio = term / prev_term;
            if ratio <= prev_ratio {
                decreasing += 1;
            } else {
                decreasing = 0;
            }
            prev_ratio = ratio;
            if decreasing >= 3 && ratio < 1.0 {
                tail = term * ratio / (1.0 - ratio);
                if tail <= tol {
                    return Ok(SeriesResult {
                        value,
                        terms_used: j as u64 + 1,
                        tail_bound: tail,
                        converged: true,
                    });
                }
            }
        }
        prev_term = term;
        // drop rows that are no longer needed
        if j >= 1 {
            table.rows[j - 1].clear();
        }
    }
    Ok(SeriesResult {
        value,
        terms_used: DEFAULT_PATH_TERM_BUDGET as u64,
        tail_bound: tail,
        converged: false,
    })
}
