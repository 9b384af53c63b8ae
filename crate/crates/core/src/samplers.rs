//! Seeded uniform samplers for parking functions, weakly increasing parking
//! functions and identity-outcome preference lists.
//!
//! Draw `k` of a spec depends only on `(seed, k, family, n)`.

use std::fmt;
use std::str::FromStr;

use num::rational::BigRational;
use num::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{last_entry_distribution, lucky_count_distribution};
use crate::error::{domain, validation, Error, Result};
use crate::parking::{classical_park, dyck_to_wipf, DyckPath, PreferenceList, Step};
use crate::scalar::ratio_to_f64;
use crate::stats::{binomial_se, Comparison};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "PF")]
    Pf,
    #[serde(rename = "WIPF")]
    Wipf,
    #[serde(rename = "PF_ID")]
    PfId,
}

impl Family {
    fn tag(self) -> u64 {
        match self {
            Family::Pf => 1,
            Family::Wipf => 2,
            Family::PfId => 3,
        }
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "PF" => Ok(Family::Pf),
            "WIPF" => Ok(Family::Wipf),
            "PF_ID" => Ok(Family::PfId),
            _ => Err(validation(format!(
                "unknown family {s:?} (expected PF, WIPF or PF_ID)"
            ))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Pf => "PF",
            Family::Wipf => "WIPF",
            Family::PfId => "PF_ID",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Result<Self> {
        if n < 1 {
            return Err(validation("sampler needs n >= 1"));
        }
        Ok(SamplerSpec { family, n, seed })
    }

    fn stream(&self, draw_index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&draw_index.to_le_bytes());
        key[16..24].copy_from_slice(&self.family.tag().to_le_bytes());
        key[24..].copy_from_slice(&(self.n as u64).to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

pub fn sample(spec: &SamplerSpec, draw_index: u64) -> PreferenceList {
    let mut rng = spec.stream(draw_index);
    let prefs = match spec.family {
        Family::Pf => sample_pf(spec.n, &mut rng),
        Family::Wipf => sample_wipf(spec.n, &mut rng),
        Family::PfId => (1..=spec.n).map(|i| rng.gen_range(1..=i)).collect(),
    };
    PreferenceList::new(prefs).expect("samplers emit entries in [1, n]")
}

/// Park `n` cars on a circle of `n + 1` spots from uniform preferences; the
/// rotation that sends the one empty spot to `n + 1` is a uniform parking
/// function, since each parking function has exactly `n + 1` rotations.
fn sample_pf<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let m = n + 1;
    let prefs: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
    // next[s]: candidate free spot at or after s, with path halving
    let mut next: Vec<usize> = (0..m).collect();
    let mut taken = vec![false; m];
    fn find(next: &mut [usize], taken: &[bool], mut s: usize) -> usize {
        while taken[s] {
            let nx = next[s];
            next[s] = next[nx];
            s = nx;
        }
        s
    }
    for &b in &prefs {
        let s = find(&mut next, &taken, b);
        taken[s] = true;
        next[s] = (s + 1) % m;
    }
    let empty = taken.iter().position(|t| !t).expect("one spot stays empty");
    prefs.iter().map(|&b| (b + m - empty - 1) % m + 1).collect()
}

/// Shuffle `n` up-steps and `n + 1` down-steps, rotate to just after the
/// first minimum of the prefix sums (the only rotation whose proper prefixes
/// stay non-negative), and drop the final down-step.
fn sample_wipf<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut steps: Vec<Step> = std::iter::repeat(Step::U)
        .take(n)
        .chain(std::iter::repeat(Step::D).take(n + 1))
        .collect();
    steps.shuffle(rng);
    let mut h = 0i64;
    let (mut min, mut at) = (0i64, 0usize);
    for (k, s) in steps.iter().enumerate() {
        h += if *s == Step::U { 1 } else { -1 };
        if h < min {
            min = h;
            at = k + 1;
        }
    }
    let len = steps.len();
    steps.rotate_left(at % len);
    steps.pop();
    let path = DyckPath::new(steps).expect("cycle-lemma rotation is a Dyck path");
    dyck_to_wipf(&path)
        .expect("Dyck paths map to weakly increasing parking functions")
        .as_slice()
        .to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LastEntryCheck {
    pub j: u64,
    pub count: u64,
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WipfCheckReport {
    pub n: u64,
    pub draws: u64,
    pub seed: u64,
    pub last_entry: Vec<LastEntryCheck>,
    pub mean_last_entry: Comparison,
    pub mean_lucky: Comparison,
    pub passed: bool,
}

fn mean_and_variance(probs: &[BigRational], offset: u64) -> (f64, f64) {
    let (mut m1, mut m2) = (BigRational::zero(), BigRational::zero());
    for (idx, pr) in probs.iter().enumerate() {
        let v = BigRational::from_integer((idx as u64 + offset).into());
        m1 += pr * &v;
        m2 += pr * &v * &v;
    }
    let var = &m2 - &m1 * &m1;
    (ratio_to_f64(&m1), ratio_to_f64(&var))
}

/// Draws uniform weakly increasing parking functions and compares the
/// last-entry law, mean last entry and mean lucky count with exact values.
/// Standard errors come from the exact variances.
pub fn empirical_wipf_checks(n: u64, draws: u64, seed: u64) -> Result<WipfCheckReport> {
    if draws < 1 {
        return Err(domain("need at least one draw"));
    }
    let spec = SamplerSpec::new(Family::Wipf, n as usize, seed)?;
    let nu = n as usize;
    let (last_counts, lucky_sum, last_sum) = (0..draws)
        .into_par_iter()
        .fold(
            || (vec![0u64; nu], 0u64, 0u64),
            |(mut hist, lucky, last), k| {
                let alpha = sample(&spec, k);
                let l = alpha.pref(nu);
                hist[l - 1] += 1;
                let lucky_count = classical_park(&alpha).lucky.len() as u64;
                (hist, lucky + lucky_count, last + l as u64)
            },
        )
        .reduce(
            || (vec![0u64; nu], 0, 0),
            |(mut a, la, sa), (b, lb, sb)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                (a, la + lb, sa + sb)
            },
        );

    let last_probs = last_entry_distribution(n)?.probabilities();
    let last_entry: Vec<LastEntryCheck> = last_probs
        .iter()
        .enumerate()
        .map(|(idx, pr)| {
            let exact = pr.to_f64().unwrap_or(0.0);
            let count = last_counts[idx];
            LastEntryCheck {
                j: idx as u64 + 1,
                count,
                comparison: Comparison::new(
                    count as f64 / draws as f64,
                    exact,
                    binomial_se(exact, draws),
                ),
            }
        })
        .collect();
    let (last_mean, last_var) = mean_and_variance(&last_probs, 1);
    let (lucky_mean, lucky_var) = mean_and_variance(&lucky_count_distribution(n)?, 1);
    let d = draws as f64;
    let mean_last_entry = Comparison::new(last_sum as f64 / d, last_mean, (last_var / d).sqrt());
    let mean_lucky = Comparison::new(lucky_sum as f64 / d, lucky_mean, (lucky_var / d).sqrt());
    let passed = last_entry.iter().all(|c| c.comparison.passed)
        && mean_last_entry.passed
        && mean_lucky.passed;
    Ok(WipfCheckReport {
        n,
        draws,
        seed,
        last_entry,
        mean_last_entry,
        mean_lucky,
        passed,
    })
}
