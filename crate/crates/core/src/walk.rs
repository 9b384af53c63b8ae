//! Seeded simulation of the probabilistic parking protocol.
//!
//! Each car performs a simple random walk from its preferred spot (right
//! with probability `p`, left with `q = 1 - p`) until it finds a free spot.
//! Randomness is drawn from a ChaCha stream keyed by `(seed, trial, car)`, so
//! a trial's outcome depends only on those three numbers.

use std::collections::BTreeMap;

use rand::distributions::{Bernoulli, Distribution};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::parking::{OccupancyVector, OutcomePermutation, PreferenceList};

pub const DEFAULT_STEP_CAP: u64 = 1_000_000;

/// Target bound on the probability that a walk declared escaped would in
/// fact have come back and parked.
const ESCAPE_ERROR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Cars roam all of Z but can only park in `[1, n]`.
    Unbounded,
    /// Leaving `[1, n]` ends the car's search.
    Open,
}

impl std::str::FromStr for Boundary {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unbounded" => Ok(Boundary::Unbounded),
            "open" => Ok(Boundary::Open),
            _ => Err(validation(format!(
                "unknown boundary {s:?} (expected open or unbounded)"
            ))),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Unbounded => "unbounded",
            Boundary::Open => "open",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkParameters {
    p: f64,
    pub boundary: Boundary,
    pub step_cap: u64,
    escape_margin_override: Option<u64>,
    pub trace: bool,
}

impl WalkParameters {
    pub fn new(p: f64, boundary: Boundary) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(validation(format!("step probability {p} outside [0, 1]")));
        }
        Ok(WalkParameters {
            p,
            boundary,
            step_cap: DEFAULT_STEP_CAP,
            escape_margin_override: None,
            trace: false,
        })
    }

    pub fn with_step_cap(mut self, cap: u64) -> Result<Self> {
        if cap == 0 {
            return Err(validation("step cap must be at least 1"));
        }
        self.step_cap = cap;
        Ok(self)
    }

    pub fn with_escape_margin(mut self, margin: u64) -> Result<Self> {
        if margin == 0 {
            return Err(validation("escape margin must be at least 1"));
        }
        self.escape_margin_override = Some(margin);
        Ok(self)
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// Distance beyond the last reachable free spot at which an unbounded
    /// walk drifting away is declared escaped. `None` at `p = 1/2`, where
    /// only the step cap stops a non-parking walk.
    pub fn escape_margin(&self) -> Option<u64> {
        if self.p == 0.5 {
            return None;
        }
        if let Some(m) = self.escape_margin_override {
            return Some(m);
        }
        let (toward, away) = if self.p < 0.5 {
            (self.p, self.q())
        } else {
            (self.q(), self.p)
        };
        if toward == 0.0 {
            return Some(1);
        }
        // (toward/away)^margin < ESCAPE_ERROR
        let m = (ESCAPE_ERROR.ln() / (toward / away).ln()).ceil();
        Some((m as u64).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "spot", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Terminal {
    Parked(usize),
    Escaped,
    CapExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub car: usize,
    pub start: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<i64>>,
    pub steps_taken: u64,
    pub terminal: Terminal,
}

/// The RNG stream for one car in one trial.
pub fn car_stream(seed: u64, trial: u64, car: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&car.to_le_bytes());
    key[24..].copy_from_slice(b"park-car");
    ChaCha8Rng::from_seed(key)
}

/// Walks one car from `start` against a fixed occupancy.
pub fn walk_one_car<R: Rng + ?Sized>(
    car: usize,
    start: usize,
    occupied: &OccupancyVector,
    params: &WalkParameters,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    let n = occupied.n();
    if start < 1 || start > n {
        return Err(domain(format!("start spot {start} outside [1, {n}]")));
    }
    let mut positions = params.trace.then(|| vec![start as i64]);
    if !occupied.is_occupied(start as i64) {
        return Ok(TrajectoryRecord {
            car,
            start,
            positions,
            steps_taken: 0,
            terminal: Terminal::Parked(start),
        });
    }
    let (leftmost, rightmost) = match (occupied.leftmost_free(), occupied.rightmost_free()) {
        (Some(l), Some(r)) => (l as i64, r as i64),
        _ => return Err(domain("no free spot left for the car to park in")),
    };
    let n_i = n as i64;
    let margin = params.escape_margin().map(|m| m as i64);
    let drift_left = params.p < 0.5;
    let step_right = Bernoulli::new(params.p).expect("p validated on construction");

    let mut pos = start as i64;
    let mut steps = 0u64;
    let terminal = loop {
        if steps == params.step_cap {
            break Terminal::CapExceeded;
        }
        pos += if step_right.sample(rng) { 1 } else { -1 };
        steps += 1;
        if let Some(trace) = positions.as_mut() {
            trace.push(pos);
        }
        if (1..=n_i).contains(&pos) {
            if !occupied.is_occupied(pos) {
                break Terminal::Parked(pos as usize);
            }
            continue;
        }
        match params.boundary {
            Boundary::Open => break Terminal::Escaped,
            Boundary::Unbounded => {
                if let Some(m) = margin {
                    if drift_left && pos < 1 && pos <= leftmost - m {
                        break Terminal::Escaped;
                    }
                    if !drift_left && pos > n_i && pos >= rightmost + m {
                        break Terminal::Escaped;
                    }
                }
            }
        }
    };
    Ok(TrajectoryRecord {
        car,
        start,
        positions,
        steps_taken: steps,
        terminal,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub occupancy: OccupancyVector,
    pub outcome: OutcomePermutation,
    pub parked_flags: Vec<bool>,
    pub all_parked: bool,
    pub total_steps: u64,
    pub trajectories: Vec<TrajectoryRecord>,
}

impl ProtocolOutcome {
    /// Number of parked cars.
    pub fn parked_count(&self) -> usize {
        self.parked_flags.iter().filter(|f| **f).count()
    }

    /// Bitmask of parked cars (bit `i-1` for car `i`); `None` past 64 cars.
    pub fn parked_mask(&self) -> Option<u64> {
        if self.parked_flags.len() > 64 {
            return None;
        }
        Some(
            self.parked_flags
                .iter()
                .enumerate()
                .filter(|(_, f)| **f)
                .fold(0u64, |m, (i, _)| m | (1 << i)),
        )
    }
}

/// Runs all cars in label order. Under the unbounded model a car that
/// never parks never finishes its search, so later cars do not start.
pub fn run_protocol(
    alpha: &PreferenceList,
    params: &WalkParameters,
    seed: u64,
    trial_index: u64,
) -> Result<ProtocolOutcome> {
    let n = alpha.n();
    let mut occupancy = OccupancyVector::empty(n);
    let mut outcome = OutcomePermutation::empty(n);
    let mut parked_flags = vec![false; n];
    let mut total_steps = 0u64;
    let mut trajectories = Vec::with_capacity(n);
    for car in 1..=n {
        let mut rng = car_stream(seed, trial_index, car as u64);
        let rec = walk_one_car(car, alpha.pref(car), &occupancy, params, &mut rng)?;
        total_steps += rec.steps_taken;
        let halted = match rec.terminal {
            Terminal::Parked(s) => {
                occupancy.occupy(s);
                outcome.slots[s - 1] = Some(car);
                parked_flags[car - 1] = true;
                false
            }
            Terminal::Escaped => params.boundary == Boundary::Unbounded,
            Terminal::CapExceeded => true,
        };
        trajectories.push(rec);
        if halted {
            break;
        }
    }
    let all_parked = parked_flags.iter().all(|f| *f);
    Ok(ProtocolOutcome {
        occupancy,
        outcome,
        parked_flags,
        all_parked,
        total_steps,
        trajectories,
    })
}

/// Power sums of a non-negative integer sample.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentSums {
    pub count: u64,
    pub s1: u128,
    pub s2: u128,
    pub s3: u128,
    pub s4: u128,
}

impl MomentSums {
    pub fn push(&mut self, x: u64) {
        let x = x as u128;
        self.count += 1;
        self.s1 += x;
        self.s2 += x * x;
        self.s3 += x * x * x;
        self.s4 += x * x * x * x;
    }

    pub fn merge(&mut self, o: &MomentSums) {
        self.count += o.count;
        self.s1 += o.s1;
        self.s2 += o.s2;
        self.s3 += o.s3;
        self.s4 += o.s4;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.s1 as f64 / self.count as f64)
    }

    /// Unbiased sample variance, computed exactly before the final division.
    pub fn variance(&self) -> Option<f64> {
        if self.count < 2 {
            return None;
        }
        let n = self.count as u128;
        let num = n * self.s2 - self.s1 * self.s1;
        Some(num as f64 / (n * (n - 1)) as f64)
    }

    /// Standard error of the mean.
    pub fn mean_se(&self) -> Option<f64> {
        Some((self.variance()? / self.count as f64).sqrt())
    }

    /// Fourth central moment (biased, plug-in).
    pub fn central_m4(&self) -> Option<f64> {
        let mu = self.mean()?;
        let n = self.count as f64;
        let (s1, s2, s3, s4) = (
            self.s1 as f64,
            self.s2 as f64,
            self.s3 as f64,
            self.s4 as f64,
        );
        Some((s4 - 4.0 * mu * s3 + 6.0 * mu * mu * s2 - 4.0 * mu.powi(3) * s1 + n * mu.powi(4)) / n)
    }

    /// Standard error of the sample variance from its asymptotic normality:
    /// `Var(s^2) ~ (m4 - sigma^4) / N`.
    pub fn variance_se(&self) -> Option<f64> {
        let v = self.variance()?;
        let m4 = self.central_m4()?;
        Some(((m4 - v * v).max(0.0) / self.count as f64).sqrt())
    }
}

/// Aggregate of many independent protocol runs. All fields are integer
/// counts, so merging is exact and order-independent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchStats {
    pub n: usize,
    pub trials: u64,
    pub park_counts: Vec<u64>,
    pub all_park_count: u64,
    /// `pair_counts[i][j]` for `i < j` (0-indexed): trials where both parked.
    pub pair_counts: Vec<Vec<u64>>,
    /// `parked_count_hist[k]`: trials in which exactly `k` cars parked.
    pub parked_count_hist: Vec<u64>,
    /// Trials by parked-car bitmask; only kept for `n <= 64`.
    pub pattern_counts: BTreeMap<u64, u64>,
    pub cap_exceeded: u64,
    pub escaped: u64,
    /// Total steps over trials where every car parked.
    pub conditional_steps: MomentSums,
}

impl BatchStats {
    pub fn empty(n: usize) -> Self {
        BatchStats {
            n,
            trials: 0,
            park_counts: vec![0; n],
            all_park_count: 0,
            pair_counts: vec![vec![0; n]; n],
            parked_count_hist: vec![0; n + 1],
            pattern_counts: BTreeMap::new(),
            cap_exceeded: 0,
            escaped: 0,
            conditional_steps: MomentSums::default(),
        }
    }

    pub fn record(&mut self, out: &ProtocolOutcome) {
        self.trials += 1;
        let parked: Vec<usize> = out
            .parked_flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f)
            .map(|(i, _)| i)
            .collect();
        for &i in &parked {
            self.park_counts[i] += 1;
        }
        for (a, &i) in parked.iter().enumerate() {
            for &j in &parked[a + 1..] {
                self.pair_counts[i][j] += 1;
            }
        }
        self.parked_count_hist[parked.len()] += 1;
        if let Some(mask) = out.parked_mask() {
            *self.pattern_counts.entry(mask).or_insert(0) += 1;
        }
        for t in &out.trajectories {
            match t.terminal {
                Terminal::CapExceeded => self.cap_exceeded += 1,
                Terminal::Escaped => self.escaped += 1,
                Terminal::Parked(_) => {}
            }
        }
        if out.all_parked {
            self.all_park_count += 1;
            self.conditional_steps.push(out.total_steps);
        }
    }

    pub fn merge(mut self, o: BatchStats) -> BatchStats {
        self.trials += o.trials;
        for (a, b) in self.park_counts.iter_mut().zip(&o.park_counts) {
            *a += b;
        }
        self.all_park_count += o.all_park_count;
        for (ra, rb) in self.pair_counts.iter_mut().zip(&o.pair_counts) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b;
            }
        }
        for (a, b) in self.parked_count_hist.iter_mut().zip(&o.parked_count_hist) {
            *a += b;
        }
        for (k, v) in o.pattern_counts {
            *self.pattern_counts.entry(k).or_insert(0) += v;
        }
        self.cap_exceeded += o.cap_exceeded;
        self.escaped += o.escaped;
        self.conditional_steps.merge(&o.conditional_steps);
        self
    }

    /// Empirical `Pr[X_car = 1]`, `car` 1-indexed.
    pub fn park_frequency(&self, car: usize) -> f64 {
        self.park_counts[car - 1] as f64 / self.trials as f64
    }

    pub fn all_park_frequency(&self) -> f64 {
        self.all_park_count as f64 / self.trials as f64
    }

    /// Empirical `Pr[X_i X_j = 1]`, 1-indexed cars.
    pub fn pair_frequency(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let c = if a == b {
            self.park_counts[a - 1]
        } else {
            self.pair_counts[a - 1][b - 1]
        };
        c as f64 / self.trials as f64
    }

    /// Trials in which every car of `mask` parked.
    pub fn subset_count(&self, mask: u64) -> u64 {
        self.pattern_counts
            .iter()
            .filter(|(m, _)| *m & mask == mask)
            .map(|(_, c)| c)
            .sum()
    }

    pub fn summary(&self) -> BatchSummary {
        BatchSummary {
            trials: self.trials,
            park_frequencies: (1..=self.n).map(|i| self.park_frequency(i)).collect(),
            all_park_frequency: self.all_park_frequency(),
            all_park_count: self.all_park_count,
            conditional_time_samples: self.conditional_steps.count,
            conditional_time_mean: self.conditional_steps.mean(),
            conditional_time_variance: self.conditional_steps.variance(),
            pair_frequencies: (1..=self.n)
                .map(|i| (1..=self.n).map(|j| self.pair_frequency(i, j)).collect())
                .collect(),
            parked_count_hist: self.parked_count_hist.clone(),
            cap_exceeded: self.cap_exceeded,
            escaped: self.escaped,
        }
    }
}

/// Serializable view of [`BatchStats`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub trials: u64,
    pub park_frequencies: Vec<f64>,
    pub all_park_frequency: f64,
    pub all_park_count: u64,
    pub conditional_time_samples: u64,
    pub conditional_time_mean: Option<f64>,
    pub conditional_time_variance: Option<f64>,
    pub pair_frequencies: Vec<Vec<f64>>,
    pub parked_count_hist: Vec<u64>,
    pub cap_exceeded: u64,
    pub escaped: u64,
}

/// Runs `trials` independent protocol runs in parallel. Trial `t` uses the
/// streams keyed by `(seed, t, car)`.
pub fn batch_simulate(
    alpha: &PreferenceList,
    params: &WalkParameters,
    seed: u64,
    trials: u64,
) -> Result<BatchStats> {
    if trials == 0 {
        return Err(domain("batch needs at least one trial"));
    }
    let n = alpha.n();
    // tracing would only waste memory here
    let params = params.clone().with_trace(false);
    (0..trials)
        .into_par_iter()
        .try_fold(
            || BatchStats::empty(n),
            |mut acc, t| {
                let out = run_protocol(alpha, &params, seed, t)?;
                acc.record(&out);
                Ok(acc)
            },
        )
        .try_reduce(|| BatchStats::empty(n), |a, b| Ok(a.merge(b)))
}
