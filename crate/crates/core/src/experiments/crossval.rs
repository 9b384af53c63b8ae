//! Monte Carlo against the closed forms on a fixed panel of preference lists.

use serde::Serialize;

use crate::analytics::{
    open_expected_time_all, open_prob_all, open_time_variance_all, unbounded_expected_time_all,
    unbounded_prob_all, unbounded_variance_all,
};
use crate::error::{validation, Result};
use crate::parking::PreferenceList;
use crate::scalar::StepProbability;
use crate::stats::{binomial_se, Comparison};
use crate::walk::{batch_simulate, Boundary, WalkParameters};

/// Conditional moments are only compared with at least this many samples.
pub const MIN_CONDITIONAL_SAMPLES: u64 = 30;

const PANEL: [&[usize]; 20] = [
    &[1],
    &[1, 1],
    &[1, 2],
    &[1, 1, 1],
    &[1, 1, 2],
    &[1, 2, 1],
    &[1, 1, 3],
    &[1, 1, 1, 1],
    &[1, 2, 2, 3],
    &[1, 1, 3, 2],
    &[1, 1, 1, 1, 1],
    &[1, 2, 1, 3, 2],
    &[1, 1, 2, 2, 5],
    &[1, 1, 1, 1, 1, 1],
    &[1, 2, 3, 1, 2, 3],
    &[1, 1, 1, 4, 4, 4],
    &[1, 1, 1, 1, 1, 1, 1],
    &[1, 2, 1, 2, 1, 2, 1],
    &[1, 1, 1, 1, 1, 1, 1, 1],
    &[1, 2, 3, 4, 1, 2, 3, 4],
];

/// Twenty identity-outcome lists with `n <= 8`.
pub fn standard_panel() -> Vec<PreferenceList> {
    PANEL
        .iter()
        .map(|v| PreferenceList::new(v.to_vec()).expect("panel lists are valid"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValCell {
    pub alpha: PreferenceList,
    pub p: f64,
    pub boundary: Boundary,
    pub trials: u64,
    pub park: Option<Comparison>,
    pub conditional_samples: u64,
    pub mean: Option<Comparison>,
    pub variance: Option<Comparison>,
    /// Why a comparison was skipped.
    pub notes: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValReport {
    pub n_max: usize,
    pub p_set: Vec<f64>,
    pub boundary: Boundary,
    pub trials: u64,
    pub seed: u64,
    pub cells: Vec<CrossValCell>,
    pub failures: usize,
}

/// Seed for one panel cell, so that cells sharing a prefix of cars do not
/// share random streams.
pub fn cell_seed(seed: u64, alpha: &PreferenceList, p: f64, boundary: Boundary) -> u64 {
    // SplitMix64 finaliser over the cell's coordinates
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    let mut h = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
    for &a in alpha.as_slice() {
        h = mix(h ^ a as u64);
    }
    h = mix(h ^ alpha.n() as u64 ^ 0xff << 56);
    h = mix(h ^ p.to_bits());
    mix(h ^ (boundary == Boundary::Open) as u64)
}

/// Compares one list at one `p`. Park frequency is checked with the
/// binomial standard error at the exact probability, the conditional mean
/// with the exact conditional variance, and the conditional variance with
/// the standard error of the sample variance.
pub fn cross_validate_cell(
    alpha: &PreferenceList,
    p: f64,
    boundary: Boundary,
    trials: u64,
    seed: u64,
) -> Result<CrossValCell> {
    let params = WalkParameters::new(p, boundary)?;
    let sp = StepProbability::float(p)?;
    let mut notes = Vec::new();
    let mut cell = CrossValCell {
        alpha: alpha.clone(),
        p,
        boundary,
        trials,
        park: None,
        conditional_samples: 0,
        mean: None,
        variance: None,
        notes: Vec::new(),
        passed: true,
    };
    if boundary == Boundary::Unbounded && p == 0.5 {
        // null-recurrent walks: the step cap, not the model, decides the
        // outcome of a long excursion
        cell.notes
            .push("unbounded walk at p = 1/2 has no finite mean time; skipped".into());
        return Ok(cell);
    }
    let stats = batch_simulate(alpha, &params, seed, trials)?;
    let (exact_park, moments) = match boundary {
        Boundary::Open => {
            let park = open_prob_all(alpha, &sp)?.as_f64();
            let moments = (park > 0.0)
                .then(|| -> Result<(f64, f64)> {
                    Ok((
                        open_expected_time_all(alpha, &sp)?.as_f64(),
                        open_time_variance_all(alpha, &sp)?.as_f64(),
                    ))
                })
                .transpose()?;
            (park, moments)
        }
        Boundary::Unbounded => {
            let park = unbounded_prob_all(alpha, &sp)?.as_f64();
            let moments = if p > 0.5 {
                Some((
                    unbounded_expected_time_all(alpha, &sp)?.as_f64(),
                    unbounded_variance_all(alpha, &sp)?.as_f64(),
                ))
            } else {
                notes.push("conditional moments are only tabulated for p > 1/2".into());
                None
            };
            (park, moments)
        }
    };
    cell.park = Some(Comparison::new(
        stats.all_park_frequency(),
        exact_park,
        binomial_se(exact_park, trials),
    ));
    let cs = &stats.conditional_steps;
    cell.conditional_samples = cs.count;
    if let Some((mean, var)) = moments {
        if cs.count < MIN_CONDITIONAL_SAMPLES {
            notes.push(format!(
                "only {} runs with every car parked; moments not compared",
                cs.count
            ));
        } else {
            let n = cs.count as f64;
            cell.mean = Some(Comparison::new(cs.mean().unwrap(), mean, (var / n).sqrt()));
            cell.variance = Some(Comparison::new(
                cs.variance().unwrap(),
                var,
                cs.variance_se().unwrap(),
            ));
        }
    }
    cell.notes = notes;
    cell.passed = [&cell.park, &cell.mean, &cell.variance]
        .iter()
        .all(|c| c.as_ref().map_or(true, |c| c.passed));
    Ok(cell)
}

/// Runs every panel list with `n <= n_max` at every `p` in `p_set`, each
/// cell with its own seed from [`cell_seed`].
pub fn formula_cross_validation(
    n_max: usize,
    p_set: &[f64],
    boundary: Boundary,
    trials: u64,
    seed: u64,
) -> Result<CrossValReport> {
    if p_set.is_empty() {
        return Err(validation("p_set is empty"));
    }
    let mut cells = Vec::new();
    for alpha in standard_panel().into_iter().filter(|a| a.n() <= n_max) {
        for &p in p_set {
            let s = cell_seed(seed, &alpha, p, boundary);
            cells.push(cross_validate_cell(&alpha, p, boundary, trials, s)?);
        }
    }
    let failures = cells.iter().filter(|c| !c.passed).count();
    Ok(CrossValReport {
        n_max,
        p_set: p_set.to_vec(),
        boundary,
        trials,
        seed,
        cells,
        failures,
    })
}
