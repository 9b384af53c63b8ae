//! Cumulative distribution of the all-park probability over PF_n(id), on a
//! grid of step probabilities.

use num::rational::BigRational;
use num::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::Ruin;
use crate::error::{validation, Error, Result};
use crate::parking::identity_outcome_lists;
use crate::scalar::Field;

/// Largest `n` for which the `n!` preference lists are enumerated.
pub const MAX_HEATMAP_N: usize = 10;

/// Float products closer than this to a threshold are re-evaluated exactly.
const EXACT_RECHECK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapGrid {
    pub n: usize,
    pub p_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    /// `cells[a][b]`: lists whose all-park probability at `p_grid[a]` is at
    /// most `y_grid[b]`.
    pub cells: Vec<Vec<u64>>,
    /// `n!`.
    pub total: u64,
}

fn grid(resolution: usize) -> Vec<BigRational> {
    (0..=resolution)
        .map(|k| BigRational::new((k as i64).into(), (resolution as i64).into()))
        .collect()
}

/// `p` on `k / p_resolution` and `y` on `k / y_resolution`, both including
/// the endpoints 0 and 1.
pub fn heatmap(n: usize, p_resolution: usize, y_resolution: usize) -> Result<HeatmapGrid> {
    if n < 1 {
        return Err(validation("heatmap needs n >= 1"));
    }
    if n > MAX_HEATMAP_N {
        return Err(Error::TooLarge(format!(
            "heatmap enumerates all n! lists; n = {n} exceeds {MAX_HEATMAP_N}"
        )));
    }
    if p_resolution < 1 || y_resolution < 1 {
        return Err(validation("grid resolutions must be at least 1"));
    }
    let ps = grid(p_resolution);
    let ys = grid(y_resolution);
    let ys_f: Vec<f64> = ys.iter().map(Field::to_float).collect();
    // hit[a][i][s] for 1 <= s <= i <= n
    let tables: Vec<Vec<Vec<(f64, BigRational)>>> = ps
        .iter()
        .map(|p| {
            let pf = p.to_float();
            (0..=n as u64)
                .map(|i| {
                    (0..=i)
                        .map(|s| (f64::hit(i, s, &pf), BigRational::hit(i, s, p)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let total: u64 = (1..=n as u64).product();
    let cells = tables
        .iter()
        .map(|hit| {
            identity_outcome_lists(n)
                .collect::<Vec<_>>()
                .par_iter()
                .fold(
                    || vec![0u64; ys.len()],
                    |mut acc, alpha| {
                        let cars = (1..=n).map(|i| &hit[i][alpha.pref(i)]);
                        let prob: f64 = cars.clone().map(|h| h.0).product();
                        let mut exact: Option<BigRational> = None;
                        for (b, (y, yf)) in ys.iter().zip(&ys_f).enumerate() {
                            let below = if (prob - yf).abs() > EXACT_RECHECK {
                                prob <= *yf
                            } else {
                                let e = exact.get_or_insert_with(|| {
                                    cars.clone()
                                        .fold(BigRational::one(), |acc, h| acc * h.1.clone())
                                });
                                *e <= *y
                            };
                            if below {
                                acc[b] += 1;
                            }
                        }
                        acc
                    },
                )
                .reduce(
                    || vec![0u64; ys.len()],
                    |mut a, b| {
                        a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                        a
                    },
                )
        })
        .collect();
    Ok(HeatmapGrid {
        n,
        p_grid: ps.iter().map(Field::to_float).collect(),
        y_grid: ys_f,
        cells,
        total,
    })
}

impl HeatmapGrid {
    /// CSV with header `p,y,count,total`, one row per cell, `p` major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,y,count,total\n");
        for (a, p) in self.p_grid.iter().enumerate() {
            for (b, y) in self.y_grid.iter().enumerate() {
                out.push_str(&format!("{p},{y},{},{}\n", self.cells[a][b], self.total));
            }
        }
        out
    }

    /// Binary 8-bit PGM: one column per `p`, one row per `y` with the
    /// largest `y` on top; grey level `255 * count / total`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (w, h) = (self.p_grid.len(), self.y_grid.len());
        let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
        for b in (0..h).rev() {
            for a in 0..w {
                let level = (255.0 * self.cells[a][b] as f64 / self.total as f64).round();
                out.push(level as u8);
            }
        }
        out
    }

    /// Violations of the structural properties every grid must have.
    pub fn property_failures(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for (a, col) in self.cells.iter().enumerate() {
            if col.windows(2).any(|w| w[0] > w[1]) {
                bad.push(format!(
                    "column p = {} is not monotone in y",
                    self.p_grid[a]
                ));
            }
            if col.iter().any(|&c| c > self.total) {
                bad.push(format!("column p = {} exceeds n!", self.p_grid[a]));
            }
            if col.last() != Some(&self.total) {
                bad.push(format!(
                    "column p = {} does not reach n! at y = 1",
                    self.p_grid[a]
                ));
            }
        }
        let last_y = self.y_grid.len() - 1;
        if self.p_grid.first() == Some(&0.0) {
            // only the identity list parks at p = 0
            let col = &self.cells[0];
            if col[..last_y].iter().any(|&c| c != self.total - 1) {
                bad.push("p = 0 column is not n! - 1 below y = 1".into());
            }
        }
        if self.p_grid.last() == Some(&1.0) {
            let col = self.cells.last().unwrap();
            if col[..last_y].iter().any(|&c| !c.is_zero()) {
                bad.push("p = 1 column is not empty below y = 1".into());
            }
        }
        bad
    }
}
