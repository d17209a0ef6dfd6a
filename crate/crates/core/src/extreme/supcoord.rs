//! Minimizing the largest coordinate over a two-constraint polytope.
//!
//! Over `x ≥ 0` with `Σ b_i c_i x_i ≤ 1` and `Σ c_i x_i ≥ r`, the infimum of
//! `sup_i x_i` is attained at `(w, …, w, w0, 0, …)` with `m − 1` copies of `w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupCoordSolution {
    pub m: usize,
    pub w: f64,
    pub w0: f64,
    pub x_star: Vec<f64>,
}

/// `B_k = Σ_{i≤k} c_i / Σ_{i≤k} b_i c_i` for `k = 1..=n`.
pub fn b_ratios(b: &[f64], c: &[f64]) -> Vec<f64> {
    let mut num = sum::Accumulator::new();
    let mut den = sum::Accumulator::new();
    b.iter()
        .zip(c)
        .map(|(&bi, &ci)| {
            num.add(ci);
            den.add(bi * ci);
            num.value() / den.value()
        })
        .collect()
}

/// `C_k = 1 / Σ_{i≤k} b_i c_i` for `k = 1..=n`.
pub fn c_bounds(b: &[f64], c: &[f64]) -> Vec<f64> {
    let mut den = sum::Accumulator::new();
    b.iter()
        .zip(c)
        .map(|(&bi, &ci)| {
            den.add(bi * ci);
            1.0 / den.value()
        })
        .collect()
}

pub fn solve_sup_coordinate(b: &[f64], c: &[f64], r: f64) -> Result<SupCoordSolution> {
    if b.len() != c.len() || b.len() < 2 {
        return Err(Error::Domain("b and c need equal lengths of at least 2".into()));
    }
    if b.iter().chain(c).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Domain("b and c must be positive".into()));
    }
    if b.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("b must be strictly increasing".into()));
    }
    let ratios = b_ratios(b, c);
    let (first, last) = (ratios[0], ratios[ratios.len() - 1]);
    if !(r >= last && r <= first) {
        return Err(Error::Domain(format!("r = {r} outside [B_K, B_1] = [{last}, {first}]")));
    }
    let m = (2..=b.len())
        .find(|&k| ratios[k - 1] <= r)
        .expect("B_K <= r was checked");
    let bm = b[m - 1];
    let denom = sum::sum((0..m - 1).map(|i| c[i] * (bm - b[i])));
    let w = (r * bm - 1.0) / denom;
    let w0 = sum::sum((0..m - 1).map(|i| c[i] * (1.0 - r * b[i]))) / (c[m - 1] * denom);
    let mut x_star = vec![0.0; b.len()];
    x_star[..m - 1].fill(w);
    x_star[m - 1] = w0;
    Ok(SupCoordSolution { m, w, w0, x_star })
}
