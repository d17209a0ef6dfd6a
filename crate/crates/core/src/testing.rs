//! Test statistics and decision rules.
//!
//! Observations are `y_k = η_k + ε ξ_k`; every statistic works with the
//! standardized coordinates `y_k / ε`. A [`TestRule`] is an immutable
//! description of a test; [`apply`] evaluates it on one observation vector.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::extreme::{ExtremeSolution, SparseSolution};
use crate::normal;
use crate::spectra::{dyadic, BesovSpec, LN_MAX};
use crate::sum;

/// Decision mode of the sparse tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparseMode {
    /// Reject when the likelihood-type statistic exceeds `H` and some
    /// coordinate exceeds its threshold.
    G,
    /// Reject when some coordinate exceeds its threshold.
    D,
    /// Reject with probability `α + (1 − α)·1{some coordinate exceeds its threshold}`.
    DRandomized(f64),
}

/// A test, fully specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestRule {
    /// `Σ w_k ((y_k/ε)² − 1) > H`.
    WeightedChiSq {
        w: Vec<f64>,
        #[serde(rename = "H")]
        h: f64,
    },
    /// `(2m)^{−1/2} Σ_{k≤m} ((y_k/ε)² − 1) > H`.
    TruncatedChiSq {
        m: usize,
        #[serde(rename = "H")]
        h: f64,
    },
    /// Reject when `|y_k| ≥ ε T_k` for some `k`.
    MaxThreshold {
        #[serde(rename = "T")]
        t: Vec<f64>,
    },
    /// Likelihood-type statistic `u⁻¹ Σ h_i ξ(y_i/ε, z_i)` combined with the
    /// coordinatewise thresholds `Q_i`.
    SparseCombined {
        h: Vec<f64>,
        z: Vec<f64>,
        u: f64,
        #[serde(rename = "H")]
        level: f64,
        #[serde(rename = "Q")]
        q: Vec<f64>,
        mode: SparseMode,
    },
    /// Truncated chi-square statistics at `m = 2^k`, `k ≥ L`, `2^k ≤ n`,
    /// each compared with `√(C ln k)`.
    AdaptiveChiGrid {
        #[serde(rename = "L")]
        l: usize,
        #[serde(rename = "C")]
        c: f64,
        n: usize,
    },
    /// `|y_k| > ε H_k` for some `k ≤ n`, with `H_k = √(2 ln L)` below `L`
    /// and `√(C ln k)` from `L` on.
    AdaptiveMaxGrid {
        #[serde(rename = "L")]
        l: usize,
        #[serde(rename = "C")]
        c: f64,
        n: usize,
    },
    /// `|y_k| > ε T_k` for some `k ≤ n`, `T_k = max(T_ε, √(2(ln k + ln max(ln k, 1))))`.
    ExtremeAdaptiveMax {
        #[serde(rename = "T_eps")]
        t_eps: f64,
        n: usize,
    },
    /// Per-level version of [`TestRule::SparseCombined`] on dyadic levels `1..=J`.
    BesovSparse {
        h: Vec<f64>,
        z: Vec<f64>,
        u: f64,
        #[serde(rename = "H")]
        level: f64,
        #[serde(rename = "Q")]
        q: Vec<f64>,
        mode: SparseMode,
    },
    /// Maximum of a level-threshold test, per-level chi-square tests and a
    /// grid of per-level likelihood-type tests.
    BesovAdaptive {
        #[serde(rename = "J0")]
        j0: u32,
        #[serde(rename = "J1")]
        j1: u32,
        c: f64,
        #[serde(rename = "J")]
        levels: u32,
    },
}

/// Value of a test statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Statistic {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// Result of applying a rule to one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: Statistic,
    /// The deterministic decision. For a randomized rule this is the
    /// threshold event; the rule rejects with `reject_probability`.
    pub reject: bool,
    pub reject_probability: f64,
}

impl TestOutcome {
    fn deterministic(statistic: Statistic, reject: bool) -> Self {
        Self {
            statistic,
            reject,
            reject_probability: if reject { 1.0 } else { 0.0 },
        }
    }
}

/// How the level of a weighted chi-square test is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// `H = Φ⁻¹(1 − α)`.
    Alpha(f64),
    /// `H = u/2`, balancing both error types.
    TotalError,
    /// A given `H`.
    Threshold(f64),
}

/// Error prediction mode for [`theoretical_errors`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    Gaussian,
    /// Degenerate asymptotics with the given `D_ε`.
    Degenerate(f64),
}

/// Predicted type II error `β` and total error `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPrediction {
    pub beta: f64,
    pub gamma: f64,
}

/// `ln max(x, 1)`: the clamped inner logarithm used by all thresholds.
fn ln_floor1(x: f64) -> f64 {
    x.max(1.0).ln()
}

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        let s = (0.5 * a).sinh();
        (2.0 * s * s).ln_1p()
    } else {
        a + (-2.0 * a).exp().ln_1p() - LN_2
    }
}

/// `ξ(t, z) = e^{z²/2} cosh(t z) − 1`.
///
/// Under the null its mean is `e^{z²} − 1`, not zero. The statistics of this
/// module use [`xi_centered`] instead.
pub fn xi_kernel(t: f64, z: f64) -> Result<f64> {
    exp_m1_checked(0.5 * z * z + ln_cosh(t * z), t, z)
}

/// `e^{−z²/2} cosh(t z) − 1`: mean zero and variance `2 sinh²(z²/2)` when
/// `t` is standard normal.
pub fn xi_centered(t: f64, z: f64) -> Result<f64> {
    exp_m1_checked(-0.5 * z * z + ln_cosh(t * z), t, z)
}

fn exp_m1_checked(arg: f64, t: f64, z: f64) -> Result<f64> {
    if arg > LN_MAX {
        return Err(Error::Overflow(format!("kernel at ({t}, {z}) exceeds the f64 range")));
    }
    Ok(arg.exp_m1())
}

/// [`xi_centered`] with overflow mapped to `+∞`.
fn xi_or_inf(t: f64, z: f64) -> f64 {
    xi_centered(t, z).unwrap_or(f64::INFINITY)
}

/// Weighted chi-square test from the extreme sequence.
pub fn build_weighted(sol: &ExtremeSolution, level: Level) -> TestRule {
    let h = match level {
        Level::Alpha(a) => normal::upper_quantile(a),
        Level::TotalError => sol.u / 2.0,
        Level::Threshold(h) => h,
    };
    TestRule::WeightedChiSq { w: sol.w.clone(), h }
}

pub fn build_truncated(m: usize, h: f64) -> Result<TestRule> {
    if m == 0 {
        return Err(Error::Domain("truncated chi-square needs m >= 1".into()));
    }
    Ok(TestRule::TruncatedChiSq { m, h })
}

/// Union-bound thresholds `T_{m,k}` at level `alpha`.
pub fn build_max_threshold(m: usize, alpha: f64) -> Result<TestRule> {
    if m < 2 {
        return Err(Error::Domain(format!("max-threshold test needs m >= 2, got {m}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let top = normal::upper_quantile(alpha / 6.0);
    let mut t = vec![top; m];
    if m >= 3 {
        let zeta: f64 = sum::sum((1..=m - 2).map(|j| 1.0 / (j * j) as f64));
        let c = 1.0 / (6.0 * zeta);
        for (k, tk) in t.iter_mut().enumerate().take(m - 2) {
            let d = (m - (k + 1) - 1) as f64;
            *tk = normal::upper_quantile(c * alpha / (d * d));
        }
    }
    Ok(TestRule::MaxThreshold { t })
}

/// Which adaptive rule [`build_adaptive`] assembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptiveKind {
    ChiGrid,
    MaxGrid,
    ExtremeMax,
}

/// Default grid start `L = max(2, ⌈√ln(1/ε)⌉)`.
pub fn default_grid_start(eps: f64) -> usize {
    ((-eps.ln()).max(0.0).sqrt().ceil() as usize).max(2)
}

/// Default grid constant `C`.
pub const DEFAULT_GRID_C: f64 = 3.0;

/// Adaptive rules over the first `n` coordinates.
pub fn build_adaptive(kind: AdaptiveKind, l: usize, c: f64, t_eps: f64, n: usize) -> Result<TestRule> {
    if n == 0 {
        return Err(Error::Domain("adaptive tests need n >= 1".into()));
    }
    match kind {
        AdaptiveKind::ChiGrid | AdaptiveKind::MaxGrid => {
            if !(c > 2.0) {
                return Err(Error::Domain(format!("grid constant C must exceed 2, got {c}")));
            }
            if l < 2 {
                return Err(Error::Domain(format!("grid start L must be at least 2, got {l}")));
            }
            Ok(if kind == AdaptiveKind::ChiGrid {
                TestRule::AdaptiveChiGrid { l, c, n }
            } else {
                TestRule::AdaptiveMaxGrid { l, c, n }
            })
        }
        AdaptiveKind::ExtremeMax => {
            if !(t_eps > 0.0) {
                return Err(Error::Domain(format!("T_eps must be positive, got {t_eps}")));
            }
            Ok(TestRule::ExtremeAdaptiveMax { t_eps, n })
        }
    }
}

/// `T_{ε,k} = max(T_ε, √(2(ln k + ln max(ln k, 1))))`.
pub fn extreme_threshold(t_eps: f64, k: usize) -> f64 {
    let lk = (k as f64).ln();
    t_eps.max((2.0 * (lk + ln_floor1(lk))).sqrt())
}

/// `H_k` of the adaptive max grid.
pub fn max_grid_threshold(l: usize, c: f64, k: usize) -> f64 {
    if k < l {
        (2.0 * (l as f64).ln()).sqrt()
    } else {
        (c * (k as f64).ln()).sqrt()
    }
}

/// `Q_{ε,i} = √(2(ln i + ln max(ln i, 1) + 2 ln max(ln(1/ε), 1)))`.
pub fn sparse_threshold(eps: f64, i: usize) -> f64 {
    let li = (i as f64).ln();
    (2.0 * (li + ln_floor1(li) + 2.0 * ln_floor1(-eps.ln()))).sqrt()
}

/// `Q_{ε,j} = √(2(j ln 2 + ln j + 2 ln max(ln(1/ε), 1)))`.
pub fn besov_threshold(eps: f64, j: u32) -> f64 {
    let jf = j as f64;
    (2.0 * (jf * LN_2 + jf.ln() + 2.0 * ln_floor1(-eps.ln()))).sqrt()
}

/// Sparse test from a solved `l^q` extreme problem.
pub fn build_sparse(sol: &SparseSolution, eps: f64, level: f64, mode: SparseMode) -> Result<TestRule> {
    check_mode(mode)?;
    let q = (1..=sol.h.len()).map(|i| sparse_threshold(eps, i)).collect();
    Ok(TestRule::SparseCombined {
        h: sol.h.clone(),
        z: sol.z.clone(),
        u: sol.u,
        level,
        q,
        mode,
    })
}

/// Pure thresholding test over `n` coordinates (mode `D` or randomized `D`).
pub fn build_thresholding(n: usize, eps: f64, mode: SparseMode) -> Result<TestRule> {
    check_mode(mode)?;
    if mode == SparseMode::G {
        return Err(Error::Domain("mode G needs the extreme sequence; use build_sparse".into()));
    }
    Ok(TestRule::SparseCombined {
        h: Vec::new(),
        z: Vec::new(),
        u: 1.0,
        level: 0.0,
        q: (1..=n).map(|i| sparse_threshold(eps, i)).collect(),
        mode,
    })
}

/// Sparse test from a solved Besov extreme problem.
pub fn build_besov_sparse(sol: &SparseSolution, spec: &BesovSpec, level: f64, mode: SparseMode) -> Result<TestRule> {
    check_mode(mode)?;
    if sol.h.len() != spec.levels as usize {
        return Err(Error::Domain("solution and spec disagree on the number of levels".into()));
    }
    Ok(TestRule::BesovSparse {
        h: sol.h.clone(),
        z: sol.z.clone(),
        u: sol.u,
        level,
        q: (1..=spec.levels).map(|j| besov_threshold(spec.eps, j)).collect(),
        mode,
    })
}

fn check_mode(mode: SparseMode) -> Result<()> {
    match mode {
        SparseMode::DRandomized(a) if !(0.0..1.0).contains(&a) => {
            Err(Error::Domain(format!("randomization level must lie in [0, 1), got {a}")))
        }
        _ => Ok(()),
    }
}

/// Upper end of the admissible `c` range, `(ln 2)/4`.
pub const BESOV_C_MAX: f64 = LN_2 / 4.0;

/// Default `c` of the Besov adaptive grid.
pub const DEFAULT_BESOV_C: f64 = 0.1;

/// `(J₀, J₁)` defaults: `max(2, ⌈ln ln(1/ε)⌉)` and `⌈ln ln(1/ε) · ln(1/ε)⌉`,
/// the latter capped at the number of levels.
pub fn default_besov_range(eps: f64, levels: u32) -> (u32, u32) {
    let l = ln_floor1(-eps.ln()).max(f64::MIN_POSITIVE);
    let j0 = (l.ceil() as u32).max(2);
    let j1 = ((l * (-eps.ln())).ceil() as u32).min(levels);
    (j0, j1.max(j0.min(levels)))
}

/// Adaptive Besov test. `None` arguments take the defaults.
pub fn build_besov_adaptive(spec: &BesovSpec, c: Option<f64>, range: Option<(u32, u32)>) -> Result<TestRule> {
    let c = c.unwrap_or(DEFAULT_BESOV_C);
    if !(c > 0.0 && c < BESOV_C_MAX) {
        return Err(Error::Domain(format!("c must lie in (0, {BESOV_C_MAX}), got {c}")));
    }
    let (j0, j1) = range.unwrap_or_else(|| default_besov_range(spec.eps, spec.levels));
    if j0 < 2 || j1 < j0 || j1 > spec.levels {
        return Err(Error::Domain(format!(
            "need 2 <= J0 <= J1 <= J = {}, got J0 = {j0}, J1 = {j1}",
            spec.levels
        )));
    }
    Ok(TestRule::BesovAdaptive {
        j0,
        j1,
        c,
        levels: spec.levels,
    })
}

/// `K(j) = (ln j)/2`.
pub fn besov_k(j: u32) -> f64 {
    (j as f64).ln() / 2.0
}

/// The grid `z_{j,k}`, `k = 1..=⌊K(j) + c j⌋`: `e^{k−1}/√j` for `k ≤ ⌈K(j)⌉`,
/// then `√(k − K(j))`.
pub fn besov_z_grid(j: u32, c: f64) -> Vec<f64> {
    let kj = besov_k(j);
    let first = kj.ceil().max(1.0) as usize;
    let last = (kj + c * j as f64).floor().max(first as f64) as usize;
    (1..=last)
        .map(|k| {
            if k <= first {
                ((k - 1) as f64).exp() / (j as f64).sqrt()
            } else {
                (k as f64 - kj).sqrt()
            }
        })
        .collect()
}

/// `T_{ε,j}` of the level-threshold part: `√(2 C J₀)` up to `J₀`, then `√(2(C j + ln j))`, `C = ln 2`.
pub fn besov_level_threshold(j0: u32, j: u32) -> f64 {
    if j <= j0 {
        (2.0 * LN_2 * j0 as f64).sqrt()
    } else {
        (2.0 * (LN_2 * j as f64 + (j as f64).ln())).sqrt()
    }
}

impl TestRule {
    /// Number of leading coordinates of `y` the rule reads.
    pub fn working_length(&self) -> usize {
        match self {
            TestRule::WeightedChiSq { w, .. } => w.len(),
            TestRule::TruncatedChiSq { m, .. } => *m,
            TestRule::MaxThreshold { t } => t.len(),
            TestRule::SparseCombined { h, q, .. } => h.len().max(q.len()),
            TestRule::AdaptiveChiGrid { n, .. }
            | TestRule::AdaptiveMaxGrid { n, .. }
            | TestRule::ExtremeAdaptiveMax { n, .. } => *n,
            TestRule::BesovSparse { h, .. } => dyadic::total_len(h.len() as u32),
            TestRule::BesovAdaptive { levels, .. } => dyadic::total_len(*levels),
        }
    }
}

fn chi(y: f64, eps: f64) -> f64 {
    let t = y / eps;
    t * t - 1.0
}

/// Evaluate `rule` on the observation `y` at noise level `eps`.
pub fn apply(rule: &TestRule, y: &[f64], eps: f64) -> Result<TestOutcome> {
    let need = rule.working_length();
    if y.len() < need {
        return Err(Error::Domain(format!(
            "observation has {} coordinates, rule needs {need}",
            y.len()
        )));
    }
    Ok(match rule {
        TestRule::WeightedChiSq { w, h } => {
            let t: f64 = w.iter().zip(y).map(|(w, y)| w * chi(*y, eps)).sum();
            TestOutcome::deterministic(Statistic::Scalar(t), t > *h)
        }
        TestRule::TruncatedChiSq { m, h } => {
            let t = y[..*m].iter().map(|y| chi(*y, eps)).sum::<f64>() / (2.0 * *m as f64).sqrt();
            TestOutcome::deterministic(Statistic::Scalar(t), t > *h)
        }
        TestRule::MaxThreshold { t } => {
            let scaled: Vec<f64> = y[..t.len()].iter().map(|y| y.abs() / eps).collect();
            let reject = scaled.iter().zip(t).any(|(s, t)| s >= t);
            TestOutcome::deterministic(Statistic::Vector(scaled), reject)
        }
        TestRule::SparseCombined { h, z, u, level, q, mode } => {
            let event = y.iter().zip(q).any(|(y, q)| y.abs() / eps > *q);
            let l = || sum::sum(h.iter().zip(z).zip(y).map(|((h, z), y)| h * xi_or_inf(y / eps, *z))) / u;
            sparse_outcome(*mode, event, *level, l)
        }
        TestRule::BesovSparse { h, z, u, level, q, mode } => {
            let levels = h.len() as u32;
            let event = (1..=levels).any(|j| {
                let qj = q[j as usize - 1];
                y[dyadic::range(j)].iter().any(|y| y.abs() / eps > qj)
            });
            let l = || {
                sum::sum((1..=levels).map(|j| {
                    let g = j as usize - 1;
                    let zj = z[g];
                    h[g] * sum::sum(y[dyadic::range(j)].iter().map(|y| xi_or_inf(y / eps, zj)))
                })) / u
            };
            sparse_outcome(*mode, event, *level, l)
        }
        TestRule::AdaptiveChiGrid { l, c, n } => {
            let top = usize::BITS - 1 - n.leading_zeros();
            let mut stats = Vec::new();
            let mut reject = false;
            let mut acc = sum::Accumulator::new();
            let mut filled = 0;
            for k in 1..=top as usize {
                let m = 1usize << k;
                acc.extend(y[filled..m].iter().map(|y| chi(*y, eps)));
                filled = m;
                if k >= *l {
                    let t = acc.value() / (2.0 * m as f64).sqrt();
                    reject |= t > (c * (k as f64).ln()).sqrt();
                    stats.push(t);
                }
            }
            TestOutcome::deterministic(Statistic::Vector(stats), reject)
        }
        TestRule::AdaptiveMaxGrid { l, c, n } => {
            let ratio = (1..=*n)
                .map(|k| y[k - 1].abs() / (eps * max_grid_threshold(*l, *c, k)))
                .fold(0.0, f64::max);
            TestOutcome::deterministic(Statistic::Scalar(ratio), ratio > 1.0)
        }
        TestRule::ExtremeAdaptiveMax { t_eps, n } => {
            let ratio = (1..=*n)
                .map(|k| y[k - 1].abs() / (eps * extreme_threshold(*t_eps, k)))
                .fold(0.0, f64::max);
            TestOutcome::deterministic(Statistic::Scalar(ratio), ratio > 1.0)
        }
        TestRule::BesovAdaptive { j0, j1, c, levels } => besov_adaptive(*j0, *j1, *c, *levels, y, eps),
    })
}

fn sparse_outcome(mode: SparseMode, event: bool, level: f64, l: impl Fn() -> f64) -> TestOutcome {
    match mode {
        SparseMode::G => {
            let stat = l();
            TestOutcome::deterministic(Statistic::Scalar(stat), event && stat > level)
        }
        SparseMode::D => TestOutcome::deterministic(Statistic::Scalar(if event { 1.0 } else { 0.0 }), event),
        SparseMode::DRandomized(a) => TestOutcome {
            statistic: Statistic::Scalar(if event { 1.0 } else { 0.0 }),
            reject: event,
            reject_probability: if event { 1.0 } else { a },
        },
    }
}

/// Statistic is `[max level-threshold ratio, max chi-square ratio, max grid ratio]`;
/// the rule rejects when any exceeds 1.
fn besov_adaptive(j0: u32, j1: u32, c: f64, levels: u32, y: &[f64], eps: f64) -> TestOutcome {
    let mut level_ratio: f64 = 0.0;
    let mut chi_ratio: f64 = 0.0;
    let mut grid_ratio: f64 = 0.0;
    for j in 1..=levels {
        let yj = &y[dyadic::range(j)];
        let tj = besov_level_threshold(j0, j);
        level_ratio = yj.iter().fold(level_ratio, |m, y| m.max(y.abs() / (eps * tj)));
        if j < j0 {
            continue;
        }
        let jf = j as f64;
        let lj = sum::sum(yj.iter().map(|y| chi(*y, eps))) * (-(jf + 1.0) / 2.0 * LN_2).exp();
        chi_ratio = chi_ratio.max(lj / (2.0 * jf.ln().sqrt()));
        if j <= j1 {
            let t_j = (5.0 * jf.ln()).sqrt();
            for z in besov_z_grid(j, c) {
                let sh = (z * z / 2.0).sinh();
                let norm = ((jf + 1.0) * LN_2).exp().sqrt() * sh;
                let s = sum::sum(yj.iter().map(|y| xi_or_inf(y / eps, z)));
                grid_ratio = grid_ratio.max(s / norm / t_j);
            }
        }
    }
    let reject = level_ratio > 1.0 || chi_ratio > 1.0 || grid_ratio > 1.0;
    TestOutcome::deterministic(Statistic::Vector(vec![level_ratio, chi_ratio, grid_ratio]), reject)
}

/// Asymptotic error predictions.
///
/// Gaussian: `β = Φ(H − u)` with `H = Φ⁻¹(1 − α)`, `γ = 2Φ(−u/2)`.
/// Degenerate: `β = (1 − α)Φ(−D)`, `γ = Φ(−D)`.
pub fn theoretical_errors(u: f64, alpha: f64, mode: PredictionMode) -> ErrorPrediction {
    match mode {
        PredictionMode::Gaussian => ErrorPrediction {
            beta: normal::cdf(normal::upper_quantile(alpha) - u),
            gamma: 2.0 * normal::sf(u / 2.0),
        },
        PredictionMode::Degenerate(d) => ErrorPrediction {
            beta: (1.0 - alpha) * normal::sf(d),
            gamma: normal::sf(d),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(o: &TestOutcome) -> f64 {
        match o.statistic {
            Statistic::Scalar(s) => s,
            _ => panic!("expected a scalar statistic"),
        }
    }

    #[test]
    fn xi_values() {
        assert_eq!(xi_kernel(3.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(xi_kernel(0.0, 1.3).unwrap(), (0.845f64).exp_m1(), max_relative = 1e-14);
        assert_relative_eq!(xi_kernel(1.0, 1.0).unwrap(), 0.5f64.exp() * 1f64.cosh() - 1.0, max_relative = 1e-14);
        assert_relative_eq!(xi_kernel(1.0, 1.0).unwrap(), 1.544_110, max_relative = 1e-6);
        assert_relative_eq!(xi_kernel(1e-5, 1e-5).unwrap(), 5e-11, max_relative = 1e-9);
        assert!(xi_kernel(1e3, 1e3).is_err());
        assert_eq!(xi_centered(0.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(xi_centered(1.0, 1.0).unwrap(), (-0.5f64).exp() * 1f64.cosh() - 1.0, max_relative = 1e-14);
        assert_relative_eq!(xi_centered(1e-4, 1e-3).unwrap(), -5e-7 + 5e-15, max_relative = 1e-6);
    }

    #[test]
    fn chi_square_examples() {
        let eps = 0.1;
        let rule = build_truncated(2, 0.5).unwrap();
        let out = apply(&rule, &[eps, eps], eps).unwrap();
        assert_eq!(scalar(&out), 0.0);
        assert!(!out.reject);
        let out = apply(&rule, &[2.0 * eps, 0.0], eps).unwrap();
        assert_relative_eq!(scalar(&out), 1.0, max_relative = 1e-14);
        let w = TestRule::WeightedChiSq {
            w: vec![0.685_994, 0.171_499],
            h: 1.0,
        };
        let out = apply(&w, &[2.0 * eps, 0.0], eps).unwrap();
        assert_relative_eq!(scalar(&out), 1.886_483, max_relative = 1e-12);
        assert!(out.reject);
        assert!(apply(&w, &[1.0], eps).is_err());
    }

    #[test]
    fn max_threshold_values() {
        let TestRule::MaxThreshold { t } = build_max_threshold(2, 0.3).unwrap() else {
            unreachable!()
        };
        assert_relative_eq!(t[0], 1.644_853_626_951_472, max_relative = 1e-12);
        assert_eq!(t[0], t[1]);
        let TestRule::MaxThreshold { t } = build_max_threshold(3, 0.3).unwrap() else {
            unreachable!()
        };
        assert_relative_eq!(t[0], 1.644_853_626_951_472, max_relative = 1e-12);
        for m in [3, 5, 50, 400] {
            let TestRule::MaxThreshold { t } = build_max_threshold(m, 0.05).unwrap() else {
                unreachable!()
            };
            let total: f64 = t.iter().map(|&x| normal::sf(x)).sum();
            assert!((total - 0.025).abs() < 1e-10, "m = {m}: {total}");
        }
        assert!(build_max_threshold(1, 0.05).is_err());
    }

    #[test]
    fn adaptive_thresholds() {
        assert_relative_eq!(max_grid_threshold(10, 3.0, 3), 2.145_966, max_relative = 1e-6);
        assert!(build_adaptive(AdaptiveKind::ChiGrid, 3, 2.0, 0.0, 64).is_err());
        let rule = build_adaptive(AdaptiveKind::ChiGrid, 2, 3.0, 0.0, 64).unwrap();
        let out = apply(&rule, &[0.0; 64], 1.0).unwrap();
        assert!(!out.reject);
        assert!(matches!(out.statistic, Statistic::Vector(ref v) if v.len() == 5));
        let tail: f64 = (1..=100).map(|k| normal::sf(extreme_threshold(4.0, k))).sum();
        assert!(tail <= 0.01, "{tail}");
    }

    #[test]
    fn besov_grid_values() {
        assert_relative_eq!(besov_z_grid(4, 0.1)[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(besov_k(7), 7f64.ln() / 2.0);
        let spec = BesovSpec::new(2.0, 1.0, 1.0, 1.5, 0.01, 1e-4, 8).unwrap();
        assert!(build_besov_adaptive(&spec, Some(0.2), None).is_err());
        let rule = build_besov_adaptive(&spec, None, None).unwrap();
        let y = vec![0.0; rule.working_length()];
        let out = apply(&rule, &y, 1e-4).unwrap();
        assert!(!out.reject);
    }

    #[test]
    fn predictions() {
        let p = theoretical_errors(2.0, 0.05, PredictionMode::Gaussian);
        assert_relative_eq!(p.beta, 0.361_240, max_relative = 1e-5);
        assert_relative_eq!(p.gamma, 0.317_311, max_relative = 1e-5);
        let p = theoretical_errors(1e-12, 0.05, PredictionMode::Gaussian);
        assert_relative_eq!(p.beta, 0.95, max_relative = 1e-9);
        let p = theoretical_errors(1.0, 0.05, PredictionMode::Degenerate(0.0));
        assert_relative_eq!(p.beta, 0.475);
        assert_relative_eq!(p.gamma, 0.5);
    }

    #[test]
    fn rules_round_trip_through_json() {
        let rules = vec![
            build_max_threshold(4, 0.05).unwrap(),
            build_thresholding(10, 1e-3, SparseMode::DRandomized(0.05)).unwrap(),
            build_adaptive(AdaptiveKind::MaxGrid, 3, 3.0, 0.0, 100).unwrap(),
        ];
        for rule in rules {
            let text = serde_json::to_string(&rule).unwrap();
            let back: TestRule = serde_json::from_str(&text).unwrap();
            assert_eq!(back, rule);
        }
    }
}
