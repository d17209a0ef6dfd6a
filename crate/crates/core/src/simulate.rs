//! Monte Carlo estimation of test errors.
//!
//! Every replicate draws from its own ChaCha stream keyed by
//! `(seed, experiment id)` with the stream index derived from the replicate
//! number, so a report is a pure function of its inputs and does not depend
//! on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreme::{mild_exponents, ExtremeSolution, SparseSolution};
use crate::spectra::{dyadic, ProblemSpec};
use crate::sum;
use crate::testing::{apply, ErrorPrediction, Statistic, TestRule};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Replicates per work item; chunk sums are combined in a fixed order.
const CHUNK: u64 = 1024;

/// One draw of `y_k = η_k + ε ξ_k`, `k = 1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: Vec<f64>,
    pub eps: f64,
}

/// Draw an observation of length `k`; `eta = None` is the null `η = 0`.
/// Coordinates of `eta` beyond `k` are ignored and missing ones are zero.
pub fn sample<R: Rng + ?Sized>(eta: Option<&[f64]>, eps: f64, k: usize, rng: &mut R) -> Observation {
    let mut y = vec![0.0; k];
    fill(&mut y, eta.unwrap_or(&[]), eps, rng);
    Observation { y, eps }
}

fn fill<R: Rng + ?Sized>(y: &mut [f64], eta: &[f64], eps: f64, rng: &mut R) {
    let split = eta.len().min(y.len());
    let (head, tail) = y.split_at_mut(split);
    for (yi, e) in head.iter_mut().zip(eta) {
        *yi = e + eps * rng.sample::<f64, _>(StandardNormal);
    }
    for yi in tail {
        *yi = eps * rng.sample::<f64, _>(StandardNormal);
    }
}

/// Generator for replicate `rep` of experiment `experiment`.
pub fn stream(seed: u64, experiment: u64, rep: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&experiment.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(rep);
    rng
}

/// The least favorable alternative `η̃_k = +√(η̃_k²)`.
pub fn least_favorable(sol: &ExtremeSolution) -> Vec<f64> {
    sol.eta_sq.iter().map(|e| e.sqrt()).collect()
}

/// Indices `0..` where the running sum of `weights` crosses `n + 1/2`, at
/// least one (the largest weight) when the total is below `1/2`.
fn systematic_positions(weights: impl Iterator<Item = f64>) -> Vec<usize> {
    let mut acc = sum::Accumulator::new();
    let mut prev = 0.0f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut picks = Vec::new();
    for (i, w) in weights.enumerate() {
        acc.add(w);
        let now = acc.value();
        if (now + 0.5).floor() > (prev + 0.5).floor() {
            picks.push(i);
        }
        if w > best.1 {
            best = (i, w);
        }
        prev = now;
    }
    if picks.is_empty() && best.1 > 0.0 {
        picks.push(best.0);
    }
    picks
}

/// A deterministic member of the sparse least favorable prior: coordinate
/// `i` carries `ε z_i` at systematically spaced positions, about `h_i` of
/// them per unit of cumulative weight, and zero elsewhere.
pub fn sparse_representative(sol: &SparseSolution, eps: f64) -> Vec<f64> {
    let mut eta = vec![0.0; sol.h.len()];
    for i in systematic_positions(sol.h.iter().copied()) {
        eta[i] = eps * sol.z[i];
    }
    eta
}

/// Dyadic version of [`sparse_representative`]: level `j` contributes
/// weight `h_j` for each of its `2^j` coordinates.
pub fn besov_representative(sol: &SparseSolution, eps: f64) -> Vec<f64> {
    let levels = sol.h.len() as u32;
    let mut eta = vec![0.0; dyadic::total_len(levels)];
    let weights = (1..=levels).flat_map(|j| std::iter::repeat_n(sol.h[j as usize - 1], 1 << j));
    for i in systematic_positions(weights) {
        let j = (i + 2).ilog2();
        eta[i] = eps * sol.z[j as usize - 1];
    }
    eta
}

/// Single spike `η_n = r n^{−β}` at `n = ⌊r^{−1/α}⌋`: the hardest point of
/// the degenerate (`λ ≤ 0`) sparse problem for thresholding tests.
pub fn spike_alternative(spec: &ProblemSpec) -> Result<Vec<f64>> {
    let (alpha, beta) = mild_exponents(spec)?;
    if !(spec.r < 1.0 && alpha > 0.0) {
        return Err(Error::Domain("spike alternative needs α > 0 and r < 1".into()));
    }
    let n = (spec.r.powf(-1.0 / alpha) * (1.0 + 1e-12)).floor().max(1.0) as usize;
    let mut eta = vec![0.0; n];
    eta[n - 1] = spec.r * (n as f64).powf(-beta);
    Ok(eta)
}

/// Run settings shared by the Monte Carlo routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub reps: u64,
    pub seed: u64,
    /// Experiment id; the null uses stream key `2·id`, the alternative `2·id + 1`.
    #[serde(default)]
    pub experiment: u64,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl McOptions {
    pub fn new(reps: u64, seed: u64) -> Self {
        Self {
            reps,
            seed,
            experiment: 0,
            threads: None,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn with_experiment(mut self, experiment: u64) -> Self {
        self.experiment = experiment;
        self
    }

    fn run<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(f()),
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map(|pool| pool.install(f))
                .map_err(|e| Error::Domain(format!("cannot start {t} worker threads: {e}"))),
        }
    }
}

/// 95% Wilson interval half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intervals {
    pub alpha: f64,
    pub beta: f64,
    /// Sum of the two half-widths (the samples are independent).
    pub gamma: f64,
}

/// Raw rejection counts behind a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    /// Null replicates that rejected.
    pub null_rejections: u64,
    /// Alternative replicates that accepted.
    pub alt_acceptances: u64,
}

/// Estimated error probabilities of one rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub reps: u64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub gamma_hat: f64,
    pub ci: Intervals,
    pub theory: Option<ErrorPrediction>,
    pub seed: u64,
    pub counts: Counts,
}

impl MonteCarloReport {
    fn from_counts(counts: Counts, reps: u64, seed: u64) -> Self {
        let alpha_hat = counts.null_rejections as f64 / reps as f64;
        let beta_hat = counts.alt_acceptances as f64 / reps as f64;
        let (a, b) = (wilson_halfwidth(counts.null_rejections, reps), wilson_halfwidth(counts.alt_acceptances, reps));
        Self {
            reps,
            alpha_hat,
            beta_hat,
            gamma_hat: alpha_hat + beta_hat,
            ci: Intervals { alpha: a, beta: b, gamma: a + b },
            theory: None,
            seed,
            counts,
        }
    }

    pub fn with_theory(mut self, theory: ErrorPrediction) -> Self {
        self.theory = Some(theory);
        self
    }
}

/// Half-width of the 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_halfwidth(k: u64, n: u64) -> f64 {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Whether one replicate rejects, drawing the randomization from `rng`.
fn decide<R: Rng + ?Sized>(rule: &TestRule, y: &[f64], eps: f64, rng: &mut R) -> Result<bool> {
    let out = apply(rule, y, eps)?;
    let p = out.reject_probability;
    Ok(if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.random::<f64>() < p
    })
}

fn working_length(rule: &TestRule, eta: &[f64]) -> usize {
    let n = rule.working_length();
    if n == 0 {
        eta.len()
    } else {
        n
    }
}

/// Count, over `reps` replicates, how often `count(decision)` holds.
fn count_decisions(
    rule: &TestRule,
    eta: &[f64],
    eps: f64,
    opts: &McOptions,
    key: u64,
    count: fn(bool) -> bool,
) -> Result<u64> {
    let n = working_length(rule, eta);
    let chunks = opts.reps.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |y, c| {
                let mut hits = 0u64;
                for rep in c * CHUNK..((c + 1) * CHUNK).min(opts.reps) {
                    let mut rng = stream(opts.seed, key, rep);
                    fill(y, eta, eps, &mut rng);
                    if count(decide(rule, y, eps, &mut rng)?) {
                        hits += 1;
                    }
                }
                Ok(hits)
            },
        )
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn check_run(eps: f64, opts: &McOptions) -> Result<()> {
    if opts.reps == 0 {
        return Err(Error::Domain("reps must be at least 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("noise level must be positive, got {eps}")));
    }
    Ok(())
}

/// Estimate type I error under the null and type II error at `eta_alt`.
pub fn estimate_errors(rule: &TestRule, eta_alt: &[f64], eps: f64, opts: &McOptions) -> Result<MonteCarloReport> {
    check_run(eps, opts)?;
    let key = 2 * opts.experiment;
    let counts = opts.run(|| -> Result<Counts> {
        Ok(Counts {
            null_rejections: count_decisions(rule, &[], eps, opts, key, |r| r)?,
            alt_acceptances: count_decisions(rule, eta_alt, eps, opts, key + 1, |r| !r)?,
        })
    })??;
    Ok(MonteCarloReport::from_counts(counts, opts.reps, opts.seed))
}

/// Which half of an experiment's replicates to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Null,
    Alternative,
}

/// Number of rejections over one half of an experiment.
///
/// Reproduces the corresponding count of [`estimate_errors`] with the same
/// options: `null_rejections` for the null, `reps − alt_acceptances` for the
/// alternative. Several alternatives tested by one rule can share a null run.
pub fn rejections(rule: &TestRule, hypothesis: Hypothesis, eta_alt: &[f64], eps: f64, opts: &McOptions) -> Result<u64> {
    check_run(eps, opts)?;
    let (eta, key) = match hypothesis {
        Hypothesis::Null => (&[][..], 2 * opts.experiment),
        Hypothesis::Alternative => (eta_alt, 2 * opts.experiment + 1),
    };
    opts.run(|| count_decisions(rule, eta, eps, opts, key, |r| r))?
}

/// One replicate's outcome, for raw CSV export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    /// `"null"` or `"alt"`.
    pub hypothesis: &'static str,
    pub rep: u64,
    pub statistic: Statistic,
    pub reject: bool,
}

/// Per-replicate outcomes with the same streams as [`estimate_errors`].
pub fn replicate_records(rule: &TestRule, eta_alt: &[f64], eps: f64, opts: &McOptions) -> Result<Vec<ReplicateRecord>> {
    let n = working_length(rule, eta_alt);
    let key = 2 * opts.experiment;
    let one = |hypothesis: &'static str, eta: &[f64], key: u64, rep: u64| -> Result<ReplicateRecord> {
        let mut rng = stream(opts.seed, key, rep);
        let mut y = vec![0.0; n];
        fill(&mut y, eta, eps, &mut rng);
        let out = apply(rule, &y, eps)?;
        let p = out.reject_probability;
        let reject = p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p);
        Ok(ReplicateRecord {
            hypothesis,
            rep,
            statistic: out.statistic,
            reject,
        })
    };
    opts.run(|| {
        let null = (0..opts.reps).into_par_iter().map(|rep| one("null", &[], key, rep));
        let alt = (0..opts.reps).into_par_iter().map(|rep| one("alt", eta_alt, key + 1, rep));
        null.chain(alt).collect()
    })?
}

/// Monte Carlo check of `E₀ L² = ∏ cosh(η_k²/ε²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// 95% normal half-width of `lhs`.
    pub ci: f64,
}

/// Largest `η_k²/ε²` accepted by [`likelihood_diagnostic`].
pub const MAX_LIKELIHOOD_SNR: f64 = 0.5;

/// Average `L²(y) = ∏ e^{−η_k²/ε²} cosh²(y_k η_k/ε²)` over null draws.
pub fn likelihood_diagnostic(eta: &[f64], eps: f64, opts: &McOptions) -> Result<LikelihoodCheck> {
    if opts.reps < 2 {
        return Err(Error::Domain("reps must be at least 2".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("noise level must be positive, got {eps}")));
    }
    let snr: Vec<f64> = eta.iter().map(|e| (e / eps) * (e / eps)).collect();
    if let Some(m) = snr.iter().copied().find(|s| !(*s <= MAX_LIKELIHOOD_SNR)) {
        return Err(Error::Domain(format!(
            "η_k²/ε² = {m} exceeds {MAX_LIKELIHOOD_SNR}: the estimator of E L² is too heavy-tailed"
        )));
    }
    let rhs = sum::sum(snr.iter().map(|s| s.cosh().ln())).exp();
    if eta.is_empty() || snr.iter().all(|s| *s == 0.0) {
        return Ok(LikelihoodCheck { lhs: 1.0, rhs, ci: 0.0 });
    }
    let n = eta.len();
    let chunks = opts.reps.div_ceil(CHUNK);
    let key = 2 * opts.experiment;
    let partial: Vec<(f64, f64)> = opts.run(|| {
        (0..chunks)
            .into_par_iter()
            .map_init(
                || vec![0.0; n],
                |y, c| {
                    let mut s1 = sum::Accumulator::new();
                    let mut s2 = sum::Accumulator::new();
                    for rep in c * CHUNK..((c + 1) * CHUNK).min(opts.reps) {
                        let mut rng = stream(opts.seed, key, rep);
                        fill(y, &[], eps, &mut rng);
                        let ln_l = sum::sum(
                            y.iter()
                                .zip(eta)
                                .zip(&snr)
                                .map(|((y, e), s)| -0.5 * s + (y * e / (eps * eps)).cosh().ln()),
                        );
                        let l2 = (2.0 * ln_l).exp();
                        s1.add(l2);
                        s2.add(l2 * l2);
                    }
                    (s1.value(), s2.value())
                },
            )
            .collect()
    })?;
    let reps = opts.reps as f64;
    let mean = sum::sum(partial.iter().map(|p| p.0)) / reps;
    let second = sum::sum(partial.iter().map(|p| p.1)) / reps;
    let var = (second - mean * mean).max(0.0) * reps / (reps - 1.0);
    Ok(LikelihoodCheck {
        lhs: mean,
        rhs,
        ci: Z95 * (var / reps).sqrt(),
    })
}

/// Least-squares fit of `ln u` on `ln r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub r2: f64,
}

/// Fit `ln u = slope · ln r + intercept` to at least 5 points spanning two decades in `r`.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 5 {
        return Err(Error::Domain(format!("need at least 5 points, got {}", points.len())));
    }
    if points.iter().any(|&(r, u)| !(r > 0.0 && u > 0.0 && r.is_finite() && u.is_finite())) {
        return Err(Error::Domain("points must be positive and finite".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if hi - lo < 2.0 * std::f64::consts::LN_10 * (1.0 - 1e-9) {
        return Err(Error::Domain("degenerate spread: r must span at least two decades".into()));
    }
    let n = xs.len() as f64;
    let mx = sum::sum(xs.iter().copied()) / n;
    let my = sum::sum(ys.iter().copied()) / n;
    let sxx = sum::sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let sxy = sum::sum(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)));
    let syy = sum::sum(ys.iter().map(|y| (y - my) * (y - my)));
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}
