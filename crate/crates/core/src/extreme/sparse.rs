//! The sparse (`l^q`, `q < 2`) and Besov extreme problems.
//!
//! Both are instances of one grouped problem. Group `g` holds `m_g`
//! identical coordinates sharing `(h_g, z_g)`, `h_g ∈ [0, 1]`, `z_g ≥ 0`:
//!
//! ```text
//! minimize    Σ_g m_g · 2 h_g² sinh²(z_g²/2)
//! subject to  Σ_g p_g h_g z_g²         ≥ R²
//!             Σ_g c_g h_g^s z_g^τ      ≤ E
//! ```
//!
//! with `τ − 2s < 0`. In the `l^q` case every group is a single index,
//! `p_i = σ_i²`, `c_i = (a_i σ_i)^q`, `s = 1`, `τ = q`. In the Besov case
//! group `j` is the dyadic level with `2^j` coordinates,
//! `p_j = 2^{j(2β+1)}`, `c_j = 2^{j(t(α+β)+t/q)}`, `s = t/q`, `τ = t`.
//! In both, `R = r(1 − δ)/ε` with `δ = 1/ln(1/ε)` and `E = ε^{−τ}`.
//!
//! The solver alternates exact minimization over `x_g = h_g z_g²` with `z`
//! fixed (a convex problem) and over `z` with `x` fixed (separable after
//! dualizing the second constraint). The alternation runs from two starts
//! and keeps the better end point: the best flat profile (`h`, `z` constant
//! on a prefix or on a single group, zero elsewhere), and the primal point of
//! the Lagrangian dual, where each group minimizes its own Lagrangian term
//! for multipliers found by bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{dyadic, BesovSpec, FamilyKind, ProblemSpec};
use crate::sum;

const MAX_SWEEPS: usize = 5000;
const REL_IMPROVEMENT: f64 = 1e-8;
const BISECTION_STEPS: usize = 200;
/// Nodes of the `ln z` scan and bounds of the search in the group responses.
const RESPONSE_GRID: usize = 160;
const Z_MIN: f64 = 1e-4;
const Z_MAX: f64 = 12.0;
const RESPONSE_STEPS: usize = 40;

/// Minimizer of a sparse or Besov extreme problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSolution {
    /// `h` per group (per index, or per dyadic level).
    pub h: Vec<f64>,
    pub z: Vec<f64>,
    pub u: f64,
    /// Participation ratio `(Σ m_g h_g)² / Σ m_g h_g²`.
    pub n_eff: f64,
    pub h0: f64,
    /// Fitted `c₀` in `u² = c₀ n_eff h₀²`.
    pub c0: f64,
    /// Relative slack `Σ p h z² / R² − 1` (nonnegative when feasible).
    pub energy_slack: f64,
    /// Relative slack `1 − Σ c h^s z^τ / E` (nonnegative when feasible).
    pub smoothness_slack: f64,
    pub sweeps: usize,
    /// `log₂ n_eff`, reported for the Besov problem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j0: Option<f64>,
}

/// A grouped extreme problem in the form described in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProblem {
    pub mult: Vec<f64>,
    pub p: Vec<f64>,
    pub c: Vec<f64>,
    pub s: f64,
    pub tau: f64,
    pub r2: f64,
    pub e: f64,
}

/// Shrinkage `δ_ε = 1/ln(1/ε)` applied to the radius.
pub fn radius_shrinkage(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < (-1.0f64).exp()) {
        return Err(Error::Domain(format!("noise level {eps} must lie in (0, 1/e)")));
    }
    Ok(1.0 / (-eps.ln()))
}

/// `λ = (α+β)/2 − β/q`.
pub fn sparse_lambda(alpha: f64, beta: f64, q: f64) -> f64 {
    (alpha + beta) / 2.0 - beta / q
}

/// Polynomial exponents `(α, β)` of a spec with unit-scale polynomial families.
pub fn mild_exponents(spec: &ProblemSpec) -> Result<(f64, f64)> {
    let poly = |f: &crate::spectra::SequenceFamily| f.kind() == FamilyKind::Polynomial && f.scale() == 1.0;
    if !poly(&spec.a) || !poly(&spec.sigma) {
        return Err(Error::Unsupported(
            "sparse problems need a_k = k^α and σ_k = k^β".into(),
        ));
    }
    Ok((spec.a.exponent(), spec.sigma.exponent()))
}

/// `(sinh v / v)²`, with its logarithm for large `v`.
fn shape(v: f64) -> f64 {
    if v < 1e-4 {
        let t = 1.0 + v * v / 6.0;
        t * t
    } else {
        let q = v.sinh() / v;
        q * q
    }
}

/// `d/dv (sinh v / v)²`.
fn shape_prime(v: f64) -> f64 {
    if v < 1e-3 {
        let v2 = v * v;
        2.0 * (1.0 + v2 / 6.0 + v2 * v2 / 120.0) * v * (1.0 / 3.0 + v2 / 30.0 + v2 * v2 / 840.0)
    } else {
        2.0 * v.sinh() * (v * v.cosh() - v.sinh()) / (v * v * v)
    }
}

fn ln_shape(v: f64) -> f64 {
    if v < 20.0 {
        shape(v).ln()
    } else {
        2.0 * (v + (-(-2.0 * v).exp()).ln_1p() - std::f64::consts::LN_2 - v.ln())
    }
}

/// Smallest `t > 0` with `pred(t)` true, to relative precision `1e-13`,
/// for a predicate that is false below some threshold and true above it.
///
/// The bracket is grown geometrically around `guess` with squaring step
/// factors, so any scale within the `f64` range is reached in a few steps.
fn threshold(guess: f64, pred: impl Fn(f64) -> bool) -> Option<f64> {
    let start = if guess.is_finite() && guess > 0.0 { guess } else { 1.0 };
    let (mut lo, mut hi);
    let mut factor: f64 = 2.0;
    if pred(start) {
        hi = start;
        lo = start / factor;
        while pred(lo) {
            hi = lo;
            factor = (factor * factor).min(1e16);
            lo /= factor;
            if lo < f64::MIN_POSITIVE {
                return Some(hi);
            }
        }
    } else {
        lo = start;
        hi = start * factor;
        while !pred(hi) {
            lo = hi;
            factor = (factor * factor).min(1e16);
            hi *= factor;
            if !hi.is_finite() {
                return None;
            }
        }
    }
    for _ in 0..BISECTION_STEPS {
        if hi <= lo * (1.0 + 1e-13) {
            break;
        }
        let mid = (lo.ln() + 0.5 * (hi.ln() - lo.ln())).exp().clamp(lo, hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Smallest `t > 0` with `pred(t)`, to relative precision `1e-4`, for a
/// monotone predicate. The bracket grows by squaring factors from 1.
fn coarse_threshold(pred: impl Fn(f64) -> bool) -> Option<f64> {
    let (mut lo, mut hi) = (1.0, 1.0);
    let mut factor: f64 = 2.0;
    if pred(1.0) {
        while pred(lo) {
            hi = lo;
            lo /= factor;
            factor = (factor * factor).min(1e16);
            if lo < 1e-300 {
                return Some(hi);
            }
        }
    } else {
        while !pred(hi) {
            lo = hi;
            hi *= factor;
            factor = (factor * factor).min(1e16);
            if hi > 1e300 {
                return None;
            }
        }
    }
    while hi > lo * (1.0 + 1e-4) {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// `z` nodes, equally spaced in `ln z`, with `shape(z²/2)` and `z^κ`.
struct ZGrid {
    z: Vec<f64>,
    shape: Vec<f64>,
    zk: Vec<f64>,
}

impl ZGrid {
    fn new(kappa: f64) -> Self {
        let z: Vec<f64> = (0..=RESPONSE_GRID)
            .map(|i| (Z_MIN.ln() + (Z_MAX / Z_MIN).ln() * i as f64 / RESPONSE_GRID as f64).exp())
            .collect();
        Self {
            shape: z.iter().map(|z| shape(z * z / 2.0)).collect(),
            zk: z.iter().map(|z| z.powf(kappa)).collect(),
            z,
        }
    }
}

/// State at the end of a block descent.
struct Descent {
    x: Vec<f64>,
    z: Vec<f64>,
    f: f64,
    sweeps: usize,
    converged: bool,
}

/// Multipliers carried between sweeps as starting guesses.
#[derive(Debug, Clone, Copy)]
struct WarmStart {
    lambda: f64,
    mu_x: f64,
    mu_z: f64,
}

impl SparseProblem {
    /// The `l^q` problem of `spec` over indices `1..=K`.
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        let q = spec.q;
        if !(q > 0.0 && q < 2.0) {
            return Err(Error::Domain(format!("sparse problem needs q in (0, 2), got {q}")));
        }
        let (alpha, beta) = mild_exponents(spec)?;
        if sparse_lambda(alpha, beta, q) <= 0.0 {
            return Err(Error::Domain("degenerate case: use D_eps".into()));
        }
        let n = spec.truncation;
        let la = spec.a.log_values(n)?;
        let ls = spec.sigma.log_values(n)?;
        let delta = radius_shrinkage(spec.eps)?;
        let big_r = spec.r * (1.0 - delta) / spec.eps;
        Ok(Self {
            mult: vec![1.0; n],
            p: ls.iter().map(|l| (2.0 * l).exp()).collect(),
            c: la.iter().zip(&ls).map(|(a, s)| (q * (a + s)).exp()).collect(),
            s: 1.0,
            tau: q,
            r2: big_r * big_r,
            e: spec.eps.powf(-q),
        })
    }

    /// The Besov problem of `spec` over levels `1..=J`.
    pub fn from_besov(spec: &BesovSpec) -> Result<Self> {
        let (alpha, beta, q, t) = (spec.alpha, spec.beta, spec.q, spec.t);
        if spec.lambda() <= 0.0 {
            return Err(Error::Domain("degenerate case: use D_eps".into()));
        }
        if q > t {
            return Err(Error::Domain(format!("Besov problem needs q <= t, got q = {q}, t = {t}")));
        }
        let delta = radius_shrinkage(spec.eps)?;
        let big_r = spec.r * (1.0 - delta) / spec.eps;
        let levels = 1..=spec.levels;
        let ln2 = std::f64::consts::LN_2;
        Ok(Self {
            mult: levels.clone().map(|j| (dyadic::range(j).len()) as f64).collect(),
            p: levels.clone().map(|j| (j as f64 * (2.0 * beta + 1.0) * ln2).exp()).collect(),
            c: levels
                .map(|j| (j as f64 * (t * (alpha + beta) + t / q) * ln2).exp())
                .collect(),
            s: t / q,
            tau: t,
            r2: big_r * big_r,
            e: spec.eps.powf(-t),
        })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    fn kappa(&self) -> f64 {
        self.tau - 2.0 * self.s
    }

    /// `Σ m_g · 2 h_g² sinh²(z_g²/2)`.
    pub fn objective(&self, h: &[f64], z: &[f64]) -> f64 {
        sum::sum(self.mult.iter().zip(h).zip(z).map(|((m, h), z)| {
            let sh = (z * z / 2.0).sinh();
            2.0 * m * h * h * sh * sh
        }))
    }

    /// `(Σ p h z², Σ c h^s z^τ)`.
    pub fn constraints(&self, h: &[f64], z: &[f64]) -> (f64, f64) {
        let energy = sum::sum(self.p.iter().zip(h).zip(z).map(|((p, h), z)| p * h * z * z));
        let smooth = sum::sum(
            self.c
                .iter()
                .zip(h)
                .zip(z)
                .map(|((c, h), z)| if *h == 0.0 { 0.0 } else { c * h.powf(self.s) * z.powf(self.tau) }),
        );
        (energy, smooth)
    }

    /// True when both constraints and the box `h ∈ [0, 1]`, `z ≥ 0` hold to `tol`.
    pub fn is_feasible(&self, h: &[f64], z: &[f64], tol: f64) -> bool {
        let boxed = h.iter().all(|&v| (0.0..=1.0 + tol).contains(&v)) && z.iter().all(|&v| v >= 0.0);
        let (energy, smooth) = self.constraints(h, z);
        boxed && energy >= self.r2 * (1.0 - tol) && smooth <= self.e * (1.0 + tol)
    }

    /// Best flat profile: `x` and `z` constant on a prefix or a single group.
    fn flat_start(&self) -> (Vec<f64>, Vec<f64>) {
        let kappa = self.kappa();
        let n = self.len();
        let eval = |pp: f64, cc: f64, mm: f64| -> (f64, f64, f64) {
            let x = self.r2 / pp;
            let z_smooth = (cc * x.powf(self.s) / self.e).powf(1.0 / -kappa);
            let z = x.sqrt().max(z_smooth);
            let ln_obj = mm.ln() + 2.0 * x.ln() - std::f64::consts::LN_2 + ln_shape(z * z / 2.0);
            (ln_obj, x, z)
        };
        let mut best = (f64::INFINITY, 0.0, 0.0, 0..0);
        let (mut pp, mut cc, mut mm) = (0.0, 0.0, 0.0);
        for g in 0..n {
            pp += self.p[g];
            cc += self.c[g];
            mm += self.mult[g];
            for (range, (lo, x, z)) in [
                (0..g + 1, eval(pp, cc, mm)),
                (g..g + 1, eval(self.p[g], self.c[g], self.mult[g])),
            ] {
                if lo < best.0 {
                    best = (lo, x, z, range);
                }
            }
        }
        let (_, x0, z0, range) = best;
        let mut x = vec![0.0; n];
        x[range].fill(x0);
        (x, vec![z0; n])
    }

    fn objective_xz(&self, x: &[f64], z: &[f64]) -> f64 {
        sum::sum(
            (0..self.len()).map(|g| if x[g] == 0.0 { 0.0 } else { self.mult[g] * x[g] * x[g] / 2.0 * shape(z[g] * z[g] / 2.0) }),
        )
    }

    /// Minimize over `x` with `z` fixed; `None` when the energy constraint
    /// cannot be met under `x_g ≤ z_g²` together with the smoothness bound.
    fn x_block(&self, z: &[f64], warm: &mut WarmStart) -> Option<Vec<f64>> {
        let n = self.len();
        let kappa = self.kappa();
        let curv: Vec<f64> = (0..n).map(|g| self.mult[g] * shape(z[g] * z[g] / 2.0)).collect();
        let coef: Vec<f64> = (0..n).map(|g| self.c[g] * z[g].powf(kappa)).collect();
        let ub: Vec<f64> = z.iter().map(|z| z * z).collect();
        if sum::sum((0..n).map(|g| self.p[g] * ub[g])) < self.r2 {
            return None;
        }
        let s = self.s;
        let x_of = |g: usize, lam: f64, mu: f64| -> f64 {
            let target = lam * self.p[g];
            if s == 1.0 {
                return ((target - mu * coef[g]) / curv[g]).clamp(0.0, ub[g]);
            }
            let lhs = |x: f64| curv[g] * x + mu * s * coef[g] * x.powf(s - 1.0);
            if target <= lhs(0.0) {
                return 0.0;
            }
            if lhs(ub[g]) <= target {
                return ub[g];
            }
            let (mut a, mut b) = (0.0, ub[g]);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b || b - a <= 1e-14 * b {
                    break;
                }
                if lhs(mid) < target {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            b
        };
        let solve_lambda = |mu: f64, guess: f64| -> (f64, Vec<f64>) {
            let energy = |lam: f64| sum::sum((0..n).map(|g| self.p[g] * x_of(g, lam, mu)));
            let lam = threshold(guess, |l| energy(l) >= self.r2).unwrap_or(f64::MAX);
            (lam, (0..n).map(|g| x_of(g, lam, mu)).collect())
        };
        let smooth = |x: &[f64]| sum::sum((0..n).map(|g| if x[g] == 0.0 { 0.0 } else { coef[g] * x[g].powf(s) }));
        let (lam, free) = solve_lambda(0.0, warm.lambda);
        if smooth(&free) <= self.e {
            warm.lambda = lam;
            return Some(free);
        }
        let mu = threshold(warm.mu_x, |mu| smooth(&solve_lambda(mu, lam).1) <= self.e)?;
        let (lam, x) = solve_lambda(mu, lam);
        warm.lambda = lam;
        warm.mu_x = mu;
        (smooth(&x) <= self.e * (1.0 + 1e-12)).then_some(x)
    }

    /// Minimize over `z` with `x` fixed, subject to `z_g² ≥ x_g` and the smoothness bound.
    fn z_block(&self, x: &[f64], z: &mut [f64], warm: &mut WarmStart) {
        let kappa = self.kappa();
        let s = self.s;
        let active: Vec<usize> = (0..self.len()).filter(|&g| x[g] > 0.0).collect();
        let z_of = |g: usize, mu: f64, guess: f64| -> f64 {
            let floor = x[g].sqrt();
            let a = self.mult[g] * x[g] * x[g] / 2.0;
            let b = mu * self.c[g] * x[g].powf(s) * -kappa;
            let rising = |zz: f64| zz >= floor && a * shape_prime(zz * zz / 2.0) * zz >= b * zz.powf(kappa - 1.0);
            if mu == 0.0 || rising(floor) {
                return floor;
            }
            threshold(guess.max(floor), rising).unwrap_or(f64::MAX)
        };
        let smooth = |zs: &[f64]| sum::sum(active.iter().zip(zs).map(|(&g, zz)| self.c[g] * x[g].powf(s) * zz.powf(kappa)));
        let solve = |mu: f64| -> Vec<f64> { active.iter().map(|&g| z_of(g, mu, z[g])).collect() };
        let floor = solve(0.0);
        let best = if smooth(&floor) <= self.e {
            floor
        } else {
            let Some(mu) = threshold(warm.mu_z, |mu| smooth(&solve(mu)) <= self.e) else {
                return;
            };
            warm.mu_z = mu;
            solve(mu)
        };
        for (&g, zz) in active.iter().zip(best) {
            z[g] = zz;
        }
    }

    /// Value `m/2 x² S − lam p x + mu c x^s z^κ` minimized over `0 ≤ x ≤ z²`
    /// for group `g` at one `z`, given `S = shape(z²/2)` and `z^κ`.
    /// Returns `(x, value)`.
    fn response_at(&self, g: usize, lam: f64, mu: f64, z: f64, shape_z: f64, zk: f64) -> (f64, f64) {
        let s = self.s;
        let (lp, mc) = (lam * self.p[g], mu * self.c[g]);
        let quad = self.mult[g] * shape_z / 2.0;
        let cap = z * z;
        let x = if s == 1.0 {
            ((lp - mc * zk) / (2.0 * quad)).clamp(0.0, cap)
        } else {
            let slope = |x: f64| 2.0 * quad * x + mc * s * x.powf(s - 1.0) * zk - lp;
            if slope(cap) <= 0.0 {
                cap
            } else {
                let (mut a, mut b) = (0.0, cap);
                for _ in 0..RESPONSE_STEPS {
                    let mid = 0.5 * (a + b);
                    if slope(mid) < 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                a
            }
        };
        let smooth = if x == 0.0 { 0.0 } else { mc * x.powf(s) * zk };
        (x, quad * x * x - lp * x + smooth)
    }

    /// Group `g`'s minimizer `(x, z)` of the Lagrangian term at `(lam, mu)`
    /// over the `ln z` grid, refined by golden-section search when `refine`.
    fn response(&self, g: usize, lam: f64, mu: f64, grid: &ZGrid, refine: bool) -> (f64, f64) {
        let mut best = (0.0, grid.z[0], 0.0, 0);
        for i in 0..grid.z.len() {
            let (x, v) = self.response_at(g, lam, mu, grid.z[i], grid.shape[i], grid.zk[i]);
            if v < best.2 {
                best = (x, grid.z[i], v, i);
            }
        }
        let (x, z, v, i) = best;
        if !refine || v >= 0.0 {
            return (x, z);
        }
        let kappa = self.kappa();
        let at = |ln_z: f64| {
            let z = ln_z.exp();
            self.response_at(g, lam, mu, z, shape(z * z / 2.0), z.powf(kappa))
        };
        let last = grid.z.len() - 1;
        let (mut a, mut b) = (grid.z[i.saturating_sub(1)].ln(), grid.z[(i + 1).min(last)].ln());
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut c, mut d) = (b - ratio * (b - a), a + ratio * (b - a));
        let (mut fc, mut fd) = (at(c).1, at(d).1);
        for _ in 0..RESPONSE_STEPS {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = at(c).1;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = at(d).1;
            }
        }
        let mid = 0.5 * (a + b);
        let (xm, vm) = at(mid);
        if vm < v {
            (xm, mid.exp())
        } else {
            (x, z)
        }
    }

    /// Primal point of the Lagrangian dual: the group responses at the
    /// multipliers where the energy reaches `R²` and the smoothness `E`.
    fn dual_start(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.len();
        let kappa = self.kappa();
        let grid = ZGrid::new(kappa);
        let respond = |lam: f64, mu: f64, refine: bool| -> (Vec<f64>, Vec<f64>) {
            (0..n).map(|g| self.response(g, lam, mu, &grid, refine)).unzip()
        };
        let energy = |x: &[f64]| sum::sum((0..n).map(|g| self.p[g] * x[g]));
        let smooth = |x: &[f64], z: &[f64]| {
            sum::sum((0..n).map(|g| if x[g] == 0.0 { 0.0 } else { self.c[g] * x[g].powf(self.s) * z[g].powf(kappa) }))
        };
        let lam_of = |mu: f64| coarse_threshold(|lam| energy(&respond(lam, mu, false).0) >= self.r2);
        let feasible = |mu: f64| match lam_of(mu) {
            Some(lam) => {
                let (x, z) = respond(lam, mu, false);
                smooth(&x, &z) <= self.e
            }
            None => false,
        };
        let mu = if feasible(0.0) { 0.0 } else { coarse_threshold(feasible)? };
        let lam = lam_of(mu)?;
        let refined = respond(lam, mu, true);
        let coarse = respond(lam, mu, false);
        [refined, coarse]
            .into_iter()
            .find(|(x, z)| energy(x) >= self.r2 * (1.0 - 1e-9) && smooth(x, z) <= self.e * (1.0 + 1e-9))
    }

    /// Alternate the `x` and `z` blocks from `(x, z)` until the relative
    /// improvement falls below the tolerance.
    fn descend(&self, mut x: Vec<f64>, mut z: Vec<f64>) -> Descent {
        let mut f = self.objective_xz(&x, &z);
        let mut warm = WarmStart {
            lambda: 1.0,
            mu_x: 1.0,
            mu_z: 1.0,
        };
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < MAX_SWEEPS {
            sweeps += 1;
            if let Some(nx) = self.x_block(&z, &mut warm) {
                if self.objective_xz(&nx, &z) <= f {
                    x = nx;
                }
            }
            let mut nz = z.clone();
            self.z_block(&x, &mut nz, &mut warm);
            let nf = self.objective_xz(&x, &nz);
            if nf <= f {
                z = nz;
            }
            let improved = f - nf.min(f);
            f = nf.min(f);
            if improved <= REL_IMPROVEMENT * f {
                converged = true;
                break;
            }
        }
        Descent { x, z, f, sweeps, converged }
    }

    /// Solve the problem by block descent from the flat start and from the
    /// dual start, keeping the better result.
    pub fn solve(&self) -> Result<SparseSolution> {
        if self.is_empty() {
            return Err(Error::InvalidSpec("empty problem".into()));
        }
        let (x, z) = self.flat_start();
        let mut best = self.descend(x, z);
        if let Some((x, z)) = self.dual_start() {
            let alt = self.descend(x, z);
            if alt.converged && (!best.converged || alt.f < best.f) {
                best = alt;
            }
        }
        let Descent { x, z, sweeps, converged, .. } = best;
        let h: Vec<f64> = x
            .iter()
            .zip(&z)
            .map(|(x, z)| if *x == 0.0 { 0.0 } else { (x / (z * z)).min(1.0) })
            .collect();
        let (energy, smooth) = self.constraints(&h, &z);
        let energy_slack = energy / self.r2 - 1.0;
        let smoothness_slack = 1.0 - smooth / self.e;
        if !converged || energy_slack < -1e-6 || smoothness_slack < -1e-6 {
            return Err(Error::NonConvergence {
                iterations: sweeps,
                detail: format!(
                    "energy slack {energy_slack:.3e}, smoothness slack {smoothness_slack:.3e}"
                ),
            });
        }
        let u = self.objective(&h, &z).sqrt();
        let mass = sum::sum(self.mult.iter().zip(&h).map(|(m, h)| m * h));
        let mass2 = sum::sum(self.mult.iter().zip(&h).map(|(m, h)| m * h * h));
        let n_eff = mass * mass / mass2;
        let h0 = h.iter().copied().fold(0.0, f64::max);
        Ok(SparseSolution {
            c0: u * u / (n_eff * h0 * h0),
            h,
            z,
            u,
            n_eff,
            h0,
            energy_slack,
            smoothness_slack,
            sweeps,
            j0: None,
        })
    }
}

/// Solve the `l^q` extreme problem of `spec` (requires `q < 2` and `λ > 0`).
pub fn solve_sparse_extreme(spec: &ProblemSpec) -> Result<SparseSolution> {
    SparseProblem::from_spec(spec)?.solve()
}

/// Solve the Besov extreme problem of `spec` (requires `λ > 0` and `q ≤ t`).
pub fn solve_besov_extreme(spec: &BesovSpec) -> Result<SparseSolution> {
    let mut sol = SparseProblem::from_besov(spec)?.solve()?;
    sol.j0 = Some(sol.n_eff.log2());
    Ok(sol)
}

/// Statistic of the degenerate (`λ ≤ 0`) regime:
/// `D_ε = n^{−β} r/ε − √(2 ln n)` with `n = r^{−1/α}`.
pub fn d_eps(spec: &ProblemSpec) -> Result<f64> {
    let (alpha, beta) = mild_exponents(spec)?;
    if sparse_lambda(alpha, beta, spec.q) > 0.0 {
        return Err(Error::Domain("D_eps applies only when λ <= 0".into()));
    }
    if !(alpha > 0.0) || spec.r >= 1.0 {
        return Err(Error::Domain("D_eps needs α > 0 and r < 1".into()));
    }
    let n = spec.r.powf(-1.0 / alpha);
    Ok(n.powf(-beta) * spec.r / spec.eps - (2.0 * n.ln()).sqrt())
}
