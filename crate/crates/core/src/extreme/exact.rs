//! The `l²` extreme problem solved exactly through its Lagrange multiplier.
//!
//! For a multiplier `A` the minimizer is `η̃_k² = z0² σ_k² (1 − A a_k²)₊`.
//! The radius it attains, `r(A)`, is strictly increasing in `A`. For a given
//! `r` the support size `m` is found by bisection over the radii at
//! `A = a_m⁻²`, then the slack `1 − A a_m²` by bisection in its logarithm.
//! When the sequences are explicit tables of length `K`, the support may be
//! all of `1..=K`; below the radius reached as `A → 0` the smoothness
//! constraint is inactive and `A = 0`.
//!
//! All sums are formed with `σ_k⁴` divided by the largest `σ_k⁴` in the
//! support, which keeps them finite for severely growing `σ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{ProblemSpec, SequenceFamily, LN_MAX};
use crate::sum::Accumulator;

/// Largest working length the solver will grow to.
pub const MAX_WORKING_LENGTH: usize = 1 << 22;

const MAX_BISECTION_STEPS: usize = 200;

/// The sums `J₀, J₁, J₂` over the support, each divided by `exp(4·log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledSums {
    pub j0: f64,
    pub j1: f64,
    pub j2: f64,
    /// Scaling exponent: a quarter of the log of the largest term of `J₁`.
    pub log_scale: f64,
}

/// Minimizer of the `l²` extreme problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeSolution {
    /// Lagrange multiplier.
    #[serde(rename = "A")]
    pub multiplier: f64,
    /// Efficient dimension: the number of nonzero coordinates.
    pub m: usize,
    pub z0_sq: f64,
    /// `η̃_k²` for `k = 1..=m`.
    pub eta_sq: Vec<f64>,
    /// Detection value `u_ε`. Underflows to zero when `ln_u` is below the
    /// `f64` range.
    pub u: f64,
    /// Natural log of `u_ε`.
    pub ln_u: f64,
    /// Weights `w_k = η̃_k² / √(2 Σ η̃_j⁴)`.
    pub w: Vec<f64>,
    pub w0: f64,
    pub sums: ScaledSums,
    pub r: f64,
    pub eps: f64,
    /// Working length actually used (may exceed the requested `K`).
    pub truncation: usize,
    /// Relative residuals of `Σ a²σ²η̃² = 1` and `Σ σ²η̃² = r²`. When `A = 0`
    /// (possible only for explicit tables) the first is the excess over 1.
    pub residuals: [f64; 2],
}

impl ExtremeSolution {
    /// `ln u` from the closed form `u² = (r/ε)⁴ J₀ / (2 J₁²)`.
    pub fn ln_u_closed_form(&self) -> f64 {
        let s = &self.sums;
        2.0 * (self.r / self.eps).ln() + 0.5 * (s.j0 / 2.0).ln() - s.j1.ln() - 2.0 * s.log_scale
    }

    /// `ε⁻² Σ w_k η_k²` for an arbitrary vector `eta` (missing entries are zero).
    pub fn weighted_energy(&self, eta: &[f64]) -> f64 {
        let acc: f64 = crate::sum::sum(self.w.iter().zip(eta).map(|(w, e)| w * e * e));
        acc / (self.eps * self.eps)
    }
}

/// A multiplier `A = (1 − s)/a_m²` with support `1..=m`.
///
/// `s = 1 − A a_m²` is the slack of the last support coordinate. Holding it
/// directly keeps it exact when it is far below the rounding error of `A`,
/// as happens for rapidly growing `σ_k`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Multiplier {
    pub m: usize,
    pub s: f64,
}

/// Log sequences `2 ln a_k` and `ln σ_k` for `k = 1..=n`.
#[derive(Debug, Clone)]
pub(crate) struct Profile {
    pub la2: Vec<f64>,
    pub ls: Vec<f64>,
}

impl Profile {
    pub fn new(a: &SequenceFamily, sigma: &SequenceFamily, n: usize) -> Result<Self> {
        let la2 = a.log_values(n)?.into_iter().map(|x| 2.0 * x).collect();
        let ls = sigma.log_values(n)?;
        Ok(Self { la2, ls })
    }

    pub fn len(&self) -> usize {
        self.la2.len()
    }

    /// Number of indices with `A a_k² ≤ 1`.
    pub fn dimension(&self, ln_a: f64) -> usize {
        let bound = -ln_a + 1e-14 * ln_a.abs().max(1.0);
        self.la2.partition_point(|&v| v <= bound)
    }

    pub fn multiplier(&self, ln_a: f64) -> Multiplier {
        let m = self.dimension(ln_a).max(1);
        Multiplier {
            m,
            s: (-(ln_a + self.la2[m - 1]).exp_m1()).max(0.0),
        }
    }

    pub fn ln_a(&self, mu: Multiplier) -> f64 {
        (-mu.s).ln_1p() - self.la2[mu.m - 1]
    }

    /// Largest `s` with support `1..=m`, where `A` reaches `a_{m+1}⁻²`,
    /// or `A → 0` when `m` is the last coordinate of the profile.
    fn max_slack(&self, m: usize) -> f64 {
        if m == self.len() {
            1.0
        } else {
            -(self.la2[m - 1] - self.la2[m]).exp_m1()
        }
    }

    /// Infimum of the radii reachable with the full profile as support (`A → 0`).
    fn floor_radius(&self) -> f64 {
        let top = self.ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (Accumulator::new(), Accumulator::new());
        for (ls, la2) in self.ls.iter().zip(&self.la2) {
            let s = (4.0 * (ls - top)).exp();
            num.add(s);
            den.add(s * la2.exp());
        }
        (num.value() / den.value()).sqrt()
    }

    /// `1 − A a_k²`, clamped at zero.
    fn slack(&self, mu: Multiplier, k: usize) -> f64 {
        if k + 1 == mu.m {
            mu.s
        } else {
            (-((-mu.s).ln_1p() + self.la2[k] - self.la2[mu.m - 1]).exp_m1()).max(0.0)
        }
    }

    pub fn sums(&self, mu: Multiplier) -> ScaledSums {
        let slack: Vec<f64> = (0..mu.m).map(|k| self.slack(mu, k)).collect();
        // Scale by the largest term of J₁.
        let log_scale = slack
            .iter()
            .zip(&self.ls)
            .filter(|(y, _)| **y > 0.0)
            .map(|(y, ls)| ls + 0.25 * y.ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut j0, mut j1, mut j2) = (Accumulator::new(), Accumulator::new(), Accumulator::new());
        for (&y, ls) in slack.iter().zip(&self.ls).filter(|(y, _)| **y > 0.0) {
            let term = (4.0 * (ls - log_scale) + y.ln()).exp();
            j0.add(term * y);
            j1.add(term);
            j2.add(term * (1.0 - y));
        }
        ScaledSums {
            j0: j0.value(),
            j1: j1.value(),
            j2: j2.value(),
            log_scale,
        }
    }

    /// `r(A)` with the support limited to this profile.
    pub fn radius(&self, mu: Multiplier) -> f64 {
        let s = self.sums(mu);
        (self.ln_a(mu).exp() * s.j1 / s.j2).sqrt()
    }
}

/// Largest usable working length, and whether it is fixed by an explicit table.
fn working_cap(spec: &ProblemSpec) -> (usize, bool) {
    let mut cap = MAX_WORKING_LENGTH;
    let mut table = false;
    for fam in [&spec.a, &spec.sigma] {
        if let Some(n) = fam.max_index() {
            cap = cap.min(n);
            table = true;
        }
    }
    (cap, table)
}

/// The radius attained by the extreme sequence with multiplier `A`.
///
/// The support `{k : A a_k² ≤ 1}` is not limited by the working length of
/// `spec`; it is limited only by the length of explicit tables.
pub fn r_of_a(multiplier: f64, spec: &ProblemSpec) -> Result<f64> {
    let ln_a = multiplier.ln();
    let la2_2 = 2.0 * spec.a.log_value(2)?;
    if !(multiplier > 0.0 && multiplier.is_finite()) || ln_a > -la2_2 + 1e-14 * la2_2.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "multiplier must lie in (0, a_2^-2], got {multiplier}"
        )));
    }
    let (cap, table) = working_cap(spec);
    let mut n = spec.truncation.clamp(2, cap.max(2));
    loop {
        let la2_n = 2.0 * spec.a.log_value(n)?;
        if la2_n > -ln_a || n >= cap {
            break;
        }
        n = (2 * n).min(cap);
    }
    let profile = Profile::new(&spec.a, &spec.sigma, n)?;
    if !table && profile.dimension(ln_a) == n && n == cap && 2.0 * spec.a.log_value(n)? < -ln_a {
        return Err(Error::Domain(format!(
            "support of multiplier {multiplier} exceeds the available {cap} coordinates"
        )));
    }
    Ok(profile.radius(profile.multiplier(ln_a)))
}

/// Solve the `l²` extreme problem for `spec.r` and `spec.eps`.
///
/// The support size `m` is located by bisection over the radii at
/// `A = a_m⁻²`, then the slack `s` by bisection in `ln s`.
pub fn solve_extreme(spec: &ProblemSpec) -> Result<ExtremeSolution> {
    let r = spec.r;
    let (cap, table) = working_cap(spec);
    if cap < 2 {
        return Err(Error::InvalidSpec("at least two coordinates are required".into()));
    }
    let mut n = spec.truncation.clamp(2, cap);
    loop {
        let profile = Profile::new(&spec.a, &spec.sigma, n)?;
        let edge = |m: usize| profile.radius(Multiplier { m, s: 0.0 });
        let r_hi = edge(2);
        if !(r < r_hi) {
            return Err(Error::RadiusOutOfRange(format!(
                "r = {r} is not below the largest attainable radius {r_hi}"
            )));
        }
        if r <= edge(n) {
            if n < cap {
                n = (2 * n).min(cap);
                continue;
            }
            if !table {
                return Err(Error::RadiusOutOfRange(format!(
                    "r = {r} needs more than {cap} coordinates"
                )));
            }
            // Below the floor radius the smoothness constraint is inactive and A = 0.
            let mu = if r <= profile.floor_radius() {
                Multiplier { m: n, s: 1.0 }
            } else {
                bisect(&profile, r, n)?
            };
            return build(&profile, mu, spec);
        }
        // Largest m in 2..n with edge(m) ≥ r; edge decreases in m.
        let (mut lo, mut hi) = (2, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if edge(mid) >= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = bisect(&profile, r, lo)?;
        return build(&profile, mu, spec);
    }
}

fn bisect(profile: &Profile, r: f64, m: usize) -> Result<Multiplier> {
    let at = |ln_s: f64| Multiplier { m, s: ln_s.exp() };
    let mut lo = f64::MIN_POSITIVE.ln();
    let mut hi = profile.max_slack(m).ln();
    if profile.radius(at(lo)) <= r {
        return Ok(at(lo));
    }
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-15 * lo.abs().max(1.0) || mid <= lo || mid >= hi {
            return Ok(at(mid));
        }
        if profile.radius(at(mid)) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_BISECTION_STEPS,
        detail: format!("slack bracket [{lo}, {hi}] in log scale"),
    })
}

fn build(profile: &Profile, mu: Multiplier, spec: &ProblemSpec) -> Result<ExtremeSolution> {
    let (r, eps) = (spec.r, spec.eps);
    let m = mu.m;
    let ln_a = profile.ln_a(mu);
    let sums = profile.sums(mu);
    let ls_ref = sums.log_scale;
    let ln_j1 = sums.j1.ln();

    // ln η̃_k² = ln z0² + 2 ln σ_k + ln(1 − A a_k²), with z0² = r² / J₁.
    let ln_z0_sq = 2.0 * r.ln() - 4.0 * ls_ref - ln_j1;
    let ln_eta: Vec<f64> = (0..m)
        .map(|k| ln_z0_sq + 2.0 * profile.ls[k] + profile.slack(mu, k).ln())
        .collect();
    let top = ln_eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sq: f64 = crate::sum::sum(ln_eta.iter().map(|&t| (2.0 * (t - top)).exp()));
    let ln_u = top + 0.5 * (sq / 2.0).ln() - 2.0 * eps.ln();
    if ln_u > LN_MAX {
        return Err(Error::Overflow(format!("u_eps = exp({ln_u}) is not representable")));
    }
    let w: Vec<f64> = ln_eta
        .iter()
        .map(|&t| (t - top).exp() / (2.0 * sq).sqrt())
        .collect();
    let w0 = w.iter().copied().fold(0.0, f64::max);

    let mut smooth = Accumulator::new();
    let mut energy = Accumulator::new();
    for (k, &t) in ln_eta.iter().enumerate() {
        smooth.add((profile.la2[k] + 2.0 * profile.ls[k] + t).exp());
        energy.add((2.0 * profile.ls[k] + t - 2.0 * r.ln()).exp());
    }
    let smooth_gap = smooth.value() - 1.0;
    let smooth_res = if mu.s == 1.0 { smooth_gap.max(0.0) } else { smooth_gap.abs() };
    let residuals = [smooth_res, (energy.value() - 1.0).abs()];

    Ok(ExtremeSolution {
        multiplier: ln_a.exp(),
        m,
        z0_sq: ln_z0_sq.exp(),
        eta_sq: ln_eta.iter().map(|t| t.exp()).collect(),
        u: ln_u.exp(),
        ln_u,
        w,
        w0,
        sums,
        r,
        eps,
        truncation: profile.len(),
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_spec(r: f64, k: usize) -> ProblemSpec {
        ProblemSpec::new(
            SequenceFamily::polynomial(1.0, 1.0).unwrap(),
            SequenceFamily::polynomial(1.0, 0.0).unwrap(),
            2.0,
            r,
            1.0,
            k,
        )
        .unwrap()
    }

    #[test]
    fn radius_examples() {
        let spec = unit_spec(0.5, 10);
        assert_relative_eq!(r_of_a(0.25, &spec).unwrap(), 1.0, max_relative = 1e-12);
        let r1 = r_of_a(0.1, &spec).unwrap();
        assert_relative_eq!(r1 * r1, 1.6 / 4.2, max_relative = 1e-12);
        let r2 = r_of_a(0.2, &spec).unwrap();
        assert_relative_eq!(r2 * r2, 0.625, max_relative = 1e-12);
        assert!(r1 < r2);
        assert!(r_of_a(0.3, &spec).is_err());
        assert!(r_of_a(-1.0, &spec).is_err());
    }

    #[test]
    fn hand_worked_solution() {
        let sol = solve_extreme(&unit_spec(0.625f64.sqrt(), 10)).unwrap();
        assert_relative_eq!(sol.multiplier, 0.2, max_relative = 1e-10);
        assert_eq!(sol.m, 2);
        assert_relative_eq!(sol.z0_sq, 0.625, max_relative = 1e-9);
        assert_relative_eq!(sol.eta_sq[0], 0.5, max_relative = 1e-9);
        assert_relative_eq!(sol.eta_sq[1], 0.125, max_relative = 1e-9);
        assert_relative_eq!(sol.u, 0.364_436, max_relative = 1e-5);
        assert_relative_eq!(sol.w[0], 0.685_994, max_relative = 1e-5);
        assert_relative_eq!(sol.w[1], 0.171_499, max_relative = 1e-5);
        assert_eq!(sol.w0, sol.w[0]);
        let sw2: f64 = sol.w.iter().map(|w| w * w).sum();
        assert_relative_eq!(sw2, 0.5, max_relative = 1e-12);
        let eta: Vec<f64> = sol.eta_sq.iter().map(|e| e.sqrt()).collect();
        assert_relative_eq!(sol.weighted_energy(&eta), sol.u, max_relative = 1e-12);
    }

    #[test]
    fn working_length_grows_for_small_radius() {
        let sol = solve_extreme(&unit_spec(1e-3, 4)).unwrap();
        assert!(sol.truncation > 4);
        assert!(sol.residuals[0] < 1e-8 && sol.residuals[1] < 1e-8);
    }

    #[test]
    fn top_slack_below_rounding_of_multiplier() {
        // σ_k = e^{k²}: the slack of a_5 is about e^{-36}, far below the
        // spacing of doubles near A = 1/25. With support {4, 5} active,
        // η₄² = (25r² − 1)/(9σ₄²) and η₅² = (1 − 16r²)/(9σ₅²).
        let r: f64 = 0.2423;
        let spec = ProblemSpec::new(
            SequenceFamily::polynomial(1.0, 1.0).unwrap(),
            SequenceFamily::power_exponential(1.0, 1.0, 2.0).unwrap(),
            2.0,
            r,
            1e-3,
            20,
        )
        .unwrap();
        let sol = solve_extreme(&spec).unwrap();
        assert_eq!(sol.m, 5);
        let x4 = (25.0 * r * r - 1.0) / 9.0 * (-32.0f64).exp();
        let x5 = (1.0 - 16.0 * r * r) / 9.0 * (-50.0f64).exp();
        let u = (x4.hypot(x5) / 2f64.sqrt()) / 1e-6;
        assert_relative_eq!(sol.u, u, max_relative = 1e-9);
        assert_relative_eq!(sol.eta_sq[4], x5, max_relative = 1e-6);
        assert!(sol.residuals[0] < 1e-12 && sol.residuals[1] < 1e-12);
    }

    #[test]
    fn radius_too_large_is_rejected() {
        assert!(matches!(
            solve_extreme(&unit_spec(1.5, 10)),
            Err(Error::RadiusOutOfRange(_))
        ));
    }

    fn table_spec(a: &[f64], r: f64) -> ProblemSpec {
        ProblemSpec::new(
            SequenceFamily::table(a.to_vec()).unwrap(),
            SequenceFamily::polynomial(1.0, 0.0).unwrap(),
            2.0,
            r,
            1.0,
            a.len(),
        )
        .unwrap()
    }

    #[test]
    fn table_uses_every_coordinate() {
        // a = (1, 2), σ = (1, 1): floor radius √(2/5). Above it both
        // constraints bind and the point is unique.
        let r: f64 = 0.8;
        let sol = solve_extreme(&table_spec(&[1.0, 2.0], r)).unwrap();
        assert_eq!(sol.m, 2);
        assert_relative_eq!(sol.eta_sq[0], (4.0 * r * r - 1.0) / 3.0, max_relative = 1e-10);
        assert_relative_eq!(sol.eta_sq[1], (1.0 - r * r) / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn table_below_floor_radius_is_flat() {
        let r: f64 = 0.5;
        let sol = solve_extreme(&table_spec(&[1.0, 2.0], r)).unwrap();
        assert_eq!(sol.multiplier, 0.0);
        assert_relative_eq!(sol.eta_sq[0], r * r / 2.0, max_relative = 1e-12);
        assert_relative_eq!(sol.eta_sq[1], r * r / 2.0, max_relative = 1e-12);
        assert_eq!(sol.residuals[0], 0.0);
        assert_relative_eq!(sol.u, (r.powi(4) / 4.0).sqrt(), max_relative = 1e-12);
    }
}
