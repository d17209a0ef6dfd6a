//! Piecewise approximations of `u_ε` in the extreme regime.
//!
//! When `σ_{k+1}/σ_k → ∞` the extreme sequence lives on two coordinates,
//! `m − 1` and `m`, where `r ∈ [1/a_m, 1/a_{m−1}]`. On that interval `u*` is
//! piecewise quadratic and `u_lin` piecewise linear in `r²`.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::spectra::ProblemSpec;

/// The two-coordinate approximations on the interval containing `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinApprox {
    pub m: usize,
    pub u_star: f64,
    pub u_lin: f64,
    /// `[1/a_m, 1/a_{m−1}]`.
    pub interval: [f64; 2],
}

/// Check that the consecutive ratios `σ_{k+1}/σ_k` increase over `1..=n`.
pub fn ratios_increase(spec: &ProblemSpec, n: usize) -> Result<bool> {
    let ls = spec.sigma.log_values(n)?;
    let steps: Vec<f64> = ls.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(steps.windows(2).all(|w| w[1] > w[0]))
}

/// Evaluate `u*` and `u_lin` at `spec.r`.
pub fn u_piecewise(spec: &ProblemSpec) -> Result<LinApprox> {
    let r = spec.r;
    let ln_r = r.ln();
    let la1 = spec.a.log_value(1)?;
    if !(la1 + ln_r < 0.0) {
        return Err(Error::Domain(format!("r = {r} must be below 1/a_1")));
    }
    let n = spec.truncation;
    if !ratios_increase(spec, n)? {
        return Err(Error::Domain(
            "sigma_(k+1)/sigma_k must increase over the working range".into(),
        ));
    }
    let mut m = 2;
    while spec.a.log_value(m)? + ln_r < 0.0 {
        m += 1;
        if m > n {
            return Err(Error::Domain(format!(
                "r = {r} is below 1/a_K; increase the working length K = {n}"
            )));
        }
    }
    let (la_lo, la_hi) = (spec.a.log_value(m - 1)?, spec.a.log_value(m)?);
    let (ls_lo, ls_hi) = (spec.sigma.log_value(m - 1)?, spec.sigma.log_value(m)?);
    let lower_gap = (2.0 * (la_hi + ln_r)).exp_m1().max(0.0);
    let upper_gap = (-(2.0 * (la_lo + ln_r)).exp_m1()).max(0.0);
    let ln_span = 2.0 * la_hi + (-(2.0 * (la_lo - la_hi)).exp_m1()).ln();
    let ln_eps2 = 2.0 * spec.eps.ln();
    let p = lower_gap * (-ln_span - ln_eps2 - 2.0 * ls_lo).exp();
    let q = upper_gap * (-ln_span - ln_eps2 - 2.0 * ls_hi).exp();
    Ok(LinApprox {
        m,
        u_star: p.hypot(q) / SQRT_2,
        u_lin: p + q,
        interval: [(-la_hi).exp(), (-la_lo).exp()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::SequenceFamily;
    use approx::assert_relative_eq;

    fn spec(r: f64) -> ProblemSpec {
        ProblemSpec::new(
            SequenceFamily::polynomial(1.0, 1.0).unwrap(),
            SequenceFamily::table(vec![1.0, 3.0, 100.0, 1e5]).unwrap(),
            2.0,
            r,
            0.1,
            4,
        )
        .unwrap()
    }

    #[test]
    fn break_point_value() {
        let lin = u_piecewise(&spec(0.5)).unwrap();
        assert_eq!(lin.m, 2);
        assert_relative_eq!(lin.u_lin, 1.0 / (0.01 * 4.0 * 9.0), max_relative = 1e-12);
    }

    #[test]
    fn linear_in_r_squared() {
        let r2: f64 = (1.0 / 9.0 + 1.0 / 4.0) / 2.0;
        let mid = u_piecewise(&spec(r2.sqrt())).unwrap();
        let lo = u_piecewise(&spec(1.0 / 3.0)).unwrap();
        let hi = u_piecewise(&spec(0.5)).unwrap();
        assert_eq!(mid.m, 3);
        assert_relative_eq!(mid.u_lin, 0.5 * (lo.u_lin + hi.u_lin), max_relative = 1e-10);
    }

    #[test]
    fn rejects_large_radius() {
        assert!(u_piecewise(&spec(1.0)).is_err());
    }
}
