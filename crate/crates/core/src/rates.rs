//! Separation rates and the price of adaptation.
//!
//! Rates are returned as [`RateResult`] values that can be evaluated at any
//! noise level. Unspecified multiplicative constants are fixed to 1. With
//! `L = ln(1/ε)`, `LL = ln max(L, 1)` and `LLL = ln max(LL, 1)`:
//!
//! | pair                     | `r*`                        | `r^ad`                                    |
//! |--------------------------|-----------------------------|-------------------------------------------|
//! | mild-Sobolev, `q = 2`    | `ε^{4α/(4α+4β+1)}`          | `(ε LL^{1/4})^{4α/(4α+4β+1)}`             |
//! | mild-Sobolev, `λ > 0`    | `ε^{(2α+1/q−1/2)/(2(α+β)+1/q)}` | same with `ε LL^{1/4}`               |
//! | mild-Sobolev, `λ ≤ 0`    | `Λ ε^{α/(α+β)} L^{α/(2(α+β))}` | unchanged                              |
//! | mild-analytic            | `ε L^{β+1/4}`               | unchanged                                 |
//! | severe-analytic          | `ε^{α/(α+β)}`               | `(ε √LL)^{α/(α+β)}`                       |
//! | severe-Sobolev           | `(L/β)^{−α}`                | `((2L − 2α LL − LLL)/(2β))^{−α}`          |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreme::{sparse_lambda, u_piecewise, RegimePair};
use crate::spectra::ProblemSpec;

/// Regime pair of a rate query, including the extreme regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatePair {
    MildSobolev,
    MildAnalytic,
    SevereSobolev,
    SevereAnalytic,
    Extreme,
}

impl From<RegimePair> for RatePair {
    fn from(p: RegimePair) -> Self {
        match p {
            RegimePair::MildSobolev => RatePair::MildSobolev,
            RegimePair::MildAnalytic => RatePair::MildAnalytic,
            RegimePair::SevereSobolev => RatePair::SevereSobolev,
            RegimePair::SevereAnalytic => RatePair::SevereAnalytic,
        }
    }
}

impl std::str::FromStr for RatePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidSpec(format!("unknown regime pair '{s}'")))
    }
}

/// Growth of the adaptive distinguishability threshold `u^ad`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Payment {
    /// `u^ad ≍ 1`: adaptation is free.
    #[serde(rename = "O(1)")]
    Free,
    /// `u^ad = √(ln ln ε⁻¹)`.
    SqrtLoglog,
    /// `u^ad = ln ln ε⁻¹`.
    Loglog,
}

impl Payment {
    /// `u^ad` at noise level `eps`.
    pub fn threshold(self, eps: f64) -> f64 {
        let ll = loglog(eps);
        match self {
            Payment::Free => 1.0,
            Payment::SqrtLoglog => ll.sqrt(),
            Payment::Loglog => ll,
        }
    }
}

/// Which expansion of the severe-Sobolev rate to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogOrder {
    /// `(L/β)^{−α}`.
    First,
    /// `((L − α LL)/β)^{−α}`.
    Second,
    /// `((2L − 2α LL − LLL)/(2β))^{−α}`.
    Adaptive,
}

/// A rate as a function of `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RateFormula {
    /// `C (ε LL^g)^e L^p`.
    Power {
        constant: f64,
        exponent: f64,
        log_power: f64,
        loglog_power: f64,
    },
    /// Inverse powers of `ln(1/ε)`, see [`LogOrder`].
    Logarithmic { alpha: f64, beta: f64, order: LogOrder },
}

/// A separation rate together with its classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub pair: RatePair,
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    /// `λ = (α+β)/2 − β/q` for the mild-Sobolev pair with `q < 2`.
    pub lambda: Option<f64>,
    pub formula: RateFormula,
    /// Whether the rate is sharp (constant included), not only an order.
    pub sharp: bool,
    pub payment: Payment,
}

fn ln_inv(eps: f64) -> f64 {
    -eps.ln()
}

/// `ln max(ln(1/ε), 1)`.
fn loglog(eps: f64) -> f64 {
    ln_inv(eps).max(1.0).ln()
}

impl RateResult {
    /// The power of `ε` for power-type rates.
    pub fn exponent(&self) -> Option<f64> {
        match self.formula {
            RateFormula::Power { exponent, .. } => Some(exponent),
            RateFormula::Logarithmic { .. } => None,
        }
    }

    /// The rate at noise level `eps ∈ (0, 1)`.
    pub fn eval(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!("noise level must lie in (0, 1), got {eps}")));
        }
        let l = ln_inv(eps);
        let ll = loglog(eps);
        match self.formula {
            RateFormula::Power {
                constant,
                exponent,
                log_power,
                loglog_power,
            } => {
                let payment = if loglog_power == 0.0 { 0.0 } else { loglog_power * ll.ln() };
                Ok(constant * (eps.ln() + payment).mul_add(exponent, log_power * l.ln()).exp())
            }
            RateFormula::Logarithmic { alpha, beta, order } => {
                let base = match order {
                    LogOrder::First => l / beta,
                    LogOrder::Second => (l - alpha * ll) / beta,
                    LogOrder::Adaptive => (2.0 * l - 2.0 * alpha * ll - ll.max(1.0).ln()) / (2.0 * beta),
                };
                if !(base > 0.0) {
                    return Err(Error::Domain(format!("noise level {eps} is too large for this expansion")));
                }
                Ok(base.powf(-alpha))
            }
        }
    }
}

fn check_params(alpha: f64, beta: f64, q: f64) -> Result<()> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::Domain(format!("α and β must be positive, got {alpha}, {beta}")));
    }
    if !(q > 0.0 && q <= 2.0) {
        return Err(Error::Domain(format!("q must lie in (0, 2], got {q}")));
    }
    Ok(())
}

fn power(exponent: f64, log_power: f64) -> RateFormula {
    RateFormula::Power {
        constant: 1.0,
        exponent,
        log_power,
        loglog_power: 0.0,
    }
}

fn unsupported() -> Error {
    Error::Unsupported("the extreme regime has no closed-form rate; use extreme_separation_radius (u_lin = 1)".into())
}

/// Non-adaptive separation rate `r*_ε`.
pub fn separation_rate(alpha: f64, beta: f64, q: f64, pair: RatePair) -> Result<RateResult> {
    check_params(alpha, beta, q)?;
    let sparse = q < 2.0 && pair == RatePair::MildSobolev;
    let lambda = sparse.then(|| sparse_lambda(alpha, beta, q));
    let (formula, sharp, payment) = match pair {
        RatePair::MildSobolev => match lambda {
            None => (power(4.0 * alpha / (4.0 * alpha + 4.0 * beta + 1.0), 0.0), false, Payment::SqrtLoglog),
            Some(l) if l > 0.0 => (
                power(
                    (2.0 * alpha + 1.0 / q - 0.5) / (2.0 * (alpha + beta) + 1.0 / q),
                    0.0,
                ),
                false,
                Payment::SqrtLoglog,
            ),
            Some(_) => {
                let e = alpha / (alpha + beta);
                let lp = alpha / (2.0 * (alpha + beta));
                let formula = RateFormula::Power {
                    constant: (2.0 / (alpha + beta)).powf(lp),
                    exponent: e,
                    log_power: lp,
                    loglog_power: 0.0,
                };
                (formula, true, Payment::Free)
            }
        },
        RatePair::MildAnalytic => (power(1.0, beta + 0.25), false, Payment::Free),
        RatePair::SevereAnalytic => (power(alpha / (alpha + beta), 0.0), false, Payment::Loglog),
        RatePair::SevereSobolev => (
            RateFormula::Logarithmic {
                alpha,
                beta,
                order: LogOrder::First,
            },
            true,
            Payment::Loglog,
        ),
        RatePair::Extreme => return Err(unsupported()),
    };
    Ok(RateResult {
        pair,
        alpha,
        beta,
        q,
        lambda,
        formula,
        sharp,
        payment,
    })
}

/// Adaptive separation rate `r^ad_ε`: the non-adaptive rate with `ε`
/// inflated by the payment for adaptation.
pub fn adaptive_rate(alpha: f64, beta: f64, q: f64, pair: RatePair) -> Result<RateResult> {
    let mut res = separation_rate(alpha, beta, q, pair)?;
    res.formula = match res.formula {
        RateFormula::Power {
            constant,
            exponent,
            log_power,
            ..
        } => {
            let g = match res.payment {
                Payment::Free => 0.0,
                Payment::SqrtLoglog => 0.25,
                Payment::Loglog => 0.5,
            };
            RateFormula::Power {
                constant,
                exponent,
                log_power,
                loglog_power: g,
            }
        }
        RateFormula::Logarithmic { alpha, beta, .. } => RateFormula::Logarithmic {
            alpha,
            beta,
            order: LogOrder::Adaptive,
        },
    };
    Ok(res)
}

/// Sharp severe-Sobolev rate `((ln ε⁻¹ − α ln ln ε⁻¹)/β)^{−α}` with the
/// `O(1)` term set to zero. Requires `ε < e^{−e}`.
pub fn sharp_severe_sobolev(alpha: f64, beta: f64, eps: f64) -> Result<f64> {
    check_params(alpha, beta, 2.0)?;
    if !(eps > 0.0 && eps < (-std::f64::consts::E).exp()) {
        return Err(Error::Domain(format!("noise level must lie in (0, e^-e), got {eps}")));
    }
    RateResult {
        pair: RatePair::SevereSobolev,
        alpha,
        beta,
        q: 2.0,
        lambda: None,
        formula: RateFormula::Logarithmic {
            alpha,
            beta,
            order: LogOrder::Second,
        },
        sharp: true,
        payment: Payment::Loglog,
    }
    .eval(eps)
}

/// Radius `r` with `u_lin(r) = 1` for an extreme-regime spec.
pub fn extreme_separation_radius(spec: &ProblemSpec) -> Result<f64> {
    let la1 = spec.a.log_value(1)?;
    let lak = spec.a.log_value(spec.truncation)?;
    let u_lin = |ln_r: f64| -> Result<f64> { Ok(u_piecewise(&spec.with_radius(ln_r.exp())?)?.u_lin) };
    let (mut lo, mut hi) = (-lak, -la1 - 1e-12);
    if u_lin(lo)? > 1.0 {
        return Err(Error::RadiusOutOfRange(format!(
            "u_lin exceeds 1 at r = 1/a_K; increase the working length K = {}",
            spec.truncation
        )));
    }
    if u_lin(hi)? < 1.0 {
        return Err(Error::RadiusOutOfRange("u_lin stays below 1 on (1/a_K, 1/a_1)".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if u_lin(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// `u(Σ) = inf_{κ ∈ Σ} u(κ)`.
pub fn u_inf_over_sigma(us: &[f64]) -> Result<f64> {
    if us.is_empty() {
        return Err(Error::Domain("u(Σ) needs at least one value".into()));
    }
    Ok(us.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Adaptive distinguishability margin `u(Σ) / ln ln(1/ε)`.
pub fn adaptive_margin(u_sigma: f64, eps: f64) -> f64 {
    u_sigma / loglog(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn classical_exponents() {
        let ms = separation_rate(1.0, 1.0, 2.0, RatePair::MildSobolev).unwrap();
        assert_relative_eq!(ms.exponent().unwrap(), 4.0 / 9.0, max_relative = 1e-15);
        let sa = separation_rate(1.0, 1.0, 2.0, RatePair::SevereAnalytic).unwrap();
        assert_relative_eq!(sa.exponent().unwrap(), 0.5, max_relative = 1e-15);
        let sp = separation_rate(2.0, 1.0, 1.0, RatePair::MildSobolev).unwrap();
        assert_eq!(sp.lambda, Some(0.5));
        assert_relative_eq!(sp.exponent().unwrap(), 9.0 / 14.0, max_relative = 1e-15);
    }

    #[test]
    fn degenerate_sparse_rate() {
        let r = separation_rate(1.0, 1.0, 1.0, RatePair::MildSobolev).unwrap();
        assert!(r.sharp);
        let eps: f64 = 1e-6;
        let direct = 1.0 * eps.sqrt() * (-eps.ln()).powf(0.25);
        assert_relative_eq!(r.eval(eps).unwrap(), direct, max_relative = 1e-12);
    }

    #[test]
    fn sharp_severe_sobolev_value() {
        let r = sharp_severe_sobolev(1.0, 1.0, 1e-6).unwrap();
        let l = 1e6f64.ln();
        assert_relative_eq!(r, 1.0 / (l - l.ln()), max_relative = 1e-14);
        assert_relative_eq!(r, 0.0893676, max_relative = 5e-6);
        assert!(sharp_severe_sobolev(1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn extreme_is_unsupported() {
        let err = separation_rate(1.0, 1.0, 2.0, RatePair::Extreme).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn adaptation_payments() {
        let eps = 1e-8;
        let a = adaptive_rate(1.0, 1.0, 2.0, RatePair::MildAnalytic).unwrap();
        let s = separation_rate(1.0, 1.0, 2.0, RatePair::MildAnalytic).unwrap();
        assert_eq!(a.payment, Payment::Free);
        assert_eq!(a.eval(eps).unwrap(), s.eval(eps).unwrap());
        let ms = adaptive_rate(1.0, 1.0, 2.0, RatePair::MildSobolev).unwrap();
        let ll = (-eps.ln()).ln();
        assert_relative_eq!(
            ms.eval(eps).unwrap(),
            (eps * ll.powf(0.25)).powf(4.0 / 9.0),
            max_relative = 1e-12
        );
        assert_eq!(adaptive_rate(1.0, 1.0, 2.0, RatePair::SevereSobolev).unwrap().payment, Payment::Loglog);
    }

    #[test]
    fn inf_over_sigma() {
        assert_eq!(u_inf_over_sigma(&[3.0, 1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(u_inf_over_sigma(&[4.5]).unwrap(), 4.5);
        assert!(u_inf_over_sigma(&[]).is_err());
    }

    #[test]
    fn pair_names_parse() {
        assert_eq!("severe-sobolev".parse::<RatePair>().unwrap(), RatePair::SevereSobolev);
        assert!("bogus".parse::<RatePair>().is_err());
    }
}
