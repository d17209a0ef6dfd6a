//! Closed-form asymptotics of `u_ε` for the four classical regime pairs.
//!
//! Scale factors are handled through the exact rescaling identity: with
//! `a = C·a⁰` and `σ = D·σ⁰`, `u(r) = (CD)⁻² u⁰(C r)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{FamilyKind, ProblemSpec, SequenceFamily};

/// Pairing of the growth of `a_k` with the growth of `σ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimePair {
    /// Polynomial `a_k`, polynomial `σ_k`.
    MildSobolev,
    /// Exponential `a_k`, exponential `σ_k`.
    SevereAnalytic,
    /// Polynomial `a_k`, exponential `σ_k`.
    SevereSobolev,
    /// Exponential `a_k`, polynomial `σ_k`.
    MildAnalytic,
}

/// Asymptotic detection value with a real-valued efficient dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticValue {
    pub pair: RegimePair,
    pub u: f64,
    pub m: f64,
}

#[derive(Clone, Copy)]
enum Growth {
    Poly,
    Exp,
}

fn growth(f: &SequenceFamily) -> Option<Growth> {
    if f.exponent() == 0.0 && f.kind() != FamilyKind::ExplicitTable {
        return Some(Growth::Poly);
    }
    match f.kind() {
        FamilyKind::Polynomial => Some(Growth::Poly),
        FamilyKind::Exponential => Some(Growth::Exp),
        FamilyKind::PowerExponential if f.power() == 1.0 => Some(Growth::Exp),
        _ => None,
    }
}

/// Identify the regime pair of `spec`, if it is one of the four classical ones.
pub fn regime_pair(spec: &ProblemSpec) -> Result<RegimePair> {
    let unsupported = || Error::Unsupported("use u_lin for extreme regime".into());
    let ga = growth(&spec.a).ok_or_else(unsupported)?;
    let gs = growth(&spec.sigma).ok_or_else(unsupported)?;
    Ok(match (ga, gs) {
        (Growth::Poly, Growth::Poly) => RegimePair::MildSobolev,
        (Growth::Exp, Growth::Exp) => RegimePair::SevereAnalytic,
        (Growth::Poly, Growth::Exp) => RegimePair::SevereSobolev,
        (Growth::Exp, Growth::Poly) => RegimePair::MildAnalytic,
    })
}

/// Constants `(d₀, d₁, d₂)` of the mild-Sobolev expansion `J_i ≈ d_i m^{4β+1}`.
pub fn mild_sobolev_constants(alpha: f64, beta: f64) -> (f64, f64, f64) {
    let d1 = 2.0 * alpha / ((4.0 * beta + 1.0) * (4.0 * beta + 2.0 * alpha + 1.0));
    let d2 = 2.0 * alpha / ((4.0 * beta + 2.0 * alpha + 1.0) * (4.0 * alpha + 4.0 * beta + 1.0));
    (d1 - d2, d1, d2)
}

/// The constant `c₂` in `u² ~ c₂ ε⁻⁴ r^{(4α+4β+1)/α}` for the mild-Sobolev pair.
pub fn mild_sobolev_c2(alpha: f64, beta: f64) -> f64 {
    let (d0, d1, d2) = mild_sobolev_constants(alpha, beta);
    (d2 / d1).powf((4.0 * beta + 1.0) / (2.0 * alpha)) * d0 / (2.0 * d1 * d1)
}

/// Closed-form asymptotic `u_ε` and efficient dimension.
pub fn u_asymptotic(spec: &ProblemSpec) -> Result<AsymptoticValue> {
    let pair = regime_pair(spec)?;
    let alpha = spec.a.exponent();
    let beta = spec.sigma.exponent();
    if !(alpha > 0.0) || beta < 0.0 {
        return Err(Error::Domain("growth exponents must satisfy α > 0, β ≥ 0".into()));
    }
    let (c, d) = (spec.a.scale(), spec.sigma.scale());
    let rho = c * spec.r;
    if !(rho < 1.0) {
        return Err(Error::Domain(format!("scaled radius C·r = {rho} must be below 1")));
    }
    let ln_rho = rho.ln();
    let eps2 = spec.eps * spec.eps;
    let (u, m) = match pair {
        RegimePair::MildSobolev => {
            let (_, d1, d2) = mild_sobolev_constants(alpha, beta);
            let m = (d1 / d2).powf(0.5 / alpha) * (-ln_rho / alpha).exp();
            let expo = (4.0 * alpha + 4.0 * beta + 1.0) / (2.0 * alpha);
            (mild_sobolev_c2(alpha, beta).sqrt() * (expo * ln_rho).exp() / eps2, m)
        }
        RegimePair::SevereAnalytic => {
            let m = -ln_rho / alpha;
            ((2.0 * (alpha + beta) / alpha * ln_rho).exp() / eps2, m)
        }
        RegimePair::SevereSobolev => {
            if beta == 0.0 {
                return Err(Error::Domain("exponential σ needs β > 0".into()));
            }
            let t = (-4.0 * beta).exp();
            let a1 = t / ((1.0 - t) * (1.0 - t));
            let a2 = t * (1.0 + t) / ((1.0 - t) * (1.0 - t) * (1.0 - t));
            let m = (-ln_rho / alpha).exp() + a2 / a1;
            let ln_u = 2.0 * ln_rho - 2.0 * beta * m + 0.5 * (a2 / (2.0 * a1 * a1)).ln();
            (ln_u.exp() / eps2, m)
        }
        RegimePair::MildAnalytic => {
            let p = 4.0 * beta + 1.0;
            let d2 = p / 2.0 * alpha.powf(p);
            let ln_inv = -ln_rho;
            let u = d2.sqrt() * rho * rho / eps2 * ln_inv.powf(-p / 2.0);
            (u, ln_inv / alpha)
        }
    };
    Ok(AsymptoticValue {
        pair,
        u: u / (c * d).powi(2),
        m,
    })
}
