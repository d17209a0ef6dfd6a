//! Standard normal distribution function and quantile.
//!
//! Both are evaluated through the complementary error function, which keeps
//! full relative accuracy deep in the tails. The quantile starts from an
//! initial inverse and is refined with Halley steps against `erfc`.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::SQRT_2;

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Φ(-x), accurate for large positive `x`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Φ⁻¹(p) for p in (0, 1); returns ±∞ at the endpoints.
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return upper_quantile(1.0 - p);
    }
    -upper_quantile(p)
}

/// Φ⁻¹(1 - p), accurate for tiny `p`.
pub fn upper_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::INFINITY;
    }
    if p >= 1.0 {
        return f64::NEG_INFINITY;
    }
    if p > 0.5 {
        return -upper_quantile(1.0 - p);
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let d = pdf(x);
        if d == 0.0 {
            break;
        }
        // Halley step on sf(x) = p.
        let t = (sf(x) - p) / d;
        x += t / (1.0 - 0.5 * x * t);
    }
    x
}

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
