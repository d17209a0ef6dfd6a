//! Sequence families for the smoothness weights `a_k` and the noise
//! amplification `σ_k`, problem specifications and the built-in presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum;

/// Largest natural logarithm that still exponentiates to a finite `f64`.
pub const LN_MAX: f64 = 709.782_712_893_384;

/// Functional form of a sequence family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// `scale · k^exponent`
    Polynomial,
    /// `scale · exp(exponent · k)`
    Exponential,
    /// `scale · exp(exponent · k^power)`
    PowerExponential,
    /// Values listed explicitly, indexed from 1.
    ExplicitTable,
}

/// A positive sequence indexed by `k = 1, 2, ...`.
///
/// Values are computed in log space; [`SequenceFamily::value`] refuses to
/// return an infinite result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily", into = "RawFamily")]
pub struct SequenceFamily {
    kind: FamilyKind,
    scale: f64,
    exponent: f64,
    power: f64,
    table: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    kind: FamilyKind,
    #[serde(default = "one")]
    scale: f64,
    #[serde(default)]
    exponent: f64,
    #[serde(default = "one")]
    power: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    values: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawFamily> for SequenceFamily {
    type Error = Error;

    fn try_from(raw: RawFamily) -> Result<Self> {
        match raw.kind {
            FamilyKind::ExplicitTable => {
                if raw.exponent != 0.0 || raw.power != 1.0 || raw.scale != 1.0 {
                    return Err(Error::InvalidSpec(
                        "explicit-table families take only `values`".into(),
                    ));
                }
                SequenceFamily::table(raw.values)
            }
            kind => {
                if !raw.values.is_empty() {
                    return Err(Error::InvalidSpec(format!(
                        "`values` is only valid for explicit-table families, not {kind:?}"
                    )));
                }
                SequenceFamily::parametric(kind, raw.scale, raw.exponent, raw.power)
            }
        }
    }
}

impl From<SequenceFamily> for RawFamily {
    fn from(f: SequenceFamily) -> Self {
        RawFamily {
            kind: f.kind,
            scale: f.scale,
            exponent: f.exponent,
            power: f.power,
            values: f.table,
        }
    }
}

impl SequenceFamily {
    /// `scale · k^exponent`.
    pub fn polynomial(scale: f64, exponent: f64) -> Result<Self> {
        Self::parametric(FamilyKind::Polynomial, scale, exponent, 1.0)
    }

    /// `scale · exp(exponent · k)`.
    pub fn exponential(scale: f64, exponent: f64) -> Result<Self> {
        Self::parametric(FamilyKind::Exponential, scale, exponent, 1.0)
    }

    /// `scale · exp(exponent · k^power)`.
    pub fn power_exponential(scale: f64, exponent: f64, power: f64) -> Result<Self> {
        Self::parametric(FamilyKind::PowerExponential, scale, exponent, power)
    }

    /// Explicit values `v_1, v_2, ...`; must be positive and strictly increasing.
    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpec("explicit table is empty".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidSpec("explicit table values must be positive and finite".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("explicit table must be strictly increasing".into()));
        }
        Ok(Self {
            kind: FamilyKind::ExplicitTable,
            scale: 1.0,
            exponent: 0.0,
            power: 1.0,
            table: values,
        })
    }

    /// Same family with a different exponent; explicit tables have none.
    pub fn with_exponent(&self, exponent: f64) -> Result<Self> {
        if self.kind == FamilyKind::ExplicitTable {
            return Err(Error::InvalidSpec("explicit tables have no exponent to vary".into()));
        }
        Self::parametric(self.kind, self.scale, exponent, self.power)
    }

    fn parametric(kind: FamilyKind, scale: f64, exponent: f64, power: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidSpec(format!("scale must be positive, got {scale}")));
        }
        if !(exponent.is_finite() && exponent >= 0.0) {
            return Err(Error::InvalidSpec(format!("exponent must be non-negative, got {exponent}")));
        }
        if !(power.is_finite() && power >= 1.0) {
            return Err(Error::InvalidSpec(format!("power must be at least 1, got {power}")));
        }
        if kind != FamilyKind::PowerExponential && power != 1.0 {
            return Err(Error::InvalidSpec(format!("power is fixed to 1 for {kind:?} families")));
        }
        Ok(Self {
            kind,
            scale,
            exponent,
            power,
            table: Vec::new(),
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn table_values(&self) -> &[f64] {
        &self.table
    }

    /// Largest admissible index, if the family is finite.
    pub fn max_index(&self) -> Option<usize> {
        match self.kind {
            FamilyKind::ExplicitTable => Some(self.table.len()),
            _ => None,
        }
    }

    /// True when every value strictly exceeds its predecessor.
    pub fn is_strictly_increasing(&self) -> bool {
        match self.kind {
            FamilyKind::ExplicitTable => true,
            _ => self.exponent > 0.0,
        }
    }

    /// Natural logarithm of the `k`-th value (k ≥ 1).
    pub fn log_value(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::Domain("sequence index starts at 1".into()));
        }
        let kf = k as f64;
        let ls = self.scale.ln();
        Ok(match self.kind {
            FamilyKind::Polynomial => ls + self.exponent * kf.ln(),
            FamilyKind::Exponential => ls + self.exponent * kf,
            FamilyKind::PowerExponential => ls + self.exponent * kf.powf(self.power),
            FamilyKind::ExplicitTable => match self.table.get(k - 1) {
                Some(v) => v.ln(),
                None => {
                    return Err(Error::Domain(format!(
                        "index {k} beyond explicit table of length {}",
                        self.table.len()
                    )))
                }
            },
        })
    }

    /// The `k`-th value (k ≥ 1).
    pub fn value(&self, k: usize) -> Result<f64> {
        let l = self.log_value(k)?;
        if l > LN_MAX {
            return Err(Error::SequenceOverflow { index: k });
        }
        Ok(match self.kind {
            FamilyKind::Polynomial => self.scale * (k as f64).powf(self.exponent),
            FamilyKind::ExplicitTable => self.table[k - 1],
            _ => l.exp(),
        })
    }

    /// Log values for `k = 1..=n`.
    pub fn log_values(&self, n: usize) -> Result<Vec<f64>> {
        (1..=n).map(|k| self.log_value(k)).collect()
    }

    /// Values for `k = 1..=n`.
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        (1..=n).map(|k| self.value(k)).collect()
    }
}

/// Degree of ill-posedness implied by the growth of `σ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Mild,
    Severe,
    Extreme,
}

/// Classify the growth of `sigma`.
///
/// Explicit tables are judged by their consecutive ratios: ratios that keep
/// growing (the last at least twice the first, never decreasing) count as
/// extreme, anything else is treated as severe.
pub fn classify_regime(sigma: &SequenceFamily) -> Regime {
    match sigma.kind {
        FamilyKind::Polynomial => Regime::Mild,
        FamilyKind::Exponential => Regime::Severe,
        FamilyKind::PowerExponential if sigma.power > 1.0 => Regime::Extreme,
        FamilyKind::PowerExponential => Regime::Severe,
        FamilyKind::ExplicitTable => {
            let ratios: Vec<f64> = sigma.table.windows(2).map(|w| w[1] / w[0]).collect();
            let growing = ratios.len() >= 2
                && ratios.windows(2).all(|w| w[1] >= w[0])
                && ratios[ratios.len() - 1] >= 2.0 * ratios[0];
            if growing {
                Regime::Extreme
            } else {
                Regime::Severe
            }
        }
    }
}

/// A full detection problem: smoothness weights, ill-posedness, the `l^q`
/// exponent, the separation radius, the noise level and the working length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ProblemSpec {
    pub a: SequenceFamily,
    pub sigma: SequenceFamily,
    pub q: f64,
    pub r: f64,
    pub eps: f64,
    pub truncation: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    a: SequenceFamily,
    sigma: SequenceFamily,
    q: f64,
    r: f64,
    eps: f64,
    #[serde(rename = "K")]
    truncation: usize,
}

impl TryFrom<RawSpec> for ProblemSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        ProblemSpec::new(raw.a, raw.sigma, raw.q, raw.r, raw.eps, raw.truncation)
    }
}

impl From<ProblemSpec> for RawSpec {
    fn from(s: ProblemSpec) -> Self {
        RawSpec {
            a: s.a,
            sigma: s.sigma,
            q: s.q,
            r: s.r,
            eps: s.eps,
            truncation: s.truncation,
        }
    }
}

/// Outcome of [`ellipsoid_membership`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    /// Inside the smoothness body and at least `r` away from zero.
    InAlternative,
    /// Inside the smoothness body but too close to zero.
    InBodyOnly,
    Outside,
}

impl ProblemSpec {
    pub fn new(
        a: SequenceFamily,
        sigma: SequenceFamily,
        q: f64,
        r: f64,
        eps: f64,
        truncation: usize,
    ) -> Result<Self> {
        if !(q > 0.0 && q <= 2.0) {
            return Err(Error::InvalidSpec(format!("q must lie in (0, 2], got {q}")));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidSpec(format!("radius must be positive, got {r}")));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidSpec(format!("noise level must be positive, got {eps}")));
        }
        if truncation == 0 {
            return Err(Error::InvalidSpec("truncation K must be positive".into()));
        }
        if !a.is_strictly_increasing() {
            return Err(Error::InvalidSpec("a_k must be strictly increasing".into()));
        }
        for (name, fam) in [("a", &a), ("sigma", &sigma)] {
            if let Some(n) = fam.max_index() {
                if n < truncation {
                    return Err(Error::InvalidSpec(format!(
                        "{name} table has {n} entries but K = {truncation}"
                    )));
                }
            }
        }
        Ok(Self {
            a,
            sigma,
            q,
            r,
            eps,
            truncation,
        })
    }

    /// Copy with a different radius.
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.sigma.clone(), self.q, r, self.eps, self.truncation)
    }

    /// Copy with a different noise level.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.sigma.clone(), self.q, self.r, eps, self.truncation)
    }

    /// Copy with a different working length.
    pub fn with_truncation(&self, k: usize) -> Result<Self> {
        Self::new(self.a.clone(), self.sigma.clone(), self.q, self.r, self.eps, k)
    }

    pub fn regime(&self) -> Regime {
        classify_regime(&self.sigma)
    }
}

/// Check whether `eta` lies in the alternative set of `spec`.
///
/// Both sums are compared exactly, without tolerance.
pub fn ellipsoid_membership(eta: &[f64], spec: &ProblemSpec) -> Result<Membership> {
    if eta.len() > spec.truncation {
        return Err(Error::Domain(format!(
            "vector of length {} exceeds K = {}",
            eta.len(),
            spec.truncation
        )));
    }
    let mut body = sum::Accumulator::new();
    let mut energy = sum::Accumulator::new();
    for (i, &x) in eta.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let k = i + 1;
        let la = spec.a.log_value(k)?;
        let ls = spec.sigma.log_value(k)?;
        let lx = x.abs().ln();
        body.add((spec.q * (la + ls + lx)).exp());
        energy.add((2.0 * (ls + lx)).exp());
    }
    let in_body = body.value() <= 1.0;
    let far = energy.value() >= spec.r * spec.r;
    Ok(match (in_body, far) {
        (true, true) => Membership::InAlternative,
        (true, false) => Membership::InBodyOnly,
        _ => Membership::Outside,
    })
}

/// Named problem templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Recovering the `m`-th derivative: `σ_k = k^m`.
    Differentiation(f64),
    /// Boundary data of the Laplacian on the disc: `σ_k = e^k`.
    Dirichlet,
    /// Initial condition of the heat equation: `σ_k = e^{k²}`.
    Heat,
    /// Convolution with a kernel whose Fourier coefficients are listed: `σ_k = 1/|ν_k|`.
    Deconvolution(Vec<f64>),
}

/// Default template values shared by every preset.
pub const PRESET_Q: f64 = 2.0;
pub const PRESET_RADIUS: f64 = 0.1;
pub const PRESET_EPS: f64 = 0.01;
pub const PRESET_TRUNCATION: usize = 1000;

/// Build the problem template for `preset`.
///
/// Templates use `a_k = k`, `q = 2`, `r = 0.1`, `ε = 0.01` and
/// `K = min(1000, table length)`; callers override what they need.
pub fn preset(preset: &Preset) -> Result<ProblemSpec> {
    let a = SequenceFamily::polynomial(1.0, 1.0)?;
    let (sigma, k) = match preset {
        Preset::Differentiation(m) => {
            if !(m.is_finite() && *m > 0.0) {
                return Err(Error::InvalidSpec(format!("derivative order must be positive, got {m}")));
            }
            (SequenceFamily::polynomial(1.0, *m)?, PRESET_TRUNCATION)
        }
        Preset::Dirichlet => (SequenceFamily::exponential(1.0, 1.0)?, PRESET_TRUNCATION),
        Preset::Heat => (SequenceFamily::power_exponential(1.0, 1.0, 2.0)?, PRESET_TRUNCATION),
        Preset::Deconvolution(nu) => {
            if nu.contains(&0.0) {
                return Err(Error::InvalidSpec("non-injective kernel: a Fourier coefficient vanishes".into()));
            }
            let sigma: Vec<f64> = nu.iter().map(|v| 1.0 / v.abs()).collect();
            let k = sigma.len().min(PRESET_TRUNCATION);
            (SequenceFamily::table(sigma)?, k)
        }
    };
    ProblemSpec::new(a, sigma, PRESET_Q, PRESET_RADIUS, PRESET_EPS, k)
}

/// Wavelet-domain problem over dyadic levels `j = 1..=levels`.
///
/// Level `j` holds `2^j` coordinates with `a = 2^{αj}` and `σ = 2^{βj}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBesov", into = "RawBesov")]
pub struct BesovSpec {
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub t: f64,
    pub r: f64,
    pub eps: f64,
    pub levels: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBesov {
    alpha: f64,
    beta: f64,
    q: f64,
    t: f64,
    r: f64,
    eps: f64,
    #[serde(rename = "J")]
    levels: u32,
}

impl TryFrom<RawBesov> for BesovSpec {
    type Error = Error;

    fn try_from(raw: RawBesov) -> Result<Self> {
        BesovSpec::new(raw.alpha, raw.beta, raw.q, raw.t, raw.r, raw.eps, raw.levels)
    }
}

impl From<BesovSpec> for RawBesov {
    fn from(s: BesovSpec) -> Self {
        RawBesov {
            alpha: s.alpha,
            beta: s.beta,
            q: s.q,
            t: s.t,
            r: s.r,
            eps: s.eps,
            levels: s.levels,
        }
    }
}

/// Deepest supported dyadic level.
pub const MAX_LEVEL: u32 = 24;

impl BesovSpec {
    pub fn new(alpha: f64, beta: f64, q: f64, t: f64, r: f64, eps: f64, levels: u32) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")))
            }
        };
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        positive("t", t)?;
        positive("r", r)?;
        positive("eps", eps)?;
        if !(q > 0.0 && q < 2.0) {
            return Err(Error::InvalidSpec(format!("q must lie in (0, 2), got {q}")));
        }
        if !(1..=MAX_LEVEL).contains(&levels) {
            return Err(Error::InvalidSpec(format!("J must lie in 1..={MAX_LEVEL}, got {levels}")));
        }
        Ok(Self {
            alpha,
            beta,
            q,
            t,
            r,
            eps,
            levels,
        })
    }

    /// Total number of coordinates across all levels.
    pub fn len(&self) -> usize {
        dyadic::total_len(self.levels)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(α+β)/2 − β/q`.
    pub fn lambda(&self) -> f64 {
        (self.alpha + self.beta) / 2.0 - self.beta / self.q
    }
}

/// Flat storage of dyadic levels `j = 1..=J`, level `j` at offset `2^j − 2`.
pub mod dyadic {
    /// Offset of level `j` in the flat vector.
    pub fn offset(j: u32) -> usize {
        (1usize << j) - 2
    }

    /// Coordinates `offset(j) .. offset(j) + 2^j`.
    pub fn range(j: u32) -> std::ops::Range<usize> {
        let o = offset(j);
        o..o + (1usize << j)
    }

    /// Length of the flat vector holding levels `1..=levels`.
    pub fn total_len(levels: u32) -> usize {
        offset(levels + 1)
    }

    /// Number of complete levels stored in a flat vector of length `n`.
    pub fn levels_in(n: usize) -> u32 {
        let mut j = 0;
        while total_len(j + 1) <= n {
            j += 1;
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_each_kind() {
        let p = SequenceFamily::polynomial(1.0, 2.0).unwrap();
        assert_eq!(p.value(3).unwrap(), 9.0);
        let e = SequenceFamily::exponential(1.0, 1.0).unwrap();
        assert!((e.value(2).unwrap() - 7.389_056_098_930_65).abs() < 1e-12);
        let pe = SequenceFamily::power_exponential(1.0, 1.0, 2.0).unwrap();
        assert!((pe.value(1).unwrap() - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn overflow_is_an_error() {
        let e = SequenceFamily::exponential(1.0, 1.0).unwrap();
        assert!(e.value(709).is_ok());
        assert_eq!(e.value(710), Err(Error::SequenceOverflow { index: 710 }));
        let pe = SequenceFamily::power_exponential(1.0, 1.0, 2.0).unwrap();
        assert_eq!(pe.value(27), Err(Error::SequenceOverflow { index: 27 }));
        assert!(pe.log_value(27).unwrap().is_finite());
    }

    #[test]
    fn regimes() {
        let mild = SequenceFamily::polynomial(1.0, 1.5).unwrap();
        let severe = SequenceFamily::exponential(1.0, 2.0).unwrap();
        let extreme = SequenceFamily::power_exponential(1.0, 1.0, 2.0).unwrap();
        assert_eq!(classify_regime(&mild), Regime::Mild);
        assert_eq!(classify_regime(&severe), Regime::Severe);
        assert_eq!(classify_regime(&extreme), Regime::Extreme);
        let geometric = SequenceFamily::table(vec![1.0, 2.0, 4.0, 8.0]).unwrap();
        assert_eq!(classify_regime(&geometric), Regime::Severe);
        let gaussian = SequenceFamily::table((1..6).map(|k| ((k * k) as f64).exp()).collect()).unwrap();
        assert_eq!(classify_regime(&gaussian), Regime::Extreme);
    }

    #[test]
    fn presets_have_expected_shapes() {
        let d = preset(&Preset::Differentiation(1.0)).unwrap();
        assert_eq!(d.sigma.kind(), FamilyKind::Polynomial);
        assert_eq!(d.sigma.exponent(), 1.0);
        assert_eq!(d.regime(), Regime::Mild);
        assert_eq!(preset(&Preset::Dirichlet).unwrap().regime(), Regime::Severe);
        let h = preset(&Preset::Heat).unwrap();
        assert_eq!(h.sigma.kind(), FamilyKind::PowerExponential);
        assert_eq!(h.sigma.power(), 2.0);
        assert_eq!(h.regime(), Regime::Extreme);
        let c = preset(&Preset::Deconvolution(vec![1.0, 0.5, 0.25])).unwrap();
        assert_eq!(c.sigma.table_values(), &[1.0, 2.0, 4.0]);
        assert_eq!(c.truncation, 3);
        let bad = preset(&Preset::Deconvolution(vec![1.0, 0.0]));
        assert!(matches!(bad, Err(Error::InvalidSpec(m)) if m.contains("non-injective")));
    }

    #[test]
    fn zero_vector_is_in_body_only() {
        let spec = preset(&Preset::Differentiation(1.0)).unwrap();
        assert_eq!(ellipsoid_membership(&[0.0; 5], &spec).unwrap(), Membership::InBodyOnly);
        let big = [10.0];
        assert_eq!(ellipsoid_membership(&big, &spec).unwrap(), Membership::Outside);
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let ok = r#"{"a":{"kind":"polynomial","exponent":1},"sigma":{"kind":"exponential","scale":1,"exponent":1,"power":1},"q":2,"r":0.5,"eps":0.1,"K":10}"#;
        let spec: ProblemSpec = serde_json::from_str(ok).unwrap();
        assert_eq!(spec.truncation, 10);
        let bad = ok.replace("\"K\":10", "\"K\":10,\"L\":1");
        assert!(serde_json::from_str::<ProblemSpec>(&bad).is_err());
        let bad_fam = ok.replace("\"exponent\":1}", "\"exponent\":1,\"shape\":2}");
        assert!(serde_json::from_str::<ProblemSpec>(&bad_fam).is_err());
        let unsorted = r#"{"kind":"explicit-table","values":[1,3,2]}"#;
        assert!(serde_json::from_str::<SequenceFamily>(unsorted).is_err());
    }

    #[test]
    fn dyadic_layout() {
        assert_eq!(dyadic::range(1), 0..2);
        assert_eq!(dyadic::range(2), 2..6);
        assert_eq!(dyadic::range(3), 6..14);
        assert_eq!(dyadic::total_len(3), 14);
        assert_eq!(dyadic::levels_in(14), 3);
        assert_eq!(dyadic::levels_in(13), 2);
    }
}
