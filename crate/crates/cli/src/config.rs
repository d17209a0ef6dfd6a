//! Experiment configuration files.

use serde::{Deserialize, Serialize};

use seqdetect::rates::RatePair;
use seqdetect::testing::{AdaptiveKind, Level, SparseMode, TestRule};
use seqdetect::{BesovSpec, ProblemSpec};

/// Default number of Monte Carlo replicates.
pub const DEFAULT_REPS: u64 = 10_000;

/// Default test level.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// A complete experiment description. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<ProblemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub besov: Option<BesovSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative: Option<AlternativeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<AdaptiveConfig>,
}

/// Which test to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleConfig {
    /// Weighted chi-square test from the `l²` extreme sequence.
    Weighted {
        #[serde(default = "default_level")]
        level: Level,
    },
    /// Truncated chi-square test.
    Truncated {
        m: usize,
        #[serde(rename = "H")]
        h: f64,
    },
    /// Union-bound maximum test over the first `m` coordinates.
    MaxThreshold {
        m: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// Sparse test from the `l^q` extreme sequence, `H = Φ⁻¹(1 − alpha)`.
    Sparse {
        #[serde(default = "default_sparse_mode")]
        mode: SparseMode,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// Pure thresholding over the first `n` coordinates (default `K`).
    Thresholding {
        #[serde(default = "default_threshold_mode")]
        mode: SparseMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    /// Per-level sparse test for a Besov spec.
    BesovSparse {
        #[serde(default = "default_sparse_mode")]
        mode: SparseMode,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// Adaptive Besov test; missing values take the defaults.
    BesovAdaptive {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        #[serde(default, rename = "J0", skip_serializing_if = "Option::is_none")]
        j0: Option<u32>,
        #[serde(default, rename = "J1", skip_serializing_if = "Option::is_none")]
        j1: Option<u32>,
    },
    /// Adaptive grid or extreme-max test over the first `n` coordinates.
    Adaptive {
        adaptive: AdaptiveKind,
        #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
        l: Option<usize>,
        #[serde(default, rename = "C", skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        #[serde(default, rename = "T_eps", skip_serializing_if = "Option::is_none")]
        t_eps: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    /// A fully specified rule.
    Explicit { rule: TestRule },
}

fn default_level() -> Level {
    Level::Alpha(DEFAULT_ALPHA)
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_sparse_mode() -> SparseMode {
    SparseMode::G
}

fn default_threshold_mode() -> SparseMode {
    SparseMode::D
}

/// Alternative at which the type II error is estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlternativeConfig {
    /// The least favorable alternative of the spec's extreme problem.
    LeastFavorable,
    /// A single spike at `n = r^{−1/α}` (degenerate sparse problems).
    Spike,
    /// Explicit `η`.
    Explicit { eta: Vec<f64> },
}

/// Rate table request. Without it, `rates` reports the spec's own pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub pairs: Vec<RatePair>,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    pub eps: Vec<f64>,
}

fn default_q() -> f64 {
    2.0
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    R,
    Eps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// The `(α, β)` grid `Σ` of an adaptive experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveConfig {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}
