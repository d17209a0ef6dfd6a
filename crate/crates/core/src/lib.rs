//! Minimax signal detection in Gaussian sequence models for inverse problems.
//!
//! Observations `y_k = η_k + ε ξ_k` are tested for the null `η = 0`
//! against alternatives that are smooth (`Σ a_k² σ_k² η_k² ≤ 1`, or its `l^q`
//! and Besov analogues) yet separated from zero (`Σ σ_k² η_k² ≥ r²`).
//!
//! * [`spectra`] describes the sequences `a_k`, `σ_k` and the problem.
//! * [`extreme`] solves the extreme problems that give the detection value
//!   `u_ε` and the least favorable alternative.
//! * [`testing`] builds the test statistics with calibrated thresholds.
//! * [`simulate`] estimates error probabilities by Monte Carlo.
//! * [`rates`] evaluates the separation-rate formulas.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extreme;
pub mod normal;
pub mod rates;
pub mod simulate;
pub mod spectra;
pub mod sum;
pub mod testing;

pub use error::{Error, Result};
pub use spectra::{BesovSpec, ProblemSpec, SequenceFamily};
