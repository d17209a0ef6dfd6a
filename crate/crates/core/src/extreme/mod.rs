//! Extreme problems defining the detection value `u_ε`.

pub mod asymptotic;
pub mod exact;
pub mod piecewise;
pub mod sparse;
pub mod supcoord;

pub use asymptotic::{regime_pair, u_asymptotic, AsymptoticValue, RegimePair};
pub use exact::{r_of_a, solve_extreme, ExtremeSolution};
pub use piecewise::{u_piecewise, LinApprox};
pub use sparse::{d_eps, mild_exponents, solve_besov_extreme, solve_sparse_extreme, sparse_lambda, SparseProblem, SparseSolution};
pub use supcoord::{solve_sup_coordinate, SupCoordSolution};
