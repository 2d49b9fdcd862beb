//! Numerical stochastic Clifford analysis.
//!
//! Arithmetic in the real Clifford algebra `Cl(n)` with `e_j^2 = -1`, finite
//! difference Cauchy-Riemann operators, para-vector Brownian motion with
//! martingale diagnostics, pathwise Ito identities, and a walk-on-spheres
//! solver for Dirichlet problems with monogenic boundary data.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algebra;
pub mod calculus;
pub mod dirichlet;
pub mod error;
pub mod ito;
pub mod process;
pub mod rng;
pub mod stats;

pub use algebra::{blade_product, clifford_inner_product, para_norm, BladeIndex, Multivector, ParaVector};
pub use error::{Error, Result};
pub use stats::{MCEstimate, ScalarEstimate};
pub use dirichlet::{solve_dirichlet, BoundaryData, DirichletEstimate, Domain, WosParams};
pub use process::{sample_bm, PathConfig, ProcessPath};
