//! Straggler-aware coded polynomial aggregation.
//!
//! A master holds `K` data matrices and wants `Y = sum_k w_k F(X_k)` for an
//! elementwise polynomial `F` of degree `d`. Data are encoded through a
//! Lagrange polynomial `E` with `E(alpha_k) = X_k` and evaluated at one point
//! `beta_n` per worker. Only the workers of one admissible non-straggler set
//! respond; the master interpolates their results and evaluates the
//! interpolant at the data points.
//!
//! Modules, bottom-up:
//! - [`numkit`]: dense complex rank/kernel and damped least squares
//! - [`polyalg`]: polynomials, barycentric interpolation, roots, Chebyshev nodes
//! - [`pattern`]: non-straggler patterns, thresholds and pattern sampling
//! - [`codegen`]: explicit construction of evaluation points and residual checks
//! - [`solver`]: multi-start Levenberg-Marquardt feasibility search
//! - [`simulator`]: the encode/compute/decode protocol with straggler injection
//! - [`harness`]: feasibility-curve experiments and CSV output

pub mod codegen;
pub mod harness;
pub mod error;
pub mod numkit;
pub mod pattern;
pub mod polyalg;
pub mod rng;
pub mod simulator;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
