//! First-order methods for composite objectives `ℓ(x) + r(x)` with
//! controllable gradient and prox errors, plus tooling to measure their
//! empirical convergence rates.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which the experiment harness uses.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod oracles;
pub mod problems;
pub mod prox;
pub mod scalar;
pub mod solvers;
pub mod suite;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = linalg::DenseMatrix<f64>;
pub type Problem = problems::CompositeProblem<f64>;
pub type Schedule = oracles::ErrorSchedule<f64>;
pub type Config = solvers::SolverConfig<f64>;
pub type Trace = solvers::Trace<f64>;

pub type Matrix32 = linalg::DenseMatrix<f32>;
pub type Problem32 = problems::CompositeProblem<f32>;
pub type Schedule32 = oracles::ErrorSchedule<f32>;
pub type Config32 = solvers::SolverConfig<f32>;
pub type Trace32 = solvers::Trace<f32>;
