//! Numerics for a local hidden-variable model whose density is built from the
//! pseudo-function `Pf θ(λ)/λ`.
//!
//! The crate is split along the same lines as the computation:
//!
//! - [`fp_quadrature`]: Hadamard finite parts `Fp ∫₀^b g(λ)/λ dλ`, in closed form for
//!   piecewise-constant weights, by subtraction for smooth ones, and ε-regularized.
//! - [`constants`] and [`lhv_model`]: the model constants `(C, β, f)`, detector
//!   functions and the factorized closed-form moments.
//! - [`mc_engine`]: importance-sampled ε-regularized moments and the polynomial
//!   fit in `ln ε` that recovers the finite part.
//! - [`bell_audit`]: CHSH evaluation, maximal-violation search and the
//!   absolute-value bound check.
//! - [`prob_space`]: the two-event probability space and the range gate.

pub mod bell_audit;
pub mod constants;
pub mod error;
pub mod fp_quadrature;
pub mod lhv_model;
pub mod mc_engine;
pub mod prob_space;
mod quadrature;

pub use constants::ModelConstants;
pub use error::{Error, Result};
