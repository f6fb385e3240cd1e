//! Exact Piltz divisor computations with rigorous explicit-bound
//! verification.
//!
//! The crate computes the divisor functions `d_k(n)` and their summatory
//! functions `T_k(x)` exactly (block sieves and the hyperbola recursion),
//! evaluates main-term polynomials and error terms in radius-tracked
//! extended precision, houses every named explicit envelope, reproduces the
//! published constant tables for the general-order error bound, and drives
//! checkpointed block-parallel range verification of the envelopes over
//! integer jump points.

pub mod approx;
pub mod bounds;
pub mod classnum;
pub mod divisor;
pub mod error;
pub mod gamma;
pub mod int;
pub mod lambda;
pub mod lemmas;
pub mod mainterm;
pub mod quad;
pub mod verify;

pub use approx::ApproxReal;
pub use error::{Error, Result};
