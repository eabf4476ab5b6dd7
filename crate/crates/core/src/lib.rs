//! Numerical laboratory for semilinear parabolic differential inclusions
//! `u'(t) + A u(t) ∈ F(t, u(t))` discretized by nested P1 Galerkin spaces.

pub mod cli;
pub mod config;
pub mod error;
pub mod fem;
pub mod funnel;
pub mod problem;
pub mod sampling;
pub mod setvalued;
pub mod solver;
pub mod tracking;
pub mod tridiag;

pub use error::{Error, Result};
