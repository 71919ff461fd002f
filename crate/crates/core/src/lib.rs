//! Weighted means of orthogonal-polynomial root distributions and their
//! equilibrium limits.

pub mod csvio;
pub mod equilibrium;
pub mod error;
pub mod families;
pub mod means;
pub mod quadrature;
pub mod special;
pub mod summation;
pub mod tridiag;

pub use error::{Error, Result};
