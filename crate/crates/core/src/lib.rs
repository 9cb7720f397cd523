//! Lewis-weight path following for linear programs.
//!
//! Modules:
//! - [`linalg`]: weighted normal equations, leverage scores, projection matrices
//! - [`lewis`]: ℓp Lewis weights (exact, sketched, homotopy in p)
//! - [`barrier1d`]: interval barriers
//! - [`pathfollow`]: weighted central path solver and dual extraction
//! - [`lewisbarrier`]: the Lewis weight barrier for `{x : Ax > b}`
//! - [`flow`]: min-cost max-flow through the LP reduction
//! - [`cli`]: file formats and command implementations

pub mod barrier1d;
pub mod cli;
pub mod flow;
pub mod error;
pub mod lewis;
pub mod lewisbarrier;
pub mod linalg;
pub mod pathfollow;

pub use error::{Error, Result};
