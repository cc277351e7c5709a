//! Numerical lab for parabolic and elliptic equations whose drift and
//! potential may grow at infinity.

pub mod characteristics;
pub mod coeffspec;
pub mod error;
pub mod holder;
pub mod kernel;
pub mod expr;
pub mod linalg;
pub mod quad;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
