//! Exact arithmetic and group-theoretic verification kernels for building
//! matrix representations with controlled ramification data.

pub mod adjoint;
pub mod bernoulli;
pub mod budget;
pub mod certify;
pub mod cohomology;
pub mod deform;
pub mod error;
pub mod exponents;
pub mod linalg;
pub mod matrix;
pub mod model;
mod ntt;
pub mod phi;
pub mod regularity;
pub mod zp;

pub use budget::Budget;
pub use error::{Error, Result, SelectionError};
