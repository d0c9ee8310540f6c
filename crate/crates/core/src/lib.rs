//! Refined Sobolev scales on model geometries: function parameters,
//! Hilbert-pair interpolation, scale norms and a model elliptic problem.

pub mod bvp;
pub mod error;
pub mod karamata;
pub mod pairs;
pub mod scale;

pub use error::{Error, Result};
pub use karamata::FunctionParameter;
pub use pairs::HilbertPair;
