//! Reduction of quantum dynamics on truncated Fock space to phase-plane
//! geometry through coherent-state families.

pub mod coherent;
pub mod dequantize;
pub mod error;
pub mod flow;
pub mod fock;
pub mod quadrature;
pub mod wkb;

pub use error::{Error, Result};
