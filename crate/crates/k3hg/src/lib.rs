//! Exact Gauss sums, finite field hypergeometric sums, Koblitz point counts and
//! zeta-function factors for five symmetric pencils of K3 quartic surfaces.

pub mod arith;
pub mod charsums;
pub mod error;
pub mod finitefield;
pub mod hypergeom;
pub mod koblitz;
pub mod pencils;
pub mod zeta;

pub use error::{Error, Result};
