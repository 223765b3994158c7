//! Fock-space trace identities for fermions and bosons, Fredholm series for
//! second-kind integral equations, and infinite-product vertex-operator traces.
//!
//! Scalars are [`C64`] throughout. Basis indices are 0-based in code.

// `!(x < y)` guards below also reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod fredholm;
pub mod genfun;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod suite;
pub mod trace;
pub mod vertex;

pub use error::{Error, Result};
pub use fock::{MultiIndex, Multivector, Statistics};
pub use linalg::DenseOperator;

pub use num_complex::Complex64 as C64;

/// `|a - b| / max(1, |b|)`.
pub fn rel_err(value: C64, reference: C64) -> f64 {
    (value - reference).norm() / reference.norm().max(1.0)
}
