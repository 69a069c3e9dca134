//! Nonspreading wave packets in one dimension: construction from a static
//! potential, and independent verification by unitary propagation and by the
//! Hamiltonian decomposition analysis.

// `!(a < b)` is the idiom used throughout to reject NaN with the bound;
// tabulated constants keep every digit of their reference values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cases;
pub mod construct;
pub mod eigen;
pub mod error;
pub mod field;
pub mod io;
pub mod propagate;
pub mod specfun;
pub mod spline;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Grid1D, Observables, PhysicalConstants, WaveField};
