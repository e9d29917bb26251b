//! Robust recovery of low-rank Hankel matrices from partial observations
//! corrupted by sparse outliers.
//!
//! The solver factors the Hankel matrix as `L R*` and runs a preconditioned
//! gradient iteration whose rate does not depend on the condition number.
//! Structured products with the Hankel matrix are computed with FFTs, so a
//! length-`n` signal costs `O(r n log n + r^2 n)` per iteration.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fft;
pub mod hankel;
pub mod io;
pub mod linalg;
pub mod recovery;
pub mod sampling;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
