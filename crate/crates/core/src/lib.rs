//! Arithmetic and statistics of the length spectrum of the modular surface.
//!
//! The crate builds the amplitude table Lambda(n) attached to hyperbolic
//! conjugacy classes of PSL(2, Z) from exact class-number and regulator
//! arithmetic, evaluates every term of the trace-formula expansion of a
//! smooth eigenvalue-counting function, and runs sampling experiments that
//! probe the variance and Gaussian limit of the hyperbolic sum S_{f,L}.

pub mod amplitude;
pub mod cli;
pub mod error;
pub mod numeric;
pub mod quadratic;
pub mod relations;
pub mod stats;
pub mod testfn;
pub mod trace;

pub use error::{Error, Result};
