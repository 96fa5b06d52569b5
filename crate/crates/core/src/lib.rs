//! Exponential sampling series on the positive half-line.
//!
//! The series
//!
//! ```text
//! (S_w f)(t) = sum_k chi(e^{-k} t^w) f(e^{k/w})
//! ```
//!
//! reconstructs a bounded signal `f` from samples at the exponentially spaced
//! nodes `e^{k/w}`. This crate provides the kernels `chi` (Mellin B-splines,
//! Mellin–Jackson kernels and a two-sided combination that vanishes at 1),
//! admissibility checks via moments and Mellin transforms, the series itself
//! with its jump-point decomposition, and the rate, round-off and time-jitter
//! error bounds together with randomized experiments against them.
//!
//! Everything internally works in the log domain: a point `u > 0` is carried
//! as `y = ln u`, so `chi(e^{-k} t^w)` becomes `chi` at `w ln t - k`.

// Domain checks use `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod error_lab;
pub mod expr;
pub mod kernel;
pub mod quadrature;
pub mod sampling;
pub mod signal;
mod sum;

pub use analysis::{AlphaEstimate, KernelReport};
pub use error::{Error, Result};
pub use error_lab::{ErrorReport, PerturbationMode};
pub use kernel::{KernelKind, KernelSpec};
pub use num_complex::Complex64;
pub use sampling::{Alignment, JumpAnalysis, SamplingConfig};
pub use signal::{JumpPoint, PiecewiseSignal};
