//! Extrapolation of a function from its values on geometric sequences that
//! collapse to the origin.
//!
//! Given `f` with `f(0) = 1`, `f(x)` is estimated by multiplying and dividing
//! weighted products of `f` sampled at `prod_{k in S} (r^k - 1)^{1/k} x / r^n`
//! for every index set `S` drawn from a base set, then letting `r` approach 1.
//!
//! - [`combinatorics`]: index sets, subset families, composition weights
//! - [`multiproduct`]: the estimator, component extraction, pollution factors
//! - [`oracle`]: independent reference computations and built-in functions
//! - [`signal`]: CSV ingestion, normalization, interpolation and forecasting
//! - [`sweeps`]: grid and r-schedule error studies
//! - [`cli`]: the `geomprod` command line

// `!(a > b)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accum;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod multiproduct;
pub mod oracle;
pub mod signal;
pub mod source;
pub mod sweeps;

pub use combinatorics::{IndexSet, SubsetFamily};
pub use error::{Error, Result};
pub use multiproduct::{Estimate, GmpConfig, LogProduct, Parity};
pub use oracle::BuiltinFunction;
pub use signal::SampledSignal;
pub use source::FunctionSource;
