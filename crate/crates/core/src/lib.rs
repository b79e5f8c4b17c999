//! Random-walk log-linear model of text.
//!
//! * [`generator`]: word-vector prior, discourse random walk, corpus sampling.
//! * [`cooccur`]: windowed co-occurrence counts and PMI.
//! * [`trainer`]: SN and PMI weighted least-squares objectives with AdaGrad.
//! * [`diagnostics`]: checks of the model's closed-form predictions.
//! * [`analogy`]: linear analogy queries and relation-direction solvers.
//! * [`numerics`]: SVD, pseudo-inverse, k-means, correlation.

// `!(x > 0.0)` rejects NaN along with non-positive values; index loops in
// the numeric kernels walk several arrays in step.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cooccur;
pub mod analogy;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod generator;
pub mod io;
pub mod numerics;
pub mod trainer;
pub mod rng;

pub use error::{Error, Result};
