//! Linear-algebra and statistics kernels shared by the diagnostics and
//! analogy code.

pub mod kmeans;
pub mod matrix;
pub mod stats;
pub mod svd;

pub use kmeans::{kmeans, KMeansResult};
pub use matrix::{axpy, dot, norm, DenseMatrix};
pub use stats::{linear_fit, pearson, LinearFit};
pub use svd::{jacobi_svd, pinv_solve, singular_values, top_singular, PseudoInverse, Svd};
