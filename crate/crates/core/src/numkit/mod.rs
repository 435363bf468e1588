//! Dense real-matrix kernels used by every other module: row-major [`Mat`],
//! a one-sided Jacobi SVD pseudo-inverse, power iteration, Lloyd k-means
//! with seeded k-means++ starts, and a central-difference gradient oracle.

mod eigen;
mod grad;
mod kmeans;
mod mat;
mod svd;

pub use eigen::{lambda_max_sym, sym_eigenvalues};
pub use grad::central_diff_grad;
pub use kmeans::{kmeans, KmeansResult};
pub use mat::Mat;
pub use svd::{pinv, svd, Svd};

pub(crate) use mat::sq_dist;

/// Default relative cutoff for treating singular values as zero.
pub const PINV_TOL: f64 = 1e-10;
