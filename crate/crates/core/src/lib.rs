// Dense kernels index several buffers by one loop variable; iterator
// rewrites obscure them.
#![allow(clippy::needless_range_loop)]

//! Pre-trained graph condensation via optimal-transport plan matching.
//!
//! The pipeline condenses a large attributed graph into a small synthetic
//! one by matching stochastic graph-diffusion states under a Wasserstein
//! cost while keeping the representation-space transport plan consistent
//! with a fused Gromov-Wasserstein plan in graph space. Downstream, labels
//! are transferred through the learned plan, the transfer can be fine-tuned
//! at test time, and source nodes are scored by their transport mass.
//!
//! Modules follow the pipeline order:
//! - [`numkit`]: dense matrix kernels (SVD pseudo-inverse, power iteration,
//!   k-means, finite differences),
//! - [`graph`]: graph model, normalization, synthetic block-model data,
//! - [`diffusion`]: explicit-Euler heat propagation and interval sampling,
//! - [`ot`]: log-domain Sinkhorn, fused Gromov-Wasserstein, brute-force oracles,
//! - [`condense`]: the pre-training loop with analytic gradients through
//!   unrolled Sinkhorn,
//! - [`harmonize`]: assignment matrix, label harmonizer, node significance,
//!   test-time fine-tuning,
//! - [`eval`]: SGC heads, task metrics, and numeric bound diagnostics.

pub mod condense;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod graph;
pub mod harmonize;
pub mod numkit;
pub mod ot;
pub mod parallel;

pub use error::{Error, Result};
pub use numkit::Mat;
