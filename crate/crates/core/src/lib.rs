//! Nyström low-rank approximation of Gaussian RBF kernel matrices, kernel
//! ridge regression on top of it, and a family of landmark selectors
//! (uniform, K-means, importance-sampling coresets, D² coresets, Gibbs k-DPP
//! and ridge leverage scores).
//!
//! The typical pipeline is
//!
//! 1. pick a kernel width with [`kernel::kernel_width_heuristic`],
//! 2. select landmarks with one of the [`sampling`] selectors,
//! 3. build the rank-`r` factors with [`nystrom::NystromFactors::build`],
//! 4. either score the approximation with [`metrics::approx_error`] or fit a
//!    regression model with [`krr::KrrModel::fit_lowrank`].

pub mod data;
pub mod error;
pub mod kernel;
pub mod krr;
pub mod linalg;
pub mod metrics;
pub mod nystrom;
pub mod sampling;

pub use error::{Error, Result};
pub use kernel::{DataMatrix, KernelMatrix, KernelSpec};
pub use nalgebra::{DMatrix, DVector};
