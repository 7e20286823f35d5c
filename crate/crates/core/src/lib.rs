//! Multi-manifold clustering based on local PCA.
//!
//! Points sampled near several smooth surfaces, possibly intersecting, are
//! clustered by comparing local tangent structure (covariances or tangent
//! projections estimated in small balls) in addition to spatial proximity.
//!
//! The main entry points are in [`cluster`]:
//! [`cluster::algorithm4_local_pca_spectral`] is the practical method, and
//! [`cluster::algorithm2_cov_components`] / [`cluster::algorithm3_proj_components`]
//! are the simpler connected-component variants.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affinity;
pub mod cli;
pub mod cluster;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod local_pca;
pub mod neighborhoods;

pub use error::{Error, Result};
