//! Restricted isometry toolkit.
//!
//! Certifies or refutes (analytic) restricted isometry for real matrices,
//! builds the matrix-exponential witness vectors that refute `l2` ARIP for
//! sparse matrices, and audits the row-norm inequalities satisfied by every
//! `lp`-RIP matrix.

pub mod cli;
pub mod distortion;
pub mod ensembles;
pub mod error;
pub mod lpaudit;
pub mod matcore;
pub mod ripcert;
pub mod rng;
pub mod spectral;
pub mod witness;

pub use error::{Result, RipError};
pub use matcore::{DenseMatrix, IndexSet};
