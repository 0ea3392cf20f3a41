//! Matrix-projection local descriptors.
//!
//! Image descriptors that are usually computed by scanning a window across
//! the image (local binary patterns, pooled oriented gradients) are expressed
//! here as global products with precomputed projection matrices: circulant
//! shifts for pixel differences and banded matrices for pooling and block
//! normalization. Every projection route is paired with a scanning-window
//! reference implementation, and the two are checked against each other by
//! the test suite, the `selftest` command, and the benchmark gate.
//!
//! The crate ships:
//!
//! - [`matrix`]: dense row-major matrices with the elementwise operations the
//!   descriptors are built from;
//! - [`projection`]: shift and pooling operators, each with a fast indexed
//!   route and a dense materialized route that are bit-identical;
//! - [`mlbp`]: the binary-code descriptor and its scanning oracle;
//! - [`mhog`]: pooled directional gradients with block normalization (the
//!   zero-overlap, unnormalized variant is the DMP descriptor);
//! - [`pipeline`]: descriptor composition, feature vectors and batch
//!   extraction;
//! - [`classifier`]: an RBF-kernel regularized least-squares classifier;
//! - [`dataset`] / [`synth`]: image ingestion and a synthetic two-class
//!   texture generator;
//! - [`feature_file`]: the binary `MPFV` feature container;
//! - [`bench`] / [`selftest`] / [`report`]: the evaluation harness behind the
//!   `mpdesc` command-line tool.

pub mod bench;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod feature_file;
pub mod matrix;
pub mod mhog;
pub mod mlbp;
pub mod pipeline;
pub mod projection;
pub mod reference;
pub mod report;
pub mod selftest;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::ImageMatrix;
