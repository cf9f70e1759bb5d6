//! Lévy-flight graph convolutional networks and the graph spectral tools behind them.
//!
//! - [`graph`]: edge lists, adjacency, degree and Laplacian matrices.
//! - [`spectral`]: eigendecomposition, fractional Laplacians, Lévy transitions, relaxation times.
//! - [`gssl`]: closed-form graph semi-supervised classifiers.
//! - [`fgs`]: the truncated FGS propagation filter.
//! - [`dropedge`]: edge betweenness and preferential edge dropping.
//! - [`model`]: the trainable network, Adam and checkpoints.
//! - [`dataset`], [`config`], [`harness`], [`synth`]: data files, run configuration, sweeps and synthetic data.

pub mod config;
pub mod dataset;
pub mod dropedge;
pub mod error;
pub mod fgs;
pub mod graph;
pub mod gssl;
pub mod harness;
pub mod matrix;
pub mod model;
pub mod reliability;
pub mod rng;
pub mod spectral;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use matrix::DenseMatrix;
