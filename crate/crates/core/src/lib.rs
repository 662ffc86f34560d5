//! Graph convolutional networks for triangulated surfaces.
//!
//! The crate contains everything that does not touch the file system:
//! sparse adjacency handling, mesh-to-graph conversion and resampling, the
//! two-headed GraphNet model with hand-written backpropagation, losses and
//! the Adam training loop, evaluation metrics, and a synthetic
//! vessel-with-aneurysm surface generator.
//!
//! It builds without `std` (only `alloc` is required). The `std` feature
//! enables runtime CPU dispatch in the matrix kernels and wall-clock timing
//! helpers; `parallel` runs per-sample work within a batch on rayon.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dataset;
pub mod graph;
pub mod matrix;
pub mod mesh;
pub mod metrics;
pub mod nn;
pub mod real;
pub mod synth;
pub mod train;

pub use dataset::LabeledSample;
pub use graph::{normalize_adjacency, permute_graph, spmm, NormalizedAdjacency, SparseAdjacency, SurfaceGraph};
pub use matrix::Matrix;
pub use mesh::TriangleMesh;
pub use nn::{GraphNetConfig, GraphNetModel};
pub use real::Real;

