//! Graph Haar wavelet feature compression for quantized graph convolutional
//! networks.
//!
//! The pipeline: build a pair-graph (near-perfect matching) on the input
//! graph, run a multi-level Haar transform over it, keep only the
//! largest-norm coefficient rows jointly across channels, and perform the
//! 1x1 convolution on the compressed dense block. Uniform quantization-aware
//! operators (clip / scale / round with learnable clipping parameters) cover
//! both weights and activations, so the whole stack runs on small dense
//! tensors at low bit widths.
//!
//! Modules map onto the stages:
//! - [`graph`]: graph construction (edge lists, kNN) and GCN propagation.
//! - [`matching`]: greedy pair-graph matching and graph coarsening.
//! - [`haar`]: the multi-level Haar transform and its inverse.
//! - [`shrinkage`]: joint-channel top-k selection, gather/scatter,
//!   compress-reconstruct.
//! - [`quant`]: uniform quantizers, clipping gradients, weight normalization.
//! - [`layers`]: wavelet-compressed convolution layers (V1/V2, edge conv,
//!   GCNII).
//! - [`train`]: closed-form gradients and a small SGD loop for toy models.
//! - [`model`]: the text model format and a sequential executor.
//! - [`synth`]: synthetic data generators (planted partitions, smooth
//!   features).
//! - [`sweep`]: the MSE-vs-compression experiment and compression
//!   accounting.
//! - [`io`]: text formats for graphs, features, labels and sidecar files.

pub mod graph;
pub mod haar;
pub mod io;
pub mod layers;
pub mod matching;
pub mod model;
pub mod quant;
pub mod shrinkage;
pub mod sweep;
pub mod synth;
pub mod train;

mod matrix;

pub use graph::{gcn_propagation, knn_graph, Graph, PropagationMatrix};
pub use matrix::FeatureMatrix;

use thiserror::Error;

/// Errors produced by graph/feature parsing and the numerical operators.
#[derive(Error, Debug)]
pub enum Error {
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid model file: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
