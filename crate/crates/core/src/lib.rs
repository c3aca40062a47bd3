//! Directed graph embeddings on the statistical manifold of exponential
//! power distributions.
//!
//! Every node becomes a diagonal exponential power distribution. Training
//! fits the asymmetric KL divergence between node distributions to the
//! directed hop distances of the graph, including unreachable pairs.
//!
//! Modules follow the pipeline: [`graph`] (parsing, distances, components),
//! [`sampling`] (training pairs), [`manifold`] (densities, divergences and
//! geometry), [`training`] (loss, gradients, optimizer) and [`eval`]
//! (correlations, mutual information, reconstruction, Bourgain baseline).

pub mod error;
pub mod eval;
pub mod graph;
pub mod manifold;
pub mod sampling;
pub mod training;

pub use error::{Error, Result};
pub use graph::{DirectedGraph, Distance, DistanceMatrix, NodeId};
pub use manifold::{EmbeddingPoint, ManifoldConfig};
pub use training::{EmbeddingModel, TrainConfig};
