//! Simulation and exact-computation toolkit for critical long-range
//! percolation on Z^d.

pub mod error;
pub mod firework;
pub mod geodesic_dim;
pub mod graph;
pub mod graph_io;
pub mod kernel;
pub mod lattice;
pub mod metric;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod scaling;
pub mod sperner;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{LrpGraph, Neighbourhood};
pub use kernel::ModelConfig;
pub use rng::RngStream;
pub use sampler::GraphSampler;
