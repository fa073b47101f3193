//! Cavity-coupled multilevel atoms described by level graphs: configuration
//! spaces, block decompositions, Hamiltonians, time evolution and state
//! preparation.

pub mod blocks;
pub mod config;
pub mod error;
pub mod evolution;
pub mod graph;
pub mod io;
pub mod lie;
pub mod operators;
pub mod oracle;
pub mod preparation;
pub mod space;
pub mod sparse;
pub mod verify;

pub use blocks::{Block, BlockLabel};
pub use config::{Configuration, Extended};
pub use error::{Error, Result};
pub use graph::{named_graph, DirectedEdge, Edge, Graph, Path, Shape};
pub use operators::BlockSparseOperator;
pub use space::{StateVector, TruncatedSpace};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
