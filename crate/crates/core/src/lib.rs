//! Simulator for maintaining maximal matchings without 3-augmenting paths in
//! the vertex-partitioned k-clique message passing model.
//!
//! The crate is organised around a single-threaded [`Simulation`] that owns
//! the ground-truth graph, the matching and the round engine. Algorithms
//! ([`fullydyn`], [`batchinc`]) interact with it only through round plans,
//! direct exchanges and [`spreading::spread`]. The [`oracle`] module sits
//! outside the model and verifies results exactly.

pub mod adversary;
pub mod batchinc;
pub mod driver;
mod error;
pub mod fullydyn;
pub mod graph;
pub mod oracle;
pub mod sim;
pub mod spreading;

pub use error::{Error, Result};
pub use graph::{Graph, Matching, Partition, Vertex};
pub use sim::{Metrics, PlayerId, RoundPlan, SimConfig, Simulation, Token, TokenKind};
