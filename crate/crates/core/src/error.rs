use thiserror::Error;

use crate::graph::Vertex;
use crate::sim::PlayerId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("unbalanced partition: player {player} hosts {load} vertices (bound {bound})")]
    UnbalancedPartition {
        player: PlayerId,
        load: usize,
        bound: usize,
    },
    #[error("link {from}->{to} carried {count} tokens in one round (beta = {beta})")]
    LinkOverflow {
        from: PlayerId,
        to: PlayerId,
        count: usize,
        beta: usize,
    },
    #[error("edge {{{0}, {1}}} already present")]
    DuplicateEdge(Vertex, Vertex),
    #[error("self loop at {0}")]
    SelfLoop(Vertex),
    #[error("edge {{{0}, {1}}} not present")]
    MissingEdge(Vertex, Vertex),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(Vertex),
    #[error("state corrupt: {0}")]
    StateCorrupt(String),
    #[error("sampling exhausted for vertex {vertex} after {attempts} attempts")]
    SamplingExhausted { vertex: Vertex, attempts: usize },
    #[error("G1 has {edges} edges, limit {limit}")]
    G1Overflow { edges: usize, limit: usize },
    #[error("G*' has {vertices} vertices, limit {limit}")]
    GStarOverflow { vertices: usize, limit: usize },
    #[error("oracle input has {edges} edges, cap {cap}")]
    TooLarge { edges: usize, cap: usize },
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("invalid update: {0}")]
    InvalidUpdate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
