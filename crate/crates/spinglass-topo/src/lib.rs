//! Annealer hardware graphs and minor embeddings.
//!
//! Quantum annealers expose a fixed *working graph*: an instance is only
//! directly solvable when its interaction graph is a subgraph of the
//! hardware.  This crate provides
//!
//! * [`graph`] — generation of the Chimera family (full edge sets) and the
//!   Pegasus/Zephyr node sets, plus loading of real, yield-reduced working
//!   graphs from plain edge-list files;
//! * [`embed`] — applying a minor embedding to an Ising instance (splitting
//!   fields across chains, placing couplings, adding ferromagnetic chain
//!   penalties), validating embeddings against a working graph, and
//!   resolving chain breaks in samples by discarding or majority vote.
//!
//! Everything is deterministic; the only randomness — majority-vote tie
//! breaking — is driven by a caller-supplied seed with one RNG substream
//! per sample.

pub mod embed;
pub mod graph;

pub use embed::{
    apply_embedding, chain_strength_from_scale, resolve_chains, validate_embedding,
    ChainStrategy, Embedding, EmbeddingReport,
};
pub use graph::{
    chimera, chimera_coordinates, chimera_edge_count, chimera_index, chimera_node_count,
    chimera_two_coloring, generate_topology, load_working_graph, parse_edge_list, pegasus,
    pegasus_node_count, verify_chimera_witness, zephyr, zephyr_node_count, TopologyKind,
    WorkingGraph,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TopoError {
    #[error("topology size must be at least 1")]
    BadSize,
    #[error("cannot generate a custom topology; load it from an edge list instead")]
    UnsupportedKind,
    #[error("line {line}: expected `u v` with two distinct node indices, got `{got}`")]
    ParseEdge { line: usize, got: String },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: usize },
    #[error("line {line}: duplicate edge ({u}, {v})")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("could not read edge list: {0}")]
    Io(String),
    #[error("chimera coordinate out of range: row {r}, column {c}, shore {u}, index {k}")]
    BadCoordinate { r: usize, c: usize, u: usize, k: usize },
    #[error("node id {id} outside the {n}x{n} chimera graph")]
    BadNodeId { id: usize, n: usize },
    #[error("logical variable {variable} has no chain")]
    MissingChain { variable: usize },
    #[error("logical variable {variable} has an empty chain")]
    EmptyChain { variable: usize },
    #[error("qubit {qubit} appears in more than one chain")]
    OverlappingChains { qubit: usize },
    #[error("chain of variable {variable} uses qubit {qubit} which is not in the working graph")]
    QubitOffGraph { variable: usize, qubit: usize },
    #[error("chain of variable {variable} is not a path: no coupler between {from} and {to}")]
    ChainNotAPath {
        variable: usize,
        from: usize,
        to: usize,
    },
    #[error("no physical coupler available between the chains of variables {a} and {b}")]
    MissingCoupler { a: usize, b: usize },
    #[error("chain strength {0} is not a non-negative finite number")]
    BadChainStrength(f64),
    #[error("chains must be keyed by the contiguous logical variables 0..n")]
    NonContiguousChains,
    #[error("qubit {qubit} does not fit a 64-bit sample word")]
    QubitOutOfRange { qubit: usize },
    #[error("witness maps two nodes onto qubit {qubit}")]
    WitnessNotInjective { qubit: usize },
    #[error("witness does not cover node {node}")]
    WitnessMissingNode { node: usize },
    #[error("witness image lacks the edge ({image_a}, {image_b}) required by ({a}, {b})")]
    WitnessMissingEdge {
        a: usize,
        b: usize,
        image_a: usize,
        image_b: usize,
    },
    #[error(transparent)]
    Model(#[from] spinglass_core::ModelError),
}
