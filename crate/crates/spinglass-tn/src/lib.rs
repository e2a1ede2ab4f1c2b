//! Tensor-network solvers for spin-glass instances.
//!
//! Two families live here:
//!
//! * a PEPS representation of the Gibbs distribution of an Ising problem
//!   whose variables have been grouped into clusters on a rectangular
//!   lattice ([`lattice::ClusterLattice`] -> [`peps::build_peps`] ->
//!   [`bnb::branch_and_bound`]), with boundary-MPS contraction and
//!   probability-guided branch and bound over cluster configurations;
//! * an MPS imaginary-time solver ([`mps::mps_imaginary_time`]) that works
//!   on arbitrary (including fully connected) graphs by evolving a product
//!   state with diagonal two-body gates and compressing after every gate.
//!
//! Both solvers report exact energies: candidate states found through the
//! (approximate) tensor contractions are always re-evaluated against the
//! original coupling data, so truncation can only affect *which* states are
//! found, never the energies attached to them.

pub mod bnb;
mod compress;
pub mod lattice;
pub mod mps;
pub mod peps;

pub use bnb::{branch_and_bound, BnbOutcome, TnConfig, TnDiagnostics};
pub use lattice::{parse_cluster_map, ClusterLattice, ClusterSite, MapEntry};
pub use mps::{mps_imaginary_time, MpsBranchConfig};
pub use peps::{
    build_peps, conditional_probability, contract_boundary, edge_decompose, log_partition,
    BoundaryMps, PepsNetwork,
};

use spinglass_core::ModelError;
use thiserror::Error;

/// Largest number of spins allowed in a single cluster (physical dimension 256).
pub const MAX_CLUSTER_SPINS: usize = 8;

#[derive(Debug, Error)]
pub enum TnError {
    #[error("cluster at site ({row}, {col}) holds {size} spins, more than the cap of {cap}")]
    ClusterTooLarge {
        row: usize,
        col: usize,
        size: usize,
        cap: usize,
    },
    #[error("spin {spin} is assigned to more than one cluster")]
    SpinReassigned { spin: usize },
    #[error("spin {spin} is not assigned to any cluster")]
    SpinUnassigned { spin: usize },
    #[error("cluster map covers no sites")]
    EmptyMap,
    #[error("no cluster was declared for lattice site ({row}, {col})")]
    MissingSite { row: usize, col: usize },
    #[error("lattice site ({row}, {col}) was declared more than once")]
    DuplicateSite { row: usize, col: usize },
    #[error(
        "coupling between spins {i} and {j} connects clusters that are not \
         nearest neighbours on the lattice"
    )]
    NonAdjacentEdge { i: usize, j: usize },
    #[error("cluster map line {line}: {reason}")]
    MapParse { line: usize, reason: String },
    #[error("beta must be positive and finite, got {0}")]
    BadBeta(f64),
    #[error("boundary bond dimension chi must be at least 1")]
    BadChi,
    #[error("probability cutoff must satisfy 0 < cutoff <= 1, got {0}")]
    BadCutoff(f64),
    #[error("max_branches must be at least 1")]
    BadMaxBranches,
    #[error("requested spectrum size k must be at least 1")]
    BadSpectrumSize,
    #[error(
        "conditional requested for site {site} but the partial configuration \
         covers {have} sites; sites must be fixed in row-major order"
    )]
    SiteOutOfOrder { site: usize, have: usize },
    #[error("site index {site} is outside the lattice ({sites} sites)")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("cluster state {state} does not fit a cluster of {spins} spins")]
    ClusterStateOutOfRange { state: u64, spins: usize },
    #[error("tensor network contracted to a non-positive weight; the Gibbs weights underflowed")]
    DegenerateNetwork,
    #[error("bond dimension must be at least 1")]
    BadBondDimension,
    #[error("instance has no variables")]
    EmptyInstance,
    #[error("dbeta must be positive and divide beta into a whole number of steps (beta = {beta}, dbeta = {dbeta})")]
    BadStepSize { beta: f64, dbeta: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}
