//! Trajectories of linear dynamics as ground states of binary optimization
//! problems.
//!
//! The chain of custody: discretize `dψ/dt = K(t) ψ` into per-interval step
//! propagators ([`step_propagators`]), assemble the clock linear system whose
//! unique solution stacks the whole trajectory ([`build_clock_system`]),
//! phrase that system as a quadratic objective over the stacked unknowns
//! ([`quadratic_objective`]), encode each real unknown in a handful of
//! fixed-point bits ([`encode_fixed_point`]), and hand the resulting QUBO to
//! a solver from `spinglass-core`.  [`simulate_pipeline`] runs the whole
//! chain and decodes the winner back into a trajectory with honesty checks
//! (raw objective value and linear-system residual) attached.
//!
//! Complex generators are supported through the standard real embedding
//! `a + bi ↦ [[a, -b], [b, a]]`, applied once up front ([`complex_to_real_matrix`]).

pub mod clock;
pub mod encode;
pub mod pipeline;
pub mod system;

pub use clock::{
    build_clock_system, quadratic_objective, stack_trajectory, ClockSystem, ObjectiveForm,
    QuadraticObjective,
};
pub use encode::{
    decode_fixed_point, encode_fixed_point, energy_linear_coefficient, energy_offset,
    energy_pair_coefficient, nearest_bits, truncate_coefficients, truncate_value, EncodedProblem,
    FixedPointCode,
};
pub use pipeline::{simulate_pipeline, PipelineOptions, PipelineResult, PipelineSolver};
pub use system::{
    complex_to_real_matrix, complex_to_real_vector, parse_system_spec, step_propagators, Generator,
    SystemSpec,
};

use spinglass_core::{McError, ModelError, SearchError};
use thiserror::Error;

/// Everything that can go wrong between a system description and a decoded
/// trajectory.
#[derive(Debug, Error)]
pub enum DynError {
    #[error("generator must be square, got {rows}x{cols}")]
    NonSquareGenerator { rows: usize, cols: usize },
    #[error("generator produced a {rows}x{cols} matrix, expected {dim}x{dim}")]
    GeneratorDimension { rows: usize, cols: usize, dim: usize },
    #[error("initial state has dimension {got}, the generator acts on dimension {want}")]
    StateDimension { got: usize, want: usize },
    #[error("the initial state must not be empty")]
    EmptyState,
    #[error("a trajectory needs at least two time points, got {0}")]
    TooFewTimePoints(usize),
    #[error("time points must be strictly increasing")]
    NonMonotonicTimes,
    #[error("substeps must be at least 1")]
    BadSubsteps,
    #[error("propagator {index} is {rows}x{cols}, expected {dim}x{dim}")]
    PropagatorDimension {
        index: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error(
        "the energy form needs a positive definite system matrix; \
         smallest eigenvalue of the symmetrized matrix is {eigenvalue:.6e}"
    )]
    NotPositiveDefinite { eigenvalue: f64 },
    #[error("a fixed-point code needs at least one bit per unknown")]
    BadBitCount,
    #[error("objective shapes disagree: matrix is {rows}x{cols}, linear part has length {c_len}")]
    ObjectiveShape {
        rows: usize,
        cols: usize,
        c_len: usize,
    },
    #[error("system description: {0}")]
    Description(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Mc(#[from] McError),
}
