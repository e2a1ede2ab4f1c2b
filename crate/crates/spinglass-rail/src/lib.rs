//! Train dispatching on single-track railway lines as QUBO.
//!
//! A disturbed timetable is modeled as a set of integer delay decisions —
//! one per train per station — compiled into binary one-hot variables with
//! penalty couplings for every operational conflict: minimum passing times,
//! single-block headways, meet conflicts on shared track, and rolling-stock
//! turnovers.  The crate covers the full round trip:
//!
//! * [`model`] — networks, trains, timetables, and the problem description
//!   with its JSON form;
//! * [`compile`] — primary-delay propagation, variable layout, objective
//!   and penalty terms, and QUBO assembly;
//! * [`schedule`] — decoding solver states into delay tables and validating
//!   them against all rules, including station capacity, which the QUBO
//!   deliberately leaves out;
//! * [`oracle`] — exhaustive search over one-hot assignments for exact
//!   reference optima.

pub mod compile;
pub mod model;
pub mod oracle;
pub mod schedule;


pub use compile::{
    assemble_qubo, condition_terms, enumerate_variables, headway_forbidden, objective_terms,
    objective_terms_generic, onehot_penalty_terms, passing_forbidden, propagate_primary,
    turnover_forbidden, ConditionKind, OneHotTerms, VariableGroup, VariableMap,
};
pub use model::{
    Block, Direction, DispatchProblem, Network, RouteEntry, Train, Turnover,
};
pub use oracle::{exact_onehot_search, ONEHOT_ENUMERATION_CAP};
pub use schedule::{
    decode_schedule, encode_schedule, validate_schedule, CapacityViolation, DelayTable,
    GroupViolation, HeadwayViolation, MeetViolation, PassingViolation, TurnoverViolation,
    ValidationReport,
};

use thiserror::Error;

/// Everything that can go wrong building, compiling, or decoding a
/// dispatching problem.
#[derive(Debug, Error)]
pub enum RailError {
    #[error("a line needs at least two stations, found {0}")]
    TooFewStations(usize),
    #[error("the first and last blocks of the line must be stations")]
    LineEndsAreNotStations,
    #[error("station block {block} must have at least one track")]
    BadTrackCount { block: usize },
    #[error("the problem has no trains")]
    NoTrains,
    #[error("train {train} has an empty route")]
    EmptyRoute { train: usize },
    #[error("train {train} must follow consecutive blocks in its direction of travel")]
    RouteNotContiguous { train: usize },
    #[error("train {train} references block {block} outside the network")]
    RouteOffNetwork { train: usize, block: usize },
    #[error("train {train} must start and end at stations")]
    RouteEndsOffStation { train: usize },
    #[error("train {train} must call at two stations or more")]
    TooFewRouteStations { train: usize },
    #[error(
        "train {train} is timetabled {reserve} minutes short of its minimum passage at block {block}"
    )]
    NegativeReserve {
        train: usize,
        block: usize,
        reserve: i64,
    },
    #[error("train {train} has a negative minimum passage at block {block}")]
    BadPassage { train: usize, block: usize },
    #[error("train {train} has a negative entry delay")]
    NegativeEntryDelay { train: usize },
    #[error("train {train} has a non-finite or negative weight {value}")]
    BadWeight { train: usize, value: f64 },
    #[error("{which} must be positive and finite, got {value}")]
    BadPenalty { which: &'static str, value: f64 },
    #[error("turnover references train {train}, which does not exist")]
    UnknownTrain { train: usize },
    #[error("turnover from train {arriving} to train {departing} has negative minutes")]
    NegativeTurnover { arriving: usize, departing: usize },
    #[error(
        "turnover from train {arriving} to train {departing} needs the arrival terminus to be the departure origin"
    )]
    TurnoverStationMismatch { arriving: usize, departing: usize },
    #[error("the requested spectrum must hold at least one entry")]
    BadSpectrumSize,
    #[error("one-hot search space of {size} assignments exceeds the cap of {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },
    #[error("{} group(s) break the one-hot constraint", groups.len())]
    BrokenOneHot { groups: Vec<GroupViolation> },
    #[error("delay table row {train} has {got} entries, expected {want}")]
    DelayTableShape {
        train: usize,
        got: usize,
        want: usize,
    },
    #[error("delay {delay} for train {train} at decision station {position} is not selectable")]
    DelayOutOfRange {
        train: usize,
        position: usize,
        delay: i64,
    },
    #[error("problem description: {0}")]
    Json(String),
    #[error(transparent)]
    Model(#[from] spinglass_core::ModelError),
}
