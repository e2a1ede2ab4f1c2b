//! Error-to-exit-code policy.
//!
//! Every failure is sorted into one of three buckets before it reaches the
//! user: code 2 for anything wrong with the inputs (unreadable or malformed
//! files, parameter values a solver's preconditions reject), code 3 for
//! sizing refusals (the run would exceed a hard variable, memory, or
//! enumeration cap), and code 4 for solver failures on a well-formed run
//! (numerical breakdown, rejected objective, garbage samples).  Railway
//! validation reporting violations uses code 1 — the tool worked; the
//! schedule didn't.

use spinglass_core::io::ParseError;
use spinglass_core::{McError, ModelError, SearchError};
use spinglass_dynamics::DynError;
use spinglass_rail::RailError;
use spinglass_tn::TnError;
use spinglass_topo::TopoError;

pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SIZING: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_SOLVER,
            message: message.into(),
        }
    }

    pub fn violations(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VIOLATIONS,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

fn model_code(e: &ModelError) -> i32 {
    match e {
        ModelError::TooManyVariables(_) | ModelError::EnumerationTooLarge(_) => EXIT_SIZING,
        _ => EXIT_INPUT,
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError {
            code: model_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::input(e.to_string())
    }
}

fn search_code(e: &SearchError) -> i32 {
    match e {
        SearchError::BufferTooLarge { .. } => EXIT_SIZING,
        SearchError::Model(m) => model_code(m),
        // Everything else is a rejected search configuration.
        _ => EXIT_INPUT,
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        CliError {
            code: search_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<McError> for CliError {
    // Every Monte Carlo error is a precondition on ladder or probability
    // parameters.
    fn from(e: McError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<TnError> for CliError {
    fn from(e: TnError) -> Self {
        let code = match &e {
            TnError::ClusterTooLarge { .. } => EXIT_SIZING,
            TnError::Model(m) => model_code(m),
            TnError::BadBeta(_)
            | TnError::BadChi
            | TnError::BadCutoff(_)
            | TnError::BadMaxBranches
            | TnError::BadSpectrumSize => EXIT_INPUT,
            TnError::MapParse { .. }
            | TnError::SpinReassigned { .. }
            | TnError::SpinUnassigned { .. }
            | TnError::EmptyMap
            | TnError::MissingSite { .. }
            | TnError::DuplicateSite { .. }
            | TnError::NonAdjacentEdge { .. } => EXIT_INPUT,
            _ => EXIT_SOLVER,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<DynError> for CliError {
    fn from(e: DynError) -> Self {
        let code = match &e {
            DynError::NotPositiveDefinite { .. } => EXIT_SOLVER,
            DynError::Model(m) => model_code(m),
            DynError::Search(s) => search_code(s),
            DynError::Mc(_) => EXIT_INPUT,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<RailError> for CliError {
    fn from(e: RailError) -> Self {
        let code = match &e {
            RailError::SearchSpaceTooLarge { .. } => EXIT_SIZING,
            RailError::Model(m) => model_code(m),
            RailError::BrokenOneHot { .. } => EXIT_SOLVER,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<TopoError> for CliError {
    fn from(e: TopoError) -> Self {
        let code = match &e {
            TopoError::Model(m) => model_code(m),
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::input(e.to_string())
    }
}

/// Read a file with the path in the error message.
pub fn read_input(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
