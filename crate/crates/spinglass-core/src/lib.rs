//! Core toolkit for spin-glass optimization problems: Ising and QUBO
//! instances, exact exhaustive solvers, and Monte Carlo baselines.
//!
//! All solvers agree on one total order for energies —
//! `(energy, state word)` — which makes exact results reproducible to the
//! byte across thread counts and chunking strategies, and makes degenerate
//! ground states resolve deterministically.

pub mod bruteforce;
mod dense;
pub mod gray;
pub mod io;
pub mod mc;
pub mod model;

pub use bruteforce::{chunk_range, select_k_lowest, spectrum_search, SearchConfig, SearchError};
pub use gray::{
    delta_energy, fix_variables, flip_index, gray_code, ground_search_gray, split_delta, GrayState,
};
pub use mc::{
    parallel_tempering, simulated_annealing, time_to_solution, BetaLadder, LadderKind, McError,
    McResult, Tts,
};
pub use model::{
    enumerate_spectrum_naive, ising_energy, ising_to_qubo, qubo_energy, qubo_to_ising,
    spectrum_order, EnergyModel, IsingInstance, ModelError, PackedState, QuboInstance, Spectrum,
    SpectrumEntry,
};
