//! Exhaustive reference search over one-hot assignments.  The structured
//! search space (one choice per group) is tiny compared to the full state
//! space, so exact optima stay within reach for instances far beyond the
//! generic enumerator.

use spinglass_core::{qubo_energy, spectrum_order, PackedState, Spectrum, SpectrumEntry};

use crate::compile::assemble_qubo;
use crate::model::DispatchProblem;
use crate::RailError;

/// Largest number of one-hot assignments the oracle will walk.
pub const ONEHOT_ENUMERATION_CAP: u128 = 10_000_000;

/// Enumerate every one-hot assignment of the compiled problem and return
/// the `k` lowest-energy states, ordered like any other spectrum.
///
/// Energies are evaluated through the same model routine the generic
/// solvers use, so results are directly comparable with theirs.
pub fn exact_onehot_search(problem: &DispatchProblem, k: usize) -> Result<Spectrum, RailError> {
    if k == 0 {
        return Err(RailError::BadSpectrumSize);
    }
    let sizes: Vec<usize> = crate::compile::enumerate_variables(problem)?
        .groups()
        .iter()
        .map(|g| g.len)
        .collect();
    let space = sizes
        .iter()
        .fold(1u128, |acc, &len| acc.saturating_mul(len as u128));
    if space > ONEHOT_ENUMERATION_CAP {
        return Err(RailError::SearchSpaceTooLarge {
            size: space,
            cap: ONEHOT_ENUMERATION_CAP,
        });
    }
    let (qubo, map) = assemble_qubo(problem)?;

    let starts: Vec<usize> = map.groups().iter().map(|g| g.start).collect();
    let mut choices = vec![0usize; sizes.len()];
    let mut entries: Vec<SpectrumEntry> = Vec::new();
    let keep = k.saturating_mul(2).max(1024);
    loop {
        let mut word = 0u64;
        for (group, &choice) in choices.iter().enumerate() {
            word |= 1 << (starts[group] + choice);
        }
        let state = PackedState(word);
        entries.push(SpectrumEntry {
            energy: qubo_energy(&qubo, state)?,
            state,
        });
        if entries.len() >= keep * 2 {
            entries.sort_by(spectrum_order);
            entries.truncate(keep);
        }

        // Odometer increment over the group choices.
        let mut digit = 0;
        loop {
            if digit == choices.len() {
                entries.sort_by(spectrum_order);
                entries.truncate(k);
                return Ok(Spectrum { entries });
            }
            choices[digit] += 1;
            if choices[digit] < sizes[digit] {
                break;
            }
            choices[digit] = 0;
            digit += 1;
        }
    }
}
