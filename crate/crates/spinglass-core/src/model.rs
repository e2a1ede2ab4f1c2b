//! Problem instances and energy evaluation.
//!
//! Two equivalent encodings of the same quadratic optimization problem are
//! supported:
//!
//! * the Ising form over spins `s_i ∈ {-1, +1}`,
//!
//!   `H(s) = Σ_{(i,j)∈E} J_ij s_i s_j + Σ_i h_i s_i`
//!
//! * the QUBO form over bits `q_i ∈ {0, 1}`,
//!
//!   `F(q) = Σ_{(i,j)∈E} a_ij q_i q_j + Σ_i b_i q_i + offset`
//!
//! Both live on a simple undirected graph (no self loops, no duplicate
//! edges).  Variables are indexed `0..n` internally; the text file format in
//! [`crate::io`] is 1-based.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest variable count a single packed state word can hold.
pub const MAX_VARIABLES: usize = 64;

/// Variable count limit for exhaustive spectrum enumeration.
pub const NAIVE_ENUMERATION_LIMIT: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("variable index {index} out of range for instance with {n} variables")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("self loop on variable {0} is not allowed")]
    SelfLoop(usize),
    #[error("duplicate coupling between variables {0} and {1}")]
    DuplicateEdge(usize, usize),
    #[error("instance with {0} variables exceeds the {MAX_VARIABLES}-variable packed-state limit")]
    TooManyVariables(usize),
    #[error("state has bits set at or above variable count {n}")]
    StateOutOfRange { n: usize },
    #[error(
        "exhaustive enumeration is limited to {NAIVE_ENUMERATION_LIMIT} variables, got {0}"
    )]
    EnumerationTooLarge(usize),
}

/// A full assignment of up to 64 binary variables packed into one `u64`.
///
/// Bit `i` of the word is variable `i`.  For Ising instances a set bit means
/// spin `+1`, a cleared bit spin `-1`; for QUBO instances a set bit is `1`.
/// Bits at positions `>= n` must be zero for a state used with an
/// `n`-variable instance, which keeps the `u64` ordering a total order on
/// states and makes tie-breaking between equal energies unambiguous.
#[derive(
    Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct PackedState(pub u64);

impl PackedState {
    pub fn bit(self, i: usize) -> bool {
        debug_assert!(i < MAX_VARIABLES);
        self.0 >> i & 1 == 1
    }

    /// Variable value in the QUBO convention: 0.0 or 1.0.
    pub fn qubo_value(self, i: usize) -> f64 {
        if self.bit(i) {
            1.0
        } else {
            0.0
        }
    }

    /// Variable value in the Ising convention: -1.0 or +1.0.
    pub fn ising_value(self, i: usize) -> f64 {
        if self.bit(i) {
            1.0
        } else {
            -1.0
        }
    }

    #[must_use]
    pub fn flip(self, i: usize) -> Self {
        debug_assert!(i < MAX_VARIABLES);
        PackedState(self.0 ^ (1 << i))
    }

    /// True when no bit at position `n` or above is set.
    pub fn respects(self, n: usize) -> bool {
        if n >= MAX_VARIABLES {
            return true;
        }
        self.0 >> n == 0
    }

    /// Build a state from per-variable Ising spins (+1 maps to a set bit).
    pub fn from_spins(spins: &[i8]) -> Self {
        let mut word = 0u64;
        for (i, &s) in spins.iter().enumerate() {
            if s > 0 {
                word |= 1 << i;
            }
        }
        PackedState(word)
    }
}

/// Ising instance on a simple graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingInstance {
    pub n: usize,
    /// Linear fields, sparse; missing entries are zero.
    pub h: BTreeMap<usize, f64>,
    /// Couplings keyed by `(min(i,j), max(i,j))`.
    pub j: BTreeMap<(usize, usize), f64>,
}

/// QUBO instance on a simple graph, with an additive constant.
///
/// The `offset` participates in every energy evaluation.  It is what makes
/// the Ising → QUBO conversion energy-preserving instead of merely
/// argmin-preserving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboInstance {
    pub n: usize,
    /// Linear coefficients `b_i`, sparse; missing entries are zero.
    pub linear: BTreeMap<usize, f64>,
    /// Quadratic coefficients `a_ij` keyed by `(min(i,j), max(i,j))`.
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

fn check_index(index: usize, n: usize) -> Result<(), ModelError> {
    if index >= n {
        return Err(ModelError::IndexOutOfRange { index, n });
    }
    Ok(())
}

fn edge_key(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl IsingInstance {
    pub fn new(n: usize) -> Result<Self, ModelError> {
        if n > MAX_VARIABLES {
            return Err(ModelError::TooManyVariables(n));
        }
        Ok(IsingInstance {
            n,
            h: BTreeMap::new(),
            j: BTreeMap::new(),
        })
    }

    pub fn set_field(&mut self, i: usize, value: f64) -> Result<(), ModelError> {
        check_index(i, self.n)?;
        self.h.insert(i, value);
        Ok(())
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<(), ModelError> {
        check_index(i, self.n)?;
        check_index(j, self.n)?;
        if i == j {
            return Err(ModelError::SelfLoop(i));
        }
        let key = edge_key(i, j);
        if self.j.contains_key(&key) {
            return Err(ModelError::DuplicateEdge(key.0, key.1));
        }
        self.j.insert(key, value);
        Ok(())
    }

    pub fn field(&self, i: usize) -> f64 {
        self.h.get(&i).copied().unwrap_or(0.0)
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.j.get(&edge_key(i, j)).copied().unwrap_or(0.0)
    }
}

impl QuboInstance {
    pub fn new(n: usize) -> Result<Self, ModelError> {
        if n > MAX_VARIABLES {
            return Err(ModelError::TooManyVariables(n));
        }
        Ok(QuboInstance {
            n,
            linear: BTreeMap::new(),
            quadratic: BTreeMap::new(),
            offset: 0.0,
        })
    }

    pub fn set_linear(&mut self, i: usize, value: f64) -> Result<(), ModelError> {
        check_index(i, self.n)?;
        self.linear.insert(i, value);
        Ok(())
    }

    pub fn add_linear(&mut self, i: usize, value: f64) -> Result<(), ModelError> {
        check_index(i, self.n)?;
        *self.linear.entry(i).or_insert(0.0) += value;
        Ok(())
    }

    pub fn set_quadratic(&mut self, i: usize, j: usize, value: f64) -> Result<(), ModelError> {
        check_index(i, self.n)?;
        check_index(j, self.n)?;
        if i == j {
            return Err(ModelError::SelfLoop(i));
        }
        let key = edge_key(i, j);
        if self.quadratic.contains_key(&key) {
            return Err(ModelError::DuplicateEdge(key.0, key.1));
        }
        self.quadratic.insert(key, value);
        Ok(())
    }

    /// Accumulating variant used by the problem compilers, where several
    /// penalty terms may touch the same pair.
    pub fn add_quadratic(&mut self, i: usize, j: usize, value: f64) -> Result<(), ModelError> {
        check_index(i, self.n)?;
        check_index(j, self.n)?;
        if i == j {
            return Err(ModelError::SelfLoop(i));
        }
        *self.quadratic.entry(edge_key(i, j)).or_insert(0.0) += value;
        Ok(())
    }

    pub fn linear_coeff(&self, i: usize) -> f64 {
        self.linear.get(&i).copied().unwrap_or(0.0)
    }

    pub fn quadratic_coeff(&self, i: usize, j: usize) -> f64 {
        self.quadratic.get(&edge_key(i, j)).copied().unwrap_or(0.0)
    }

    /// Dense symmetric matrix view: `Q[i][i] = b_i`, `Q[i][j] = Q[j][i] = a_ij`.
    ///
    /// The energy identity `Σ_{i<=j} Q_ij q_i q_j + offset = F(q)` holds for
    /// every state (the diagonal uses `q_i^2 = q_i`).
    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        let mut q = vec![vec![0.0; self.n]; self.n];
        for (&i, &b) in &self.linear {
            q[i][i] = b;
        }
        for (&(i, j), &a) in &self.quadratic {
            q[i][j] = a;
            q[j][i] = a;
        }
        q
    }
}

/// Anything with a state energy; lets enumeration and spectrum search run on
/// either encoding.
pub trait EnergyModel {
    fn num_variables(&self) -> usize;
    /// Energy of a state assumed to respect the variable count.
    fn state_energy(&self, state: PackedState) -> f64;
}

impl EnergyModel for IsingInstance {
    fn num_variables(&self) -> usize {
        self.n
    }

    fn state_energy(&self, state: PackedState) -> f64 {
        let mut e = 0.0;
        for (&(i, j), &jij) in &self.j {
            e += jij * state.ising_value(i) * state.ising_value(j);
        }
        for (&i, &hi) in &self.h {
            e += hi * state.ising_value(i);
        }
        e
    }
}

impl EnergyModel for QuboInstance {
    fn num_variables(&self) -> usize {
        self.n
    }

    fn state_energy(&self, state: PackedState) -> f64 {
        let mut e = self.offset;
        for (&(i, j), &a) in &self.quadratic {
            if state.bit(i) && state.bit(j) {
                e += a;
            }
        }
        for (&i, &b) in &self.linear {
            if state.bit(i) {
                e += b;
            }
        }
        e
    }
}

/// Ising energy of a packed state, checking that the state fits the instance.
pub fn ising_energy(inst: &IsingInstance, state: PackedState) -> Result<f64, ModelError> {
    if !state.respects(inst.n) {
        return Err(ModelError::StateOutOfRange { n: inst.n });
    }
    Ok(inst.state_energy(state))
}

/// QUBO energy (including the stored offset) of a packed state.
pub fn qubo_energy(inst: &QuboInstance, state: PackedState) -> Result<f64, ModelError> {
    if !state.respects(inst.n) {
        return Err(ModelError::StateOutOfRange { n: inst.n });
    }
    Ok(inst.state_energy(state))
}

/// Convert an Ising instance to an energy-equivalent QUBO under the variable
/// map `q_i = (s_i + 1) / 2`.
///
/// With `a_ij = 4 J_ij` and `b_i = 2 h_i - 2 Σ_{j∈N(i)} J_ij`, the raw QUBO
/// polynomial differs from the Ising energy by the constant `Σ h - Σ J`; the
/// negated constant is stored in `offset` so the converted instance evaluates
/// to exactly the same energy on every mapped state.
pub fn ising_to_qubo(inst: &IsingInstance) -> QuboInstance {
    let mut qubo = QuboInstance::new(inst.n).expect("source instance already within limits");
    let mut coupling_sum = 0.0;
    let mut field_sum = 0.0;
    let mut neighbor_sums: BTreeMap<usize, f64> = BTreeMap::new();
    for (&(i, j), &jij) in &inst.j {
        qubo.quadratic.insert((i, j), 4.0 * jij);
        *neighbor_sums.entry(i).or_insert(0.0) += jij;
        *neighbor_sums.entry(j).or_insert(0.0) += jij;
        coupling_sum += jij;
    }
    for i in 0..inst.n {
        let hi = inst.field(i);
        field_sum += hi;
        let b = 2.0 * hi - 2.0 * neighbor_sums.get(&i).copied().unwrap_or(0.0);
        if b != 0.0 {
            qubo.linear.insert(i, b);
        }
    }
    qubo.offset = coupling_sum - field_sum;
    qubo
}

/// Algebraic inverse of [`ising_to_qubo`]: `J_ij = a_ij / 4` and
/// `h_i = b_i / 2 + Σ_{j∈N(i)} a_ij / 4`.
///
/// The QUBO offset has no Ising counterpart, so energies of the result differ
/// from the input by the constant `offset + Σ J - Σ h`; states and their
/// ordering are preserved exactly.
pub fn qubo_to_ising(inst: &QuboInstance) -> IsingInstance {
    let mut ising = IsingInstance::new(inst.n).expect("source instance already within limits");
    let mut neighbor_sums: BTreeMap<usize, f64> = BTreeMap::new();
    for (&(i, j), &a) in &inst.quadratic {
        ising.j.insert((i, j), a / 4.0);
        *neighbor_sums.entry(i).or_insert(0.0) += a / 4.0;
        *neighbor_sums.entry(j).or_insert(0.0) += a / 4.0;
    }
    for i in 0..inst.n {
        let h = inst.linear_coeff(i) / 2.0 + neighbor_sums.get(&i).copied().unwrap_or(0.0);
        if h != 0.0 {
            ising.h.insert(i, h);
        }
    }
    ising
}

/// One `(energy, state)` record of a low-energy spectrum.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub energy: f64,
    pub state: PackedState,
}

/// The `k` lowest-energy states of an instance, sorted by
/// `(energy, state word)`.
///
/// The secondary sort key makes results of any exact solver byte-identical:
/// degenerate levels always appear in increasing word order and no state word
/// is listed twice.
///
/// Serializes as `{"k": <len>, "entries": [...]}`; deserialization rejects a
/// `k` that disagrees with the entry count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumWire", into = "SpectrumWire")]
pub struct Spectrum {
    pub entries: Vec<SpectrumEntry>,
}

#[derive(Serialize, Deserialize)]
struct SpectrumWire {
    k: usize,
    entries: Vec<SpectrumEntry>,
}

impl From<Spectrum> for SpectrumWire {
    fn from(s: Spectrum) -> Self {
        SpectrumWire {
            k: s.entries.len(),
            entries: s.entries,
        }
    }
}

impl TryFrom<SpectrumWire> for Spectrum {
    type Error = String;

    fn try_from(wire: SpectrumWire) -> Result<Self, Self::Error> {
        if wire.k != wire.entries.len() {
            return Err(format!(
                "spectrum claims k = {} but holds {} entries",
                wire.k,
                wire.entries.len()
            ));
        }
        Ok(Spectrum {
            entries: wire.entries,
        })
    }
}

/// Total order used everywhere energies are ranked: energy first
/// (`f64::total_cmp`), state word as the tie-break.
pub fn spectrum_order(a: &SpectrumEntry, b: &SpectrumEntry) -> std::cmp::Ordering {
    a.energy
        .total_cmp(&b.energy)
        .then(a.state.0.cmp(&b.state.0))
}

impl Spectrum {
    pub fn ground(&self) -> Option<&SpectrumEntry> {
        self.entries.first()
    }

    /// Check the structural invariants: sorted by the total order and free of
    /// duplicate state words.
    pub fn is_well_formed(&self) -> bool {
        self.entries.windows(2).all(|w| {
            spectrum_order(&w[0], &w[1]) == std::cmp::Ordering::Less && w[0].state != w[1].state
        })
    }
}

/// Exhaustively enumerate all `2^n` states and return the `k` lowest.
///
/// Reference oracle for every other solver in the workspace; refuses
/// instances above [`NAIVE_ENUMERATION_LIMIT`] variables.
pub fn enumerate_spectrum_naive<M: EnergyModel>(
    inst: &M,
    k: usize,
) -> Result<Spectrum, ModelError> {
    let n = inst.num_variables();
    if n > NAIVE_ENUMERATION_LIMIT {
        return Err(ModelError::EnumerationTooLarge(n));
    }
    let total = 1u64 << n;
    let mut entries = Vec::with_capacity(total as usize);
    for word in 0..total {
        let state = PackedState(word);
        entries.push(SpectrumEntry {
            energy: inst.state_energy(state),
            state,
        });
    }
    entries.sort_by(spectrum_order);
    entries.truncate(k);
    Ok(Spectrum { entries })
}
