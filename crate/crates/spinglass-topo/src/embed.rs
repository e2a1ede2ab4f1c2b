//! Minor embeddings: mapping a logical Ising instance onto a working graph
//! by representing each logical variable with a *chain* of physical qubits.
//!
//! Applying an embedding splits each field equally across its chain, places
//! each logical coupling on the lowest-index available physical coupler,
//! and adds a ferromagnetic penalty `−α` along consecutive chain qubits so
//! that breaking a chain costs energy.  The module also provides the
//! reverse direction: turning physical samples back into logical ones by
//! discarding broken chains or resolving them by majority vote.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use spinglass_core::model::MAX_VARIABLES;
use spinglass_core::{IsingInstance, PackedState};

use crate::graph::WorkingGraph;
use crate::TopoError;

/// A minor embedding: one chain of physical qubit ids per logical variable.
///
/// Chain *order* matters — the ferromagnetic penalty is laid along
/// consecutive entries, so each chain must trace a path in the working
/// graph.  Serialized form is a plain JSON object, e.g.
/// `{"0": [3], "1": [0, 4], "2": [5]}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding {
    chains: BTreeMap<usize, Vec<usize>>,
}

impl Embedding {
    pub fn new() -> Self {
        Embedding::default()
    }

    pub fn from_chains(chains: impl IntoIterator<Item = (usize, Vec<usize>)>) -> Self {
        Embedding {
            chains: chains.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, variable: usize, chain: Vec<usize>) {
        self.chains.insert(variable, chain);
    }

    pub fn chain(&self, variable: usize) -> Option<&[usize]> {
        self.chains.get(&variable).map(Vec::as_slice)
    }

    pub fn chains(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.chains.iter().map(|(&v, c)| (v, c.as_slice()))
    }

    /// Number of chains (logical variables covered).
    pub fn num_logical(&self) -> usize {
        self.chains.len()
    }

    /// Total number of consecutive chain links, i.e. penalty couplers.
    pub fn num_links(&self) -> usize {
        self.chains.values().map(|c| c.len().saturating_sub(1)).sum()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("embedding serializes")
    }
}

/// Everything [`validate_embedding`] found wrong, grouped by failure kind.
/// Unlike [`apply_embedding`], which stops at the first problem, the report
/// collects all of them so a bad embedding file can be fixed in one pass.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EmbeddingReport {
    /// Logical variables with no chain at all.
    pub missing_chains: Vec<usize>,
    /// Logical variables whose chain is empty.
    pub empty_chains: Vec<usize>,
    /// Chain keys beyond the instance's variable range.
    pub extra_chains: Vec<usize>,
    /// `(variable, qubit)` pairs where the qubit is not in the working graph.
    pub off_graph_qubits: Vec<(usize, usize)>,
    /// Qubits claimed by more than one chain position.
    pub overlapping_qubits: Vec<usize>,
    /// `(variable, from, to)` triples where consecutive chain qubits share
    /// no coupler.
    pub broken_paths: Vec<(usize, usize, usize)>,
}

impl EmbeddingReport {
    pub fn is_valid(&self) -> bool {
        self.missing_chains.is_empty()
            && self.empty_chains.is_empty()
            && self.extra_chains.is_empty()
            && self.off_graph_qubits.is_empty()
            && self.overlapping_qubits.is_empty()
            && self.broken_paths.is_empty()
    }
}

/// Check an embedding against a working graph for `num_variables` logical
/// variables, collecting every violation into a report.
pub fn validate_embedding(
    embedding: &Embedding,
    num_variables: usize,
    graph: &WorkingGraph,
) -> EmbeddingReport {
    let mut report = EmbeddingReport::default();
    let mut used = BTreeSet::new();
    for variable in 0..num_variables {
        let Some(chain) = embedding.chain(variable) else {
            report.missing_chains.push(variable);
            continue;
        };
        if chain.is_empty() {
            report.empty_chains.push(variable);
            continue;
        }
        for &qubit in chain {
            if !graph.has_node(qubit) {
                report.off_graph_qubits.push((variable, qubit));
            }
            if !used.insert(qubit) && !report.overlapping_qubits.contains(&qubit) {
                report.overlapping_qubits.push(qubit);
            }
        }
        for pair in chain.windows(2) {
            if !graph.has_edge(pair[0], pair[1]) {
                report.broken_paths.push((variable, pair[0], pair[1]));
            }
        }
    }
    for (variable, _) in embedding.chains() {
        if variable >= num_variables {
            report.extra_chains.push(variable);
        }
    }
    report
}

/// Embed a logical Ising instance into a working graph.
///
/// * each field `h_i` is split equally over the chain of variable `i`;
/// * each coupling `J_ij` is placed on the lowest-index physical coupler
///   (smallest `(min, max)` qubit pair) joining the two chains;
/// * every consecutive pair along a chain receives the ferromagnetic
///   penalty coupling `−alpha`.
///
/// The result ranges over physical qubits `0 ..= max qubit`; qubits not
/// used by any chain simply keep zero coefficients.  On any structural
/// problem the first offending item is returned as an error — use
/// [`validate_embedding`] for an exhaustive report.
pub fn apply_embedding(
    instance: &IsingInstance,
    embedding: &Embedding,
    graph: &WorkingGraph,
    alpha: f64,
) -> Result<IsingInstance, TopoError> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(TopoError::BadChainStrength(alpha));
    }
    let mut used = BTreeSet::new();
    let mut max_qubit = 0usize;
    for variable in 0..instance.n {
        let chain = embedding
            .chain(variable)
            .ok_or(TopoError::MissingChain { variable })?;
        if chain.is_empty() {
            return Err(TopoError::EmptyChain { variable });
        }
        for &qubit in chain {
            if !graph.has_node(qubit) {
                return Err(TopoError::QubitOffGraph { variable, qubit });
            }
            if !used.insert(qubit) {
                return Err(TopoError::OverlappingChains { qubit });
            }
            max_qubit = max_qubit.max(qubit);
        }
        for pair in chain.windows(2) {
            if !graph.has_edge(pair[0], pair[1]) {
                return Err(TopoError::ChainNotAPath {
                    variable,
                    from: pair[0],
                    to: pair[1],
                });
            }
        }
    }

    let mut physical = IsingInstance::new(max_qubit + 1)?;
    for (&i, &h) in &instance.h {
        let chain = embedding.chain(i).expect("checked above");
        let share = h / chain.len() as f64;
        for &qubit in chain {
            physical.set_field(qubit, share)?;
        }
    }
    for (&(i, j), &value) in &instance.j {
        let couplers: BTreeSet<(usize, usize)> = embedding
            .chain(i)
            .expect("checked above")
            .iter()
            .flat_map(|&a| {
                embedding
                    .chain(j)
                    .expect("checked above")
                    .iter()
                    .map(move |&b| (a.min(b), a.max(b)))
            })
            .filter(|&(a, b)| graph.has_edge(a, b))
            .collect();
        let &(a, b) = couplers
            .first()
            .ok_or(TopoError::MissingCoupler { a: i, b: j })?;
        physical.set_coupling(a, b, value)?;
    }
    for (_, chain) in embedding.chains().take(instance.n) {
        for pair in chain.windows(2) {
            physical.set_coupling(pair[0], pair[1], -alpha)?;
        }
    }
    Ok(physical)
}

/// Scale-based chain strength: `css · max |J_ij|` over the logical
/// couplings, falling back to `css` itself when the instance has no
/// couplings to take a scale from.
pub fn chain_strength_from_scale(instance: &IsingInstance, css: f64) -> f64 {
    let max_j = instance.j.values().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_j > 0.0 {
        css * max_j
    } else {
        css
    }
}

/// How to turn a physical sample with broken chains into a logical sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainStrategy {
    /// Drop any sample containing a broken chain.
    Discard,
    /// Take the majority spin of each chain, breaking exact ties with a
    /// seeded fair coin.
    Majority,
}

impl fmt::Display for ChainStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainStrategy::Discard => f.write_str("discard"),
            ChainStrategy::Majority => f.write_str("majority"),
        }
    }
}

impl FromStr for ChainStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "discard" => Ok(ChainStrategy::Discard),
            "majority" => Ok(ChainStrategy::Majority),
            other => Err(format!(
                "unknown chain-break strategy `{other}` (expected `discard` or `majority`)"
            )),
        }
    }
}

/// Map physical samples back to logical samples.
///
/// The embedding must cover the contiguous logical variables `0..n`, and
/// all chain qubits must fit a 64-bit sample word.  With
/// [`ChainStrategy::Discard`] the output may be shorter than the input;
/// with [`ChainStrategy::Majority`] it has the same length.  Tie breaking
/// is reproducible: sample `s` draws its coins from substream `s` of a
/// ChaCha8 generator seeded with `seed`, so one sample's ties never shift
/// another's.
pub fn resolve_chains(
    samples: &[PackedState],
    embedding: &Embedding,
    strategy: ChainStrategy,
    seed: u64,
) -> Result<Vec<PackedState>, TopoError> {
    let n = embedding.num_logical();
    for (expected, (variable, chain)) in embedding.chains().enumerate() {
        if variable != expected {
            return Err(TopoError::NonContiguousChains);
        }
        if chain.is_empty() {
            return Err(TopoError::EmptyChain { variable });
        }
        if let Some(&qubit) = chain.iter().find(|&&q| q >= MAX_VARIABLES) {
            return Err(TopoError::QubitOutOfRange { qubit });
        }
    }
    if n > MAX_VARIABLES {
        return Err(TopoError::Model(
            spinglass_core::ModelError::TooManyVariables(n),
        ));
    }

    let mut out = Vec::with_capacity(samples.len());
    'samples: for (index, &sample) in samples.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let mut word = 0u64;
        for (variable, chain) in embedding.chains() {
            let ups = chain.iter().filter(|&&q| sample.bit(q)).count();
            let downs = chain.len() - ups;
            let up = match (strategy, ups.cmp(&downs)) {
                (_, std::cmp::Ordering::Greater) => true,
                (_, std::cmp::Ordering::Less) => false,
                (ChainStrategy::Majority, std::cmp::Ordering::Equal) => rng.gen::<bool>(),
                (ChainStrategy::Discard, std::cmp::Ordering::Equal) => continue 'samples,
            };
            // A broken but lopsided chain still counts as broken for Discard.
            if strategy == ChainStrategy::Discard && ups != 0 && downs != 0 {
                continue 'samples;
            }
            if up {
                word |= 1 << variable;
            }
        }
        out.push(PackedState(word));
    }
    Ok(out)
}
