//! Exhaustive low-energy spectrum search over chunked state ranges.
//!
//! The full state space of an `n`-variable instance is split into
//! `2^(n-M)` chunks of `2^M` consecutive words each.  One buffer of
//! `k + 2^M` slots is reused for the whole run: the leading `k` slots hold
//! the best states seen so far, the tail holds the chunk being scanned.
//! After every chunk the `k` lowest chunk entries are selected in place and
//! merged with the leading block by a second selection over the first `2k`
//! slots.  Because the selection is exact under the total order
//! `(energy, state word)`, the outcome is independent of chunk processing
//! internals and of how many worker threads filled the buffer.

use rayon::prelude::*;
use thiserror::Error;

use crate::dense::DenseQubo;
use crate::model::{
    spectrum_order, ModelError, QuboInstance, Spectrum, SpectrumEntry, MAX_VARIABLES,
};

/// Upper bound on the working buffer of a single search, in bytes.
pub const MEMORY_CAP_BYTES: u128 = 2 << 30;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("chunk exponent {m} outside 1..={n}")]
    BadChunkExponent { m: u32, n: usize },
    #[error("spectrum size k = {k} exceeds the chunk capacity 2^{m}")]
    SpectrumLargerThanChunk { k: usize, m: u32 },
    #[error("cache depth {depth} exceeds the prefix width {width}")]
    CacheDeeperThanPrefix { depth: u32, width: u32 },
    #[error("fixed-variable count {l} must be smaller than n = {n}")]
    TooManyFixedVariables { l: u32, n: usize },
    #[error("steps_per_batch must be positive")]
    EmptyBatch,
    #[error("chunk index {j} out of range for {chunks} chunks")]
    ChunkOutOfRange { j: u64, chunks: u64 },
    #[error(
        "search buffer needs {needed} bytes (k = {k}, chunk = 2^{m}) but the cap is {cap} bytes"
    )]
    BufferTooLarge {
        needed: u128,
        cap: u128,
        k: usize,
        m: u32,
    },
    #[error("instance has no variables")]
    EmptyInstance,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Knobs shared by the chunked spectrum search and the Gray-code solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    /// Chunk exponent `M`: chunks span `2^M` words; the Gray-code solver runs
    /// `2^M` lanes with the top `M` bits fixed per lane.
    pub chunk_exp: u32,
    /// How many lowest-energy states to keep.
    pub k: usize,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
    /// Gray-code solver: suffix contributions of the `cache_depth` most
    /// frequently flipped prefix bits are precomputed per lane.
    pub cache_depth: u32,
    /// Gray-code solver: flip schedule entries precomputed per batch.
    pub steps_per_batch: u64,
    /// Gray-code solver: split the run into `2^fixed_vars` subproblems by
    /// fixing the highest-index variables.
    pub fixed_vars: u32,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            chunk_exp: 16,
            k: 1,
            workers: 0,
            cache_depth: 8,
            steps_per_batch: 4096,
            fixed_vars: 0,
        }
    }
}

impl SearchConfig {
    /// Check the mutual constraints against an instance size.
    pub fn validate(&self, n: usize) -> Result<(), SearchError> {
        if n == 0 {
            return Err(SearchError::EmptyInstance);
        }
        debug_assert!(n <= MAX_VARIABLES);
        if self.chunk_exp == 0 || self.chunk_exp as usize > n {
            return Err(SearchError::BadChunkExponent {
                m: self.chunk_exp,
                n,
            });
        }
        if self.k == 0 || (self.k as u128) > 1u128 << self.chunk_exp {
            return Err(SearchError::SpectrumLargerThanChunk {
                k: self.k,
                m: self.chunk_exp,
            });
        }
        let prefix_width = n as u32 - self.chunk_exp;
        if self.cache_depth > prefix_width {
            return Err(SearchError::CacheDeeperThanPrefix {
                depth: self.cache_depth,
                width: prefix_width,
            });
        }
        if self.fixed_vars as usize >= n {
            return Err(SearchError::TooManyFixedVariables {
                l: self.fixed_vars,
                n,
            });
        }
        if self.steps_per_batch == 0 {
            return Err(SearchError::EmptyBatch);
        }
        Ok(())
    }

    pub(crate) fn buffer_bytes(&self) -> u128 {
        // One f64 and one u64 per slot.
        (self.k as u128 + (1u128 << self.chunk_exp)) * 16
    }

    pub(crate) fn build_pool(&self) -> rayon::ThreadPool {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if self.workers > 0 {
            builder = builder.num_threads(self.workers);
        }
        builder.build().expect("thread pool construction")
    }
}

/// Inclusive word range `[2^m * j, 2^m * (j+1) - 1]` of chunk `j`.
pub fn chunk_range(n: usize, m: u32, j: u64) -> Result<(u64, u64), SearchError> {
    if m == 0 || m as usize > n || n > MAX_VARIABLES {
        return Err(SearchError::BadChunkExponent { m, n });
    }
    let chunks = 1u64 << (n as u32 - m);
    if j >= chunks {
        return Err(SearchError::ChunkOutOfRange { j, chunks });
    }
    let lo = (j as u128) << m;
    let hi = ((j as u128 + 1) << m) - 1;
    Ok((lo as u64, hi as u64))
}

/// Map a float to a `u64` whose unsigned order equals `f64::total_cmp`.
#[inline]
fn energy_rank(e: f64) -> u64 {
    let bits = e.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits ^ (1 << 63)
    }
}

#[inline]
fn entry_key(energy: f64, state: u64) -> (u64, u64) {
    (energy_rank(energy), state)
}

/// Rearrange the paired slices so the `k` lowest entries under the order
/// `(energy, state word)` occupy the first `k` positions.
///
/// In-place selection by repeated three-way partitioning around a
/// median-of-three pivot; no allocation, no randomness, and exact — the
/// prefix is the unique set of `k` smallest keys (the prefix itself is left
/// unsorted).
pub fn select_k_lowest(energies: &mut [f64], states: &mut [u64], k: usize) {
    assert_eq!(
        energies.len(),
        states.len(),
        "energy and state slices must pair up"
    );
    if k == 0 || k >= energies.len() {
        return;
    }
    let mut lo = 0usize;
    let mut hi = energies.len();
    loop {
        if hi - lo <= 1 {
            return;
        }
        let pivot = median_of_three(energies, states, lo, hi);
        let (lt, gt) = three_way_partition(energies, states, lo, hi, pivot);
        // [lo, lt) < pivot, [lt, gt) == pivot, [gt, hi) > pivot.
        if k <= lt {
            hi = lt;
        } else if k < gt {
            // Rank k falls inside the pivot block: prefix complete.
            return;
        } else {
            lo = gt;
        }
    }
}

fn median_of_three(energies: &[f64], states: &[u64], lo: usize, hi: usize) -> (u64, u64) {
    let mid = lo + (hi - lo) / 2;
    let a = entry_key(energies[lo], states[lo]);
    let b = entry_key(energies[mid], states[mid]);
    let c = entry_key(energies[hi - 1], states[hi - 1]);
    let lo_ab = a.min(b);
    let hi_ab = a.max(b);
    hi_ab.min(lo_ab.max(c))
}

fn three_way_partition(
    energies: &mut [f64],
    states: &mut [u64],
    lo: usize,
    hi: usize,
    pivot: (u64, u64),
) -> (usize, usize) {
    let mut lt = lo;
    let mut i = lo;
    let mut gt = hi;
    while i < gt {
        let key = entry_key(energies[i], states[i]);
        match key.cmp(&pivot) {
            std::cmp::Ordering::Less => {
                energies.swap(lt, i);
                states.swap(lt, i);
                lt += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                gt -= 1;
                energies.swap(i, gt);
                states.swap(i, gt);
            }
            std::cmp::Ordering::Equal => i += 1,
        }
    }
    (lt, gt)
}

/// Exact `k`-lowest spectrum of a QUBO instance by chunked exhaustive scan.
///
/// Deterministic for a given instance and `k`: the result is byte-identical
/// for every `workers` setting and chunk exponent.  Refuses configurations
/// whose working buffer would exceed [`MEMORY_CAP_BYTES`].
pub fn spectrum_search(inst: &QuboInstance, cfg: &SearchConfig) -> Result<Spectrum, SearchError> {
    cfg.validate(inst.n)?;
    let needed = cfg.buffer_bytes();
    if needed > MEMORY_CAP_BYTES {
        return Err(SearchError::BufferTooLarge {
            needed,
            cap: MEMORY_CAP_BYTES,
            k: cfg.k,
            m: cfg.chunk_exp,
        });
    }
    let dense = DenseQubo::from_instance(inst);
    let n = inst.n;
    let m = cfg.chunk_exp;
    let k = cfg.k;
    let chunk_len = 1usize << m;
    let chunks = 1u64 << (n as u32 - m);
    let mut energies = vec![0.0f64; k + chunk_len];
    let mut states = vec![0u64; k + chunk_len];
    let pool = cfg.build_pool();
    let mut filled = false;
    pool.install(|| {
        for j in 0..chunks {
            let (lo, _hi) = chunk_range(n, m, j).expect("validated chunk index");
            let (head_e, chunk_e) = energies.split_at_mut(k);
            let (head_s, chunk_s) = states.split_at_mut(k);
            chunk_e
                .par_iter_mut()
                .zip(chunk_s.par_iter_mut())
                .enumerate()
                .for_each(|(t, (e, s))| {
                    let word = lo + t as u64;
                    *s = word;
                    *e = dense.energy(word);
                });
            select_k_lowest(chunk_e, chunk_s, k);
            if !filled {
                head_e.copy_from_slice(&chunk_e[..k]);
                head_s.copy_from_slice(&chunk_s[..k]);
                filled = true;
            } else {
                select_k_lowest(&mut energies[..2 * k], &mut states[..2 * k], k);
            }
        }
    });
    let mut entries: Vec<SpectrumEntry> = energies[..k]
        .iter()
        .zip(&states[..k])
        .map(|(&energy, &state)| SpectrumEntry {
            energy,
            state: crate::model::PackedState(state),
        })
        .collect();
    entries.sort_by(spectrum_order);
    Ok(Spectrum { entries })
}
