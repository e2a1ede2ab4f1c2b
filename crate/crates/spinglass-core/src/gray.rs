//! Gray-code ground-state search.
//!
//! The variables are split into `n - M` low "prefix" bits and `M` high
//! "suffix" bits.  One lane per suffix value walks the full prefix range in
//! reflected Gray order, so consecutive states differ in a single bit and
//! the energy moves by a cheap incremental delta.  All `2^M` lanes share the
//! same flip schedule; only the suffix-dependent part of each delta differs
//! between lanes, and for the most frequently flipped prefix bits that part
//! is precomputed per lane once (the suffix bits never change during a run).
//!
//! The flip schedule and the prefix part of every delta are produced once
//! per batch and replayed by every lane, which keeps the per-lane inner loop
//! at a handful of float operations and makes the lanes embarrassingly
//! parallel.  Accumulated rounding is bounded by an exact energy
//! recomputation every [`RESYNC_INTERVAL`] flips, and the reported ground
//! energy is always re-evaluated from scratch.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::bruteforce::{SearchConfig, SearchError};
use crate::dense::DenseQubo;
use crate::model::{ModelError, PackedState, QuboInstance, SpectrumEntry};

/// Lane energies are recomputed exactly after this many flips.
pub const RESYNC_INTERVAL: u64 = 1 << 20;

/// Reflected binary Gray code of `i`.
pub fn gray_code(i: u64) -> u64 {
    i ^ (i >> 1)
}

/// 1-based index of the bit that changes between `gray_code(i)` and
/// `gray_code(i + 1)`.
///
/// The sequence for a 3-bit walk (`i = 0..7`) is `1 2 1 3 1 2 1`; bit `b`
/// (1-based) flips in a `1 / 2^b` fraction of all steps, which is what makes
/// caching the few lowest bits worthwhile.
pub fn flip_index(i: u64) -> u32 {
    debug_assert!(i < u64::MAX);
    (gray_code(i) ^ gray_code(i + 1)).trailing_zeros() + 1
}

/// Energy change of flipping bit `kbit` (1-based, matching [`flip_index`]):
/// `ΔF = (1 - 2 q_k) (b_k + Σ_{i≠k} a_ik q_i)`.
pub fn delta_energy(
    inst: &QuboInstance,
    state: PackedState,
    kbit: u32,
) -> Result<f64, ModelError> {
    if kbit == 0 || kbit as usize > inst.n {
        return Err(ModelError::IndexOutOfRange {
            index: kbit as usize,
            n: inst.n,
        });
    }
    if !state.respects(inst.n) {
        return Err(ModelError::StateOutOfRange { n: inst.n });
    }
    let k = kbit as usize - 1;
    let sign = 1.0 - 2.0 * state.qubo_value(k);
    let mut acc = inst.linear_coeff(k);
    for (&(i, j), &a) in &inst.quadratic {
        if i == k {
            acc += a * state.qubo_value(j);
        } else if j == k {
            acc += a * state.qubo_value(i);
        }
    }
    Ok(sign * acc)
}

/// [`delta_energy`] split into the prefix and suffix contributions under an
/// `M`-bit suffix: the first component covers `b_k` plus all neighbors below
/// `n - M`, the second the neighbors at `n - M` and above.
///
/// `kbit` must denote a prefix bit; the two components sum to the full delta.
pub fn split_delta(
    inst: &QuboInstance,
    state: PackedState,
    kbit: u32,
    m: u32,
) -> Result<(f64, f64), ModelError> {
    let n = inst.n;
    if m as usize > n || kbit == 0 || kbit as usize > n - m as usize {
        return Err(ModelError::IndexOutOfRange {
            index: kbit as usize,
            n,
        });
    }
    if !state.respects(n) {
        return Err(ModelError::StateOutOfRange { n });
    }
    let split = n - m as usize;
    let k = kbit as usize - 1;
    let sign = 1.0 - 2.0 * state.qubo_value(k);
    let mut prefix = inst.linear_coeff(k);
    let mut suffix = 0.0;
    for (&(i, j), &a) in &inst.quadratic {
        let other = if i == k {
            j
        } else if j == k {
            i
        } else {
            continue;
        };
        if other < split {
            prefix += a * state.qubo_value(other);
        } else {
            suffix += a * state.qubo_value(other);
        }
    }
    Ok((sign * prefix, sign * suffix))
}

/// Substitute fixed values for a subset of variables.
///
/// Terms touching fixed variables are folded into the remaining linear
/// coefficients and the offset, so every energy of the reduced instance
/// equals the energy of the corresponding full state.  Remaining variables
/// are reindexed densely in increasing original order.
pub fn fix_variables(
    inst: &QuboInstance,
    assignment: &BTreeMap<usize, bool>,
) -> Result<QuboInstance, ModelError> {
    for &i in assignment.keys() {
        if i >= inst.n {
            return Err(ModelError::IndexOutOfRange { index: i, n: inst.n });
        }
    }
    let mut new_index = vec![usize::MAX; inst.n];
    let mut remaining = 0usize;
    for i in 0..inst.n {
        if !assignment.contains_key(&i) {
            new_index[i] = remaining;
            remaining += 1;
        }
    }
    let mut out = QuboInstance::new(remaining)?;
    out.offset = inst.offset;
    for (&i, &b) in &inst.linear {
        match assignment.get(&i) {
            Some(&true) => out.offset += b,
            Some(&false) => {}
            None => out.add_linear(new_index[i], b)?,
        }
    }
    for (&(i, j), &a) in &inst.quadratic {
        match (assignment.get(&i), assignment.get(&j)) {
            (Some(&qi), Some(&qj)) => {
                if qi && qj {
                    out.offset += a;
                }
            }
            (Some(&qi), None) => {
                if qi {
                    out.add_linear(new_index[j], a)?;
                }
            }
            (None, Some(&qj)) => {
                if qj {
                    out.add_linear(new_index[i], a)?;
                }
            }
            (None, None) => out.add_quadratic(new_index[i], new_index[j], a)?,
        }
    }
    Ok(out)
}

/// Per-lane solver state: one slot per suffix value.
///
/// Exposed so long runs can be inspected or checkpoint-tested; most callers
/// only need [`ground_search_gray`].
#[derive(Debug, Clone)]
pub struct GrayState {
    pub current_states: Vec<u64>,
    pub current_energies: Vec<f64>,
    pub best_states: Vec<u64>,
    pub best_energies: Vec<f64>,
}

/// Find the ground state by Gray-code walk over all `2^n` states.
///
/// With `cfg.fixed_vars = l > 0` the run is divided into `2^l` subproblems
/// by fixing the `l` highest-index variables to every combination; each
/// subproblem is solved independently and the results are merged under the
/// usual `(energy, state word)` order, so the answer is identical to the
/// unsplit run.
pub fn ground_search_gray(
    inst: &QuboInstance,
    cfg: &SearchConfig,
) -> Result<SpectrumEntry, SearchError> {
    cfg.validate(inst.n)?;
    if cfg.fixed_vars == 0 {
        return ground_search_whole(inst, cfg);
    }
    let l = cfg.fixed_vars as usize;
    let n = inst.n;
    let sub_n = n - l;
    let sub_cfg = SearchConfig {
        fixed_vars: 0,
        chunk_exp: cfg.chunk_exp.min(sub_n as u32),
        cache_depth: cfg
            .cache_depth
            .min(sub_n as u32 - cfg.chunk_exp.min(sub_n as u32)),
        ..cfg.clone()
    };
    // Candidate energies are re-evaluated on the original instance: the
    // folded coefficients of a reduced instance can round differently by an
    // ulp, and the answer must be bit-identical to an unsplit run.
    let dense = DenseQubo::from_instance(inst);
    let mut best: Option<SpectrumEntry> = None;
    for assign in 0..(1u64 << l) {
        let mut fixed = BTreeMap::new();
        for bit in 0..l {
            fixed.insert(sub_n + bit, assign >> bit & 1 == 1);
        }
        let sub = fix_variables(inst, &fixed)?;
        let sub_best = ground_search_whole(&sub, &sub_cfg)?;
        let full_word = sub_best.state.0 | assign << sub_n;
        let candidate = SpectrumEntry {
            energy: dense.energy(full_word),
            state: PackedState(full_word),
        };
        let better = match &best {
            None => true,
            Some(b) => {
                crate::model::spectrum_order(&candidate, b) == std::cmp::Ordering::Less
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one subproblem"))
}

fn ground_search_whole(
    inst: &QuboInstance,
    cfg: &SearchConfig,
) -> Result<SpectrumEntry, SearchError> {
    cfg.validate(inst.n)?;
    let dense = DenseQubo::from_instance(inst);
    let n = inst.n;
    let m = cfg.chunk_exp as usize;
    let prefix_width = n - m;
    let lanes = 1usize << m;
    let cache_depth = cfg.cache_depth as usize;

    // Column adjacency of each prefix variable, split at the prefix/suffix
    // boundary.  Suffix neighbor indices are stored lane-relative.
    let mut b = vec![0.0f64; prefix_width];
    for (&i, &bi) in &inst.linear {
        if i < prefix_width {
            b[i] = bi;
        }
    }
    let mut prefix_neighbors: Vec<Vec<(u32, f64)>> = vec![Vec::new(); prefix_width];
    let mut suffix_neighbors: Vec<Vec<(u32, f64)>> = vec![Vec::new(); prefix_width];
    for (&(i, j), &a) in &inst.quadratic {
        if i < prefix_width {
            if j < prefix_width {
                prefix_neighbors[i].push((j as u32, a));
                prefix_neighbors[j].push((i as u32, a));
            } else {
                suffix_neighbors[i].push(((j - prefix_width) as u32, a));
            }
        } else if j < prefix_width {
            // i >= prefix_width > j cannot happen with sorted keys, but keep
            // the symmetric case for clarity.
            suffix_neighbors[j].push(((i - prefix_width) as u32, a));
        }
    }

    // Static per-lane suffix contributions for the cached prefix bits.
    let mut cache: Vec<Vec<f64>> = Vec::with_capacity(cache_depth.min(prefix_width));
    for x in 0..cache_depth.min(prefix_width) {
        let column: Vec<f64> = (0..lanes)
            .map(|s| suffix_dot(&suffix_neighbors[x], s as u64))
            .collect();
        cache.push(column);
    }

    let pool = cfg.build_pool();
    let mut state = GrayState {
        current_states: (0..lanes).map(|s| (s as u64) << prefix_width).collect(),
        current_energies: Vec::with_capacity(lanes),
        best_states: (0..lanes).map(|s| (s as u64) << prefix_width).collect(),
        best_energies: Vec::with_capacity(lanes),
    };
    pool.install(|| {
        state.current_energies = state
            .current_states
            .par_iter()
            .map(|&w| dense.energy(w))
            .collect();
    });
    state.best_energies = state.current_energies.clone();

    let total_flips: u64 = if prefix_width == 0 {
        0
    } else {
        (1u64 << prefix_width) - 1
    };
    let batch_cap = cfg.steps_per_batch.min(total_flips.max(1)) as usize;
    let mut xs: Vec<u32> = Vec::with_capacity(batch_cap);
    let mut sigmas: Vec<f64> = Vec::with_capacity(batch_cap);
    let mut prefix_deltas: Vec<f64> = Vec::with_capacity(batch_cap);
    let mut grays_after: Vec<u64> = Vec::with_capacity(batch_cap);

    let mut gray = 0u64;
    let mut done = 0u64;
    let mut next_resync = RESYNC_INTERVAL;
    while done < total_flips {
        let batch = cfg.steps_per_batch.min(total_flips - done) as usize;
        xs.clear();
        sigmas.clear();
        prefix_deltas.clear();
        grays_after.clear();
        for t in 0..batch as u64 {
            let kbit = flip_index(done + t);
            let x = (kbit - 1) as usize;
            let sign = 1.0 - 2.0 * (gray >> x & 1) as f64;
            let mut acc = b[x];
            for &(y, a) in &prefix_neighbors[x] {
                acc += a * (gray >> y & 1) as f64;
            }
            xs.push(x as u32);
            sigmas.push(sign);
            prefix_deltas.push(sign * acc);
            gray ^= 1 << x;
            grays_after.push(gray);
        }

        pool.install(|| {
            state
                .current_energies
                .par_iter_mut()
                .zip(state.best_energies.par_iter_mut())
                .zip(state.best_states.par_iter_mut())
                .enumerate()
                .for_each(|(s, ((cur_e, best_e), best_w))| {
                    let high = (s as u64) << prefix_width;
                    let mut e = *cur_e;
                    for t in 0..batch {
                        let x = xs[t] as usize;
                        let part = if x < cache.len() {
                            cache[x][s]
                        } else {
                            suffix_dot(&suffix_neighbors[x], s as u64)
                        };
                        e += prefix_deltas[t] + sigmas[t] * part;
                        let w = high | grays_after[t];
                        if e.total_cmp(best_e).is_lt()
                            || (e.total_cmp(best_e).is_eq() && w < *best_w)
                        {
                            *best_e = e;
                            *best_w = w;
                        }
                    }
                    *cur_e = e;
                });
        });
        done += batch as u64;
        for (s, w) in state.current_states.iter_mut().enumerate() {
            *w = (s as u64) << prefix_width | gray;
        }
        if done >= next_resync && done < total_flips {
            pool.install(|| {
                state
                    .current_energies
                    .par_iter_mut()
                    .zip(state.current_states.par_iter())
                    .for_each(|(e, &w)| *e = dense.energy(w));
            });
            next_resync += RESYNC_INTERVAL;
        }
    }

    let mut best_word = state.best_states[0];
    let mut best_energy = state.best_energies[0];
    for s in 1..lanes {
        let e = state.best_energies[s];
        let w = state.best_states[s];
        if e.total_cmp(&best_energy).is_lt() || (e.total_cmp(&best_energy).is_eq() && w < best_word)
        {
            best_energy = e;
            best_word = w;
        }
    }
    // Report an exact energy for the winning word; incremental values can
    // carry rounding from long walks.
    Ok(SpectrumEntry {
        energy: dense.energy(best_word),
        state: PackedState(best_word),
    })
}

#[inline]
fn suffix_dot(neighbors: &[(u32, f64)], lane: u64) -> f64 {
    let mut acc = 0.0;
    for &(j, a) in neighbors {
        acc += a * (lane >> j & 1) as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_spectrum_naive, ising_to_qubo, EnergyModel, IsingInstance};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn three_spin_qubo() -> QuboInstance {
        let mut ising = IsingInstance::new(3).unwrap();
        ising.set_field(0, 1.0).unwrap();
        ising.set_field(1, -1.0).unwrap();
        ising.set_field(2, 2.0).unwrap();
        ising.set_coupling(0, 1, 3.0).unwrap();
        ising.set_coupling(1, 2, -2.0).unwrap();
        ising_to_qubo(&ising)
    }

    fn random_qubo(n: usize, rng: &mut ChaCha8Rng) -> QuboInstance {
        let mut inst = QuboInstance::new(n).unwrap();
        for i in 0..n {
            inst.set_linear(i, rng.gen_range(-2.0..2.0)).unwrap();
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.4) {
                    inst.set_quadratic(i, j, rng.gen_range(-2.0..2.0)).unwrap();
                }
            }
        }
        inst
    }

    #[test]
    fn gray_code_basics() {
        assert_eq!(gray_code(0), 0);
        assert_eq!(gray_code(1), 1);
        assert_eq!(gray_code(2), 3);
        assert_eq!(gray_code(3), 2);
        assert_eq!(gray_code(4), 6);
    }

    #[test]
    fn flip_sequence_for_three_bits() {
        let seq: Vec<u32> = (0..7).map(flip_index).collect();
        assert_eq!(seq, vec![1, 2, 1, 3, 1, 2, 1]);
        assert_eq!(flip_index(0), 1);
        assert_eq!(flip_index(3), 3);
    }

    #[test]
    fn consecutive_gray_codes_differ_in_one_bit() {
        for i in 0..1024u64 {
            let diff = gray_code(i) ^ gray_code(i + 1);
            assert_eq!(diff.count_ones(), 1);
            assert_eq!(diff.trailing_zeros() + 1, flip_index(i));
        }
    }

    #[test]
    fn flip_frequency_halves_per_bit() {
        // Over the 2^b - 1 steps of a full walk, bit k (1-based) flips
        // exactly 2^(b-k) times — a 1/2^k share, which is why caching the
        // lowest bits covers almost every step.
        let b = 12u32;
        let total = (1u64 << b) - 1;
        let mut counts = vec![0u64; b as usize + 1];
        for i in 0..total {
            counts[flip_index(i) as usize] += 1;
        }
        for k in 1..=b {
            assert_eq!(counts[k as usize], 1u64 << (b - k), "bit {k}");
        }
    }

    #[test]
    fn split_delta_matches_hand_computation() {
        // Worked example, M = 1, q = (0, 1, 1), flip bit 1: the prefix part
        // carries b_1 + a_12 q_2 = -4 + 12 and the suffix part is zero
        // because variables 1 and 3 are not coupled.
        let qubo = three_spin_qubo();
        let state = PackedState(0b110);
        let (p, s) = split_delta(&qubo, state, 1, 1).unwrap();
        assert_eq!(p, 8.0);
        assert_eq!(s, 0.0);
        let full = delta_energy(&qubo, state, 1).unwrap();
        assert_eq!(full, 8.0);
    }

    #[test]
    fn delta_energy_matches_direct_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let inst = random_qubo(10, &mut rng);
        for _ in 0..200 {
            let word = rng.gen_range(0..(1u64 << 10));
            let kbit = rng.gen_range(1..=10u32);
            let state = PackedState(word);
            let flipped = state.flip(kbit as usize - 1);
            let direct = inst.state_energy(flipped) - inst.state_energy(state);
            let delta = delta_energy(&inst, state, kbit).unwrap();
            assert!((delta - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn split_delta_recomposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let inst = random_qubo(12, &mut rng);
        let m = 4u32;
        for _ in 0..500 {
            let word = rng.gen_range(0..(1u64 << 12));
            let kbit = rng.gen_range(1..=8u32);
            let state = PackedState(word);
            let (p, s) = split_delta(&inst, state, kbit, m).unwrap();
            let full = delta_energy(&inst, state, kbit).unwrap();
            assert!(
                (p + s - full).abs() <= 1e-12 * full.abs().max(1.0),
                "kbit {kbit} word {word}"
            );
        }
    }

    #[test]
    fn fixing_a_variable_folds_terms() {
        let qubo = three_spin_qubo();
        let mut assignment = BTreeMap::new();
        assignment.insert(2usize, true);
        let reduced = fix_variables(&qubo, &assignment).unwrap();
        assert_eq!(reduced.n, 2);
        assert_eq!(reduced.linear_coeff(0), -4.0);
        assert_eq!(reduced.linear_coeff(1), -12.0);
        assert_eq!(reduced.quadratic_coeff(0, 1), 12.0);
        // Original offset -1 plus the folded b_3 = 8.
        assert_eq!(reduced.offset, 7.0);
    }

    #[test]
    fn fixed_energies_match_full_energies() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = random_qubo(9, &mut rng);
        let mut assignment = BTreeMap::new();
        assignment.insert(2usize, true);
        assignment.insert(6usize, false);
        assignment.insert(8usize, true);
        let reduced = fix_variables(&inst, &assignment).unwrap();
        assert_eq!(reduced.n, 6);
        let free: Vec<usize> = (0..9).filter(|i| !assignment.contains_key(i)).collect();
        for sub_word in 0..(1u64 << 6) {
            let mut full = 0u64;
            for (new_i, &old_i) in free.iter().enumerate() {
                if sub_word >> new_i & 1 == 1 {
                    full |= 1 << old_i;
                }
            }
            for (&old_i, &q) in &assignment {
                if q {
                    full |= 1 << old_i;
                }
            }
            let expect = inst.state_energy(PackedState(full));
            let got = reduced.state_energy(PackedState(sub_word));
            assert!((expect - got).abs() < 1e-12);
        }
    }

    #[test]
    fn gray_solver_finds_the_example_ground_state() {
        let qubo = three_spin_qubo();
        let cfg = SearchConfig {
            chunk_exp: 1,
            cache_depth: 1,
            workers: 1,
            ..SearchConfig::default()
        };
        let best = ground_search_gray(&qubo, &cfg).unwrap();
        // Three degenerate minima at words 1, 2 and 6; the tie-break keeps 1.
        assert_eq!(best.state, PackedState(1));
        assert_eq!(best.energy, -5.0);
    }

    #[test]
    fn gray_solver_matches_enumeration_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for round in 0..20 {
            let n = rng.gen_range(4..=12);
            let inst = random_qubo(n, &mut rng);
            let m = rng.gen_range(1..=(n as u32 - 1).max(1));
            let cfg = SearchConfig {
                chunk_exp: m,
                cache_depth: rng.gen_range(0..=(n as u32 - m)),
                steps_per_batch: rng.gen_range(1..=64),
                workers: 2,
                ..SearchConfig::default()
            };
            let best = ground_search_gray(&inst, &cfg).unwrap();
            let naive = enumerate_spectrum_naive(&inst, 1).unwrap();
            assert_eq!(best.state, naive.entries[0].state, "round {round}");
            assert_eq!(best.energy, naive.entries[0].energy, "round {round}");
        }
    }

    #[test]
    fn subproblem_splitting_gives_the_same_answer() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let inst = random_qubo(10, &mut rng);
            let whole = ground_search_gray(
                &inst,
                &SearchConfig {
                    chunk_exp: 3,
                    cache_depth: 2,
                    ..SearchConfig::default()
                },
            )
            .unwrap();
            let split = ground_search_gray(
                &inst,
                &SearchConfig {
                    chunk_exp: 3,
                    cache_depth: 2,
                    fixed_vars: 3,
                    ..SearchConfig::default()
                },
            )
            .unwrap();
            assert_eq!(whole.state, split.state);
            assert_eq!(whole.energy, split.energy);
        }
    }

    #[test]
    fn solver_handles_full_suffix() {
        // M = n means no Gray walk at all: a plain scan over all lanes.
        let qubo = three_spin_qubo();
        let cfg = SearchConfig {
            chunk_exp: 3,
            cache_depth: 0,
            ..SearchConfig::default()
        };
        let best = ground_search_gray(&qubo, &cfg).unwrap();
        assert_eq!(best.state, PackedState(1));
        assert_eq!(best.energy, -5.0);
    }
}
