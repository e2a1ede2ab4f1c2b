//! Monte Carlo baselines: simulated annealing and parallel tempering on the
//! Ising form, plus the time-to-solution figure of merit.
//!
//! Both samplers are fully deterministic for a fixed `(instance, seed)`:
//! every independent unit of work (an annealing restart, a tempering
//! replica, the swap decisions) draws from its own counter-based RNG stream,
//! so the trajectory does not depend on how the work is scheduled across
//! threads.

use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{IsingInstance, PackedState};

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error("beta ladder must not be empty")]
    EmptyLadder,
    #[error("beta ladder values must be positive and finite, got {0}")]
    BadBeta(f64),
    #[error("beta ladder must be strictly increasing ({0} then {1})")]
    NotIncreasing(f64, f64),
    #[error("geometric ladder needs at least two rungs, got {0}")]
    GeometricTooShort(usize),
    #[error("parallel tempering needs at least two replicas, ladder has {0}")]
    NotEnoughReplicas(usize),
    #[error("simulated annealing needs at least one restart")]
    NoRestarts,
    #[error("running time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("success probability must lie in [0, 1], got {0}")]
    BadSuccessProbability(f64),
    #[error("target probability must lie strictly between 0 and 1, got {0}")]
    BadTargetProbability(f64),
    #[error("scale ratio must be positive, got {0}")]
    BadScaleRatio(f64),
}

/// How the inverse-temperature schedule was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Geometric,
    Explicit,
}

/// A strictly increasing ladder of inverse temperatures.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaLadder {
    pub betas: Vec<f64>,
    pub kind: LadderKind,
}

impl BetaLadder {
    /// Geometrically spaced rungs from `beta_min` to `beta_max` inclusive.
    pub fn geometric(beta_min: f64, beta_max: f64, count: usize) -> Result<Self, McError> {
        if count < 2 {
            return Err(McError::GeometricTooShort(count));
        }
        let ratio = beta_max / beta_min;
        let betas: Vec<f64> = (0..count)
            .map(|i| beta_min * ratio.powf(i as f64 / (count - 1) as f64))
            .collect();
        Self::checked(betas, LadderKind::Geometric)
    }

    pub fn explicit(betas: Vec<f64>) -> Result<Self, McError> {
        Self::checked(betas, LadderKind::Explicit)
    }

    fn checked(betas: Vec<f64>, kind: LadderKind) -> Result<Self, McError> {
        if betas.is_empty() {
            return Err(McError::EmptyLadder);
        }
        for &b in &betas {
            if !b.is_finite() || b <= 0.0 {
                return Err(McError::BadBeta(b));
            }
        }
        for w in betas.windows(2) {
            if w[1] <= w[0] {
                return Err(McError::NotIncreasing(w[0], w[1]));
            }
        }
        Ok(BetaLadder { betas, kind })
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// Linear interpolation along the ladder; `progress` is clamped to
    /// `[0, 1]` with 0 at the first (hottest) rung and 1 at the last.
    pub fn value_at(&self, progress: f64) -> f64 {
        let last = self.betas.len() - 1;
        if last == 0 {
            return self.betas[0];
        }
        let pos = progress.clamp(0.0, 1.0) * last as f64;
        let lo = pos.floor() as usize;
        if lo >= last {
            return self.betas[last];
        }
        let frac = pos - lo as f64;
        self.betas[lo] + frac * (self.betas[lo + 1] - self.betas[lo])
    }
}

/// Outcome of a Monte Carlo run.
///
/// `success_count / samples_taken` is the empirical success probability fed
/// into [`time_to_solution`]: for annealing, a sample is one restart and a
/// success is a restart whose best energy reached the best energy of the
/// whole run; a tempering run is a single sample that succeeds by
/// definition.
#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub best_state: PackedState,
    pub best_energy: f64,
    pub success_count: u64,
    pub samples_taken: u64,
    pub elapsed: Duration,
}

/// Dense Ising view used by the samplers.
struct DenseIsing {
    n: usize,
    fields: Vec<f64>,
    neighbors: Vec<Vec<(u32, f64)>>,
}

impl DenseIsing {
    fn new(inst: &IsingInstance) -> Self {
        let mut fields = vec![0.0; inst.n];
        for (&i, &h) in &inst.h {
            fields[i] = h;
        }
        let mut neighbors: Vec<Vec<(u32, f64)>> = vec![Vec::new(); inst.n];
        for (&(i, j), &jij) in &inst.j {
            neighbors[i].push((j as u32, jij));
            neighbors[j].push((i as u32, jij));
        }
        DenseIsing {
            n: inst.n,
            fields,
            neighbors,
        }
    }

    fn energy(&self, word: u64) -> f64 {
        let spin = |i: usize| 2.0 * (word >> i & 1) as f64 - 1.0;
        let mut e = 0.0;
        for i in 0..self.n {
            let si = spin(i);
            e += self.fields[i] * si;
            for &(j, jij) in &self.neighbors[i] {
                if (j as usize) > i {
                    e += jij * si * spin(j as usize);
                }
            }
        }
        e
    }

    /// Energy change of flipping spin `i`: `-2 s_i (h_i + Σ_j J_ij s_j)`.
    fn flip_delta(&self, word: u64, i: usize) -> f64 {
        let spin = |k: usize| 2.0 * (word >> k & 1) as f64 - 1.0;
        let mut local = self.fields[i];
        for &(j, jij) in &self.neighbors[i] {
            local += jij * spin(j as usize);
        }
        -2.0 * spin(i) * local
    }
}

struct Walker {
    word: u64,
    energy: f64,
    best_word: u64,
    best_energy: f64,
}

impl Walker {
    fn start(dense: &DenseIsing, rng: &mut ChaCha8Rng) -> Self {
        let mask = if dense.n >= 64 {
            u64::MAX
        } else {
            (1u64 << dense.n) - 1
        };
        let word = rng.gen::<u64>() & mask;
        let energy = dense.energy(word);
        Walker {
            word,
            energy,
            best_word: word,
            best_energy: energy,
        }
    }

    /// One Metropolis sweep: every spin proposed once, in index order.
    fn sweep(&mut self, dense: &DenseIsing, beta: f64, rng: &mut ChaCha8Rng) {
        for i in 0..dense.n {
            let delta = dense.flip_delta(self.word, i);
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp();
            if accept {
                self.word ^= 1 << i;
                self.energy += delta;
                if self.energy.total_cmp(&self.best_energy).is_lt()
                    || (self.energy.total_cmp(&self.best_energy).is_eq()
                        && self.word < self.best_word)
                {
                    self.best_energy = self.energy;
                    self.best_word = self.word;
                }
            }
        }
    }
}

/// Simulated annealing with independent restarts.
///
/// Each restart draws from its own RNG stream (`seed` fixed, stream =
/// restart index) and anneals from the first ladder rung to the last,
/// interpolating the inverse temperature per sweep.
pub fn simulated_annealing(
    inst: &IsingInstance,
    sweeps: usize,
    ladder: &BetaLadder,
    restarts: usize,
    seed: u64,
) -> Result<McResult, McError> {
    if restarts == 0 {
        return Err(McError::NoRestarts);
    }
    let started = Instant::now();
    let dense = DenseIsing::new(inst);
    let runs: Vec<(f64, u64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut walker = Walker::start(&dense, &mut rng);
            for t in 0..sweeps {
                let progress = if sweeps > 1 {
                    t as f64 / (sweeps - 1) as f64
                } else {
                    1.0
                };
                walker.sweep(&dense, ladder.value_at(progress), &mut rng);
            }
            // Re-evaluate the best state exactly; the incremental energy can
            // carry rounding after many sweeps.
            (dense.energy(walker.best_word), walker.best_word)
        })
        .collect();
    let mut best_energy = runs[0].0;
    let mut best_word = runs[0].1;
    for &(e, w) in &runs[1..] {
        if e.total_cmp(&best_energy).is_lt() || (e.total_cmp(&best_energy).is_eq() && w < best_word)
        {
            best_energy = e;
            best_word = w;
        }
    }
    let success_count = runs
        .iter()
        .filter(|(e, _)| e.total_cmp(&best_energy).is_eq())
        .count() as u64;
    Ok(McResult {
        best_state: PackedState(best_word),
        best_energy,
        success_count,
        samples_taken: restarts as u64,
        elapsed: started.elapsed(),
    })
}

/// Metropolis acceptance probability for exchanging two tempering replicas:
/// `min(1, exp(Δβ · ΔE))`.
pub fn swap_acceptance(delta_beta: f64, delta_energy: f64) -> f64 {
    (delta_beta * delta_energy).exp().min(1.0)
}

/// Parallel tempering: one replica per ladder rung, sequential adjacent-pair
/// swap proposals after every sweep.
///
/// Replica `r` draws from RNG stream `r`; swap decisions use stream
/// `ladder.len()`, so results are independent of replica scheduling.
pub fn parallel_tempering(
    inst: &IsingInstance,
    ladder: &BetaLadder,
    sweeps: usize,
    seed: u64,
) -> Result<McResult, McError> {
    let replicas = ladder.len();
    if replicas < 2 {
        return Err(McError::NotEnoughReplicas(replicas));
    }
    let started = Instant::now();
    let dense = DenseIsing::new(inst);
    let mut rngs: Vec<ChaCha8Rng> = (0..replicas)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            rng
        })
        .collect();
    let mut swap_rng = ChaCha8Rng::seed_from_u64(seed);
    swap_rng.set_stream(replicas as u64);
    let mut walkers: Vec<Walker> = rngs
        .iter_mut()
        .map(|rng| Walker::start(&dense, rng))
        .collect();
    for _ in 0..sweeps {
        walkers
            .par_iter_mut()
            .zip(rngs.par_iter_mut())
            .enumerate()
            .for_each(|(r, (walker, rng))| {
                walker.sweep(&dense, ladder.betas[r], rng);
            });
        for r in 0..replicas - 1 {
            let delta_beta = ladder.betas[r + 1] - ladder.betas[r];
            let delta_energy = walkers[r + 1].energy - walkers[r].energy;
            if swap_rng.gen::<f64>() < swap_acceptance(delta_beta, delta_energy) {
                let (left, right) = walkers.split_at_mut(r + 1);
                std::mem::swap(&mut left[r].word, &mut right[0].word);
                std::mem::swap(&mut left[r].energy, &mut right[0].energy);
            }
        }
    }
    let mut best_energy = f64::INFINITY;
    let mut best_word = 0u64;
    for walker in &walkers {
        let e = dense.energy(walker.best_word);
        if e.total_cmp(&best_energy).is_lt()
            || (e.total_cmp(&best_energy).is_eq() && walker.best_word < best_word)
        {
            best_energy = e;
            best_word = walker.best_word;
        }
    }
    Ok(McResult {
        best_state: PackedState(best_word),
        best_energy,
        success_count: 1,
        samples_taken: 1,
        elapsed: started.elapsed(),
    })
}

/// Time-to-solution estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tts {
    /// Expected time to reach the target probability, in the units of `t`.
    Bounded(f64),
    /// The run never succeeded; no finite estimate exists.
    Unbounded,
}

/// `TTS = t · ln(1 - p_target) / ln(1 - p_succ) · scale_ratio`.
///
/// `scale_ratio` rescales between problem sizes (for instance logical
/// variables per physical qubit); pass 1.0 for a plain estimate.  A success
/// probability of zero yields [`Tts::Unbounded`], a probability of one the
/// single-shot time `t · scale_ratio`.
pub fn time_to_solution(
    t: f64,
    p_succ: f64,
    p_target: f64,
    scale_ratio: f64,
) -> Result<Tts, McError> {
    if !t.is_finite() || t <= 0.0 {
        return Err(McError::NonPositiveTime(t));
    }
    if !(0.0..=1.0).contains(&p_succ) {
        return Err(McError::BadSuccessProbability(p_succ));
    }
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(McError::BadTargetProbability(p_target));
    }
    if !scale_ratio.is_finite() || scale_ratio <= 0.0 {
        return Err(McError::BadScaleRatio(scale_ratio));
    }
    if p_succ == 0.0 {
        return Ok(Tts::Unbounded);
    }
    if p_succ == 1.0 {
        return Ok(Tts::Bounded(t * scale_ratio));
    }
    Ok(Tts::Bounded(
        t * ((1.0 - p_target).ln() / (1.0 - p_succ).ln()) * scale_ratio,
    ))
}
