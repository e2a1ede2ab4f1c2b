//! Cross-checks between the encodings and the exact solvers on random
//! instances.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use spinglass_core::{
    enumerate_spectrum_naive, ground_search_gray, ising_energy, ising_to_qubo, qubo_energy,
    qubo_to_ising, spectrum_search, IsingInstance, PackedState, QuboInstance, SearchConfig,
};

fn random_ising(n: usize, rng: &mut ChaCha8Rng) -> IsingInstance {
    let mut inst = IsingInstance::new(n).unwrap();
    for i in 0..n {
        if rng.gen_bool(0.8) {
            inst.set_field(i, rng.gen_range(-2.0..2.0)).unwrap();
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.35) {
                inst.set_coupling(i, j, rng.gen_range(-2.0..2.0)).unwrap();
            }
        }
    }
    inst
}

fn random_qubo(n: usize, rng: &mut ChaCha8Rng) -> QuboInstance {
    let mut inst = QuboInstance::new(n).unwrap();
    for i in 0..n {
        inst.set_linear(i, rng.gen_range(-3.0..3.0)).unwrap();
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.3) {
                inst.set_quadratic(i, j, rng.gen_range(-3.0..3.0)).unwrap();
            }
        }
    }
    inst.offset = rng.gen_range(-1.0..1.0);
    inst
}

#[test]
fn ising_to_qubo_preserves_every_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let n = rng.gen_range(2..=12);
        let ising = random_ising(n, &mut rng);
        let qubo = ising_to_qubo(&ising);
        for word in 0..(1u64 << n) {
            let s = PackedState(word);
            let hi = ising_energy(&ising, s).unwrap();
            let fq = qubo_energy(&qubo, s).unwrap();
            assert!(
                (hi - fq).abs() <= 1e-12 * hi.abs().max(1.0),
                "n={n} word={word}: {hi} vs {fq}"
            );
        }
    }
}

#[test]
fn conversion_preserves_the_set_of_minimizers() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..20 {
        let n = rng.gen_range(2..=10);
        let ising = random_ising(n, &mut rng);
        let qubo = ising_to_qubo(&ising);
        let si = enumerate_spectrum_naive(&ising, 1 << n).unwrap();
        let sq = enumerate_spectrum_naive(&qubo, 1 << n).unwrap();
        let min_i = si.entries[0].energy;
        let min_q = sq.entries[0].energy;
        let argmin_i: Vec<u64> = si
            .entries
            .iter()
            .take_while(|e| e.energy <= min_i + 1e-9)
            .map(|e| e.state.0)
            .collect();
        let argmin_q: Vec<u64> = sq
            .entries
            .iter()
            .take_while(|e| e.energy <= min_q + 1e-9)
            .map(|e| e.state.0)
            .collect();
        assert_eq!(argmin_i, argmin_q);
    }
}

#[test]
fn qubo_to_ising_shifts_spectra_by_a_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..50 {
        let n = rng.gen_range(2..=12);
        let qubo = random_qubo(n, &mut rng);
        let ising = qubo_to_ising(&qubo);
        let sq = enumerate_spectrum_naive(&qubo, 1 << n).unwrap();
        let si = enumerate_spectrum_naive(&ising, 1 << n).unwrap();
        let shift = sq.entries[0].energy - si.entries[0].energy;
        for (a, b) in sq.entries.iter().zip(&si.entries) {
            assert_eq!(a.state, b.state, "state order must not change");
            assert!(
                (a.energy - b.energy - shift).abs() <= 1e-9,
                "shift must be uniform"
            );
        }
    }
}

#[test]
fn round_trip_reproduces_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..50 {
        let n = rng.gen_range(2..=12);
        let ising = random_ising(n, &mut rng);
        let back = qubo_to_ising(&ising_to_qubo(&ising));
        for i in 0..n {
            let rel = 1e-12 * ising.field(i).abs().max(1.0);
            assert!((back.field(i) - ising.field(i)).abs() <= rel);
            for j in (i + 1)..n {
                let rel = 1e-12 * ising.coupling(i, j).abs().max(1.0);
                assert!((back.coupling(i, j) - ising.coupling(i, j)).abs() <= rel);
            }
        }
    }
}

#[test]
fn chunked_search_is_exact_and_worker_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(67);
    for _ in 0..10 {
        let n = rng.gen_range(8..=14);
        let qubo = random_qubo(n, &mut rng);
        let k = rng.gen_range(1..=64usize);
        let m = rng.gen_range(6..=n as u32);
        let base = SearchConfig {
            chunk_exp: m,
            k,
            workers: 1,
            cache_depth: 0,
            ..SearchConfig::default()
        };
        let naive = enumerate_spectrum_naive(&qubo, k).unwrap();
        let single = spectrum_search(&qubo, &base).unwrap();
        assert_eq!(single, naive);
        let quad = spectrum_search(&qubo, &SearchConfig { workers: 4, ..base }).unwrap();
        assert_eq!(
            serde_json::to_vec(&single).unwrap(),
            serde_json::to_vec(&quad).unwrap()
        );
    }
}

#[test]
fn gray_solver_agrees_with_chunked_k1() {
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    for _ in 0..10 {
        let n = rng.gen_range(8..=16);
        let qubo = random_qubo(n, &mut rng);
        let m = rng.gen_range(2..=(n as u32 - 2));
        let cfg = SearchConfig {
            chunk_exp: m,
            k: 1,
            cache_depth: rng.gen_range(0..=(n as u32 - m)),
            steps_per_batch: rng.gen_range(16..=2048),
            workers: 2,
            ..SearchConfig::default()
        };
        let gray = ground_search_gray(&qubo, &cfg).unwrap();
        let chunked = spectrum_search(&qubo, &cfg).unwrap();
        assert_eq!(gray.state, chunked.entries[0].state);
        assert_eq!(gray.energy, chunked.entries[0].energy);
    }
}
