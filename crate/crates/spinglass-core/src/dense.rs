//! Flat, cache-friendly view of a QUBO instance used by the exhaustive
//! solvers.
//!
//! The term lists are kept in the same sorted order as the sparse maps they
//! come from, so a full evaluation sums in exactly the same sequence as
//! [`crate::model::QuboInstance::state_energy`] and produces bitwise
//! identical energies.

use crate::model::QuboInstance;

pub(crate) struct DenseQubo {
    pub offset: f64,
    /// `(i, b_i)` in increasing index order.
    pub linears: Vec<(u32, f64)>,
    /// `(i, j, a_ij)` with `i < j`, in increasing `(i, j)` order.
    pub edges: Vec<(u32, u32, f64)>,
}

impl DenseQubo {
    pub fn from_instance(inst: &QuboInstance) -> Self {
        DenseQubo {
            offset: inst.offset,
            linears: inst
                .linear
                .iter()
                .map(|(&i, &b)| (i as u32, b))
                .collect(),
            edges: inst
                .quadratic
                .iter()
                .map(|(&(i, j), &a)| (i as u32, j as u32, a))
                .collect(),
        }
    }

    /// Full energy of a packed state word, offset included.
    pub fn energy(&self, word: u64) -> f64 {
        let mut e = self.offset;
        for &(i, j, a) in &self.edges {
            if word >> i & 1 == 1 && word >> j & 1 == 1 {
                e += a;
            }
        }
        for &(i, b) in &self.linears {
            if word >> i & 1 == 1 {
                e += b;
            }
        }
        e
    }
}
