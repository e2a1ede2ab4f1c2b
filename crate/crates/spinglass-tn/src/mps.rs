//! Imaginary-time MPS solver for arbitrary interaction graphs.
//!
//! The Boltzmann distribution is reached by evolving the infinite-
//! temperature product state: the MPS carries amplitudes
//! `psi(s) = exp(-beta * E(s) / 2)`, built up over `beta / dbeta` steps.
//! One step applies, for each spin `i` in ascending order, the diagonal
//! gate collecting spin `i`'s field and all its couplings to later spins
//! `j > i`. Because every gate is diagonal in the computational basis, the
//! gates commute and there is no step-size error — the only approximation
//! is the compression back to bond dimension `D` after each gate. Candidate
//! states are then extracted with a branch-and-bound walk over the exact
//! MPS marginals, and their energies are recomputed from the instance.

use crate::compress::{MpsChain, MpsTensor};
use crate::TnError;
use nalgebra::DMatrix;
use spinglass_core::{ising_energy, IsingInstance, PackedState, Spectrum, SpectrumEntry};

/// Branch-and-bound settings for the state extraction walk.
///
/// The walk keeps, at each spin, the nodes whose marginal weight is at
/// least `cutoff` times the level maximum, capped at `max_branches` (ties
/// broken by state word), and finally reports the `k` lowest exact energies
/// among the surviving leaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpsBranchConfig {
    /// Relative marginal-weight cutoff, in (0, 1].
    pub cutoff: f64,
    /// Hard cap on surviving nodes per level.
    pub max_branches: usize,
    /// Number of spectrum entries to return.
    pub k: usize,
}

impl Default for MpsBranchConfig {
    fn default() -> Self {
        MpsBranchConfig {
            cutoff: 1e-6,
            max_branches: 1024,
            k: 1,
        }
    }
}

impl MpsBranchConfig {
    pub fn validate(&self) -> Result<(), TnError> {
        if !(self.cutoff > 0.0 && self.cutoff <= 1.0) {
            return Err(TnError::BadCutoff(self.cutoff));
        }
        if self.max_branches == 0 {
            return Err(TnError::BadMaxBranches);
        }
        if self.k == 0 {
            return Err(TnError::BadSpectrumSize);
        }
        Ok(())
    }
}

#[inline]
fn sigma(bit: usize) -> f64 {
    if bit == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Evolve the uniform product state to `exp(-beta * H / 2)|uniform>`,
/// compressing to bond dimension at most `bond` after every gate.
pub(crate) fn evolve_chain(
    inst: &IsingInstance,
    bond: usize,
    beta: f64,
    dbeta: f64,
) -> Result<MpsChain, TnError> {
    if bond == 0 {
        return Err(TnError::BadBondDimension);
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(TnError::BadBeta(beta));
    }
    let steps = (beta / dbeta).round();
    if !(dbeta > 0.0)
        || !dbeta.is_finite()
        || steps < 1.0
        || (steps * dbeta - beta).abs() > 1e-9 * beta
    {
        return Err(TnError::BadStepSize { beta, dbeta });
    }
    let n = inst.n;
    if n == 0 {
        return Err(TnError::EmptyInstance);
    }

    // Couplings grouped by their lower endpoint, ascending in the upper one.
    let mut pairs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(i, j), &jv) in &inst.j {
        pairs[i].push((j, jv));
    }

    let mut chain = MpsChain::new(
        (0..n)
            .map(|_| MpsTensor {
                left: 1,
                phys: 2,
                right: 1,
                data: vec![1.0, 1.0],
            })
            .collect(),
    );
    for _ in 0..steps as u64 {
        for i in 0..n {
            apply_gate(&mut chain, i, &pairs[i], inst.field(i), dbeta, bond)?;
        }
    }
    Ok(chain)
}

/// Apply the diagonal gate `exp(-dbeta/2 * s_i * (h_i + sum_j J_ij s_j))`
/// as a bond-2 operator over the stretch `[i, last coupled j]`, then
/// compress.
fn apply_gate(
    chain: &mut MpsChain,
    i: usize,
    pairs: &[(usize, f64)],
    h: f64,
    dbeta: f64,
    bond: usize,
) -> Result<(), TnError> {
    let half = 0.5 * dbeta;
    let field = |s: usize| (-half * h * sigma(s)).exp();
    if pairs.is_empty() {
        let t = &mut chain.tensors[i];
        for a in 0..t.left {
            for s in 0..2 {
                let f = field(s);
                for b in 0..t.right {
                    *t.at_mut(a, s, b) *= f;
                }
            }
        }
        return chain.rescale();
    }
    let last = pairs.last().expect("nonempty").0;
    let mut coupling = vec![0.0f64; last + 1];
    for &(j, jv) in pairs {
        coupling[j] = jv;
    }
    // Opening site: apply the field and emit a copy of s_i on the bond.
    {
        let t = &chain.tensors[i];
        let mut next = MpsTensor::zeros(t.left, 2, 2 * t.right);
        for a in 0..t.left {
            for s in 0..2 {
                let f = field(s);
                for b in 0..t.right {
                    *next.at_mut(a, s, s * t.right + b) = f * t.at(a, s, b);
                }
            }
        }
        chain.tensors[i] = next;
    }
    // Carrier sites: diagonal in the copied spin, applying their own factor.
    for site in i + 1..last {
        let jv = coupling[site];
        let t = &chain.tensors[site];
        let mut next = MpsTensor::zeros(2 * t.left, 2, 2 * t.right);
        for g in 0..2 {
            for s in 0..2 {
                let f = (-half * jv * sigma(g) * sigma(s)).exp();
                for a in 0..t.left {
                    for b in 0..t.right {
                        *next.at_mut(g * t.left + a, s, g * t.right + b) = f * t.at(a, s, b);
                    }
                }
            }
        }
        chain.tensors[site] = next;
    }
    // Closing site: absorb the copy.
    {
        let jv = coupling[last];
        let t = &chain.tensors[last];
        let mut next = MpsTensor::zeros(2 * t.left, 2, t.right);
        for g in 0..2 {
            for s in 0..2 {
                let f = (-half * jv * sigma(g) * sigma(s)).exp();
                for a in 0..t.left {
                    for b in 0..t.right {
                        *next.at_mut(g * t.left + a, s, b) = f * t.at(a, s, b);
                    }
                }
            }
        }
        chain.tensors[last] = next;
    }
    chain.compress(bond)
}

/// Right environments `E[t] = sum_{s_t..s_{n-1}} (A^{s_t}..A^{s_{n-1}})
/// (A^{s_t}..A^{s_{n-1}})^T`, each rescaled to unit maximum entry (only
/// weight ratios within a level matter to the walk).
fn environments(chain: &MpsChain) -> Result<Vec<DMatrix<f64>>, TnError> {
    let n = chain.len();
    let mut env: Vec<DMatrix<f64>> = Vec::with_capacity(n + 1);
    env.push(DMatrix::from_element(1, 1, 1.0));
    for t in (0..n).rev() {
        let ten = &chain.tensors[t];
        let prev = &env[n - 1 - t];
        let mut e = DMatrix::zeros(ten.left, ten.left);
        for s in 0..ten.phys {
            let a_s = DMatrix::from_fn(ten.left, ten.right, |a, b| ten.at(a, s, b));
            e += &a_s * prev * a_s.transpose();
        }
        let m = e.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !(m > 0.0) || !m.is_finite() {
            return Err(TnError::DegenerateNetwork);
        }
        e /= m;
        env.push(e);
    }
    env.reverse();
    Ok(env)
}

struct WalkNode {
    v: Vec<f64>,
    word: u64,
}

/// Branch-and-bound over the MPS marginals; energies are exact.
fn extract_spectrum(
    inst: &IsingInstance,
    chain: &MpsChain,
    branch: &MpsBranchConfig,
) -> Result<Spectrum, TnError> {
    let n = chain.len();
    let envs = environments(chain)?;
    let mut nodes = vec![WalkNode {
        v: vec![1.0],
        word: 0,
    }];
    for site in 0..n {
        let ten = &chain.tensors[site];
        let env = &envs[site + 1];
        let mut children: Vec<(WalkNode, f64)> = Vec::with_capacity(nodes.len() * 2);
        for node in &nodes {
            for s in 0..2usize {
                let mut v = vec![0.0; ten.right];
                for (a, &va) in node.v.iter().enumerate() {
                    if va == 0.0 {
                        continue;
                    }
                    for (b, slot) in v.iter_mut().enumerate() {
                        *slot += va * ten.at(a, s, b);
                    }
                }
                let mut w = 0.0;
                for (x, &vx) in v.iter().enumerate() {
                    if vx == 0.0 {
                        continue;
                    }
                    for (y, &vy) in v.iter().enumerate() {
                        w += vx * env[(x, y)] * vy;
                    }
                }
                children.push((
                    WalkNode {
                        v,
                        word: node.word | (s as u64) << site,
                    },
                    w.max(0.0),
                ));
            }
        }
        let w_max = children.iter().map(|c| c.1).fold(0.0f64, f64::max);
        if !(w_max > 0.0) || !w_max.is_finite() {
            return Err(TnError::DegenerateNetwork);
        }
        let threshold = branch.cutoff * w_max;
        let mut kept: Vec<(WalkNode, f64)> = children
            .into_iter()
            .filter(|c| c.1 >= threshold)
            .collect();
        kept.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.word.cmp(&b.0.word)));
        kept.truncate(branch.max_branches);
        // Joint rescale keeps the carried vectors in range without touching
        // the weight ratios of the next level.
        let vm = kept
            .iter()
            .flat_map(|c| c.0.v.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !(vm > 0.0) || !vm.is_finite() {
            return Err(TnError::DegenerateNetwork);
        }
        nodes = kept
            .into_iter()
            .map(|(mut node, _)| {
                for x in &mut node.v {
                    *x /= vm;
                }
                node
            })
            .collect();
    }
    let mut leaves: Vec<(f64, u64)> = nodes
        .iter()
        .map(|node| {
            let e = ising_energy(inst, PackedState(node.word))?;
            Ok((e, node.word))
        })
        .collect::<Result<_, TnError>>()?;
    leaves.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let entries = leaves
        .iter()
        .take(branch.k)
        .map(|&(energy, word)| SpectrumEntry {
            energy,
            state: PackedState(word),
        })
        .collect();
    Ok(Spectrum { entries })
}

/// Imaginary-time evolution to inverse temperature `beta` in steps of
/// `dbeta` at bond dimension `bond`, followed by branch-and-bound state
/// extraction. `dbeta` must divide `beta` into a whole number of steps.
pub fn mps_imaginary_time(
    inst: &IsingInstance,
    bond: usize,
    beta: f64,
    dbeta: f64,
    branch: &MpsBranchConfig,
) -> Result<Spectrum, TnError> {
    branch.validate()?;
    let chain = evolve_chain(inst, bond, beta, dbeta)?;
    extract_spectrum(inst, &chain, branch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use spinglass_core::enumerate_spectrum_naive;

    fn exhaustive(k: usize) -> MpsBranchConfig {
        MpsBranchConfig {
            cutoff: 1e-300,
            max_branches: usize::MAX,
            k,
        }
    }

    #[test]
    fn two_spins_at_bond_two_match_enumeration_for_any_beta() {
        let mut inst = IsingInstance::new(2).unwrap();
        inst.set_field(0, 0.7).unwrap();
        inst.set_field(1, -0.3).unwrap();
        inst.set_coupling(0, 1, -1.2).unwrap();
        let oracle = enumerate_spectrum_naive(&inst, 4).unwrap();
        for beta in [0.25, 1.0, 2.5, 4.0] {
            let got = mps_imaginary_time(&inst, 2, beta, 0.25, &exhaustive(4)).unwrap();
            assert_eq!(got.entries.len(), 4);
            for (g, w) in got.entries.iter().zip(&oracle.entries) {
                assert_eq!(g.state, w.state, "beta {beta}");
                assert_eq!(g.energy.to_bits(), w.energy.to_bits());
            }
        }
    }

    #[test]
    fn uncoupled_instance_stays_in_product_form() {
        let mut inst = IsingInstance::new(6).unwrap();
        let fields = [0.4, -0.9, 1.3, -0.2, 0.6, -1.1];
        for (i, &h) in fields.iter().enumerate() {
            inst.set_field(i, h).unwrap();
        }
        let chain = evolve_chain(&inst, 8, 2.0, 0.5).unwrap();
        assert_eq!(chain.max_bond(), 1);
        let got = mps_imaginary_time(&inst, 8, 2.0, 0.5, &MpsBranchConfig::default()).unwrap();
        // Ground state aligns every spin against its field.
        let mut want = 0u64;
        for (i, &h) in fields.iter().enumerate() {
            if h < 0.0 {
                want |= 1 << i;
            }
        }
        assert_eq!(got.entries[0].state.0, want);
        let e: f64 = fields.iter().map(|h| -h.abs()).sum();
        assert_eq!(got.entries[0].energy, e);
    }

    #[test]
    fn small_complete_graph_ground_state_is_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let n = 6;
        let mut inst = IsingInstance::new(n).unwrap();
        for i in 0..n {
            inst.set_field(i, rng.gen_range(-0.5..0.5)).unwrap();
            for j in i + 1..n {
                inst.set_coupling(i, j, rng.gen_range(-1.0..1.0)).unwrap();
            }
        }
        let got = mps_imaginary_time(&inst, 16, 1.0, 0.25, &MpsBranchConfig::default()).unwrap();
        let oracle = enumerate_spectrum_naive(&inst, 1).unwrap();
        assert_eq!(got.entries[0].state, oracle.entries[0].state);
        assert_eq!(got.entries[0].energy, oracle.entries[0].energy);
    }

    #[test]
    fn rejects_step_sizes_that_do_not_divide_beta() {
        let inst = IsingInstance::new(2).unwrap();
        assert!(matches!(
            mps_imaginary_time(&inst, 2, 1.0, 0.3, &MpsBranchConfig::default()),
            Err(TnError::BadStepSize { .. })
        ));
        assert!(matches!(
            mps_imaginary_time(&inst, 2, 1.0, -0.25, &MpsBranchConfig::default()),
            Err(TnError::BadStepSize { .. })
        ));
        assert!(matches!(
            mps_imaginary_time(&inst, 0, 1.0, 0.25, &MpsBranchConfig::default()),
            Err(TnError::BadBondDimension)
        ));
        assert!(matches!(
            mps_imaginary_time(&inst, 2, 0.0, 0.25, &MpsBranchConfig::default()),
            Err(TnError::BadBeta(_))
        ));
    }

    #[test]
    fn branch_config_validation() {
        let inst = IsingInstance::new(2).unwrap();
        for bad in [
            MpsBranchConfig {
                cutoff: 0.0,
                ..Default::default()
            },
            MpsBranchConfig {
                max_branches: 0,
                ..Default::default()
            },
            MpsBranchConfig {
                k: 0,
                ..Default::default()
            },
        ] {
            assert!(mps_imaginary_time(&inst, 2, 1.0, 0.5, &bad).is_err());
        }
    }

    #[test]
    fn dbeta_equal_to_beta_is_a_single_step() {
        let mut inst = IsingInstance::new(3).unwrap();
        inst.set_coupling(0, 1, 1.0).unwrap();
        inst.set_coupling(1, 2, -0.5).unwrap();
        let got = mps_imaginary_time(&inst, 8, 2.0, 2.0, &exhaustive(8)).unwrap();
        let oracle = enumerate_spectrum_naive(&inst, 8).unwrap();
        for (g, w) in got.entries.iter().zip(&oracle.entries) {
            assert_eq!(g.state, w.state);
            assert_eq!(g.energy.to_bits(), w.energy.to_bits());
        }
    }
}
