//! PEPS encoding of the Gibbs distribution on a cluster lattice.
//!
//! Every lattice site carries a five-leg tensor `A[s; l, r, u, d]`: one
//! physical leg enumerating the `2^l` cluster configurations and four
//! virtual legs enumerating joint configurations of the interface spins
//! shared with the four neighbours. Each inter-cluster coupling
//! `exp(-beta * J * s_i * s_j)` is split across the bond with
//! [`edge_decompose`]: the downstream site keeps the Kronecker factor
//! (its left/up legs simply copy its own interface spins) and the upstream
//! site keeps the Boltzmann factor on its right/down legs. Contracting all
//! virtual legs and summing the physical ones therefore reproduces the
//! partition function exactly; truncation enters only through the boundary
//! MPS used to perform that contraction row by row.

use crate::compress::{MpsChain, MpsTensor};
use crate::lattice::{ClusterLattice, ClusterSite};
use crate::{TnError, MAX_CLUSTER_SPINS};

/// Split one Ising bond factor across a virtual leg.
///
/// Returns `(B, C)`, both indexed `[s][gamma]` with bit 0 meaning spin −1
/// and bit 1 meaning spin +1: `B[s][gamma] = delta(gamma, s)` and
/// `C[s][gamma] = exp(-beta * gamma * J * s)`, so that
/// `sum_gamma B[s_i][gamma] * C[s_j][gamma] = exp(-beta * J * s_i * s_j)`.
///
/// Expects `beta > 0`; the identity holds for any finite `beta`.
pub fn edge_decompose(j: f64, beta: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let sigma = |bit: usize| if bit == 1 { 1.0 } else { -1.0 };
    let mut b = [[0.0; 2]; 2];
    let mut c = [[0.0; 2]; 2];
    for s in 0..2 {
        for g in 0..2 {
            b[s][g] = if s == g { 1.0 } else { 0.0 };
            c[s][g] = (-beta * sigma(g) * j * sigma(s)).exp();
        }
    }
    (b, c)
}

/// A five-leg site tensor, stored row-major over `(s, l, r, u, d)`.
#[derive(Debug, Clone)]
pub struct SiteTensor {
    pub phys: usize,
    pub l: usize,
    pub r: usize,
    pub u: usize,
    pub d: usize,
    pub data: Vec<f64>,
}

impl SiteTensor {
    #[inline]
    pub fn idx(&self, s: usize, l: usize, r: usize, u: usize, d: usize) -> usize {
        (((s * self.l + l) * self.r + r) * self.u + u) * self.d + d
    }

    #[inline]
    pub fn at(&self, s: usize, l: usize, r: usize, u: usize, d: usize) -> f64 {
        self.data[self.idx(s, l, r, u, d)]
    }

    /// Sum out the physical leg: `W[l, r, u, d] = sum_s A[s; l, r, u, d]`,
    /// row-major over `(l, r, u, d)`.
    fn physical_sum(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.l * self.r * self.u * self.d];
        for s in 0..self.phys {
            let base = self.idx(s, 0, 0, 0, 0);
            for (i, v) in w.iter_mut().enumerate() {
                *v += self.data[base + i];
            }
        }
        w
    }
}

/// The PEPS network for one lattice and inverse temperature.
#[derive(Debug, Clone)]
pub struct PepsNetwork {
    pub rows: usize,
    pub cols: usize,
    pub beta: f64,
    /// Site tensors in row-major order.
    pub tensors: Vec<SiteTensor>,
    pub(crate) cluster_sizes: Vec<usize>,
    pub(crate) left_iface: Vec<Vec<usize>>,
    pub(crate) up_iface: Vec<Vec<usize>>,
}

impl PepsNetwork {
    pub fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    /// Number of cluster configurations at `site`.
    pub fn phys_dim(&self, site: usize) -> usize {
        self.tensors[site].phys
    }
}

/// Build the PEPS for `lat` at inverse temperature `beta`.
pub fn build_peps(lat: &ClusterLattice, beta: f64) -> Result<PepsNetwork, TnError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(TnError::BadBeta(beta));
    }
    let (rows, cols) = (lat.rows, lat.cols);
    let mut tensors = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let site = row * cols + col;
            let cl = &lat.sites[site];
            if cl.len() > MAX_CLUSTER_SPINS {
                return Err(TnError::ClusterTooLarge {
                    row,
                    col,
                    size: cl.len(),
                    cap: MAX_CLUSTER_SPINS,
                });
            }
            let phys = 1usize << cl.len();
            let l_dim = 1usize << cl.left_iface.len();
            let u_dim = 1usize << cl.up_iface.len();
            // The right leg enumerates the right neighbour's left interface;
            // for each outgoing edge, record which bit of that leg carries
            // the partner spin.
            let (r_dim, right_pos) = if col + 1 < cols {
                let nb = &lat.sites[site + 1];
                let pos: Vec<usize> = cl
                    .right_edges
                    .iter()
                    .map(|&(_, there, _)| {
                        nb.left_iface
                            .iter()
                            .position(|&x| x == there)
                            .expect("interface lists every coupled spin")
                    })
                    .collect();
                (1usize << nb.left_iface.len(), pos)
            } else {
                (1, Vec::new())
            };
            let (d_dim, down_pos) = if row + 1 < rows {
                let nb = &lat.sites[site + cols];
                let pos: Vec<usize> = cl
                    .down_edges
                    .iter()
                    .map(|&(_, there, _)| {
                        nb.up_iface
                            .iter()
                            .position(|&x| x == there)
                            .expect("interface lists every coupled spin")
                    })
                    .collect();
                (1usize << nb.up_iface.len(), pos)
            } else {
                (1, Vec::new())
            };

            let mut t = SiteTensor {
                phys,
                l: l_dim,
                r: r_dim,
                u: u_dim,
                d: d_dim,
                data: vec![0.0; phys * l_dim * r_dim * u_dim * d_dim],
            };
            for s in 0..phys as u64 {
                let w = (-beta * cl.intra_energy(s)).exp();
                let lb = ClusterSite::interface_bits(s, &cl.left_iface) as usize;
                let ub = ClusterSite::interface_bits(s, &cl.up_iface) as usize;
                let sigma = |x: usize| -> f64 {
                    if s >> x & 1 == 1 {
                        1.0
                    } else {
                        -1.0
                    }
                };
                let rfac: Vec<f64> = (0..r_dim)
                    .map(|g| {
                        let mut f = 1.0;
                        for (e, &(a, _, j)) in cl.right_edges.iter().enumerate() {
                            let gamma = if g >> right_pos[e] & 1 == 1 { 1.0 } else { -1.0 };
                            f *= (-beta * gamma * j * sigma(a)).exp();
                        }
                        f
                    })
                    .collect();
                let dfac: Vec<f64> = (0..d_dim)
                    .map(|g| {
                        let mut f = 1.0;
                        for (e, &(a, _, j)) in cl.down_edges.iter().enumerate() {
                            let gamma = if g >> down_pos[e] & 1 == 1 { 1.0 } else { -1.0 };
                            f *= (-beta * gamma * j * sigma(a)).exp();
                        }
                        f
                    })
                    .collect();
                for (rr, rf) in rfac.iter().enumerate() {
                    for (dd, df) in dfac.iter().enumerate() {
                        let i = t.idx(s as usize, lb, rr, ub, dd);
                        t.data[i] = w * rf * df;
                    }
                }
            }
            tensors.push(t);
        }
    }
    Ok(PepsNetwork {
        rows,
        cols,
        beta,
        tensors,
        cluster_sizes: lat.sites.iter().map(ClusterSite::len).collect(),
        left_iface: lat.sites.iter().map(|c| c.left_iface.clone()).collect(),
        up_iface: lat.sites.iter().map(|c| c.up_iface.clone()).collect(),
    })
}

/// A boundary MPS: the physical-leg-summed contraction of a suffix of rows,
/// kept as a tensor train with a separated logarithmic scale.
#[derive(Debug, Clone)]
pub struct BoundaryMps {
    pub(crate) chain: MpsChain,
}

impl BoundaryMps {
    pub fn num_tensors(&self) -> usize {
        self.chain.len()
    }

    pub fn max_bond(&self) -> usize {
        self.chain.max_bond()
    }

    pub fn log_scale(&self) -> f64 {
        self.chain.log_scale
    }

    /// `(left, phys, right)` dimensions of tensor `t`.
    pub fn dims(&self, t: usize) -> (usize, usize, usize) {
        let m = &self.chain.tensors[t];
        (m.left, m.phys, m.right)
    }

    /// Row-major entries of tensor `t` over `(left, phys, right)`.
    pub fn tensor_entries(&self, t: usize) -> &[f64] {
        &self.chain.tensors[t].data
    }
}

/// The bottom row of the network as an MPS (up legs become physical legs).
fn bottom_row_chain(net: &PepsNetwork) -> Result<MpsChain, TnError> {
    let row = net.rows - 1;
    let mut tensors = Vec::with_capacity(net.cols);
    for col in 0..net.cols {
        let t = &net.tensors[row * net.cols + col];
        debug_assert_eq!(t.d, 1);
        let w = t.physical_sum();
        let mut m = MpsTensor::zeros(t.l, t.u, t.r);
        for ll in 0..t.l {
            for uu in 0..t.u {
                for rr in 0..t.r {
                    *m.at_mut(ll, uu, rr) = w[((ll * t.r + rr) * t.u + uu) * t.d];
                }
            }
        }
        tensors.push(m);
    }
    let mut chain = MpsChain::new(tensors);
    chain.rescale()?;
    Ok(chain)
}

/// Absorb row `row` (physical legs summed, acting as an MPO) into the
/// boundary MPS for the rows below it.
fn absorb_row(net: &PepsNetwork, row: usize, below: &MpsChain) -> MpsChain {
    let mut tensors = Vec::with_capacity(net.cols);
    for col in 0..net.cols {
        let t = &net.tensors[row * net.cols + col];
        let m = &below.tensors[col];
        debug_assert_eq!(m.phys, t.d);
        let w = t.physical_sum();
        let mut n = MpsTensor::zeros(t.l * m.left, t.u, t.r * m.right);
        for ll in 0..t.l {
            for rr in 0..t.r {
                for uu in 0..t.u {
                    for dd in 0..t.d {
                        let wv = w[((ll * t.r + rr) * t.u + uu) * t.d + dd];
                        if wv == 0.0 {
                            continue;
                        }
                        for a in 0..m.left {
                            for b in 0..m.right {
                                *n.at_mut(ll * m.left + a, uu, rr * m.right + b) +=
                                    wv * m.at(a, dd, b);
                            }
                        }
                    }
                }
            }
        }
        tensors.push(n);
    }
    MpsChain {
        tensors,
        log_scale: below.log_scale,
    }
}

/// Contract the network from the bottom up.
///
/// `result[r]` is the boundary MPS representing rows `r..rows` with all
/// their physical legs summed; its physical legs are the up legs of row
/// `r`. The bottom row is the row itself (rescaled, never truncated); each
/// further absorption is followed by a canonical singular-value truncation
/// to bond dimension at most `chi`.
pub fn contract_boundary(net: &PepsNetwork, chi: usize) -> Result<Vec<BoundaryMps>, TnError> {
    if chi == 0 {
        return Err(TnError::BadChi);
    }
    let mut chains: Vec<Option<MpsChain>> = (0..net.rows).map(|_| None).collect();
    let mut current = bottom_row_chain(net)?;
    chains[net.rows - 1] = Some(current.clone());
    for row in (0..net.rows - 1).rev() {
        let mut next = absorb_row(net, row, &current);
        next.compress(chi)?;
        chains[row] = Some(next.clone());
        current = next;
    }
    Ok(chains
        .into_iter()
        .map(|c| BoundaryMps { chain: c.unwrap() })
        .collect())
}

/// Natural log of the partition function via boundary contraction at bond
/// dimension `chi`. Exact (to roundoff) whenever `chi` is at least the
/// exact bond dimension of every intermediate boundary.
pub fn log_partition(net: &PepsNetwork, chi: usize) -> Result<f64, TnError> {
    let boundaries = contract_boundary(net, chi)?;
    boundaries[0].chain.contract_trivial()
}

/// `R[l, r, d] = sum_{s in states} sum_u top[u] * A[s; l, r, u, d]`,
/// row-major over `(l, r, d)` — one column of the strip being scanned.
fn strip_tensor(t: &SiteTensor, top: &[f64], states: std::ops::Range<usize>) -> Vec<f64> {
    debug_assert_eq!(top.len(), t.u);
    let mut out = vec![0.0; t.l * t.r * t.d];
    for s in states {
        for ll in 0..t.l {
            for rr in 0..t.r {
                for (uu, &tv) in top.iter().enumerate() {
                    if tv == 0.0 {
                        continue;
                    }
                    for dd in 0..t.d {
                        out[(ll * t.r + rr) * t.d + dd] += tv * t.at(s, ll, rr, uu, dd);
                    }
                }
            }
        }
    }
    out
}

/// One step of the strip scan: contract the running edge matrix `phi`
/// (indexed `(l, a)`) with the column tensor `r_mat` (indexed `(l, r, d)`)
/// and the boundary tensor below (indexed `(a, d, b)`), producing the next
/// edge matrix indexed `(r, b)`.
fn propagate(
    phi: &[f64],
    l_dim: usize,
    a_dim: usize,
    r_mat: &[f64],
    r_dim: usize,
    d_dim: usize,
    omega: Option<&MpsTensor>,
) -> Vec<f64> {
    debug_assert_eq!(phi.len(), l_dim * a_dim);
    let b_dim = omega.map_or(1, |o| o.right);
    if let Some(o) = omega {
        debug_assert_eq!(o.left, a_dim);
        debug_assert_eq!(o.phys, d_dim);
    } else {
        debug_assert_eq!(a_dim, 1);
        debug_assert_eq!(d_dim, 1);
    }
    let mut out = vec![0.0; r_dim * b_dim];
    for ll in 0..l_dim {
        for rr in 0..r_dim {
            for dd in 0..d_dim {
                let rv = r_mat[(ll * r_dim + rr) * d_dim + dd];
                if rv == 0.0 {
                    continue;
                }
                match omega {
                    Some(o) => {
                        for a in 0..a_dim {
                            let pv = phi[ll * a_dim + a] * rv;
                            if pv == 0.0 {
                                continue;
                            }
                            for b in 0..b_dim {
                                out[rr * b_dim + b] += pv * o.at(a, dd, b);
                            }
                        }
                    }
                    None => out[rr] += phi[ll] * rv,
                }
            }
        }
    }
    out
}

/// Conditional distribution over the cluster states of `site`, given the
/// (row-major) prefix `partial` and reusing precomputed boundaries.
pub(crate) fn conditional_with_boundaries(
    net: &PepsNetwork,
    partial: &[u64],
    site: usize,
    boundaries: &[BoundaryMps],
) -> Result<Vec<f64>, TnError> {
    let sites = net.num_sites();
    if site >= sites {
        return Err(TnError::SiteOutOfRange { site, sites });
    }
    if partial.len() != site {
        return Err(TnError::SiteOutOfOrder {
            site,
            have: partial.len(),
        });
    }
    for (t, &cs) in partial.iter().enumerate() {
        let spins = net.cluster_sizes[t];
        if cs >> spins != 0 {
            return Err(TnError::ClusterStateOutOfRange { state: cs, spins });
        }
    }
    let cols = net.cols;
    let (row, col_t) = (site / cols, site % cols);

    // Row above the strip: each assigned site there collapses to the vector
    // of its down-leg values at its own (fixed) leg assignments. Rows even
    // further up multiply every branch by the same positive scalar, so they
    // drop out of the normalized result entirely — which is exactly the
    // locality statement for this conditional.
    let top: Vec<Vec<f64>> = if row == 0 {
        vec![vec![1.0]; cols]
    } else {
        let mut top = Vec::with_capacity(cols);
        for c in 0..cols {
            let above = (row - 1) * cols + c;
            let t = &net.tensors[above];
            let s_star = partial[above] as usize;
            let l_star = ClusterSite::interface_bits(partial[above], &net.left_iface[above]) as usize;
            let u_star = ClusterSite::interface_bits(partial[above], &net.up_iface[above]) as usize;
            let r_star = if c + 1 < cols {
                ClusterSite::interface_bits(partial[above + 1], &net.left_iface[above + 1]) as usize
            } else {
                0
            };
            let mut v: Vec<f64> = (0..t.d).map(|dd| t.at(s_star, l_star, r_star, u_star, dd)).collect();
            let m = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if !(m > 0.0) || !m.is_finite() {
                return Err(TnError::DegenerateNetwork);
            }
            for x in &mut v {
                *x /= m;
            }
            top.push(v);
        }
        top
    };

    let below = if row + 1 < net.rows {
        Some(&boundaries[row + 1].chain)
    } else {
        None
    };

    let phys_t = net.tensors[site].phys;
    // One running edge matrix before the target column, one per candidate
    // cluster state after it. The shared rescaling below keeps the relative
    // weights across candidates intact.
    let mut branches: Vec<Vec<f64>> = vec![vec![1.0]];
    for col in 0..cols {
        let s_idx = row * cols + col;
        let t = &net.tensors[s_idx];
        let omega = below.map(|c| &c.tensors[col]);
        let a_dim = omega.map_or(1, |o| o.left);
        if col == col_t {
            let base = std::mem::take(&mut branches[0]);
            branches = (0..phys_t)
                .map(|s| {
                    let r_mat = strip_tensor(t, &top[col], s..s + 1);
                    propagate(&base, t.l, a_dim, &r_mat, t.r, t.d, omega)
                })
                .collect();
        } else {
            let r_mat = if col < col_t {
                let s_star = partial[s_idx] as usize;
                strip_tensor(t, &top[col], s_star..s_star + 1)
            } else {
                strip_tensor(t, &top[col], 0..t.phys)
            };
            for phi in &mut branches {
                *phi = propagate(phi, t.l, a_dim, &r_mat, t.r, t.d, omega);
            }
        }
        let m = branches
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !(m > 0.0) || !m.is_finite() {
            return Err(TnError::DegenerateNetwork);
        }
        for b in &mut branches {
            for v in b.iter_mut() {
                *v /= m;
            }
        }
    }

    let mut raw: Vec<f64> = branches
        .iter()
        .map(|b| {
            debug_assert_eq!(b.len(), 1);
            // Truncated boundaries can produce slightly negative weights.
            b[0].max(0.0)
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(TnError::DegenerateNetwork);
    }
    for v in &mut raw {
        *v /= sum;
    }
    Ok(raw)
}

/// Conditional distribution over the cluster states of `site` given the
/// row-major prefix `partial`, contracting boundaries at bond dimension
/// `chi`. Equals the exact Boltzmann conditional whenever `chi` does not
/// bind.
pub fn conditional_probability(
    net: &PepsNetwork,
    partial: &[u64],
    site: usize,
    chi: usize,
) -> Result<Vec<f64>, TnError> {
    let boundaries = contract_boundary(net, chi)?;
    conditional_with_boundaries(net, partial, site, &boundaries)
}
