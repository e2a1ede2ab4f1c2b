//! Clustered rectangular lattices.
//!
//! A [`ClusterLattice`] takes an Ising instance whose interaction graph is
//! quasi-2D and groups its spins into clusters sitting on a `rows x cols`
//! grid. All couplings must then be either internal to one cluster or
//! connect two clusters that are nearest neighbours on the grid; that
//! locality is what makes the PEPS construction in [`crate::peps`] possible.

use crate::{TnError, MAX_CLUSTER_SPINS};
use spinglass_core::IsingInstance;

/// One parsed line of a cluster-map file: a lattice site and the spins
/// (0-based) assigned to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapEntry {
    pub row: usize,
    pub col: usize,
    pub spins: Vec<usize>,
}

/// Parse the cluster-map text format.
///
/// Each non-comment line reads `row col spin [spin ...]` with the row, the
/// column and every spin index 1-based, mirroring the instance file format.
/// Lines starting with `#` and blank lines are ignored.
pub fn parse_cluster_map(text: &str) -> Result<Vec<MapEntry>, TnError> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut fields = body.split_whitespace();
        let mut next_index = |what: &str| -> Result<usize, TnError> {
            let tok = fields.next().ok_or_else(|| TnError::MapParse {
                line,
                reason: format!("missing {what}"),
            })?;
            let value: usize = tok.parse().map_err(|_| TnError::MapParse {
                line,
                reason: format!("invalid {what} `{tok}`"),
            })?;
            if value == 0 {
                return Err(TnError::MapParse {
                    line,
                    reason: format!("{what} is 1-based, got 0"),
                });
            }
            Ok(value - 1)
        };
        let row = next_index("row")?;
        let col = next_index("column")?;
        let mut spins = Vec::new();
        loop {
            match next_index("spin index") {
                Ok(s) => spins.push(s),
                Err(TnError::MapParse { reason, .. }) if reason.starts_with("missing") => break,
                Err(e) => return Err(e),
            }
        }
        if spins.is_empty() {
            return Err(TnError::MapParse {
                line,
                reason: "a cluster needs at least one spin".into(),
            });
        }
        entries.push(MapEntry { row, col, spins });
    }
    Ok(entries)
}

/// A single cluster: its spins and the couplings it participates in,
/// re-indexed to cluster-local positions.
///
/// Local position `x` of a spin is its rank inside the sorted `spins` list;
/// a cluster configuration is a `u64` whose bit `x` is the value of local
/// spin `x` (set = +1).
#[derive(Debug, Clone)]
pub struct ClusterSite {
    /// Global spin indices held by this cluster, ascending.
    pub spins: Vec<usize>,
    /// Local fields, indexed by local position.
    pub fields: Vec<f64>,
    /// Couplings internal to the cluster, `(local, local, J)`.
    pub intra_edges: Vec<(usize, usize, f64)>,
    /// Couplings to the right neighbour, `(local here, local there, J)`.
    pub right_edges: Vec<(usize, usize, f64)>,
    /// Couplings to the neighbour below, `(local here, local there, J)`.
    pub down_edges: Vec<(usize, usize, f64)>,
    /// Local spins of *this* cluster that couple to the left neighbour,
    /// ascending. The left PEPS leg of this site enumerates their joint
    /// configurations.
    pub left_iface: Vec<usize>,
    /// Local spins of this cluster that couple to the neighbour above,
    /// ascending. The up PEPS leg enumerates their joint configurations.
    pub up_iface: Vec<usize>,
}

impl ClusterSite {
    /// Number of spins in the cluster.
    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// Energy of the intra-cluster Hamiltonian for cluster configuration
    /// `state` (bit x = local spin x, set bit = +1).
    pub fn intra_energy(&self, state: u64) -> f64 {
        let spin = |x: usize| -> f64 {
            if state >> x & 1 == 1 {
                1.0
            } else {
                -1.0
            }
        };
        let mut e = 0.0;
        for (a, b, j) in &self.intra_edges {
            e += j * spin(*a) * spin(*b);
        }
        for (x, h) in self.fields.iter().enumerate() {
            e += h * spin(x);
        }
        e
    }

    /// Project a cluster configuration onto an interface: bit `t` of the
    /// result is the value of `iface[t]` in `state`.
    pub fn interface_bits(state: u64, iface: &[usize]) -> u64 {
        let mut out = 0u64;
        for (t, &x) in iface.iter().enumerate() {
            out |= (state >> x & 1) << t;
        }
        out
    }
}

/// A rectangular lattice of clusters over an Ising instance.
#[derive(Debug, Clone)]
pub struct ClusterLattice {
    pub rows: usize,
    pub cols: usize,
    /// Clusters in row-major order (`site = row * cols + col`).
    pub sites: Vec<ClusterSite>,
    /// The underlying instance; exact energies are always computed from it.
    pub instance: IsingInstance,
}

impl ClusterLattice {
    /// Build a lattice from an instance and a cluster map.
    ///
    /// Validates that the clusters partition the spins exactly, that every
    /// grid cell carries exactly one cluster, that no cluster exceeds
    /// [`MAX_CLUSTER_SPINS`] spins and that every coupling is intra-cluster
    /// or between grid-adjacent clusters.
    pub fn new(instance: IsingInstance, entries: &[MapEntry]) -> Result<Self, TnError> {
        if entries.is_empty() {
            return Err(TnError::EmptyMap);
        }
        let rows = entries.iter().map(|e| e.row).max().unwrap() + 1;
        let cols = entries.iter().map(|e| e.col).max().unwrap() + 1;
        let n = instance.n;

        let mut grid: Vec<Option<Vec<usize>>> = vec![None; rows * cols];
        let mut owner: Vec<Option<usize>> = vec![None; n];
        for entry in entries {
            let site = entry.row * cols + entry.col;
            if grid[site].is_some() {
                return Err(TnError::DuplicateSite {
                    row: entry.row,
                    col: entry.col,
                });
            }
            if entry.spins.len() > MAX_CLUSTER_SPINS {
                return Err(TnError::ClusterTooLarge {
                    row: entry.row,
                    col: entry.col,
                    size: entry.spins.len(),
                    cap: MAX_CLUSTER_SPINS,
                });
            }
            let mut spins = entry.spins.clone();
            spins.sort_unstable();
            for &s in &spins {
                if s >= n {
                    return Err(TnError::Model(
                        spinglass_core::ModelError::IndexOutOfRange { index: s, n },
                    ));
                }
                if owner[s].replace(site).is_some() {
                    return Err(TnError::SpinReassigned { spin: s });
                }
            }
            grid[site] = Some(spins);
        }
        if let Some(spin) = owner.iter().position(Option::is_none) {
            return Err(TnError::SpinUnassigned { spin });
        }
        let mut sites = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let spins = grid[r * cols + c]
                    .take()
                    .ok_or(TnError::MissingSite { row: r, col: c })?;
                let fields = spins.iter().map(|&s| instance.field(s)).collect();
                sites.push(ClusterSite {
                    spins,
                    fields,
                    intra_edges: Vec::new(),
                    right_edges: Vec::new(),
                    down_edges: Vec::new(),
                    left_iface: Vec::new(),
                    up_iface: Vec::new(),
                });
            }
        }

        // Local position of each spin within its owning cluster.
        let mut local: Vec<usize> = vec![0; n];
        for site in &sites {
            for (x, &s) in site.spins.iter().enumerate() {
                local[s] = x;
            }
        }
        let owner: Vec<usize> = owner.into_iter().map(Option::unwrap).collect();

        for (&(i, j), &coupling) in &instance.j {
            let (si, sj) = (owner[i], owner[j]);
            let (li, lj) = (local[i], local[j]);
            if si == sj {
                sites[si].intra_edges.push((li, lj, coupling));
                continue;
            }
            let (ri, ci) = (si / cols, si % cols);
            let (rj, cj) = (sj / cols, sj % cols);
            if ri == rj && ci + 1 == cj {
                sites[si].right_edges.push((li, lj, coupling));
            } else if ri == rj && cj + 1 == ci {
                sites[sj].right_edges.push((lj, li, coupling));
            } else if ci == cj && ri + 1 == rj {
                sites[si].down_edges.push((li, lj, coupling));
            } else if ci == cj && rj + 1 == ri {
                sites[sj].down_edges.push((lj, li, coupling));
            } else {
                return Err(TnError::NonAdjacentEdge { i, j });
            }
        }

        // Interfaces: the left interface of a site lists *its own* local
        // spins that appear on the right edges of the left neighbour, and
        // analogously for the up interface.
        for r in 0..rows {
            for c in 0..cols {
                let site = r * cols + c;
                if c > 0 {
                    let mut iface: Vec<usize> = sites[site - 1]
                        .right_edges
                        .iter()
                        .map(|&(_, there, _)| there)
                        .collect();
                    iface.sort_unstable();
                    iface.dedup();
                    sites[site].left_iface = iface;
                }
                if r > 0 {
                    let mut iface: Vec<usize> = sites[site - cols]
                        .down_edges
                        .iter()
                        .map(|&(_, there, _)| there)
                        .collect();
                    iface.sort_unstable();
                    iface.dedup();
                    sites[site].up_iface = iface;
                }
            }
        }

        Ok(ClusterLattice {
            rows,
            cols,
            sites,
            instance,
        })
    }

    /// Build a lattice directly from the cluster-map text format.
    pub fn from_map_text(instance: IsingInstance, text: &str) -> Result<Self, TnError> {
        let entries = parse_cluster_map(text)?;
        Self::new(instance, &entries)
    }

    /// Total number of lattice sites.
    pub fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    /// Assemble the packed global state word from per-site cluster
    /// configurations given in row-major site order.
    pub fn compose_state(&self, cluster_states: &[u64]) -> u64 {
        let mut word = 0u64;
        for (site, &cs) in cluster_states.iter().enumerate() {
            for (x, &s) in self.sites[site].spins.iter().enumerate() {
                word |= (cs >> x & 1) << s;
            }
        }
        word
    }
}
