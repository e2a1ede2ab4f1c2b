//! Hardware working graphs.
//!
//! The Chimera family is generated in full: an `n × n` grid of complete
//! bipartite `K_{4,4}` unit cells whose shores are stitched to the
//! neighboring cells.  The newer Pegasus and Zephyr families are provided
//! as node sets with their published counts; their edge sets are loaded
//! from files rather than generated (the devices ship yield-reduced graphs
//! anyway, so real work starts from an edge list regardless).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::TopoError;

/// Qubits per shore in a Chimera unit cell.
const SHORE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Chimera,
    Pegasus,
    Zephyr,
    Custom,
}

/// A simple undirected graph over `usize` node ids.
///
/// Node ids need not be contiguous: a working graph loaded from a real
/// device is a generated topology with failed qubits and couplers removed.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingGraph {
    kind: TopologyKind,
    nodes: BTreeSet<usize>,
    adjacency: BTreeMap<usize, BTreeSet<usize>>,
    num_edges: usize,
}

impl WorkingGraph {
    fn new(kind: TopologyKind) -> Self {
        WorkingGraph {
            kind,
            nodes: BTreeSet::new(),
            adjacency: BTreeMap::new(),
            num_edges: 0,
        }
    }

    fn add_node(&mut self, v: usize) {
        self.nodes.insert(v);
    }

    /// Insert an edge, ignoring duplicates. Self-loops are a programming
    /// error here; the parser rejects them with a line number instead.
    fn add_edge(&mut self, a: usize, b: usize) {
        debug_assert_ne!(a, b);
        self.nodes.insert(a);
        self.nodes.insert(b);
        if self.adjacency.entry(a).or_default().insert(b) {
            self.adjacency.entry(b).or_default().insert(a);
            self.num_edges += 1;
        }
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn has_node(&self, v: usize) -> bool {
        self.nodes.contains(&v)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency.get(&a).is_some_and(|s| s.contains(&b))
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().copied()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency
            .get(&v)
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency.get(&v).map_or(0, |s| s.len())
    }

    /// All edges as `(a, b)` pairs with `a < b`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&a, nbrs)| nbrs.iter().copied().filter_map(move |b| (a < b).then_some((a, b))))
    }

    /// Render as an edge-list file body, one `u v` line per edge.
    ///
    /// Isolated nodes have no representation in the format, so a graph
    /// survives a dump/reload round trip exactly when it has none.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (a, b) in self.edges() {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }
}

/// Nodes of the `n × n` Chimera graph: `8 n²`.
pub fn chimera_node_count(n: usize) -> usize {
    8 * n * n
}

/// Edges of the full-yield `n × n` Chimera graph: `16 n² + 8 n (n − 1)`.
pub fn chimera_edge_count(n: usize) -> usize {
    16 * n * n + 8 * n * (n - 1)
}

/// Node id of the qubit at (row `r`, column `c`, shore `u`, in-shore
/// index `k`): `8 (r n + c) + 4 u + k`.
pub fn chimera_index(n: usize, r: usize, c: usize, u: usize, k: usize) -> Result<usize, TopoError> {
    if r >= n || c >= n || u >= 2 || k >= SHORE {
        return Err(TopoError::BadCoordinate { r, c, u, k });
    }
    Ok(8 * (r * n + c) + SHORE * u + k)
}

/// Inverse of [`chimera_index`]: `(row, column, shore, in-shore index)`.
pub fn chimera_coordinates(n: usize, id: usize) -> Result<(usize, usize, usize, usize), TopoError> {
    if id >= chimera_node_count(n) {
        return Err(TopoError::BadNodeId { id, n });
    }
    let cell = id / 8;
    let within = id % 8;
    Ok((cell / n, cell % n, within / SHORE, within % SHORE))
}

/// The full-yield `n × n` Chimera graph.
///
/// Each unit cell is a complete bipartite `K_{4,4}`; shore-0 qubits couple
/// to the same in-shore index in the cell below, shore-1 qubits to the
/// same index in the cell to the right.
pub fn chimera(n: usize) -> Result<WorkingGraph, TopoError> {
    if n == 0 {
        return Err(TopoError::BadSize);
    }
    let mut g = WorkingGraph::new(TopologyKind::Chimera);
    for id in 0..chimera_node_count(n) {
        g.add_node(id);
    }
    let idx = |r, c, u, k| chimera_index(n, r, c, u, k).expect("in-range by construction");
    for r in 0..n {
        for c in 0..n {
            for k0 in 0..SHORE {
                for k1 in 0..SHORE {
                    g.add_edge(idx(r, c, 0, k0), idx(r, c, 1, k1));
                }
            }
            for k in 0..SHORE {
                if r + 1 < n {
                    g.add_edge(idx(r, c, 0, k), idx(r + 1, c, 0, k));
                }
                if c + 1 < n {
                    g.add_edge(idx(r, c, 1, k), idx(r, c + 1, 1, k));
                }
            }
        }
    }
    Ok(g)
}

/// Explicit two-coloring witnessing that Chimera graphs are bipartite:
/// `color[id] = (u + r + c) mod 2`.
///
/// Internal couplers flip `u`, external couplers flip exactly one of
/// `r`, `c`, so every edge is bichromatic.
pub fn chimera_two_coloring(n: usize) -> Vec<u8> {
    (0..chimera_node_count(n))
        .map(|id| {
            let (r, c, u, _) = chimera_coordinates(n, id).expect("id in range");
            ((u + r + c) % 2) as u8
        })
        .collect()
}

/// Nodes of the `n × n` Pegasus graph: `24 n (n − 1)`.
///
/// Note the full-yield formula gives 5760 for `n = 16`, while shipped
/// device tables are sometimes quoted with fewer qubits (5640 is a common
/// figure) — published counts differ between sources because real chips
/// lose qubits to fabrication yield.
pub fn pegasus_node_count(n: usize) -> usize {
    24 * n * (n - 1)
}

/// Nodes of the size-`n` Zephyr graph: `16 n (2 n + 1)`.
pub fn zephyr_node_count(n: usize) -> usize {
    16 * n * (2 * n + 1)
}

/// Pegasus node set (edges are loaded from files, not generated).
pub fn pegasus(n: usize) -> Result<WorkingGraph, TopoError> {
    if n == 0 {
        return Err(TopoError::BadSize);
    }
    let mut g = WorkingGraph::new(TopologyKind::Pegasus);
    for id in 0..pegasus_node_count(n) {
        g.add_node(id);
    }
    Ok(g)
}

/// Zephyr node set (edges are loaded from files, not generated).
pub fn zephyr(n: usize) -> Result<WorkingGraph, TopoError> {
    if n == 0 {
        return Err(TopoError::BadSize);
    }
    let mut g = WorkingGraph::new(TopologyKind::Zephyr);
    for id in 0..zephyr_node_count(n) {
        g.add_node(id);
    }
    Ok(g)
}

/// Generate a named topology of size `n`.
pub fn generate_topology(kind: TopologyKind, n: usize) -> Result<WorkingGraph, TopoError> {
    match kind {
        TopologyKind::Chimera => chimera(n),
        TopologyKind::Pegasus => pegasus(n),
        TopologyKind::Zephyr => zephyr(n),
        TopologyKind::Custom => Err(TopoError::UnsupportedKind),
    }
}

/// Parse an edge-list file body: one `u v` pair of node ids per line.
///
/// Blank lines and `#` comments are skipped.  Self-loops and duplicate
/// edges (in either order) are rejected — a working graph is simple.
pub fn parse_edge_list(text: &str) -> Result<WorkingGraph, TopoError> {
    let mut g = WorkingGraph::new(TopologyKind::Custom);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut parts = body.split_whitespace();
        let mut node = || -> Result<usize, TopoError> {
            parts
                .next()
                .and_then(|t| t.parse::<usize>().ok())
                .ok_or_else(|| TopoError::ParseEdge {
                    line,
                    got: body.to_string(),
                })
        };
        let u = node()?;
        let v = node()?;
        if parts.next().is_some() {
            return Err(TopoError::ParseEdge {
                line,
                got: body.to_string(),
            });
        }
        if u == v {
            return Err(TopoError::SelfLoop { line, node: u });
        }
        if g.has_edge(u, v) {
            let (u, v) = if u < v { (u, v) } else { (v, u) };
            return Err(TopoError::DuplicateEdge { line, u, v });
        }
        g.add_edge(u, v);
    }
    Ok(g)
}

/// Load a working graph from an edge-list file.
pub fn load_working_graph(path: impl AsRef<Path>) -> Result<WorkingGraph, TopoError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| TopoError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_edge_list(&text)
}

/// Check a declared Chimera-subgraph witness: `witness` must injectively
/// map every node of the full `n × n` Chimera graph onto nodes of `g` such
/// that every Chimera edge has an image edge in `g`.
///
/// Larger-topology files (Pegasus, Zephyr) ship with such witnesses; this
/// verifies the claim without any subgraph search.
pub fn verify_chimera_witness(
    g: &WorkingGraph,
    n: usize,
    witness: &BTreeMap<usize, usize>,
) -> Result<(), TopoError> {
    if n == 0 {
        return Err(TopoError::BadSize);
    }
    let mut seen = BTreeSet::new();
    for node in 0..chimera_node_count(n) {
        let &image = witness
            .get(&node)
            .ok_or(TopoError::WitnessMissingNode { node })?;
        if !seen.insert(image) {
            return Err(TopoError::WitnessNotInjective { qubit: image });
        }
    }
    for (a, b) in chimera(n)?.edges() {
        let (ia, ib) = (witness[&a], witness[&b]);
        if !g.has_edge(ia, ib) {
            return Err(TopoError::WitnessMissingEdge {
                a,
                b,
                image_a: ia,
                image_b: ib,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chimera_counts_match_the_closed_formulas() {
        for n in [1usize, 2, 3, 16] {
            let g = chimera(n).unwrap();
            assert_eq!(g.num_nodes(), chimera_node_count(n), "nodes at n={n}");
            assert_eq!(g.num_edges(), chimera_edge_count(n), "edges at n={n}");
        }
        let c1 = chimera(1).unwrap();
        assert_eq!((c1.num_nodes(), c1.num_edges()), (8, 16));
        let c16 = chimera(16).unwrap();
        assert_eq!((c16.num_nodes(), c16.num_edges()), (2048, 6016));
        assert_eq!(chimera(0).unwrap_err(), TopoError::BadSize);
    }

    #[test]
    fn unit_cells_are_complete_bipartite() {
        let n = 2;
        let g = chimera(n).unwrap();
        for r in 0..n {
            for c in 0..n {
                for k0 in 0..4 {
                    for k1 in 0..4 {
                        let a = chimera_index(n, r, c, 0, k0).unwrap();
                        let b = chimera_index(n, r, c, 1, k1).unwrap();
                        assert!(g.has_edge(a, b), "missing internal ({a}, {b})");
                    }
                    for k1 in 0..4 {
                        if k0 != k1 {
                            let a = chimera_index(n, r, c, 0, k0).unwrap();
                            let b = chimera_index(n, r, c, 0, k1).unwrap();
                            assert!(!g.has_edge(a, b), "intra-shore edge ({a}, {b})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn external_couplers_connect_like_shores() {
        let n = 3;
        let g = chimera(n).unwrap();
        for k in 0..4 {
            assert!(g.has_edge(
                chimera_index(n, 0, 1, 0, k).unwrap(),
                chimera_index(n, 1, 1, 0, k).unwrap()
            ));
            assert!(g.has_edge(
                chimera_index(n, 1, 0, 1, k).unwrap(),
                chimera_index(n, 1, 1, 1, k).unwrap()
            ));
            // Shore 0 never couples sideways, shore 1 never couples down.
            assert!(!g.has_edge(
                chimera_index(n, 0, 0, 0, k).unwrap(),
                chimera_index(n, 0, 1, 0, k).unwrap()
            ));
            assert!(!g.has_edge(
                chimera_index(n, 0, 0, 1, k).unwrap(),
                chimera_index(n, 1, 0, 1, k).unwrap()
            ));
        }
        // Corner qubits reach one neighbor cell, central qubits two.
        assert_eq!(g.degree(chimera_index(n, 0, 0, 0, 2).unwrap()), 5);
        assert_eq!(g.degree(chimera_index(n, 1, 1, 0, 2).unwrap()), 6);
        assert_eq!(g.degree(chimera_index(n, 1, 1, 1, 2).unwrap()), 6);
    }

    #[test]
    fn the_index_map_is_a_bijection() {
        let n = 3;
        for id in 0..chimera_node_count(n) {
            let (r, c, u, k) = chimera_coordinates(n, id).unwrap();
            assert_eq!(chimera_index(n, r, c, u, k).unwrap(), id);
        }
        assert_eq!(
            chimera_coordinates(n, chimera_node_count(n)).unwrap_err(),
            TopoError::BadNodeId { id: 72, n }
        );
        assert_eq!(
            chimera_index(n, 0, 0, 2, 0).unwrap_err(),
            TopoError::BadCoordinate { r: 0, c: 0, u: 2, k: 0 }
        );
    }

    #[test]
    fn chimera_graphs_are_bipartite() {
        for n in 1..=8 {
            let g = chimera(n).unwrap();
            let color = chimera_two_coloring(n);
            for (a, b) in g.edges() {
                assert_ne!(color[a], color[b], "monochromatic edge ({a}, {b}) at n={n}");
            }
        }
    }

    #[test]
    fn pegasus_and_zephyr_ship_node_sets_only() {
        assert_eq!(pegasus_node_count(3), 144);
        assert_eq!(pegasus_node_count(16), 5760);
        assert_eq!(zephyr_node_count(3), 336);
        assert_eq!(zephyr_node_count(15), 7440);

        let p = pegasus(3).unwrap();
        assert_eq!((p.num_nodes(), p.num_edges()), (144, 0));
        assert_eq!(p.kind(), TopologyKind::Pegasus);
        let z = zephyr(15).unwrap();
        assert_eq!((z.num_nodes(), z.num_edges()), (7440, 0));
        assert_eq!(
            generate_topology(TopologyKind::Zephyr, 15).unwrap(),
            z
        );
        assert_eq!(
            generate_topology(TopologyKind::Custom, 1).unwrap_err(),
            TopoError::UnsupportedKind
        );
    }

    #[test]
    fn a_triangle_parses_into_three_nodes_and_edges() {
        let g = parse_edge_list("# a triangle\n0 1\n1 2\n\n0 2\n").unwrap();
        assert_eq!((g.num_nodes(), g.num_edges()), (3, 3));
        assert_eq!(g.kind(), TopologyKind::Custom);
        assert!(g.has_edge(2, 0), "edges are undirected");
        assert_eq!(g.neighbors(1).collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn malformed_lines_are_rejected_with_their_line_number() {
        assert_eq!(
            parse_edge_list("0 1\n3 3\n").unwrap_err(),
            TopoError::SelfLoop { line: 2, node: 3 }
        );
        assert_eq!(
            parse_edge_list("0 1\n1 2\n2 1\n").unwrap_err(),
            TopoError::DuplicateEdge { line: 3, u: 1, v: 2 }
        );
        assert_eq!(
            parse_edge_list("0 1 7\n").unwrap_err(),
            TopoError::ParseEdge {
                line: 1,
                got: "0 1 7".into()
            }
        );
        assert_eq!(
            parse_edge_list("0\n").unwrap_err(),
            TopoError::ParseEdge {
                line: 1,
                got: "0".into()
            }
        );
    }

    #[test]
    fn an_edge_list_dump_reloads_to_the_same_graph() {
        let g = chimera(2).unwrap();
        let reloaded = parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(
            g.nodes().collect::<Vec<_>>(),
            reloaded.nodes().collect::<Vec<_>>()
        );
        assert_eq!(
            g.edges().collect::<Vec<_>>(),
            reloaded.edges().collect::<Vec<_>>()
        );
    }

    #[test]
    fn witnesses_are_verified_edge_by_edge() {
        // A "bigger device" that happens to be chimera(2) shifted by 1000.
        let shifted = parse_edge_list(
            &chimera(2)
                .unwrap()
                .edges()
                .map(|(a, b)| format!("{} {}\n", a + 1000, b + 1000))
                .collect::<String>(),
        )
        .unwrap();
        let witness: BTreeMap<usize, usize> =
            (0..chimera_node_count(2)).map(|v| (v, v + 1000)).collect();
        verify_chimera_witness(&shifted, 2, &witness).unwrap();

        // Fails against a graph that lost one of the required couplers.
        let mut lines: Vec<String> = shifted
            .edges()
            .map(|(a, b)| format!("{a} {b}"))
            .collect();
        lines.retain(|l| l != "1000 1004");
        let damaged = parse_edge_list(&lines.join("\n")).unwrap();
        assert_eq!(
            verify_chimera_witness(&damaged, 2, &witness).unwrap_err(),
            TopoError::WitnessMissingEdge {
                a: 0,
                b: 4,
                image_a: 1000,
                image_b: 1004
            }
        );

        // And against one that is not injective.
        let mut squashed = witness.clone();
        squashed.insert(1, 1000 + 2);
        squashed.insert(2, 1000 + 2);
        assert_eq!(
            verify_chimera_witness(&shifted, 2, &squashed).unwrap_err(),
            TopoError::WitnessNotInjective { qubit: 1002 }
        );

        let mut partial = witness;
        partial.remove(&7);
        assert_eq!(
            verify_chimera_witness(&shifted, 2, &partial).unwrap_err(),
            TopoError::WitnessMissingNode { node: 7 }
        );
    }
}
