//! Reference enumerator: plain brute force, independent of the plan
//! interpreter, used as ground truth in equivalence tests.

use crate::graph::{DirectedGraph, PatternGraph, UndirectedGraph};
use crate::{Error, Result, VertexId};
use std::collections::BTreeSet;

const ORACLE_CAP: usize = 200;

/// Order-independent identity of a data subgraph. Two matches related by a
/// pattern automorphism canonicalize to the same value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalSubgraph {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<(VertexId, VertexId)>,
}

impl CanonicalSubgraph {
    pub fn from_match(p: &PatternGraph, f: &[VertexId]) -> Self {
        let mut vertices: Vec<VertexId> = f.to_vec();
        vertices.sort_unstable();
        vertices.dedup();
        let mut edges: Vec<(VertexId, VertexId)> = p
            .edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (f[a], f[b]);
                if p.directed {
                    (x, y)
                } else {
                    (x.min(y), x.max(y))
                }
            })
            .collect();
        edges.sort_unstable();
        CanonicalSubgraph { vertices, edges }
    }
}

impl std::fmt::Display for CanonicalSubgraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let edges: Vec<String> =
            self.edges.iter().map(|&(a, b)| format!("{a}-{b}")).collect();
        write!(f, "{}", edges.join(" "))
    }
}

enum AdjView<'a> {
    Undirected(&'a UndirectedGraph),
    Directed(&'a DirectedGraph),
}

impl AdjView<'_> {
    fn vertex_count(&self) -> usize {
        match self {
            AdjView::Undirected(g) => g.vertex_count(),
            AdjView::Directed(g) => g.vertex_count(),
        }
    }

    fn edge_ok(&self, src: VertexId, dst: VertexId) -> bool {
        match self {
            AdjView::Undirected(g) => g.has_edge(src, dst),
            AdjView::Directed(g) => g.has_arc(src, dst),
        }
    }
}

fn enumerate(p: &PatternGraph, g: &AdjView) -> Result<BTreeSet<CanonicalSubgraph>> {
    let n_data = g.vertex_count();
    if n_data > ORACLE_CAP {
        return Err(Error::OracleTooLarge { n: n_data, cap: ORACLE_CAP });
    }
    let mut found = BTreeSet::new();
    let mut assign: Vec<VertexId> = Vec::with_capacity(p.n);
    let mut used = vec![false; n_data];
    extend(p, g, &mut assign, &mut used, &mut found);
    Ok(found)
}

fn extend(
    p: &PatternGraph,
    g: &AdjView,
    assign: &mut Vec<VertexId>,
    used: &mut Vec<bool>,
    found: &mut BTreeSet<CanonicalSubgraph>,
) {
    let slot = assign.len();
    if slot == p.n {
        found.insert(CanonicalSubgraph::from_match(p, assign));
        return;
    }
    'cand: for cand in 0..g.vertex_count() as VertexId {
        if used[cand as usize] {
            continue;
        }
        for &(a, b) in &p.edges {
            let (x, y) = if a == slot && b < slot {
                (cand, assign[b])
            } else if b == slot && a < slot {
                (assign[a], cand)
            } else {
                continue;
            };
            if !g.edge_ok(x, y) {
                continue 'cand;
            }
        }
        assign.push(cand);
        used[cand as usize] = true;
        extend(p, g, assign, used, found);
        used[cand as usize] = false;
        assign.pop();
    }
}

pub fn brute_force_enumerate(
    p: &PatternGraph,
    g: &UndirectedGraph,
) -> Result<BTreeSet<CanonicalSubgraph>> {
    enumerate(p, &AdjView::Undirected(g))
}

pub fn brute_force_enumerate_directed(
    p: &PatternGraph,
    g: &DirectedGraph,
) -> Result<BTreeSet<CanonicalSubgraph>> {
    enumerate(p, &AdjView::Directed(g))
}

/// Appearing and disappearing subgraphs between consecutive snapshots.
pub fn brute_force_incremental(
    p: &PatternGraph,
    prev: &DirectedGraph,
    cur: &DirectedGraph,
) -> Result<(BTreeSet<CanonicalSubgraph>, BTreeSet<CanonicalSubgraph>)> {
    let before = brute_force_enumerate_directed(p, prev)?;
    let after = brute_force_enumerate_directed(p, cur)?;
    let appearing = after.difference(&before).cloned().collect();
    let disappearing = before.difference(&after).cloned().collect();
    Ok((appearing, disappearing))
}
