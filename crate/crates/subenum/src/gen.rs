//! Seeded generators for test corpora, plus the small fixtures shared by
//! unit tests and the command-line demo.

use crate::graph::{DirectedGraph, PatternGraph, UndirectedGraph};
use crate::{Sign, VertexId};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random graph with exactly `m` distinct undirected edges.
pub fn er_graph(n: usize, m: usize, seed: u64) -> UndirectedGraph {
    assert!(m <= n * n.saturating_sub(1) / 2, "too many edges for {n} vertices");
    let mut rng = rng(seed);
    let mut chosen = HashSet::new();
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let a = rng.gen_range(0..n as VertexId);
        let b = rng.gen_range(0..n as VertexId);
        if a == b {
            continue;
        }
        if chosen.insert((a.min(b), a.max(b))) {
            edges.push((a, b));
        }
    }
    UndirectedGraph::from_edges(n, &edges)
}

/// Uniform random digraph with exactly `m` distinct arcs.
pub fn er_digraph(n: usize, m: usize, seed: u64) -> DirectedGraph {
    assert!(m <= n * n.saturating_sub(1), "too many arcs for {n} vertices");
    let mut rng = rng(seed);
    let mut chosen = HashSet::new();
    let mut arcs = Vec::with_capacity(m);
    while arcs.len() < m {
        let a = rng.gen_range(0..n as VertexId);
        let b = rng.gen_range(0..n as VertexId);
        if a == b {
            continue;
        }
        if chosen.insert((a, b)) {
            arcs.push((a, b));
        }
    }
    DirectedGraph::from_edges(n, &arcs)
}

/// Star on vertex 0 plus `extra` random rim edges: one vertex with degree
/// n-1 while the rest stay small, for load-skew tests.
pub fn hub_graph(n: usize, extra: usize, seed: u64) -> UndirectedGraph {
    let mut rng = rng(seed);
    let mut chosen: HashSet<(VertexId, VertexId)> =
        (1..n as VertexId).map(|v| (0, v)).collect();
    let mut edges: Vec<(VertexId, VertexId)> = chosen.iter().copied().collect();
    edges.sort_unstable();
    let cap = n * n.saturating_sub(1) / 2;
    let target = (edges.len() + extra).min(cap);
    while edges.len() < target {
        let a = rng.gen_range(1..n as VertexId);
        let b = rng.gen_range(1..n as VertexId);
        if a == b {
            continue;
        }
        if chosen.insert((a.min(b), a.max(b))) {
            edges.push((a, b));
        }
    }
    UndirectedGraph::from_edges(n, &edges)
}

/// A consistent random update batch against `g`: distinct endpoint pairs,
/// deletions of present arcs, insertions of absent ones.
pub fn random_update_batch(
    g: &DirectedGraph,
    size: usize,
    rng: &mut impl Rng,
) -> Vec<(Sign, VertexId, VertexId)> {
    let n = g.vertex_count() as VertexId;
    let mut used: HashSet<(VertexId, VertexId)> = HashSet::new();
    let mut ops = Vec::with_capacity(size);
    let mut deletable: Vec<(VertexId, VertexId)> = g.arcs();
    deletable.shuffle(rng);
    while ops.len() < size {
        let delete = !deletable.is_empty() && rng.gen_bool(0.5);
        if delete {
            let (a, b) = deletable.pop().unwrap();
            if used.insert((a, b)) {
                ops.push((Sign::Minus, a, b));
            }
        } else {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b && !g.has_arc(a, b) && used.insert((a, b)) {
                ops.push((Sign::Plus, a, b));
            }
        }
    }
    ops
}

/// Every connected pattern with at most `max_n` vertices, one representative
/// per isomorphism class, without order constraints.
pub fn connected_patterns(max_n: usize) -> Vec<PatternGraph> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        let slots: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let mut seen = HashSet::new();
        for mask in 0u32..(1 << slots.len()) {
            let edges: Vec<(usize, usize)> = slots
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            let Ok(p) = PatternGraph::new(n, edges.clone(), false) else { continue };
            if seen.insert(canonical_code(n, &edges)) {
                out.push(p);
            }
        }
    }
    out
}

/// Minimal edge bitmask over all vertex relabelings.
fn canonical_code(n: usize, edges: &[(usize, usize)]) -> u32 {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = u32::MAX;
    permute(&mut perm, 0, &mut |perm| {
        let mut code = 0u32;
        for &(a, b) in edges {
            let (x, y) = (perm[a].min(perm[b]), perm[a].max(perm[b]));
            let slot = (0..x).map(|i| n - 1 - i).sum::<usize>() + (y - x - 1);
            code |= 1 << slot;
        }
        best = best.min(code);
    });
    best
}

fn permute(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

/// Hand-sized fixtures: the 6-vertex fan pattern with its hub-and-rim
/// shape, an 8-vertex toy data graph, and a tiny directed stream history.
pub mod demo {
    use super::*;

    /// Hub vertex u1 joined to u2..u6, rim path u2-u3-u4-u5-u6.
    pub fn fan_pattern() -> PatternGraph {
        PatternGraph::new(
            6,
            vec![(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (1, 2), (2, 3), (3, 4), (4, 5)],
            false,
        )
        .unwrap()
        .with_computed_partial_order()
        .unwrap()
    }

    pub fn triangle_pattern() -> PatternGraph {
        PatternGraph::new(3, vec![(0, 1), (0, 2), (1, 2)], false).unwrap()
    }

    /// 8-vertex undirected graph with a few triangles and squares.
    pub fn toy_graph() -> UndirectedGraph {
        UndirectedGraph::from_edges(
            8,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (0, 6),
                (0, 7),
                (1, 2),
                (1, 6),
                (2, 3),
                (3, 4),
                (4, 7),
                (4, 5),
                (5, 6),
            ],
        )
    }

    /// Acyclic directed triangle: e1=u1->u2, e2=u1->u3, e3=u2->u3.
    pub fn stream_triangle_pattern() -> PatternGraph {
        PatternGraph::new(3, vec![(0, 1), (0, 2), (1, 2)], true).unwrap()
    }

    /// Initial arcs of the streaming walkthrough.
    pub fn stream_initial_graph() -> DirectedGraph {
        DirectedGraph::from_edges(
            8,
            &[
                (0, 4),
                (0, 5),
                (0, 6),
                (0, 7),
                (3, 0),
                (5, 0),
                (2, 3),
                (5, 3),
                (3, 4),
            ],
        )
    }

    /// Two update steps: a triangle appears, then partially dissolves while
    /// a new arc closes others.
    pub fn stream_steps() -> Vec<Vec<(Sign, VertexId, VertexId)>> {
        vec![
            vec![(Sign::Plus, 0, 1), (Sign::Plus, 0, 2), (Sign::Plus, 1, 2)],
            vec![(Sign::Minus, 0, 1), (Sign::Minus, 0, 2), (Sign::Plus, 0, 3)],
        ]
    }
}
