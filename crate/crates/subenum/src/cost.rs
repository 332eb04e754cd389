//! Matching-order selection: a cardinality model for partial patterns and a
//! pruned search over execution orders, scored by estimated communication
//! (adjacency transfers) with computation (intersection work) as tiebreak.

use crate::graph::PatternGraph;
use crate::plan::{compile_batch_plan, compile_incremental_plan, ExecutionPlan, Instruction, PipelineOpts};
use crate::{Error, Result};

/// Data-graph summary driving the estimates. `edges` counts unordered
/// adjacent pairs, also for directed graphs: partial patterns are estimated
/// on their undirected shape.
#[derive(Debug, Clone, Copy)]
pub struct GraphStats {
    pub vertices: u64,
    pub edges: u64,
}

impl GraphStats {
    pub fn new(vertices: u64, edges: u64) -> Self {
        GraphStats { vertices, edges }
    }

    pub fn of_undirected(g: &crate::graph::UndirectedGraph) -> Self {
        GraphStats { vertices: g.vertex_count() as u64, edges: g.edge_count() as u64 }
    }

    pub fn of_directed(g: &crate::graph::DirectedGraph) -> Self {
        let pairs: std::collections::HashSet<(u32, u32)> =
            g.arcs().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        GraphStats { vertices: g.vertex_count() as u64, edges: pairs.len() as u64 }
    }
}

/// Shape of a partial pattern: per connected component, its vertex and
/// (undirected, deduplicated) edge counts.
pub fn partial_shape(p: &PatternGraph, prefix: &[usize]) -> Vec<(usize, usize)> {
    let inside = |v: usize| prefix.contains(&v);
    let mut comp_of: Vec<Option<usize>> = vec![None; p.n];
    let mut comps: Vec<(usize, usize)> = Vec::new();
    for &root in prefix {
        if comp_of[root].is_some() {
            continue;
        }
        let id = comps.len();
        comps.push((0, 0));
        let mut stack = vec![root];
        comp_of[root] = Some(id);
        while let Some(v) = stack.pop() {
            comps[id].0 += 1;
            for w in p.neighbors(v) {
                if inside(w) && comp_of[w].is_none() {
                    comp_of[w] = Some(id);
                    stack.push(w);
                }
            }
        }
    }
    let mut pairs = std::collections::HashSet::new();
    for &(a, b) in &p.edges {
        if inside(a) && inside(b) {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    for (a, _) in pairs {
        comps[comp_of[a].unwrap()].1 += 1;
    }
    comps
}

pub trait CardinalityEstimator {
    /// Expected number of embeddings of a partial pattern with the given
    /// component shape into the summarized data graph.
    fn estimate(&self, shape: &[(usize, usize)], stats: &GraphStats) -> f64;
}

/// Uniform-random-graph model: a component with k vertices and l edges is
/// expected N(N-1)...(N-k+1) * p^l times, with p the pairwise density;
/// components contribute independently.
pub struct ErEstimator;

impl CardinalityEstimator for ErEstimator {
    fn estimate(&self, shape: &[(usize, usize)], stats: &GraphStats) -> f64 {
        let n = stats.vertices as f64;
        let p = if stats.vertices < 2 {
            0.0
        } else {
            2.0 * stats.edges as f64 / (n * (n - 1.0))
        };
        let mut total = 1.0;
        for &(k, l) in shape {
            let mut falling = 1.0;
            for i in 0..k {
                falling *= (n - i as f64).max(0.0);
            }
            total *= falling * p.powi(l as i32);
        }
        total
    }
}

/// Estimated adjacency transfers: a vertex whose neighbourhood is still
/// needed after it is bound triggers one fetch per partial match alive at
/// that point.
pub fn communication_cost(
    p: &PatternGraph,
    order: &[usize],
    stats: &GraphStats,
    est: &dyn CardinalityEstimator,
) -> f64 {
    let mut cost = 0.0;
    for (i, &u) in order.iter().enumerate() {
        if order[i + 1..].iter().any(|&w| p.adjacent(w, u)) {
            cost += est.estimate(&partial_shape(p, &order[..=i]), stats);
        }
    }
    cost
}

/// Estimated intersection work of a concrete plan: each set operation runs
/// once per partial match alive where it sits in the instruction stream.
pub fn computation_cost(
    p: &PatternGraph,
    plan: &ExecutionPlan,
    stats: &GraphStats,
    est: &dyn CardinalityEstimator,
) -> f64 {
    let mut bound = 0usize;
    let mut cur = 0.0;
    let mut cost = 0.0;
    for inst in &plan.instructions {
        match inst {
            Instruction::Init { .. }
            | Instruction::Foreach { .. }
            | Instruction::ForeachDelta { .. } => {
                bound += 1;
                cur = est.estimate(&partial_shape(p, &plan.order[..bound]), stats);
            }
            Instruction::Intersect { .. } | Instruction::TriangleCache { .. } => cost += cur,
            _ => {}
        }
    }
    cost
}

const REL_TOL: f64 = 1e-9;

fn beyond(a: f64, b: f64) -> bool {
    a > b + REL_TOL * b.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SearchStats {
    /// Complete orders the pruned search actually reached.
    pub complete_orders: u64,
    /// Orders an exhaustive search would visit.
    pub total_orders: u64,
}

impl SearchStats {
    pub fn explored_fraction(&self) -> f64 {
        if self.total_orders == 0 {
            0.0
        } else {
            self.complete_orders as f64 / self.total_orders as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub order: Vec<usize>,
    pub comm_cost: f64,
    pub comp_cost: f64,
    pub stats: SearchStats,
}

/// Interchangeability of two pattern vertices: identical neighbourhoods once
/// the mutual edge is set aside. Directed patterns compare both sides.
fn interchangeable(p: &PatternGraph, u: usize, w: usize) -> bool {
    if p.directed {
        let mutual_ok = p.has_arc(u, w) == p.has_arc(w, u);
        mutual_ok
            && (0..p.n).filter(|&x| x != u && x != w).all(|x| {
                p.has_arc(u, x) == p.has_arc(w, x) && p.has_arc(x, u) == p.has_arc(x, w)
            })
    } else {
        (0..p.n)
            .filter(|&x| x != u && x != w)
            .all(|x| p.adjacent(u, x) == p.adjacent(w, x))
    }
}

struct Search<'a> {
    p: &'a PatternGraph,
    stats: &'a GraphStats,
    est: &'a dyn CardinalityEstimator,
    best: f64,
    candidates: Vec<Vec<usize>>,
    complete: u64,
}

impl Search<'_> {
    fn run(&mut self, prefix: &mut Vec<usize>, unchosen: &mut Vec<usize>, acc: f64) {
        if unchosen.is_empty() {
            self.complete += 1;
            if beyond(self.best, acc) {
                self.best = acc;
                self.candidates.clear();
            }
            if !beyond(acc, self.best) {
                self.candidates.push(prefix.clone());
            }
            return;
        }
        for idx in 0..unchosen.len() {
            let u = unchosen[idx];
            // A smaller-indexed interchangeable vertex still unchosen will
            // produce the mirror-image order; search that one instead.
            if unchosen.iter().any(|&w| w < u && interchangeable(self.p, u, w)) {
                continue;
            }
            prefix.push(u);
            unchosen.remove(idx);
            let needed = unchosen.iter().any(|&w| self.p.adjacent(w, u));
            let step =
                if needed { self.est.estimate(&partial_shape(self.p, prefix), self.stats) } else { 0.0 };
            let acc2 = acc + step;
            if !beyond(acc2, self.best) {
                self.run(prefix, unchosen, acc2);
            }
            unchosen.insert(idx, u);
            prefix.pop();
        }
    }
}

fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

fn prime_cost(
    p: &PatternGraph,
    prefix: &[usize],
    stats: &GraphStats,
    est: &dyn CardinalityEstimator,
) -> f64 {
    let mut acc = 0.0;
    for (i, &u) in prefix.iter().enumerate() {
        let later = (0..p.n).filter(|v| !prefix[..=i].contains(v)).any(|w| p.adjacent(w, u));
        if later {
            acc += est.estimate(&partial_shape(p, &prefix[..=i]), stats);
        }
    }
    acc
}

fn search_orders(
    p: &PatternGraph,
    fixed: &[usize],
    stats: &GraphStats,
    est: &dyn CardinalityEstimator,
) -> (Vec<Vec<usize>>, f64, SearchStats) {
    let mut prefix = fixed.to_vec();
    let mut unchosen: Vec<usize> = (0..p.n).filter(|v| !fixed.contains(v)).collect();
    let mut search =
        Search { p, stats, est, best: f64::INFINITY, candidates: Vec::new(), complete: 0 };
    let primed = prime_cost(p, fixed, stats, est);
    search.run(&mut prefix, &mut unchosen, primed);
    let stats = SearchStats {
        complete_orders: search.complete,
        total_orders: factorial(p.n - fixed.len()),
    };
    (search.candidates, search.best, stats)
}

/// Cheapest batch order under the model: minimum estimated communication,
/// ties broken by the computation cost of the fully optimized plan, then
/// lexicographically.
pub fn best_batch_order(
    p: &PatternGraph,
    stats: &GraphStats,
    est: &dyn CardinalityEstimator,
) -> Result<SearchOutcome> {
    let (candidates, comm, sstats) = search_orders(p, &[], stats, est);
    pick_candidate(p, candidates, comm, sstats, stats, est, None)
}

/// Cheapest order for the incremental plan of `delta_edge`: its endpoints
/// are pinned to the first two slots.
pub fn best_incremental_order(
    p: &PatternGraph,
    delta_edge: usize,
    stats: &GraphStats,
    est: &dyn CardinalityEstimator,
) -> Result<SearchOutcome> {
    if delta_edge == 0 || delta_edge > p.edges.len() {
        return Err(Error::InvalidPlan(format!("delta edge e{delta_edge} out of range")));
    }
    let (s, t) = p.edges[delta_edge - 1];
    let (candidates, comm, sstats) = search_orders(p, &[s, t], stats, est);
    pick_candidate(p, candidates, comm, sstats, stats, est, Some(delta_edge))
}

fn pick_candidate(
    p: &PatternGraph,
    candidates: Vec<Vec<usize>>,
    comm: f64,
    sstats: SearchStats,
    stats: &GraphStats,
    est: &dyn CardinalityEstimator,
    delta_edge: Option<usize>,
) -> Result<SearchOutcome> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for order in candidates {
        let plan = match delta_edge {
            None => compile_batch_plan(p, &order, PipelineOpts::default())?,
            Some(i) => compile_incremental_plan(p, i, &order)?,
        };
        let comp = computation_cost(p, &plan, stats, est);
        let better = match &best {
            None => true,
            Some((c, o)) => beyond(*c, comp) || (!beyond(comp, *c) && order < *o),
        };
        if better {
            best = Some((comp, order));
        }
    }
    let (comp_cost, order) =
        best.ok_or_else(|| Error::InvalidOrder("search found no complete order".into()))?;
    Ok(SearchOutcome { order, comm_cost: comm, comp_cost, stats: sstats })
}

/// Unpruned reference: minimum communication cost over every completion of
/// `fixed`. Exponential; intended for small patterns in tests.
pub fn exhaustive_min_comm(
    p: &PatternGraph,
    fixed: &[usize],
    stats: &GraphStats,
    est: &dyn CardinalityEstimator,
) -> f64 {
    fn rec(
        p: &PatternGraph,
        prefix: &mut Vec<usize>,
        unchosen: &mut Vec<usize>,
        stats: &GraphStats,
        est: &dyn CardinalityEstimator,
        min: &mut f64,
    ) {
        if unchosen.is_empty() {
            let c = communication_cost(p, prefix, stats, est);
            if c < *min {
                *min = c;
            }
            return;
        }
        for idx in 0..unchosen.len() {
            let u = unchosen.remove(idx);
            prefix.push(u);
            rec(p, prefix, unchosen, stats, est, min);
            prefix.pop();
            unchosen.insert(idx, u);
        }
    }
    let mut prefix = fixed.to_vec();
    let mut unchosen: Vec<usize> = (0..p.n).filter(|v| !fixed.contains(v)).collect();
    let mut min = f64::INFINITY;
    rec(p, &mut prefix, &mut unchosen, stats, est, &mut min);
    min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{self, demo};
    use crate::plan::generate_raw_plan;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn er_component_estimates() {
        let stats = GraphStats::new(8, 13);
        let est = ErEstimator;
        // One bound vertex: N. One edge: N(N-1)p = 2M.
        assert!(close(est.estimate(&[(1, 0)], &stats), 8.0));
        assert!(close(est.estimate(&[(2, 1)], &stats), 26.0));
        // Two isolated vertices multiply.
        assert!(close(est.estimate(&[(1, 0), (1, 0)], &stats), 64.0));
        // Triangles: N(N-1)(N-2) p^3.
        let p = 26.0 / 56.0;
        assert!(close(est.estimate(&[(3, 3)], &stats), 336.0 * p * p * p));
        // More vertices than the graph has: impossible.
        assert_eq!(est.estimate(&[(9, 8)], &GraphStats::new(8, 13)), 0.0);
    }

    #[test]
    fn partial_shapes_split_components() {
        let p = demo::fan_pattern();
        assert_eq!(partial_shape(&p, &[0]), vec![(1, 0)]);
        // Rim vertices u2 and u5 are not adjacent: two singletons.
        let mut shape = partial_shape(&p, &[1, 4]);
        shape.sort();
        assert_eq!(shape, vec![(1, 0), (1, 0)]);
        // Hub joins them.
        assert_eq!(partial_shape(&p, &[1, 4, 0]).len(), 1);
        assert_eq!(partial_shape(&p, &[1, 4, 0]), vec![(3, 2)]);
    }

    #[test]
    fn path_prefers_the_centre_first() {
        let p = crate::graph::PatternGraph::new(3, vec![(0, 1), (1, 2)], false).unwrap();
        let stats = GraphStats::new(100, 300);
        let out = best_batch_order(&p, &stats, &ErEstimator).unwrap();
        assert_eq!(out.order, vec![1, 0, 2]);
        assert!(close(out.comm_cost, 100.0));
    }

    #[test]
    fn triangle_search_prunes_to_one_order() {
        let p = demo::triangle_pattern();
        let stats = GraphStats::new(50, 120);
        let out = best_batch_order(&p, &stats, &ErEstimator).unwrap();
        assert_eq!(out.order, vec![0, 1, 2]);
        // All three vertices are interchangeable: one complete order visited.
        assert_eq!(out.stats.complete_orders, 1);
        assert_eq!(out.stats.total_orders, 6);
        assert!(close(out.comm_cost, 50.0 + 2.0 * 120.0));
    }

    #[test]
    fn pruned_matches_exhaustive_minimum() {
        let stats = GraphStats::new(40, 120);
        for p in gen::connected_patterns(5) {
            let out = best_batch_order(&p, &stats, &ErEstimator).unwrap();
            let min = exhaustive_min_comm(&p, &[], &stats, &ErEstimator);
            assert!(close(out.comm_cost, min), "pattern n={} comm {} vs {}", p.n, out.comm_cost, min);
            assert!(out.stats.complete_orders <= out.stats.total_orders);
        }
    }

    #[test]
    fn reordering_lowers_modelled_computation() {
        let p = demo::fan_pattern();
        let stats = GraphStats::new(8, 13);
        let raw = generate_raw_plan(&p, &[0, 2, 4, 1, 5, 3], &Default::default()).unwrap();
        let opt = compile_batch_plan(&p, &[0, 2, 4, 1, 5, 3], PipelineOpts::default()).unwrap();
        let raw_cost = computation_cost(&p, &raw, &stats, &ErEstimator);
        let opt_cost = computation_cost(&p, &opt, &stats, &ErEstimator);
        assert!(opt_cost < raw_cost, "hoisted intersections run at smaller multiplicity");
    }

    #[test]
    fn incremental_search_pins_the_delta_endpoints() {
        let p = demo::stream_triangle_pattern();
        let stats = GraphStats::new(8, 9);
        for e in 1..=3 {
            let out = best_incremental_order(&p, e, &stats, &ErEstimator).unwrap();
            let (s, t) = p.edges[e - 1];
            assert_eq!(&out.order[..2], &[s, t]);
            let min = exhaustive_min_comm(&p, &[s, t], &stats, &ErEstimator);
            assert!(close(out.comm_cost, min));
        }
    }
}
