//! Graph representations, vertex orders, and symmetry-breaking constraints.

use crate::{Error, Result, VertexId};
use std::collections::HashMap;
use std::fmt::Write as _;

/// Maps possibly sparse external vertex ids to the dense internal range 0..N.
#[derive(Debug, Clone, Default)]
pub struct IdMap {
    to_external: Vec<u64>,
    to_internal: HashMap<u64, VertexId>,
}

impl IdMap {
    pub fn identity(n: usize) -> Self {
        let to_external: Vec<u64> = (0..n as u64).collect();
        let to_internal = to_external.iter().map(|&x| (x, x as VertexId)).collect();
        IdMap { to_external, to_internal }
    }

    pub fn intern(&mut self, ext: u64) -> VertexId {
        *self.to_internal.entry(ext).or_insert_with(|| {
            self.to_external.push(ext);
            (self.to_external.len() - 1) as VertexId
        })
    }

    pub fn external(&self, v: VertexId) -> u64 {
        self.to_external[v as usize]
    }

    pub fn len(&self) -> usize {
        self.to_external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_external.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    adj: Vec<Vec<VertexId>>,
}

impl UndirectedGraph {
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                continue;
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        UndirectedGraph { adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list {
                if (u as VertexId) < v {
                    out.push((u as VertexId, v));
                }
            }
        }
        out
    }

    /// Induced subgraph on `keep` (unknown ids ignored). Result vertex i
    /// corresponds to the i-th id of the returned map.
    pub fn induced_subgraph(&self, keep: &[VertexId]) -> (UndirectedGraph, Vec<VertexId>) {
        let mut ids: Vec<VertexId> =
            keep.iter().copied().filter(|&v| (v as usize) < self.adj.len()).collect();
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<VertexId, VertexId> =
            ids.iter().enumerate().map(|(i, &v)| (v, i as VertexId)).collect();
        let mut edges = Vec::new();
        for &v in &ids {
            for &w in self.neighbors(v) {
                if v < w {
                    if let Some((&a, &b)) = index.get(&v).zip(index.get(&w)) {
                        edges.push((a, b));
                    }
                }
            }
        }
        (UndirectedGraph::from_edges(ids.len(), &edges), ids)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    out: Vec<Vec<VertexId>>,
    inn: Vec<Vec<VertexId>>,
}

impl DirectedGraph {
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Self {
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                continue;
            }
            out[u as usize].push(v);
            inn[v as usize].push(u);
        }
        for list in out.iter_mut().chain(inn.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        DirectedGraph { out, inn }
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn arc_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn out_neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.out[v as usize]
    }

    pub fn in_neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.inn[v as usize]
    }

    pub fn has_arc(&self, u: VertexId, v: VertexId) -> bool {
        self.out[u as usize].binary_search(&v).is_ok()
    }

    pub fn arcs(&self) -> Vec<(VertexId, VertexId)> {
        let mut a = Vec::with_capacity(self.arc_count());
        for (u, list) in self.out.iter().enumerate() {
            for &v in list {
                a.push((u as VertexId, v));
            }
        }
        a
    }
}

fn parse_pairs(text: &str) -> Result<Vec<(u64, u64)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (a, b) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected \"src dst\", got {line:?}"),
                })
            }
        };
        let parse = |tok: &str| {
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad vertex id {tok:?}"),
            })
        };
        pairs.push((parse(a)?, parse(b)?));
    }
    Ok(pairs)
}

/// Parses "src dst" lines into a graph, densely renumbering sparse ids.
/// Duplicates collapse, self-loops drop, undirected input is symmetrized.
pub fn load_undirected_edge_list(text: &str) -> Result<(UndirectedGraph, IdMap)> {
    let pairs = parse_pairs(text)?;
    let mut map = IdMap::default();
    let edges: Vec<(VertexId, VertexId)> =
        pairs.iter().map(|&(a, b)| (map.intern(a), map.intern(b))).collect();
    let g = UndirectedGraph::from_edges(map.len(), &edges);
    Ok((g, map))
}

pub fn load_directed_edge_list(text: &str) -> Result<(DirectedGraph, IdMap)> {
    let pairs = parse_pairs(text)?;
    let mut map = IdMap::default();
    let edges: Vec<(VertexId, VertexId)> =
        pairs.iter().map(|&(a, b)| (map.intern(a), map.intern(b))).collect();
    let g = DirectedGraph::from_edges(map.len(), &edges);
    Ok((g, map))
}

/// Pattern vertices are 0-based internally (u₁ in surface formats is vertex 0).
/// Edge k of `edges` is e_{k+1}; streaming semantics depend on this numbering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub directed: bool,
    pub partial_order: Vec<(usize, usize)>,
}

impl PatternGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>, directed: bool) -> Result<Self> {
        let p = PatternGraph { n, edges, directed, partial_order: Vec::new() };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidPattern("pattern needs at least one vertex".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &self.edges {
            if u >= self.n || v >= self.n {
                return Err(Error::InvalidPattern(format!(
                    "edge ({},{}) out of range for n={}",
                    u + 1,
                    v + 1,
                    self.n
                )));
            }
            if u == v {
                return Err(Error::InvalidPattern("self-loops are not allowed".into()));
            }
            let key = if self.directed { (u, v) } else { (u.min(v), u.max(v)) };
            if !seen.insert(key) {
                return Err(Error::InvalidPattern(format!(
                    "duplicate edge ({},{})",
                    u + 1,
                    v + 1
                )));
            }
        }
        if !self.is_connected() {
            return Err(Error::InvalidPattern("pattern must be connected".into()));
        }
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors ignoring direction, sorted ascending.
    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == u {
                    Some(b)
                } else if b == u {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn out_neighbors(&self, u: usize) -> Vec<usize> {
        debug_assert!(self.directed);
        self.edges.iter().filter(|&&(a, _)| a == u).map(|&(_, b)| b).collect()
    }

    pub fn in_neighbors(&self, u: usize) -> Vec<usize> {
        debug_assert!(self.directed);
        self.edges.iter().filter(|&&(_, b)| b == u).map(|&(a, _)| a).collect()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.edges
            .iter()
            .any(|&(a, b)| (a == u && b == v) || (a == v && b == u))
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.edges.iter().any(|&(a, b)| a == u && b == v)
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors(u).len()
    }

    fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn with_partial_order(mut self, po: Vec<(usize, usize)>) -> Self {
        self.partial_order = po;
        self
    }

    /// Fills `partial_order` from the automorphism group unless already set.
    pub fn with_computed_partial_order(mut self) -> Result<Self> {
        if self.partial_order.is_empty() {
            self.partial_order = symmetry_breaking_conditions(&self)?;
        }
        Ok(self)
    }

    /// Parses the pattern text format; returns the pattern and an optional
    /// matching-order override from an `order:` line.
    ///
    /// ```text
    /// # header: n m directed|undirected
    /// 6 9 undirected
    /// 1 2
    /// 1 3 2        # optional explicit edge id
    /// order: 1 3 5 2 6 4
    /// partial: 3<5
    /// ```
    pub fn parse(text: &str) -> Result<(Self, Option<Vec<usize>>)> {
        let mut header: Option<(usize, usize, bool)> = None;
        let mut edges: Vec<(usize, usize, usize)> = Vec::new();
        let mut order: Option<Vec<usize>> = None;
        let mut partial: Option<Vec<(usize, usize)>> = None;
        let err = |line: usize, msg: String| Error::Parse { line, msg };

        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            if let Some(rest) = line.strip_prefix("order:") {
                let mut o = Vec::new();
                for tok in rest.split_whitespace() {
                    let v: usize = tok
                        .parse()
                        .map_err(|_| err(lineno, format!("bad order vertex {tok:?}")))?;
                    if v == 0 {
                        return Err(err(lineno, "order vertices are 1-based".into()));
                    }
                    o.push(v - 1);
                }
                order = Some(o);
                continue;
            }
            if let Some(rest) = line.strip_prefix("partial:") {
                let mut po = Vec::new();
                for tok in rest.split_whitespace() {
                    let (a, b) = tok
                        .split_once('<')
                        .ok_or_else(|| err(lineno, format!("bad constraint {tok:?}, want i<j")))?;
                    let a: usize =
                        a.parse().map_err(|_| err(lineno, format!("bad vertex {a:?}")))?;
                    let b: usize =
                        b.parse().map_err(|_| err(lineno, format!("bad vertex {b:?}")))?;
                    if a == 0 || b == 0 {
                        return Err(err(lineno, "partial-order vertices are 1-based".into()));
                    }
                    po.push((a - 1, b - 1));
                }
                partial = Some(po);
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if header.is_none() {
                if toks.len() != 3 {
                    return Err(err(lineno, "header must be \"n m directed|undirected\"".into()));
                }
                let n: usize =
                    toks[0].parse().map_err(|_| err(lineno, format!("bad n {:?}", toks[0])))?;
                let m: usize =
                    toks[1].parse().map_err(|_| err(lineno, format!("bad m {:?}", toks[1])))?;
                let directed = match toks[2] {
                    "directed" => true,
                    "undirected" => false,
                    other => return Err(err(lineno, format!("bad direction flag {other:?}"))),
                };
                header = Some((n, m, directed));
                continue;
            }
            if toks.len() != 2 && toks.len() != 3 {
                return Err(err(lineno, format!("expected \"u v [edge-id]\", got {line:?}")));
            }
            let u: usize =
                toks[0].parse().map_err(|_| err(lineno, format!("bad vertex {:?}", toks[0])))?;
            let v: usize =
                toks[1].parse().map_err(|_| err(lineno, format!("bad vertex {:?}", toks[1])))?;
            if u == 0 || v == 0 {
                return Err(err(lineno, "pattern vertices are 1-based".into()));
            }
            let id = if toks.len() == 3 {
                toks[2].parse().map_err(|_| err(lineno, format!("bad edge id {:?}", toks[2])))?
            } else {
                edges.len() + 1
            };
            edges.push((u - 1, v - 1, id));
        }

        let (n, m, directed) =
            header.ok_or_else(|| err(1, "missing \"n m directed|undirected\" header".into()))?;
        if edges.len() != m {
            return Err(Error::InvalidPattern(format!(
                "header declares {m} edges, found {}",
                edges.len()
            )));
        }
        let mut ids: Vec<usize> = edges.iter().map(|&(_, _, id)| id).collect();
        ids.sort_unstable();
        if ids != (1..=m).collect::<Vec<_>>() {
            return Err(Error::InvalidPattern(
                "edge ids must be a permutation of 1..m".into(),
            ));
        }
        edges.sort_by_key(|&(_, _, id)| id);
        let p = PatternGraph::new(n, edges.into_iter().map(|(u, v, _)| (u, v)).collect(), directed)?;
        let p = match partial {
            Some(po) => {
                for &(a, b) in &po {
                    if a >= n || b >= n {
                        return Err(Error::InvalidPattern("partial-order vertex out of range".into()));
                    }
                }
                p.with_partial_order(po)
            }
            None => p,
        };
        if let Some(o) = &order {
            validate_order(&p, o)?;
        }
        Ok((p, order))
    }

    pub fn dump(&self, order: Option<&[usize]>) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {}",
            self.n,
            self.edges.len(),
            if self.directed { "directed" } else { "undirected" }
        );
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{} {}", u + 1, v + 1);
        }
        if let Some(o) = order {
            let toks: Vec<String> = o.iter().map(|&u| (u + 1).to_string()).collect();
            let _ = writeln!(s, "order: {}", toks.join(" "));
        }
        if !self.partial_order.is_empty() {
            let toks: Vec<String> =
                self.partial_order.iter().map(|&(a, b)| format!("{}<{}", a + 1, b + 1)).collect();
            let _ = writeln!(s, "partial: {}", toks.join(" "));
        }
        s
    }
}

pub fn validate_order(p: &PatternGraph, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; p.n];
    if order.len() != p.n {
        return Err(Error::InvalidOrder(format!(
            "order has {} vertices, pattern has {}",
            order.len(),
            p.n
        )));
    }
    for &u in order {
        if u >= p.n || seen[u] {
            return Err(Error::InvalidOrder("order must be a permutation of pattern vertices".into()));
        }
        seen[u] = true;
    }
    Ok(())
}

/// Total order on data vertices used by symmetry-breaking filters.
#[derive(Debug, Clone)]
pub enum TotalOrder {
    /// Batch: (degree, id) lexicographic.
    DegreeId(std::sync::Arc<Vec<u32>>),
    /// Streaming: natural id order.
    Id,
}

impl TotalOrder {
    pub fn degree_based(g: &UndirectedGraph) -> Self {
        let degs = (0..g.vertex_count()).map(|v| g.degree(v as VertexId) as u32).collect();
        TotalOrder::DegreeId(std::sync::Arc::new(degs))
    }

    pub fn precedes(&self, a: VertexId, b: VertexId) -> bool {
        match self {
            TotalOrder::DegreeId(degs) => {
                (degs[a as usize], a) < (degs[b as usize], b)
            }
            TotalOrder::Id => a < b,
        }
    }
}

const AUTOMORPHISM_CAP: usize = 12;

/// All adjacency-preserving vertex permutations, by guarded brute force.
pub fn compute_automorphisms(p: &PatternGraph) -> Result<Vec<Vec<usize>>> {
    if p.n > AUTOMORPHISM_CAP {
        return Err(Error::PatternTooLarge { n: p.n, cap: AUTOMORPHISM_CAP });
    }
    let n = p.n;
    let mut adj = vec![vec![false; n]; n];
    for &(u, v) in &p.edges {
        adj[u][v] = true;
        if !p.directed {
            adj[v][u] = true;
        }
    }
    let sig: Vec<(usize, usize)> = (0..n)
        .map(|u| {
            if p.directed {
                (p.in_neighbors(u).len(), p.out_neighbors(u).len())
            } else {
                (p.degree(u), 0)
            }
        })
        .collect();

    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut out = Vec::new();
    fn search(
        depth: usize,
        n: usize,
        adj: &[Vec<bool>],
        sig: &[(usize, usize)],
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if depth == n {
            out.push(perm.clone());
            return;
        }
        for cand in 0..n {
            if used[cand] || sig[cand] != sig[depth] {
                continue;
            }
            let ok = (0..depth).all(|j| {
                adj[depth][j] == adj[cand][perm[j]] && adj[j][depth] == adj[perm[j]][cand]
            });
            if ok {
                perm[depth] = cand;
                used[cand] = true;
                search(depth + 1, n, adj, sig, perm, used, out);
                used[cand] = false;
                perm[depth] = usize::MAX;
            }
        }
    }
    search(0, n, &adj, &sig, &mut perm, &mut used, &mut out);
    Ok(out)
}

/// Partial order on pattern vertices under which each isomorphic data
/// subgraph keeps exactly one match. Iterative orbit fixing: anchor the
/// vertex fixed by fewest remaining automorphisms (ties: max degree, then
/// min index), constrain it below its orbit, restrict to its stabilizer.
pub fn symmetry_breaking_conditions(p: &PatternGraph) -> Result<Vec<(usize, usize)>> {
    let mut auts = compute_automorphisms(p)?;
    let mut conds: Vec<(usize, usize)> = Vec::new();
    while auts.len() > 1 {
        let anchor = (0..p.n)
            .filter(|&v| auts.iter().any(|pi| pi[v] != v))
            .min_by_key(|&v| {
                let fixed = auts.iter().filter(|pi| pi[v] == v).count();
                (fixed, std::cmp::Reverse(p.degree(v)), v)
            })
            .expect("nontrivial group moves some vertex");
        let mut orbit: Vec<usize> = auts.iter().map(|pi| pi[anchor]).collect();
        orbit.sort_unstable();
        orbit.dedup();
        for w in orbit {
            if w != anchor {
                conds.push((anchor, w));
            }
        }
        auts.retain(|pi| pi[anchor] == anchor);
    }
    Ok(transitive_reduction(p.n, conds))
}

fn transitive_reduction(n: usize, mut edges: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    edges.sort_unstable();
    edges.dedup();
    let reachable = |edges: &[(usize, usize)], skip: usize, from: usize, to: usize| -> bool {
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(x) = stack.pop() {
            for (k, &(a, b)) in edges.iter().enumerate() {
                if k != skip && a == x && !seen[b] {
                    if b == to {
                        return true;
                    }
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        false
    };
    let mut keep = Vec::new();
    for i in 0..edges.len() {
        let (a, b) = edges[i];
        if !reachable(&edges, i, a, b) {
            keep.push((a, b));
        }
    }
    keep
}
