//! Key-value adjacency storage: a pluggable backend, snapshot values for
//! the streaming mode, and a byte-budget LRU cache that meters every
//! adjacency query.

use crate::graph::{DirectedGraph, UndirectedGraph};
use crate::plan::{Dir, EdgeKind};
use crate::{Error, Result, Sign, VertexId};
use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

/// Per-vertex snapshot of a dynamic digraph. Between steps (`steady` form)
/// the lists hold the current adjacency and the deltas are empty; while a
/// step is being processed the lists hold the pre-step adjacency and the
/// deltas carry the flagged updates of the step.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SnapshotQuad {
    pub in_list: Vec<VertexId>,
    pub out_list: Vec<VertexId>,
    pub in_delta: Vec<(Sign, VertexId)>,
    pub out_delta: Vec<(Sign, VertexId)>,
}

impl SnapshotQuad {
    fn list(&self, dir: Dir) -> &[VertexId] {
        match dir {
            Dir::In => &self.in_list,
            Dir::Out => &self.out_list,
        }
    }

    fn delta(&self, dir: Dir) -> &[(Sign, VertexId)] {
        match dir {
            Dir::In => &self.in_delta,
            Dir::Out => &self.out_delta,
        }
    }

    /// Post-step adjacency: stored list minus deletions plus insertions.
    fn current(&self, dir: Dir) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self
            .list(dir)
            .iter()
            .copied()
            .filter(|v| !self.delta(dir).contains(&(Sign::Minus, *v)))
            .collect();
        out.extend(
            self.delta(dir).iter().filter(|(s, _)| *s == Sign::Plus).map(|&(_, v)| v),
        );
        out.sort_unstable();
        out
    }

    /// Pre-step adjacency.
    fn previous(&self, dir: Dir) -> Vec<VertexId> {
        self.list(dir).to_vec()
    }

    /// Edges present both before and after the step.
    fn unaltered(&self, dir: Dir) -> Vec<VertexId> {
        self.list(dir)
            .iter()
            .copied()
            .filter(|v| !self.delta(dir).contains(&(Sign::Minus, *v)))
            .collect()
    }

    fn byte_size(&self) -> usize {
        8 * (self.in_list.len() + self.out_list.len() + self.in_delta.len() + self.out_delta.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoredValue {
    Batch(Arc<Vec<VertexId>>),
    Stream(Arc<SnapshotQuad>),
}

impl StoredValue {
    fn byte_size(&self) -> usize {
        64 + match self {
            StoredValue::Batch(v) => 8 * v.len(),
            StoredValue::Stream(q) => q.byte_size(),
        }
    }
}

pub trait GraphStore: Send + Sync {
    fn get(&self, key: VertexId) -> Result<Option<StoredValue>>;
    fn put(&self, key: VertexId, value: StoredValue) -> Result<()>;
    fn keys(&self) -> Vec<VertexId>;
}

/// In-process backend. `latency` models a remote store: every `get` sleeps
/// that long, which makes query savings visible in wall-clock terms.
#[derive(Default)]
pub struct MemoryStore {
    map: RwLock<HashMap<VertexId, StoredValue>>,
    latency: Option<Duration>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_latency(latency: Duration) -> Self {
        MemoryStore { map: RwLock::new(HashMap::new()), latency: Some(latency) }
    }
}

impl GraphStore for MemoryStore {
    fn get(&self, key: VertexId) -> Result<Option<StoredValue>> {
        if let Some(d) = self.latency {
            std::thread::sleep(d);
        }
        Ok(self.map.read().unwrap().get(&key).cloned())
    }

    fn put(&self, key: VertexId, value: StoredValue) -> Result<()> {
        self.map.write().unwrap().insert(key, value);
        Ok(())
    }

    fn keys(&self) -> Vec<VertexId> {
        let mut ks: Vec<VertexId> = self.map.read().unwrap().keys().copied().collect();
        ks.sort_unstable();
        ks
    }
}

/// Adjacency-query counters. Every query an executed plan issues either
/// hits the cache or reaches the backend, so `backend_queries + cache_hits
/// == dbq_issued` at any quiescent point.
#[derive(Debug, Default)]
pub struct CommMetrics {
    dbq_issued: AtomicU64,
    backend_queries: AtomicU64,
    cache_hits: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CommCounts {
    pub dbq_issued: u64,
    pub backend_queries: u64,
    pub cache_hits: u64,
}

impl CommCounts {
    /// Counter delta since an earlier snapshot.
    pub fn minus(&self, earlier: &CommCounts) -> CommCounts {
        CommCounts {
            dbq_issued: self.dbq_issued - earlier.dbq_issued,
            backend_queries: self.backend_queries - earlier.backend_queries,
            cache_hits: self.cache_hits - earlier.cache_hits,
        }
    }
}

impl CommMetrics {
    pub fn snapshot(&self) -> CommCounts {
        CommCounts {
            dbq_issued: self.dbq_issued.load(Ordering::Relaxed),
            backend_queries: self.backend_queries.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.dbq_issued.store(0, Ordering::Relaxed);
        self.backend_queries.store(0, Ordering::Relaxed);
        self.cache_hits.store(0, Ordering::Relaxed);
    }
}

struct CacheSlot {
    value: StoredValue,
    step: u64,
    bytes: usize,
    stamp: u64,
}

#[derive(Default)]
struct LruState {
    slots: HashMap<VertexId, CacheSlot>,
    by_age: BTreeMap<u64, VertexId>,
    total_bytes: usize,
    tick: u64,
}

impl LruState {
    fn touch(&mut self, key: VertexId) {
        self.tick += 1;
        let slot = self.slots.get_mut(&key).unwrap();
        self.by_age.remove(&slot.stamp);
        slot.stamp = self.tick;
        self.by_age.insert(self.tick, key);
    }

    fn remove(&mut self, key: VertexId) {
        if let Some(slot) = self.slots.remove(&key) {
            self.by_age.remove(&slot.stamp);
            self.total_bytes -= slot.bytes;
        }
    }

    fn insert(&mut self, key: VertexId, value: StoredValue, step: u64, capacity: usize) {
        let bytes = value.byte_size();
        if bytes > capacity {
            self.remove(key);
            return;
        }
        self.remove(key);
        self.tick += 1;
        self.by_age.insert(self.tick, key);
        self.slots.insert(key, CacheSlot { value, step, bytes, stamp: self.tick });
        self.total_bytes += bytes;
        while self.total_bytes > capacity {
            let oldest = *self.by_age.values().next().unwrap();
            self.remove(oldest);
        }
    }
}

/// The store as plans see it: all reads funnel through here, get counted,
/// and get served from the LRU when the entry is fresh for the current step.
pub struct CachedStore {
    backend: Arc<dyn GraphStore>,
    cache: Mutex<LruState>,
    capacity: usize,
    step: AtomicU64,
    pub metrics: CommMetrics,
}

impl CachedStore {
    pub fn new(backend: Arc<dyn GraphStore>, capacity_bytes: usize) -> Self {
        CachedStore {
            backend,
            cache: Mutex::new(LruState::default()),
            capacity: capacity_bytes,
            step: AtomicU64::new(0),
            metrics: CommMetrics::default(),
        }
    }

    pub fn backend(&self) -> &Arc<dyn GraphStore> {
        &self.backend
    }

    /// Entering step `t` makes entries cached during earlier steps stale.
    pub fn set_step(&self, t: u64) {
        self.step.store(t, Ordering::Relaxed);
    }

    fn fetch(&self, key: VertexId, default: &dyn Fn() -> StoredValue) -> Result<StoredValue> {
        self.metrics.dbq_issued.fetch_add(1, Ordering::Relaxed);
        let step = self.step.load(Ordering::Relaxed);
        if self.capacity > 0 {
            let mut cache = self.cache.lock().unwrap();
            if let Some(slot) = cache.slots.get(&key) {
                if slot.step == step {
                    let value = slot.value.clone();
                    cache.touch(key);
                    self.metrics.cache_hits.fetch_add(1, Ordering::Relaxed);
                    return Ok(value);
                }
            }
        }
        self.metrics.backend_queries.fetch_add(1, Ordering::Relaxed);
        let value = self.backend.get(key)?.unwrap_or_else(default);
        if self.capacity > 0 {
            self.cache.lock().unwrap().insert(key, value.clone(), step, self.capacity);
        }
        Ok(value)
    }

    /// Batch adjacency of `key`; vertices without an entry are isolated.
    pub fn get_batch(&self, key: VertexId) -> Result<Arc<Vec<VertexId>>> {
        match self.fetch(key, &|| StoredValue::Batch(Arc::new(Vec::new())))? {
            StoredValue::Batch(v) => Ok(v),
            StoredValue::Stream(_) => Err(Error::Backend {
                key,
                msg: "found a stream snapshot where batch adjacency was expected".into(),
            }),
        }
    }

    fn get_quad(&self, key: VertexId) -> Result<Arc<SnapshotQuad>> {
        match self.fetch(key, &|| StoredValue::Stream(Arc::new(SnapshotQuad::default())))? {
            StoredValue::Stream(q) => Ok(q),
            StoredValue::Batch(_) => Err(Error::Backend {
                key,
                msg: "found batch adjacency where a stream snapshot was expected".into(),
            }),
        }
    }

    /// Typed adjacency for streaming plans: `either` edges resolve to the
    /// post-step graph on the appearing branch and the pre-step graph on
    /// the disappearing branch; `unaltered` edges must exist in both.
    pub fn get_stream(
        &self,
        key: VertexId,
        kind: EdgeKind,
        dir: Dir,
        sign: Sign,
    ) -> Result<Vec<VertexId>> {
        let quad = self.get_quad(key)?;
        Ok(match (kind, sign) {
            (EdgeKind::Either, Sign::Plus) => quad.current(dir),
            (EdgeKind::Either, Sign::Minus) => quad.previous(dir),
            (EdgeKind::Unaltered, _) => quad.unaltered(dir),
            (EdgeKind::Delta, _) => {
                return Err(Error::InvalidPlan(
                    "delta adjacency must be fetched as a flagged list".into(),
                ))
            }
        })
    }

    /// Flagged delta adjacency of `key` for the current step.
    pub fn get_delta(&self, key: VertexId, dir: Dir) -> Result<Vec<(Sign, VertexId)>> {
        Ok(self.get_quad(key)?.delta(dir).to_vec())
    }
}

pub fn store_batch_graph(backend: &dyn GraphStore, g: &UndirectedGraph) -> Result<()> {
    for v in 0..g.vertex_count() as VertexId {
        backend.put(v, StoredValue::Batch(Arc::new(g.neighbors(v).to_vec())))?;
    }
    Ok(())
}

pub fn store_snapshot(backend: &dyn GraphStore, g: &DirectedGraph) -> Result<()> {
    for v in 0..g.vertex_count() as VertexId {
        let quad = SnapshotQuad {
            in_list: g.in_neighbors(v).to_vec(),
            out_list: g.out_neighbors(v).to_vec(),
            in_delta: Vec::new(),
            out_delta: Vec::new(),
        };
        backend.put(v, StoredValue::Stream(Arc::new(quad)))?;
    }
    Ok(())
}

fn quad_of(backend: &dyn GraphStore, key: VertexId) -> Result<SnapshotQuad> {
    match backend.get(key)? {
        None => Ok(SnapshotQuad::default()),
        Some(StoredValue::Stream(q)) => Ok((*q).clone()),
        Some(StoredValue::Batch(_)) => Err(Error::Backend {
            key,
            msg: "found batch adjacency where a stream snapshot was expected".into(),
        }),
    }
}

/// Stage the update batch into the per-vertex delta sets. The whole batch is
/// validated against the pre-step graph first; nothing is written unless
/// every operation is consistent.
pub fn apply_delta_sets(
    backend: &dyn GraphStore,
    batch: &[(Sign, VertexId, VertexId)],
) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for &(sign, a, b) in batch {
        if a == b {
            return Err(Error::InconsistentUpdate(format!("self-loop on vertex {a}")));
        }
        if !seen.insert((a, b)) {
            return Err(Error::InconsistentUpdate(format!(
                "edge ({a},{b}) appears twice in one step"
            )));
        }
        let quad = quad_of(backend, a)?;
        if !quad.out_delta.is_empty() || !quad.in_delta.is_empty() {
            return Err(Error::InconsistentUpdate(format!(
                "vertex {a} still carries deltas from an unmerged step"
            )));
        }
        let present = quad.out_list.binary_search(&b).is_ok();
        match sign {
            Sign::Plus if present => {
                return Err(Error::InconsistentUpdate(format!(
                    "cannot insert edge ({a},{b}): already present"
                )))
            }
            Sign::Minus if !present => {
                return Err(Error::InconsistentUpdate(format!(
                    "cannot delete edge ({a},{b}): not present"
                )))
            }
            _ => {}
        }
    }

    let mut staged: BTreeMap<VertexId, SnapshotQuad> = BTreeMap::new();
    for &(sign, a, b) in batch {
        for (key, dir) in [(a, Dir::Out), (b, Dir::In)] {
            if !staged.contains_key(&key) {
                staged.insert(key, quad_of(backend, key)?);
            }
            let quad = staged.get_mut(&key).unwrap();
            let other = if key == a { b } else { a };
            match dir {
                Dir::Out => quad.out_delta.push((sign, other)),
                Dir::In => quad.in_delta.push((sign, other)),
            }
        }
    }
    for (key, mut quad) in staged {
        quad.in_delta.sort_unstable_by_key(|&(_, v)| v);
        quad.out_delta.sort_unstable_by_key(|&(_, v)| v);
        backend.put(key, StoredValue::Stream(Arc::new(quad)))?;
    }
    Ok(())
}

/// Fold the step's deltas into the stored lists, returning every touched
/// vertex to the steady form.
pub fn merge_post_step(backend: &dyn GraphStore, batch: &[(Sign, VertexId, VertexId)]) -> Result<()> {
    let affected: std::collections::BTreeSet<VertexId> =
        batch.iter().flat_map(|&(_, a, b)| [a, b]).collect();
    for key in affected {
        let quad = quad_of(backend, key)?;
        let merged = SnapshotQuad {
            in_list: quad.current(Dir::In),
            out_list: quad.current(Dir::Out),
            in_delta: Vec::new(),
            out_delta: Vec::new(),
        };
        backend.put(key, StoredValue::Stream(Arc::new(merged)))?;
    }
    Ok(())
}

/// Total footprint of the backend under the cache's own byte accounting,
/// so capacities can be quoted as a fraction of the graph.
pub fn stored_bytes(backend: &dyn GraphStore) -> Result<usize> {
    let mut total = 0;
    for key in backend.keys() {
        if let Some(value) = backend.get(key)? {
            total += value.byte_size();
        }
    }
    Ok(total)
}

/// Deterministic text form of a steady store, for snapshot round-trips.
pub fn dump_store(backend: &dyn GraphStore) -> Result<String> {
    use std::fmt::Write as _;
    let mut out = String::new();
    for key in backend.keys() {
        match backend.get(key)? {
            None => {}
            Some(StoredValue::Batch(v)) => {
                let ids: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "{key}: {}", ids.join(" "));
            }
            Some(StoredValue::Stream(q)) => {
                if !q.in_delta.is_empty() || !q.out_delta.is_empty() {
                    return Err(Error::InconsistentUpdate(format!(
                        "vertex {key} still carries unmerged deltas"
                    )));
                }
                let ins: Vec<String> = q.in_list.iter().map(|x| x.to_string()).collect();
                let outs: Vec<String> = q.out_list.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "{key}: in {} | out {}", ins.join(" "), outs.join(" "));
            }
        }
    }
    Ok(out)
}

pub fn load_store(text: &str) -> Result<MemoryStore> {
    let store = MemoryStore::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse { line: lineno + 1, msg: msg.into() };
        let (key, rest) = line.split_once(':').ok_or_else(|| bad("expected `key:`"))?;
        let key: VertexId = key.trim().parse().map_err(|_| bad("bad vertex key"))?;
        let parse_ids = |s: &str| -> Result<Vec<VertexId>> {
            s.split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad vertex id")))
                .collect()
        };
        let value = if let Some(rest) = rest.trim_start().strip_prefix("in ") {
            let (ins, outs) = rest.split_once("| out").ok_or_else(|| bad("missing out list"))?;
            StoredValue::Stream(Arc::new(SnapshotQuad {
                in_list: parse_ids(ins)?,
                out_list: parse_ids(outs)?,
                in_delta: Vec::new(),
                out_delta: Vec::new(),
            }))
        } else {
            StoredValue::Batch(Arc::new(parse_ids(rest)?))
        };
        store.put(key, value)?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    fn batch_store(n: usize, m: usize, seed: u64) -> (Arc<MemoryStore>, UndirectedGraph) {
        let g = gen::er_graph(n, m, seed);
        let store = Arc::new(MemoryStore::new());
        store_batch_graph(store.as_ref(), &g).unwrap();
        (store, g)
    }

    #[test]
    fn metrics_invariant_holds() {
        let (backend, g) = batch_store(30, 60, 1);
        let cached = CachedStore::new(backend, 1 << 20);
        for v in 0..30 {
            for _ in 0..3 {
                let adj = cached.get_batch(v).unwrap();
                assert_eq!(adj.as_slice(), g.neighbors(v));
            }
        }
        let c = cached.metrics.snapshot();
        assert_eq!(c.dbq_issued, 90);
        assert_eq!(c.backend_queries, 30);
        assert_eq!(c.backend_queries + c.cache_hits, c.dbq_issued);
    }

    #[test]
    fn zero_capacity_disables_caching() {
        let (backend, _) = batch_store(10, 20, 2);
        let cached = CachedStore::new(backend, 0);
        for _ in 0..5 {
            cached.get_batch(3).unwrap();
        }
        let c = cached.metrics.snapshot();
        assert_eq!(c.cache_hits, 0);
        assert_eq!(c.backend_queries, 5);
    }

    #[test]
    fn lru_evicts_oldest_and_skips_oversized() {
        let backend = Arc::new(MemoryStore::new());
        for v in 0..4u32 {
            backend.put(v, StoredValue::Batch(Arc::new(vec![1, 2, 3, 4]))).unwrap();
        }
        // One entry is 64 + 32 = 96 bytes; room for exactly two.
        let cached = CachedStore::new(backend.clone(), 200);
        cached.get_batch(0).unwrap();
        cached.get_batch(1).unwrap();
        cached.get_batch(0).unwrap(); // refresh 0: order is now 1 < 0
        cached.get_batch(2).unwrap(); // evicts 1
        cached.get_batch(0).unwrap(); // still cached
        let c = cached.metrics.snapshot();
        assert_eq!(c.backend_queries, 3);
        assert_eq!(c.cache_hits, 2);
        cached.get_batch(1).unwrap(); // was evicted: a backend query again
        assert_eq!(cached.metrics.snapshot().backend_queries, 4);

        let tiny = CachedStore::new(backend, 50);
        tiny.get_batch(0).unwrap();
        tiny.get_batch(0).unwrap();
        assert_eq!(tiny.metrics.snapshot().cache_hits, 0, "oversized entries are not retained");
    }

    #[test]
    fn step_change_invalidates_stream_entries() {
        let g = gen::er_digraph(10, 20, 3);
        let backend = Arc::new(MemoryStore::new());
        store_snapshot(backend.as_ref(), &g).unwrap();
        let cached = CachedStore::new(backend, 1 << 20);
        cached.set_step(1);
        cached.get_delta(0, Dir::Out).unwrap();
        cached.get_delta(0, Dir::Out).unwrap();
        assert_eq!(cached.metrics.snapshot().cache_hits, 1);
        cached.set_step(2);
        cached.get_delta(0, Dir::Out).unwrap();
        let c = cached.metrics.snapshot();
        assert_eq!(c.backend_queries, 2, "stale entry is refetched after the step changes");
    }

    #[test]
    fn delta_staging_and_merge_round_trip() {
        let g0 = gen::demo::stream_initial_graph();
        let backend = MemoryStore::new();
        store_snapshot(&backend, &g0).unwrap();
        let before = dump_store(&backend).unwrap();

        let steps = gen::demo::stream_steps();
        apply_delta_sets(&backend, &steps[0]).unwrap();
        // Mid-step: lists still pre-step, deltas flagged.
        let Some(StoredValue::Stream(q)) = backend.get(0).unwrap() else { panic!() };
        assert_eq!(q.out_list, vec![4, 5, 6, 7]);
        assert_eq!(q.out_delta, vec![(Sign::Plus, 1), (Sign::Plus, 2)]);
        assert!(dump_store(&backend).is_err(), "unmerged deltas refuse to dump");

        merge_post_step(&backend, &steps[0]).unwrap();
        let Some(StoredValue::Stream(q)) = backend.get(0).unwrap() else { panic!() };
        assert_eq!(q.out_list, vec![1, 2, 4, 5, 6, 7]);
        assert!(q.out_delta.is_empty());

        // Undo by inverting the step: back to the initial snapshot, textually.
        let undo: Vec<_> = steps[0]
            .iter()
            .map(|&(s, a, b)| (if s == Sign::Plus { Sign::Minus } else { Sign::Plus }, a, b))
            .collect();
        apply_delta_sets(&backend, &undo).unwrap();
        merge_post_step(&backend, &undo).unwrap();
        assert_eq!(dump_store(&backend).unwrap(), before);
    }

    #[test]
    fn inconsistent_updates_abort_before_writing() {
        let g0 = gen::demo::stream_initial_graph();
        let backend = MemoryStore::new();
        store_snapshot(&backend, &g0).unwrap();
        let before = dump_store(&backend).unwrap();

        let cases: Vec<(Vec<(Sign, VertexId, VertexId)>, &str)> = vec![
            (vec![(Sign::Plus, 0, 4)], "already present"),
            (vec![(Sign::Minus, 0, 1)], "not present"),
            (vec![(Sign::Plus, 2, 2)], "self-loop"),
            (vec![(Sign::Plus, 1, 3), (Sign::Minus, 1, 3)], "appears twice"),
            (vec![(Sign::Plus, 1, 3), (Sign::Plus, 0, 4)], "already present"),
        ];
        for (batch, needle) in cases {
            let err = apply_delta_sets(&backend, &batch).unwrap_err();
            assert!(err.to_string().contains(needle), "{err} lacks {needle:?}");
            assert_eq!(dump_store(&backend).unwrap(), before, "no partial writes");
        }
    }

    #[test]
    fn typed_stream_views() {
        let g0 = gen::demo::stream_initial_graph();
        let backend = Arc::new(MemoryStore::new());
        store_snapshot(backend.as_ref(), &g0).unwrap();
        let steps = gen::demo::stream_steps();
        // Step 2 cannot run against the initial graph: (0,1) is not there.
        apply_delta_sets(backend.as_ref(), &steps[1]).unwrap_err();

        apply_delta_sets(backend.as_ref(), &steps[0]).unwrap();
        merge_post_step(backend.as_ref(), &steps[0]).unwrap();
        apply_delta_sets(backend.as_ref(), &steps[1]).unwrap();

        // Mid-step 2, all four views of vertex 0's out-adjacency differ.
        let cached = CachedStore::new(backend, 1 << 20);
        cached.set_step(2);
        let pre = cached.get_stream(0, EdgeKind::Either, Dir::Out, Sign::Minus).unwrap();
        assert_eq!(pre, vec![1, 2, 4, 5, 6, 7]);
        let post = cached.get_stream(0, EdgeKind::Either, Dir::Out, Sign::Plus).unwrap();
        assert_eq!(post, vec![3, 4, 5, 6, 7]);
        let stable = cached.get_stream(0, EdgeKind::Unaltered, Dir::Out, Sign::Plus).unwrap();
        assert_eq!(stable, vec![4, 5, 6, 7]);
        assert_eq!(
            cached.get_stream(0, EdgeKind::Unaltered, Dir::Out, Sign::Minus).unwrap(),
            stable
        );
        let delta = cached.get_delta(0, Dir::Out).unwrap();
        assert_eq!(delta, vec![(Sign::Minus, 1), (Sign::Minus, 2), (Sign::Plus, 3)]);
        // The new edge's target sees it from the in-side.
        assert_eq!(cached.get_delta(3, Dir::In).unwrap(), vec![(Sign::Plus, 0)]);
    }

    #[test]
    fn store_text_round_trip() {
        let (backend, _) = batch_store(20, 40, 9);
        let text = dump_store(backend.as_ref()).unwrap();
        let reloaded = load_store(&text).unwrap();
        assert_eq!(dump_store(&reloaded).unwrap(), text);

        let g = gen::er_digraph(15, 30, 4);
        let sb = MemoryStore::new();
        store_snapshot(&sb, &g).unwrap();
        let text = dump_store(&sb).unwrap();
        let reloaded = load_store(&text).unwrap();
        assert_eq!(dump_store(&reloaded).unwrap(), text);
    }
}
