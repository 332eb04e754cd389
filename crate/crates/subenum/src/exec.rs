//! Plan interpretation over a stored data graph: task generation with
//! splitting, the backtracking interpreter, per-task triangle caching, and
//! result sinks.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::cost::{best_batch_order, ErEstimator, GraphStats};
use crate::graph::{validate_order, PatternGraph};
use crate::plan::{
    compile_batch_plan, EdgeKind, ExecutionPlan, Filter, FilterKind, Instruction, OpSpec, Operand,
    PipelineOpts, Var,
};
use crate::store::{CachedStore, CommCounts, GraphStore, StoredValue};
use crate::{Error, Result, Sign, VertexId};

const GALLOP_RATIO: usize = 32;

/// Intersection of two sorted duplicate-free lists; binary probing once the
/// size ratio makes a linear merge wasteful.
pub fn intersect_sorted(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if small.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    if large.len() >= GALLOP_RATIO * small.len() {
        let mut from = 0usize;
        for &x in small {
            match large[from..].binary_search(&x) {
                Ok(i) => {
                    out.push(x);
                    from += i + 1;
                }
                Err(i) => from += i,
            }
            if from >= large.len() {
                break;
            }
        }
    } else {
        let (mut i, mut j) = (0, 0);
        while i < small.len() && j < large.len() {
            if small[i] < large[j] {
                i += 1;
            } else if small[i] > large[j] {
                j += 1;
            } else {
                out.push(small[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Runtime value of a set variable.
#[derive(Debug, Clone)]
pub(crate) enum SetValue {
    Ids(Arc<Vec<VertexId>>),
    /// V(G) under evaluated filters; iterated lazily, never materialized.
    Universe { above: Option<VertexId>, below: Option<VertexId>, ne: Vec<VertexId> },
    /// Flagged delta adjacency.
    Delta(Arc<Vec<(Sign, VertexId)>>),
}

/// One unit of parallel work: a start vertex, optionally restricted to a
/// value range of the second order vertex's candidates. The ranges of one
/// start partition its full candidate space.
#[derive(Debug, Clone, Copy)]
pub struct SearchTask {
    pub start: VertexId,
    pub range: Option<(VertexId, VertexId)>,
}

pub(crate) fn balanced_chunks(len: usize, theta: usize) -> Vec<(usize, usize)> {
    if len == 0 {
        return Vec::new();
    }
    let parts = len.div_ceil(theta);
    let base = len / parts;
    let rem = len % parts;
    let mut out = Vec::with_capacity(parts);
    let mut at = 0;
    for i in 0..parts {
        let size = base + usize::from(i < rem);
        out.push((at, at + size));
        at += size;
    }
    out
}

fn backend_adjacency(backend: &dyn GraphStore, key: VertexId) -> Result<Arc<Vec<VertexId>>> {
    match backend.get(key)? {
        Some(StoredValue::Batch(l)) => Ok(l),
        Some(StoredValue::Stream(_)) => Err(Error::Backend {
            key,
            msg: "found a stream snapshot where batch adjacency was expected".into(),
        }),
        None => Ok(Arc::new(Vec::new())),
    }
}

/// One task per start vertex; with a split threshold, heavy starts fan out
/// into subtasks slicing the second vertex's candidate space.
pub fn generate_tasks(
    p: &PatternGraph,
    plan: &ExecutionPlan,
    backend: &dyn GraphStore,
    universe: VertexId,
    theta: Option<usize>,
) -> Result<Vec<SearchTask>> {
    let mut tasks = Vec::new();
    let theta = theta.map(|t| t.max(1));
    let (Some(theta), true) = (theta, p.n >= 2) else {
        tasks.extend((0..universe).map(|v| SearchTask { start: v, range: None }));
        return Ok(tasks);
    };
    let adjacent = p.adjacent(plan.order[0], plan.order[1]);
    let universe_chunks = balanced_chunks(universe as usize, theta);
    for v in 0..universe {
        if adjacent {
            let adj = backend_adjacency(backend, v)?;
            if adj.len() >= theta {
                let chunks = balanced_chunks(adj.len(), theta);
                let last = chunks.len() - 1;
                for (i, (a, b)) in chunks.into_iter().enumerate() {
                    let lo = if i == 0 { 0 } else { adj[a] };
                    let hi = if i == last { VertexId::MAX } else { adj[b] };
                    tasks.push(SearchTask { start: v, range: Some((lo, hi)) });
                }
            } else {
                tasks.push(SearchTask { start: v, range: None });
            }
        } else {
            for &(a, b) in &universe_chunks {
                tasks.push(SearchTask { start: v, range: Some((a as VertexId, b as VertexId)) });
            }
        }
    }
    Ok(tasks)
}

/// Set-operation counters, per task and merged per run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CompCounts {
    /// Pairwise merges performed by Intersect instructions.
    pub int_evaluations: u64,
    pub trc_probes: u64,
    pub trc_hits: u64,
    pub trc_misses: u64,
    pub res_firings: u64,
}

impl CompCounts {
    pub fn absorb(&mut self, o: &CompCounts) {
        self.int_evaluations += o.int_evaluations;
        self.trc_probes += o.trc_probes;
        self.trc_hits += o.trc_hits;
        self.trc_misses += o.trc_misses;
        self.res_firings += o.res_firings;
    }

    /// Intersections actually computed (cache hits excluded).
    pub fn intersections(&self) -> u64 {
        self.int_evaluations + self.trc_misses
    }
}

/// Reported binding per pattern vertex: a single value, or the candidate
/// image set of a compressed (cover-based) plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum OutVal {
    V(VertexId),
    Set(Vec<VertexId>),
}

pub(crate) trait ReportSink {
    fn report(&mut self, sign: Sign, vals: &[OutVal]) -> Result<()>;
}

/// Immutable per-plan state shared by all tasks of a run.
pub(crate) struct PlanRuntime {
    pub plan: Arc<ExecutionPlan>,
    slot_of: HashMap<Var, usize>,
    slots: usize,
    /// Pattern vertex whose candidates task ranges restrict.
    split_vertex: Option<usize>,
}

impl PlanRuntime {
    pub fn new(plan: ExecutionPlan) -> Self {
        let mut slot_of = HashMap::new();
        for inst in &plan.instructions {
            if let Some(t) = inst.target() {
                if !matches!(t, Var::F(_)) {
                    let next = slot_of.len();
                    slot_of.entry(t).or_insert(next);
                }
            }
        }
        let slots = slot_of.len();
        let split_vertex = plan.order.get(1).copied();
        PlanRuntime { plan: Arc::new(plan), slot_of, slots, split_vertex }
    }
}

pub(crate) struct Interp<'a> {
    rt: &'a PlanRuntime,
    store: &'a CachedStore,
    universe: VertexId,
    start: VertexId,
    range: Option<(VertexId, VertexId)>,
    shadow_check: bool,
    trc_cap: usize,
    f: Vec<VertexId>,
    fset: Vec<bool>,
    vals: Vec<Option<SetValue>>,
    cur_sign: Option<Sign>,
    trc: HashMap<(VertexId, VertexId), Arc<Vec<VertexId>>>,
    trc_bytes: usize,
    pub m: CompCounts,
    sink: &'a mut dyn ReportSink,
}

fn in_range(v: VertexId, range: Option<(VertexId, VertexId)>) -> bool {
    range.map_or(true, |(lo, hi)| v >= lo && v < hi)
}

impl<'a> Interp<'a> {
    pub fn new(
        rt: &'a PlanRuntime,
        store: &'a CachedStore,
        universe: VertexId,
        task: SearchTask,
        shadow_check: bool,
        trc_cap: usize,
        sink: &'a mut dyn ReportSink,
    ) -> Self {
        let n = rt.plan.order.len();
        Interp {
            rt,
            store,
            universe,
            start: task.start,
            range: task.range,
            shadow_check,
            trc_cap,
            f: vec![0; n],
            fset: vec![false; n],
            vals: vec![None; rt.slots],
            cur_sign: None,
            trc: HashMap::new(),
            trc_bytes: 0,
            m: CompCounts::default(),
            sink,
        }
    }

    pub fn run(&mut self) -> Result<()> {
        self.exec(0)
    }

    fn set(&mut self, var: &Var, value: SetValue) {
        let slot = self.rt.slot_of[var];
        self.vals[slot] = Some(value);
    }

    fn get(&self, var: &Var) -> Result<SetValue> {
        self.rt
            .slot_of
            .get(var)
            .and_then(|&s| self.vals[s].clone())
            .ok_or_else(|| Error::InvalidPlan("read of an unbound set variable".into()))
    }

    fn f_val(&self, var: &Var) -> Result<VertexId> {
        let u = var
            .vertex()
            .ok_or_else(|| Error::InvalidPlan("expected a binding variable".into()))?;
        debug_assert!(self.fset[u], "binding read before its loop");
        Ok(self.f[u])
    }

    fn resolve(&self, op: &Operand) -> Result<SetValue> {
        match op {
            Operand::Universe => Ok(SetValue::Universe { above: None, below: None, ne: Vec::new() }),
            Operand::Var(v) => self.get(v),
        }
    }

    fn ids_of(&self, var: &Var) -> Result<Arc<Vec<VertexId>>> {
        match self.get(var)? {
            SetValue::Ids(l) => Ok(l),
            _ => Err(Error::InvalidPlan("expected a materialized adjacency set".into())),
        }
    }

    fn passes(&self, v: VertexId, filters: &[Filter]) -> bool {
        filters.iter().all(|flt| {
            let s = self.f[flt.subject];
            debug_assert!(self.fset[flt.subject]);
            match flt.kind {
                FilterKind::Succ => v > s,
                FilterKind::Prec => v < s,
                FilterKind::Neq => v != s,
            }
        })
    }

    /// Range restriction applying to candidates of pattern vertex `u`.
    fn range_for(&self, u: usize) -> Option<(VertexId, VertexId)> {
        if self.rt.split_vertex == Some(u) {
            self.range
        } else {
            None
        }
    }

    fn eval_intersect(&mut self, operands: &[Operand], filters: &[Filter]) -> Result<SetValue> {
        let mut resolved = Vec::with_capacity(operands.len());
        for op in operands {
            resolved.push(self.resolve(op)?);
        }
        if resolved.len() == 1 {
            return match resolved.pop().unwrap() {
                SetValue::Universe { above, below, ne } => {
                    let (mut above, mut below, mut ne) = (above, below, ne);
                    for flt in filters {
                        let s = self.f[flt.subject];
                        match flt.kind {
                            FilterKind::Succ => above = Some(above.map_or(s, |x| x.max(s))),
                            FilterKind::Prec => below = Some(below.map_or(s, |x| x.min(s))),
                            FilterKind::Neq => ne.push(s),
                        }
                    }
                    Ok(SetValue::Universe { above, below, ne })
                }
                SetValue::Delta(list) => {
                    self.m.int_evaluations += 1;
                    let out: Vec<(Sign, VertexId)> =
                        list.iter().filter(|&&(_, v)| self.passes(v, filters)).copied().collect();
                    Ok(SetValue::Delta(Arc::new(out)))
                }
                SetValue::Ids(list) => {
                    self.m.int_evaluations += 1;
                    if filters.is_empty() {
                        Ok(SetValue::Ids(list))
                    } else {
                        let out: Vec<VertexId> =
                            list.iter().filter(|&&v| self.passes(v, filters)).copied().collect();
                        Ok(SetValue::Ids(Arc::new(out)))
                    }
                }
            };
        }
        let mut lists = Vec::with_capacity(resolved.len());
        for v in resolved {
            match v {
                SetValue::Ids(l) => lists.push(l),
                _ => {
                    return Err(Error::InvalidPlan(
                        "multi-way intersection over a non-materialized set".into(),
                    ))
                }
            }
        }
        let mut acc = intersect_sorted(&lists[0], &lists[1]);
        self.m.int_evaluations += 1;
        for l in &lists[2..] {
            acc = intersect_sorted(&acc, l);
            self.m.int_evaluations += 1;
        }
        if !filters.is_empty() {
            acc.retain(|&v| self.passes(v, filters));
        }
        Ok(SetValue::Ids(Arc::new(acc)))
    }

    fn exec_triangle_cache(&mut self, target: &Var, fa: &Var, fb: &Var, a: &Var, b: &Var) -> Result<()> {
        let va = self.f_val(fa)?;
        let vb = self.f_val(fb)?;
        let key = (va.min(vb), va.max(vb));
        self.m.trc_probes += 1;
        let result = if let Some(hit) = self.trc.get(&key).cloned() {
            self.m.trc_hits += 1;
            if self.shadow_check {
                let direct = intersect_sorted(&self.ids_of(a)?, &self.ids_of(b)?);
                assert_eq!(*hit, direct, "triangle cache must mirror the direct intersection");
            }
            hit
        } else {
            self.m.trc_misses += 1;
            let la = self.ids_of(a)?;
            let lb = self.ids_of(b)?;
            let fresh = Arc::new(intersect_sorted(&la, &lb));
            let bytes = fresh.len() * std::mem::size_of::<VertexId>() + 48;
            if self.trc_bytes + bytes <= self.trc_cap {
                self.trc.insert(key, fresh.clone());
                self.trc_bytes += bytes;
            }
            fresh
        };
        self.set(target, SetValue::Ids(result));
        Ok(())
    }

    fn run_foreach(&mut self, pos: usize, target: &Var, source: &Operand) -> Result<()> {
        let u = target
            .vertex()
            .ok_or_else(|| Error::InvalidPlan("loop must bind an f variable".into()))?;
        let restrict = self.range_for(u);
        match self.resolve(source)? {
            SetValue::Ids(list) => {
                for &v in list.iter() {
                    if !in_range(v, restrict) {
                        continue;
                    }
                    self.f[u] = v;
                    self.fset[u] = true;
                    self.exec(pos + 1)?;
                }
            }
            SetValue::Universe { above, below, ne } => {
                let mut lo = above.map_or(0, |a| a.saturating_add(1));
                let mut hi = below.map_or(self.universe, |b| b.min(self.universe));
                if let Some((rlo, rhi)) = restrict {
                    lo = lo.max(rlo);
                    hi = hi.min(rhi);
                }
                for v in lo..hi {
                    if ne.contains(&v) {
                        continue;
                    }
                    self.f[u] = v;
                    self.fset[u] = true;
                    self.exec(pos + 1)?;
                }
            }
            SetValue::Delta(_) => {
                return Err(Error::InvalidPlan("plain loop over a flagged delta set".into()))
            }
        }
        self.fset[u] = false;
        Ok(())
    }

    fn run_foreach_delta(&mut self, pos: usize, target: &Var, source: &Operand) -> Result<()> {
        let u = target
            .vertex()
            .ok_or_else(|| Error::InvalidPlan("loop must bind an f variable".into()))?;
        let restrict = self.range_for(u);
        let SetValue::Delta(list) = self.resolve(source)? else {
            return Err(Error::InvalidPlan("delta loop over a plain set".into()));
        };
        let prev = self.cur_sign;
        for &(sign, v) in list.iter() {
            if !in_range(v, restrict) {
                continue;
            }
            self.cur_sign = Some(sign);
            self.f[u] = v;
            self.fset[u] = true;
            self.exec(pos + 1)?;
        }
        self.fset[u] = false;
        self.cur_sign = prev;
        Ok(())
    }

    fn fire_report(&mut self, outputs: &[Var]) -> Result<()> {
        let mut vals = Vec::with_capacity(outputs.len());
        for (j, var) in outputs.iter().enumerate() {
            match var {
                Var::F(_) => vals.push(OutVal::V(self.f_val(var)?)),
                _ => {
                    let restrict = self.range_for(j);
                    let list = match self.get(var)? {
                        SetValue::Ids(l) => {
                            l.iter().copied().filter(|&v| in_range(v, restrict)).collect()
                        }
                        SetValue::Universe { above, below, ne } => {
                            let mut lo = above.map_or(0, |a| a.saturating_add(1));
                            let mut hi = below.map_or(self.universe, |b| b.min(self.universe));
                            if let Some((rlo, rhi)) = restrict {
                                lo = lo.max(rlo);
                                hi = hi.min(rhi);
                            }
                            (lo..hi).filter(|v| !ne.contains(v)).collect()
                        }
                        SetValue::Delta(_) => {
                            return Err(Error::InvalidPlan(
                                "a report cannot emit a flagged delta set".into(),
                            ))
                        }
                    };
                    vals.push(OutVal::Set(list));
                }
            }
        }
        self.m.res_firings += 1;
        self.sink.report(self.cur_sign.unwrap_or(Sign::Plus), &vals)
    }

    /// Interprets the suffix starting at `pos`. Loops recurse; every other
    /// instruction runs unconditionally so the query trace is independent
    /// of intermediate set contents.
    fn exec(&mut self, mut pos: usize) -> Result<()> {
        let plan = self.rt.plan.clone();
        while pos < plan.instructions.len() {
            match &plan.instructions[pos] {
                Instruction::Init { target } => {
                    let u = target
                        .vertex()
                        .ok_or_else(|| Error::InvalidPlan("init must bind an f variable".into()))?;
                    self.f[u] = self.start;
                    self.fset[u] = true;
                }
                Instruction::GetAdj { target, source } => {
                    let key = self.f_val(source)?;
                    let ids = self.store.get_batch(key)?;
                    self.set(target, SetValue::Ids(ids));
                }
                Instruction::GetAdjStream { target, source, kind, dir, op } => {
                    let key = self.f_val(source)?;
                    let value = if *kind == EdgeKind::Delta {
                        SetValue::Delta(Arc::new(self.store.get_delta(key, *dir)?))
                    } else {
                        let sign = match op {
                            OpSpec::Plus => Sign::Plus,
                            OpSpec::Minus => Sign::Minus,
                            OpSpec::Star => self.cur_sign.ok_or_else(|| {
                                Error::InvalidPlan("sign-resolved query before the delta loop".into())
                            })?,
                        };
                        SetValue::Ids(Arc::new(self.store.get_stream(key, *kind, *dir, sign)?))
                    };
                    self.set(target, value);
                }
                Instruction::Intersect { target, operands, filters } => {
                    let value = self.eval_intersect(operands, filters)?;
                    self.set(target, value);
                }
                Instruction::TriangleCache { target, fa, fb, a, b } => {
                    self.exec_triangle_cache(target, fa, fb, a, b)?;
                }
                Instruction::Foreach { target, source } => {
                    return self.run_foreach(pos, target, source);
                }
                Instruction::ForeachDelta { target, source } => {
                    return self.run_foreach_delta(pos, target, source);
                }
                Instruction::InSetTest { subject, set } => {
                    let v = self.f_val(subject)?;
                    let ok = match self.get(set)? {
                        SetValue::Ids(l) => l.binary_search(&v).is_ok(),
                        SetValue::Universe { above, below, ne } => {
                            above.map_or(true, |a| v > a)
                                && below.map_or(v < self.universe, |b| v < b)
                                && !ne.contains(&v)
                        }
                        SetValue::Delta(l) => l.iter().any(|&(_, w)| w == v),
                    };
                    if !ok {
                        return Ok(());
                    }
                }
                Instruction::Report { outputs } => {
                    self.fire_report(outputs)?;
                }
            }
            pos += 1;
        }
        Ok(())
    }
}

/// Runs every expansion of a possibly compressed report: one pick per image
/// set, pairwise distinct, and re-checked against the pattern's order
/// conditions (the compiler dropped those filters with the loops).
pub(crate) fn for_each_expansion(
    po: &[(usize, usize)],
    vals: &[OutVal],
    f: &mut dyn FnMut(&[VertexId]) -> Result<()>,
) -> Result<()> {
    let n = vals.len();
    let mut out = vec![0; n];
    let mut set_slots = Vec::new();
    for (j, v) in vals.iter().enumerate() {
        match v {
            OutVal::V(x) => out[j] = *x,
            OutVal::Set(_) => set_slots.push(j),
        }
    }
    let po: Vec<(usize, usize)> = po
        .iter()
        .filter(|(a, b)| set_slots.contains(a) && set_slots.contains(b))
        .copied()
        .collect();
    fn rec(
        k: usize,
        set_slots: &[usize],
        vals: &[OutVal],
        po: &[(usize, usize)],
        out: &mut Vec<VertexId>,
        f: &mut dyn FnMut(&[VertexId]) -> Result<()>,
    ) -> Result<()> {
        if k == set_slots.len() {
            if po.iter().all(|&(a, b)| out[a] < out[b]) {
                f(out)?;
            }
            return Ok(());
        }
        let slot = set_slots[k];
        let OutVal::Set(list) = &vals[slot] else { unreachable!() };
        for &v in list {
            if set_slots[..k].iter().any(|&s| out[s] == v) {
                continue;
            }
            out[slot] = v;
            rec(k + 1, set_slots, vals, po, out, f)?;
        }
        Ok(())
    }
    rec(0, &set_slots, vals, &po, &mut out, f)
}

fn format_match(m: &[VertexId]) -> String {
    m.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn format_code(vals: &[OutVal]) -> String {
    vals.iter()
        .map(|v| match v {
            OutVal::V(x) => x.to_string(),
            OutVal::Set(l) => {
                format!("[{}]", l.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkMode {
    /// Count embeddings (compressed reports are expanded).
    Count,
    /// One line per embedding.
    Emit,
    /// One line per compressed code; the count is the number of codes.
    EmitCompressed,
}

struct BatchSink {
    mode: SinkMode,
    collect: bool,
    po: Vec<(usize, usize)>,
    count: u64,
    lines: Vec<String>,
    matches: Vec<Vec<VertexId>>,
}

impl ReportSink for BatchSink {
    fn report(&mut self, _sign: Sign, vals: &[OutVal]) -> Result<()> {
        // A code with an empty image set stands for zero embeddings.
        if vals.iter().any(|v| matches!(v, OutVal::Set(s) if s.is_empty())) {
            return Ok(());
        }
        match self.mode {
            SinkMode::Count => {
                let count = &mut self.count;
                for_each_expansion(&self.po, vals, &mut |_| {
                    *count += 1;
                    Ok(())
                })?;
            }
            SinkMode::Emit => {
                let (count, lines) = (&mut self.count, &mut self.lines);
                for_each_expansion(&self.po, vals, &mut |m| {
                    *count += 1;
                    lines.push(format_match(m));
                    Ok(())
                })?;
            }
            SinkMode::EmitCompressed => {
                self.count += 1;
                self.lines.push(format_code(vals));
            }
        }
        if self.collect {
            let matches = &mut self.matches;
            for_each_expansion(&self.po, vals, &mut |m| {
                matches.push(m.to_vec());
                Ok(())
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub workers: usize,
    /// Split threshold θ; `None` disables splitting.
    pub theta: Option<usize>,
    pub sink: SinkMode,
    /// Gather expanded matches in memory (tests and small runs).
    pub collect: bool,
    /// Fixed matching order; otherwise the cost search picks one.
    pub order: Option<Vec<usize>>,
    pub opts: PipelineOpts,
    /// Cross-check every triangle-cache hit against a direct intersection.
    pub shadow_check: bool,
    pub trc_cap_bytes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            theta: None,
            sink: SinkMode::Count,
            collect: false,
            order: None,
            opts: PipelineOpts::default(),
            shadow_check: false,
            trc_cap_bytes: 64 << 20,
        }
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub match_count: u64,
    pub matches: Vec<Vec<VertexId>>,
    pub lines: Vec<String>,
    pub comm: CommCounts,
    pub comp: CompCounts,
    pub worker_busy: Vec<Duration>,
    pub tasks: usize,
    pub plan: ExecutionPlan,
}

struct TaskOut {
    count: u64,
    lines: Vec<String>,
    matches: Vec<Vec<VertexId>>,
    comp: CompCounts,
}

/// Degree-sum statistics of a stored batch graph, for order selection.
pub fn batch_stats(backend: &dyn GraphStore, universe: VertexId) -> Result<GraphStats> {
    let mut degree_sum = 0u64;
    for key in backend.keys() {
        degree_sum += backend_adjacency(backend, key)?.len() as u64;
    }
    Ok(GraphStats::new(universe as u64, degree_sum / 2))
}

/// Runs an already compiled batch plan over every task. Counter deltas are
/// relative to the run, not the store's lifetime.
pub fn run_batch_plan(
    p: &PatternGraph,
    plan: &ExecutionPlan,
    store: &CachedStore,
    universe: VertexId,
    cfg: &RunConfig,
) -> Result<RunSummary> {
    let rt = PlanRuntime::new(plan.clone());
    let tasks = generate_tasks(p, plan, store.backend().as_ref(), universe, cfg.theta)?;
    let workers = cfg.workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let busy: Vec<AtomicU64> = (0..workers).map(|_| AtomicU64::new(0)).collect();
    let before = store.metrics.snapshot();
    let outs: Result<Vec<TaskOut>> = pool.install(|| {
        tasks
            .par_iter()
            // One stealable unit per task: split tasks cluster by start
            // vertex, and coarser leaves would pin a heavy start's slices
            // to a single worker.
            .with_max_len(1)
            .map(|task| {
                let t0 = Instant::now();
                let mut sink = BatchSink {
                    mode: cfg.sink,
                    collect: cfg.collect,
                    po: p.partial_order.clone(),
                    count: 0,
                    lines: Vec::new(),
                    matches: Vec::new(),
                };
                let mut interp = Interp::new(
                    &rt,
                    store,
                    universe,
                    *task,
                    cfg.shadow_check,
                    cfg.trc_cap_bytes,
                    &mut sink,
                );
                interp.run()?;
                let comp = interp.m;
                let idx = rayon::current_thread_index().unwrap_or(0);
                busy[idx].fetch_add(t0.elapsed().as_nanos() as u64, Ordering::Relaxed);
                Ok(TaskOut { count: sink.count, lines: sink.lines, matches: sink.matches, comp })
            })
            .collect()
    });
    let outs = outs?;
    let after = store.metrics.snapshot();
    let mut summary = RunSummary {
        match_count: 0,
        matches: Vec::new(),
        lines: Vec::new(),
        comm: after.minus(&before),
        comp: CompCounts::default(),
        worker_busy: busy
            .into_iter()
            .map(|ns| Duration::from_nanos(ns.into_inner()))
            .collect(),
        tasks: tasks.len(),
        plan: plan.clone(),
    };
    for out in outs {
        summary.match_count += out.count;
        summary.lines.extend(out.lines);
        summary.matches.extend(out.matches);
        summary.comp.absorb(&out.comp);
    }
    Ok(summary)
}

/// Batch enumeration end to end: pick an order (unless fixed), compile,
/// and run.
pub fn enumerate(
    p: &PatternGraph,
    store: &CachedStore,
    universe: VertexId,
    cfg: &RunConfig,
) -> Result<RunSummary> {
    let order = match &cfg.order {
        Some(o) => {
            validate_order(p, o)?;
            o.clone()
        }
        None => {
            let stats = batch_stats(store.backend().as_ref(), universe)?;
            best_batch_order(p, &stats, &ErEstimator)?.order
        }
    };
    let plan = compile_batch_plan(p, &order, cfg.opts)?;
    run_batch_plan(p, &plan, store, universe, cfg)
}
