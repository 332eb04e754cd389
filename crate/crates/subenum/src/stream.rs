//! Continuous enumeration over a dynamic directed graph: one incremental
//! plan per pattern edge, three-phase step processing (stage deltas,
//! enumerate against the two logical snapshots, merge), and signed match
//! reporting.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;

use crate::cost::{best_incremental_order, ErEstimator, GraphStats};
use crate::exec::{balanced_chunks, CompCounts, Interp, OutVal, PlanRuntime, ReportSink, SearchTask};
use crate::graph::{DirectedGraph, PatternGraph};
use crate::oracle::CanonicalSubgraph;
use crate::plan::{compile_incremental_plan, ExecutionPlan};
use crate::store::{apply_delta_sets, merge_post_step, store_snapshot, CachedStore, CommCounts, MemoryStore};
use crate::{Error, Result, Sign, VertexId};

#[derive(Debug, Clone)]
pub struct StreamConfig {
    pub workers: usize,
    /// Split threshold over a start vertex's delta out-set.
    pub theta: Option<usize>,
    pub cache_bytes: usize,
    /// Matching orders per delta edge; `None` lets the cost search pick.
    pub orders: Option<Vec<Vec<usize>>>,
    /// Assert the delta-edge/disjointness laws on every step.
    pub strict_checks: bool,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            theta: None,
            cache_bytes: 4 << 20,
            orders: None,
            strict_checks: false,
        }
    }
}

#[derive(Debug)]
pub struct StepResult {
    pub step: u64,
    /// All appearing matches, pattern-vertex order bindings.
    pub appearing: Vec<Vec<VertexId>>,
    pub disappearing: Vec<Vec<VertexId>>,
    /// The same matches attributed to the plan (delta edge) that found them.
    pub per_plan_appearing: Vec<Vec<Vec<VertexId>>>,
    pub per_plan_disappearing: Vec<Vec<Vec<VertexId>>>,
    pub comm: CommCounts,
    pub comp: CompCounts,
    pub tasks: usize,
}

struct TaskOut {
    appearing: Vec<Vec<Vec<VertexId>>>,
    disappearing: Vec<Vec<Vec<VertexId>>>,
    comp: CompCounts,
}

struct StreamSink<'a> {
    plan_idx: usize,
    out: &'a mut TaskOut,
}

impl ReportSink for StreamSink<'_> {
    fn report(&mut self, sign: Sign, vals: &[OutVal]) -> Result<()> {
        let mut m = Vec::with_capacity(vals.len());
        for v in vals {
            match v {
                OutVal::V(x) => m.push(*x),
                OutVal::Set(_) => {
                    return Err(Error::InvalidPlan(
                        "incremental plans report plain bindings only".into(),
                    ))
                }
            }
        }
        match sign {
            Sign::Plus => self.out.appearing[self.plan_idx].push(m),
            Sign::Minus => self.out.disappearing[self.plan_idx].push(m),
        }
        Ok(())
    }
}

pub struct StreamEngine {
    p: PatternGraph,
    plans: Vec<ExecutionPlan>,
    runtimes: Vec<PlanRuntime>,
    store: CachedStore,
    pool: rayon::ThreadPool,
    cfg: StreamConfig,
    universe: VertexId,
    step: u64,
}

impl StreamEngine {
    /// Stores the initial snapshot and compiles one incremental plan per
    /// pattern edge.
    pub fn new(p: PatternGraph, initial: &DirectedGraph, cfg: StreamConfig) -> Result<Self> {
        if !p.directed {
            return Err(Error::InvalidPattern("streaming needs a directed pattern".into()));
        }
        let backend = Arc::new(MemoryStore::new());
        store_snapshot(backend.as_ref(), initial)?;
        let store = CachedStore::new(backend, cfg.cache_bytes);
        let stats = GraphStats::of_directed(initial);
        let mut plans = Vec::with_capacity(p.edges.len());
        for i in 1..=p.edges.len() {
            let order = match &cfg.orders {
                Some(orders) => orders
                    .get(i - 1)
                    .cloned()
                    .ok_or_else(|| Error::InvalidOrder(format!("no order given for plan {i}")))?,
                None => best_incremental_order(&p, i, &stats, &ErEstimator)?.order,
            };
            plans.push(compile_incremental_plan(&p, i, &order)?);
        }
        let runtimes = plans.iter().map(|pl| PlanRuntime::new(pl.clone())).collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers.max(1))
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(StreamEngine {
            p,
            plans,
            runtimes,
            store,
            pool,
            cfg,
            universe: initial.vertex_count() as VertexId,
            step: 0,
        })
    }

    pub fn plans(&self) -> &[ExecutionPlan] {
        &self.plans
    }

    pub fn store(&self) -> &CachedStore {
        &self.store
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    /// Runs one time step: stages the update batch, enumerates every
    /// incremental plan from each start with a non-empty delta out-set, then
    /// folds the deltas into the snapshot. The batch is validated atomically
    /// before anything is written.
    pub fn process_step(&mut self, batch: &[(Sign, VertexId, VertexId)]) -> Result<StepResult> {
        apply_delta_sets(self.store.backend().as_ref(), batch)?;
        self.step += 1;
        self.store.set_step(self.step);
        for &(_, a, b) in batch {
            self.universe = self.universe.max(a.max(b) + 1);
        }

        let mut delta_out: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
        for &(_, a, b) in batch {
            delta_out.entry(a).or_default().push(b);
        }
        let mut tasks = Vec::new();
        for (&start, outs) in &mut delta_out {
            outs.sort_unstable();
            match self.cfg.theta {
                Some(theta) if outs.len() >= theta.max(1) => {
                    let chunks = balanced_chunks(outs.len(), theta.max(1));
                    let last = chunks.len() - 1;
                    for (i, (a, b)) in chunks.into_iter().enumerate() {
                        let lo = if i == 0 { 0 } else { outs[a] };
                        let hi = if i == last { VertexId::MAX } else { outs[b] };
                        tasks.push(SearchTask { start, range: Some((lo, hi)) });
                    }
                }
                _ => tasks.push(SearchTask { start, range: None }),
            }
        }

        let m = self.plans.len();
        let before = self.store.metrics.snapshot();
        let outs: Result<Vec<TaskOut>> = self.pool.install(|| {
            tasks
                .par_iter()
                .with_max_len(1)
                .map(|task| {
                    let mut out = TaskOut {
                        appearing: vec![Vec::new(); m],
                        disappearing: vec![Vec::new(); m],
                        comp: CompCounts::default(),
                    };
                    for (idx, rt) in self.runtimes.iter().enumerate() {
                        let mut sink = StreamSink { plan_idx: idx, out: &mut out };
                        let mut interp = Interp::new(
                            rt,
                            &self.store,
                            self.universe,
                            *task,
                            false,
                            64 << 20,
                            &mut sink,
                        );
                        interp.run()?;
                        let comp = interp.m;
                        out.comp.absorb(&comp);
                    }
                    Ok(out)
                })
                .collect()
        });
        let outs = outs?;
        let after = self.store.metrics.snapshot();

        let mut result = StepResult {
            step: self.step,
            appearing: Vec::new(),
            disappearing: Vec::new(),
            per_plan_appearing: vec![Vec::new(); m],
            per_plan_disappearing: vec![Vec::new(); m],
            comm: after.minus(&before),
            comp: CompCounts::default(),
            tasks: tasks.len(),
        };
        for out in outs {
            for i in 0..m {
                result.per_plan_appearing[i].extend(out.appearing[i].iter().cloned());
                result.per_plan_disappearing[i].extend(out.disappearing[i].iter().cloned());
            }
            result.comp.absorb(&out.comp);
        }
        for i in 0..m {
            result.appearing.extend(result.per_plan_appearing[i].iter().cloned());
            result.disappearing.extend(result.per_plan_disappearing[i].iter().cloned());
        }

        if self.cfg.strict_checks {
            self.assert_step_laws(batch, &result);
        }

        merge_post_step(self.store.backend().as_ref(), batch)?;
        Ok(result)
    }

    /// The structural guarantees of incremental matching, checked against
    /// this step's actual emissions: the delta edge of plan i maps to an
    /// update of the right sign, no plan emits a subgraph twice, and no two
    /// plans emit the same subgraph.
    fn assert_step_laws(&self, batch: &[(Sign, VertexId, VertexId)], r: &StepResult) {
        let plus: HashSet<(VertexId, VertexId)> =
            batch.iter().filter(|(s, ..)| *s == Sign::Plus).map(|&(_, a, b)| (a, b)).collect();
        let minus: HashSet<(VertexId, VertexId)> =
            batch.iter().filter(|(s, ..)| *s == Sign::Minus).map(|&(_, a, b)| (a, b)).collect();
        for (i, (plan_app, plan_dis)) in
            r.per_plan_appearing.iter().zip(&r.per_plan_disappearing).enumerate()
        {
            let (s, t) = self.p.edges[i];
            for m in plan_app {
                assert!(
                    plus.contains(&(m[s], m[t])),
                    "appearing match {m:?} of plan {} does not use an inserted delta edge",
                    i + 1
                );
            }
            for m in plan_dis {
                assert!(
                    minus.contains(&(m[s], m[t])),
                    "disappearing match {m:?} of plan {} does not use a deleted delta edge",
                    i + 1
                );
            }
        }
        for (kind, per_plan) in
            [("appearing", &r.per_plan_appearing), ("disappearing", &r.per_plan_disappearing)]
        {
            let mut seen: HashSet<CanonicalSubgraph> = HashSet::new();
            for (i, matches) in per_plan.iter().enumerate() {
                let mut own: HashSet<CanonicalSubgraph> = HashSet::new();
                for m in matches {
                    let c = CanonicalSubgraph::from_match(&self.p, m);
                    assert!(own.insert(c.clone()), "plan {} emitted {kind} {m:?} twice", i + 1);
                    assert!(
                        seen.insert(c),
                        "{kind} subgraph {m:?} emitted by two plans (second: plan {})",
                        i + 1
                    );
                }
            }
        }
    }
}
