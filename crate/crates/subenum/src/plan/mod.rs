//! Backtracking execution plans: instruction IR, text form, compilation
//! from pattern graphs, and the optimization passes.

mod compile;
mod optimize;
mod text;

pub use compile::{
    cover_prefix_len, generate_raw_incremental_plan, generate_raw_plan, CompileOpts,
};
pub use optimize::{
    apply_cse, apply_trc, apply_vcbc, compile_batch_plan, compile_incremental_plan,
    reorder_instructions, PipelineOpts,
};
pub use text::{dump_plan, parse_plan};

use crate::graph::PatternGraph;
use crate::{Error, Result};
use std::collections::HashSet;

/// Adjacency-set kind in streaming queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Either,
    Delta,
    Unaltered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    In,
    Out,
}

/// Snapshot selector of a streaming adjacency query. `Star` is the raw
/// flagged delta set for `Delta` kind; for other kinds it resolves at run
/// time to the sign of the delta edge currently bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpSpec {
    Plus,
    Minus,
    Star,
}

/// Variables carry their surface index: `F(1)` prints as `f1` and binds
/// pattern vertex u₁ (internal index 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    F(usize),
    A(usize),
    T(usize),
    C(usize),
    S { kind: EdgeKind, dir: Dir, i: usize },
}

impl Var {
    pub fn f_for(vertex: usize) -> Var {
        Var::F(vertex + 1)
    }

    /// Pattern vertex bound by an `F` variable.
    pub fn vertex(&self) -> Option<usize> {
        match self {
            Var::F(i) => Some(i - 1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operand {
    Var(Var),
    /// The whole vertex universe V(G); iterated lazily, never materialized.
    Universe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    /// Candidate must succeed f_subject in the total order (`>f_i`).
    Succ,
    /// Candidate must precede f_subject (`<f_i`).
    Prec,
    /// Candidate must differ from f_subject (`≠f_i`).
    Neq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Filter {
    pub kind: FilterKind,
    /// Pattern vertex (0-based) whose binding the candidate is compared to.
    pub subject: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    /// `f_i := Init(start)`
    Init { target: Var },
    /// `A_i := GetAdj(f_i)` (batch)
    GetAdj { target: Var, source: Var },
    /// `X := GetAdj(f_i, kind, dir, op)` (streaming)
    GetAdjStream { target: Var, source: Var, kind: EdgeKind, dir: Dir, op: OpSpec },
    /// `X := Intersect(o_1, …, o_k) | {filters}`
    Intersect { target: Var, operands: Vec<Operand>, filters: Vec<Filter> },
    /// `X := TCache(f_a, f_b, A_a, A_b)`; consults the per-task triangle cache.
    TriangleCache { target: Var, fa: Var, fb: Var, a: Var, b: Var },
    /// `f_i := Foreach(X)`
    Foreach { target: Var, source: Operand },
    /// `op, f_i := Foreach(X)`; iterates a flagged delta set.
    ForeachDelta { target: Var, source: Operand },
    /// `InSetTest(f_i, X)`; backtracks unless f_i ∈ X.
    InSetTest { subject: Var, set: Var },
    /// `f := ReportMatch(…)`; compressed plans list candidate sets for
    /// vertices outside the cover.
    Report { outputs: Vec<Var> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum InstrKind {
    Ini,
    Int,
    Trc,
    Ins,
    Dbq,
    Enu,
    Res,
}

impl Instruction {
    pub fn kind(&self) -> InstrKind {
        match self {
            Instruction::Init { .. } => InstrKind::Ini,
            Instruction::GetAdj { .. } | Instruction::GetAdjStream { .. } => InstrKind::Dbq,
            Instruction::Intersect { .. } => InstrKind::Int,
            Instruction::TriangleCache { .. } => InstrKind::Trc,
            Instruction::Foreach { .. } | Instruction::ForeachDelta { .. } => InstrKind::Enu,
            Instruction::InSetTest { .. } => InstrKind::Ins,
            Instruction::Report { .. } => InstrKind::Res,
        }
    }

    pub fn target(&self) -> Option<Var> {
        match self {
            Instruction::Init { target }
            | Instruction::GetAdj { target, .. }
            | Instruction::GetAdjStream { target, .. }
            | Instruction::Intersect { target, .. }
            | Instruction::TriangleCache { target, .. }
            | Instruction::Foreach { target, .. }
            | Instruction::ForeachDelta { target, .. } => Some(*target),
            Instruction::InSetTest { .. } | Instruction::Report { .. } => None,
        }
    }

    /// Variables this instruction reads.
    pub fn uses(&self) -> Vec<Var> {
        match self {
            Instruction::Init { .. } => vec![],
            Instruction::GetAdj { source, .. } | Instruction::GetAdjStream { source, .. } => {
                vec![*source]
            }
            Instruction::Intersect { operands, filters, .. } => {
                let mut v: Vec<Var> = operands
                    .iter()
                    .filter_map(|o| match o {
                        Operand::Var(x) => Some(*x),
                        Operand::Universe => None,
                    })
                    .collect();
                v.extend(filters.iter().map(|f| Var::f_for(f.subject)));
                v
            }
            Instruction::TriangleCache { fa, fb, a, b, .. } => vec![*fa, *fb, *a, *b],
            Instruction::Foreach { source, .. } | Instruction::ForeachDelta { source, .. } => {
                match source {
                    Operand::Var(x) => vec![*x],
                    Operand::Universe => vec![],
                }
            }
            Instruction::InSetTest { subject, set } => vec![*subject, *set],
            Instruction::Report { outputs } => outputs.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanKind {
    Batch,
    /// Incremental plan for the i-th (1-based) pattern edge being the delta.
    Incremental { delta_edge: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionPlan {
    pub instructions: Vec<Instruction>,
    /// Matching order as 0-based pattern vertices.
    pub order: Vec<usize>,
    pub kind: PlanKind,
    /// Cover-prefix length when vertex-cover compression was applied.
    pub vcbc_cover: Option<usize>,
}

impl ExecutionPlan {
    pub fn pattern_size(&self) -> usize {
        self.order.len()
    }

    /// Target of the single Init instruction.
    pub fn start_vertex(&self) -> usize {
        self.order[0]
    }
}

/// Structural checks: single leading Init, single trailing Report,
/// definition-before-use, unique targets, filter subjects bound, TRC
/// anchored at the start vertex, streaming prefix discipline.
pub fn validate_plan(plan: &ExecutionPlan, p: &PatternGraph) -> Result<()> {
    let err = |msg: String| Err(Error::InvalidPlan(msg));
    crate::graph::validate_order(p, &plan.order)?;
    let ins = &plan.instructions;
    if ins.is_empty() {
        return err("empty plan".into());
    }
    if !matches!(ins[0], Instruction::Init { .. }) {
        return err("plan must start with Init".into());
    }
    if !matches!(ins.last().unwrap(), Instruction::Report { .. }) {
        return err("plan must end with ReportMatch".into());
    }
    if ins.iter().filter(|i| matches!(i, Instruction::Init { .. })).count() != 1 {
        return err("plan must contain exactly one Init".into());
    }
    if ins.iter().filter(|i| matches!(i, Instruction::Report { .. })).count() != 1 {
        return err("plan must contain exactly one ReportMatch".into());
    }
    match ins[0].target() {
        Some(v) if v.vertex() == Some(plan.order[0]) => {}
        _ => return err("Init must bind the first matching-order vertex".into()),
    }

    let mut defined: HashSet<Var> = HashSet::new();
    let mut delta_enu_seen = false;
    for (pos, i) in ins.iter().enumerate() {
        for used in i.uses() {
            if !defined.contains(&used) {
                return err(format!("instruction {} uses undefined {:?}", pos + 1, used));
            }
        }
        if let Instruction::TriangleCache { fa, fb, .. } = i {
            if plan.kind != PlanKind::Batch {
                return err("TCache is batch-only".into());
            }
            let start = plan.order[0];
            if fa.vertex() != Some(start) && fb.vertex() != Some(start) {
                return err("TCache must involve the task's start vertex".into());
            }
        }
        if let Instruction::GetAdjStream { kind, op, .. } = i {
            if plan.kind == PlanKind::Batch {
                return err("streaming GetAdj in a batch plan".into());
            }
            if *op == OpSpec::Star && *kind != EdgeKind::Delta && !delta_enu_seen {
                return err("branch-resolved GetAdj before the delta Foreach".into());
            }
        }
        if matches!(i, Instruction::ForeachDelta { .. }) {
            if plan.kind == PlanKind::Batch {
                return err("delta Foreach in a batch plan".into());
            }
            delta_enu_seen = true;
        }
        if let Some(t) = i.target() {
            if !defined.insert(t) {
                return err(format!("{t:?} defined twice"));
            }
        }
    }

    if let PlanKind::Incremental { delta_edge } = plan.kind {
        if delta_edge == 0 || delta_edge > p.edge_count() {
            return err(format!("delta edge e{delta_edge} out of range"));
        }
        let (s, t) = p.edges[delta_edge - 1];
        if plan.order.len() >= 2 && (plan.order[0] != s || plan.order[1] != t) {
            return err("incremental order must start with the delta edge endpoints".into());
        }
        if !delta_enu_seen {
            return err("incremental plan needs a delta Foreach".into());
        }
    }

    if let Some(k) = plan.vcbc_cover {
        if k == 0 || k > plan.order.len() {
            return err(format!("cover length {k} out of range"));
        }
    }

    let Instruction::Report { outputs } = ins.last().unwrap() else { unreachable!() };
    if outputs.len() != p.n {
        return err(format!("ReportMatch must list {} outputs", p.n));
    }
    Ok(())
}

/// Smallest unused index for fresh T-variables, shared with C/T namespaces.
pub fn fresh_index(instructions: &[Instruction], n: usize) -> usize {
    let mut max = n;
    for i in instructions {
        if let Some(Var::T(j)) | Some(Var::C(j)) = i.target() {
            max = max.max(j);
        }
    }
    max + 1
}
