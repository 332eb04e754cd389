//! Raw plan generation: pattern + matching order -> unoptimized instruction
//! sequence, followed by the cleanup passes (uni-operand elimination,
//! useless-adjacency-query removal) that both pipelines share.

use super::{
    validate_plan, Dir, EdgeKind, ExecutionPlan, Filter, FilterKind, Instruction, Operand, OpSpec,
    PlanKind, Var,
};
use crate::graph::{validate_order, PatternGraph};
use crate::{Error, Result};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, Default)]
pub struct CompileOpts {
    /// Keep candidate sets of vertices outside the cover prefix alive even
    /// when they degenerate to a filter-free copy, so compression can emit
    /// them as image sets later.
    pub protect_vcbc_sets: bool,
}

/// Length of the shortest order prefix whose vertices cover every pattern
/// edge. Never 0: the first vertex is bound by Init and cannot be compressed
/// away.
pub fn cover_prefix_len(p: &PatternGraph, order: &[usize]) -> usize {
    let mut prefix = BTreeSet::new();
    for (i, &u) in order.iter().enumerate() {
        if i > 0 && p.edges.iter().all(|&(a, b)| prefix.contains(&a) || prefix.contains(&b)) {
            return i;
        }
        prefix.insert(u);
    }
    order.len().max(1)
}

pub(super) fn protected_vars(p: &PatternGraph, order: &[usize], opts: &CompileOpts) -> BTreeSet<Var> {
    if !opts.protect_vcbc_sets {
        return BTreeSet::new();
    }
    let k = cover_prefix_len(p, order);
    order[k..].iter().map(|&u| Var::C(u + 1)).collect()
}

/// Injectivity/order filters for binding `u` after `earlier` (in binding
/// order). A precedence constraint wins over a plain inequality; an earlier
/// vertex adjacent to `u` needs no filter at all, since `u`'s candidates come
/// from its neighbour list and the data graph has no self-loops.
fn injective_filters(p: &PatternGraph, earlier: &[usize], u: usize) -> Vec<Filter> {
    let mut filters = Vec::new();
    for &w in earlier {
        if p.partial_order.contains(&(w, u)) {
            filters.push(Filter { kind: FilterKind::Succ, subject: w });
        } else if p.partial_order.contains(&(u, w)) {
            filters.push(Filter { kind: FilterKind::Prec, subject: w });
        } else if !p.adjacent(w, u) {
            filters.push(Filter { kind: FilterKind::Neq, subject: w });
        }
    }
    filters
}

pub fn generate_raw_plan(
    p: &PatternGraph,
    order: &[usize],
    opts: &CompileOpts,
) -> Result<ExecutionPlan> {
    validate_order(p, order)?;
    let mut instrs = Vec::new();
    for (i, &u) in order.iter().enumerate() {
        let fu = Var::f_for(u);
        if i == 0 {
            instrs.push(Instruction::Init { target: fu });
        } else {
            let operands: Vec<Operand> = order[..i]
                .iter()
                .filter(|&&w| p.adjacent(w, u))
                .map(|&w| Operand::Var(Var::A(w + 1)))
                .collect();
            let operands = if operands.is_empty() { vec![Operand::Universe] } else { operands };
            instrs.push(Instruction::Intersect {
                target: Var::T(u + 1),
                operands,
                filters: Vec::new(),
            });
            instrs.push(Instruction::Intersect {
                target: Var::C(u + 1),
                operands: vec![Operand::Var(Var::T(u + 1))],
                filters: injective_filters(p, &order[..i], u),
            });
            instrs.push(Instruction::Foreach { target: fu, source: Operand::Var(Var::C(u + 1)) });
        }
        if order[i + 1..].iter().any(|&w| p.adjacent(w, u)) {
            instrs.push(Instruction::GetAdj { target: Var::A(u + 1), source: fu });
        }
    }
    instrs.push(Instruction::Report { outputs: (0..p.n).map(Var::f_for).collect() });

    uni_operand_elimination(&mut instrs, &protected_vars(p, order, opts));
    let plan = ExecutionPlan {
        instructions: instrs,
        order: order.to_vec(),
        kind: PlanKind::Batch,
        vcbc_cover: None,
    };
    validate_plan(&plan, p)?;
    Ok(plan)
}

/// Incremental plan for the `delta_edge`-th pattern edge (1-based). Edges
/// before it match as `either` (present after/before the step depending on
/// the branch sign), the edge itself matches the flagged delta, and edges
/// after it match only unaltered adjacency — the typing that makes the
/// per-edge result streams disjoint.
pub fn generate_raw_incremental_plan(
    p: &PatternGraph,
    delta_edge: usize,
    order: &[usize],
) -> Result<ExecutionPlan> {
    if !p.directed {
        return Err(Error::InvalidPlan("incremental plans need a directed pattern".into()));
    }
    if delta_edge == 0 || delta_edge > p.edges.len() {
        return Err(Error::InvalidPlan(format!(
            "delta edge e{delta_edge} out of range 1..={}",
            p.edges.len()
        )));
    }
    validate_order(p, order)?;
    let (s, t) = p.edges[delta_edge - 1];
    if order.len() < 2 || order[0] != s || order[1] != t {
        return Err(Error::InvalidOrder(format!(
            "incremental order must start with the delta edge endpoints u{},u{}",
            s + 1,
            t + 1
        )));
    }
    let tau = |edge_idx: usize| -> EdgeKind {
        match (edge_idx + 1).cmp(&delta_edge) {
            std::cmp::Ordering::Less => EdgeKind::Either,
            std::cmp::Ordering::Equal => EdgeKind::Delta,
            std::cmp::Ordering::Greater => EdgeKind::Unaltered,
        }
    };
    let edge_idx = |a: usize, b: usize| p.edges.iter().position(|&e| e == (a, b)).unwrap();
    let adj_kinds = [
        (EdgeKind::Either, Dir::In),
        (EdgeKind::Either, Dir::Out),
        (EdgeKind::Unaltered, Dir::In),
        (EdgeKind::Unaltered, Dir::Out),
    ];

    let mut instrs = Vec::new();
    let delta_set = Var::S { kind: EdgeKind::Delta, dir: Dir::Out, i: s + 1 };
    instrs.push(Instruction::Init { target: Var::f_for(s) });
    instrs.push(Instruction::GetAdjStream {
        target: delta_set,
        source: Var::f_for(s),
        kind: EdgeKind::Delta,
        dir: Dir::Out,
        op: OpSpec::Star,
    });
    instrs.push(Instruction::Intersect {
        target: Var::C(t + 1),
        operands: vec![Operand::Var(delta_set)],
        filters: injective_filters(p, &order[..1], t),
    });
    instrs.push(Instruction::ForeachDelta {
        target: Var::f_for(t),
        source: Operand::Var(Var::C(t + 1)),
    });
    for v in [s, t] {
        for (kind, dir) in adj_kinds {
            instrs.push(Instruction::GetAdjStream {
                target: Var::S { kind, dir, i: v + 1 },
                source: Var::f_for(v),
                kind,
                dir,
                op: OpSpec::Star,
            });
        }
    }
    if p.has_arc(t, s) {
        // The reverse arc closes a 2-cycle on the delta edge; probe it
        // directly instead of re-deriving f_s from an intersection.
        let kind = tau(edge_idx(t, s));
        instrs.push(Instruction::InSetTest {
            subject: Var::f_for(s),
            set: Var::S { kind, dir: Dir::Out, i: t + 1 },
        });
    }
    for (i, &u) in order.iter().enumerate().skip(2) {
        let mut operands = Vec::new();
        for &w in &order[..i] {
            if p.has_arc(w, u) {
                let kind = tau(edge_idx(w, u));
                operands.push(Operand::Var(Var::S { kind, dir: Dir::Out, i: w + 1 }));
            }
            if p.has_arc(u, w) {
                let kind = tau(edge_idx(u, w));
                operands.push(Operand::Var(Var::S { kind, dir: Dir::In, i: w + 1 }));
            }
        }
        let operands = if operands.is_empty() { vec![Operand::Universe] } else { operands };
        instrs.push(Instruction::Intersect {
            target: Var::T(u + 1),
            operands,
            filters: Vec::new(),
        });
        instrs.push(Instruction::Intersect {
            target: Var::C(u + 1),
            operands: vec![Operand::Var(Var::T(u + 1))],
            filters: injective_filters(p, &order[..i], u),
        });
        instrs.push(Instruction::Foreach {
            target: Var::f_for(u),
            source: Operand::Var(Var::C(u + 1)),
        });
        for (kind, dir) in adj_kinds {
            instrs.push(Instruction::GetAdjStream {
                target: Var::S { kind, dir, i: u + 1 },
                source: Var::f_for(u),
                kind,
                dir,
                op: OpSpec::Star,
            });
        }
    }
    instrs.push(Instruction::Report { outputs: (0..p.n).map(Var::f_for).collect() });

    remove_useless_dbqs(&mut instrs);
    uni_operand_elimination(&mut instrs, &BTreeSet::new());
    let plan = ExecutionPlan {
        instructions: instrs,
        order: order.to_vec(),
        kind: PlanKind::Incremental { delta_edge },
        vcbc_cover: None,
    };
    validate_plan(&plan, p)?;
    Ok(plan)
}

fn substitute(inst: &mut Instruction, from: Var, to: Operand) {
    match inst {
        Instruction::Intersect { operands, .. } => {
            for o in operands.iter_mut() {
                if *o == Operand::Var(from) {
                    *o = to;
                }
            }
        }
        Instruction::Foreach { source, .. } | Instruction::ForeachDelta { source, .. } => {
            if *source == Operand::Var(from) {
                *source = to;
            }
        }
        Instruction::TriangleCache { a, b, .. } => {
            if let Operand::Var(v) = to {
                if *a == from {
                    *a = v;
                }
                if *b == from {
                    *b = v;
                }
            }
        }
        Instruction::InSetTest { set, .. } => {
            if let Operand::Var(v) = to {
                if *set == from {
                    *set = v;
                }
            }
        }
        Instruction::Report { outputs } => {
            if let Operand::Var(v) = to {
                for o in outputs.iter_mut() {
                    if *o == from {
                        *o = v;
                    }
                }
            }
        }
        Instruction::Init { .. } | Instruction::GetAdj { .. } | Instruction::GetAdjStream { .. } => {}
    }
}

/// A single-operand, filter-free intersection is a copy: drop it and rewire
/// readers to its operand. Runs to fixpoint; `protected` targets survive.
pub(super) fn uni_operand_elimination(instrs: &mut Vec<Instruction>, protected: &BTreeSet<Var>) {
    loop {
        let Some(pos) = instrs.iter().position(|inst| match inst {
            Instruction::Intersect { target, operands, filters } => {
                operands.len() == 1 && filters.is_empty() && !protected.contains(target)
            }
            _ => false,
        }) else {
            break;
        };
        let (from, to) = match instrs.remove(pos) {
            Instruction::Intersect { target, operands, .. } => (target, operands[0]),
            _ => unreachable!(),
        };
        for inst in instrs.iter_mut() {
            substitute(inst, from, to);
        }
    }
}

/// Drop adjacency queries whose result set no instruction reads. Adjacency
/// queries read only f-variables, so one pass suffices.
pub(super) fn remove_useless_dbqs(instrs: &mut Vec<Instruction>) {
    let mut used = BTreeSet::new();
    for inst in instrs.iter() {
        if !matches!(inst, Instruction::GetAdj { .. } | Instruction::GetAdjStream { .. }) {
            used.extend(inst.uses());
        }
    }
    instrs.retain(|inst| match inst {
        Instruction::GetAdj { target, .. } | Instruction::GetAdjStream { target, .. } => {
            used.contains(target)
        }
        _ => true,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::demo;
    use crate::plan::{dump_plan, parse_plan};

    fn instruction_lines(plan: &ExecutionPlan) -> Vec<String> {
        dump_plan(plan)
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    }

    #[test]
    fn fan_raw_plan_listing() {
        let p = demo::fan_pattern();
        let order = vec![0, 2, 4, 1, 5, 3];
        let plan = generate_raw_plan(&p, &order, &CompileOpts::default()).unwrap();
        let expected = [
            "f1:=Init(start)",
            "A1:=GetAdj(f1)",
            "f3:=Foreach(A1)",
            "A3:=GetAdj(f3)",
            "C5:=Intersect(A1)|{>f3}",
            "f5:=Foreach(C5)",
            "A5:=GetAdj(f5)",
            "T2:=Intersect(A1,A3)",
            "C2:=Intersect(T2)|{≠f5}",
            "f2:=Foreach(C2)",
            "T6:=Intersect(A1,A5)",
            "C6:=Intersect(T6)|{≠f3,≠f2}",
            "f6:=Foreach(C6)",
            "T4:=Intersect(A1,A3,A5)",
            "C4:=Intersect(T4)|{≠f2,≠f6}",
            "f4:=Foreach(C4)",
            "f:=ReportMatch(f1,f2,f3,f4,f5,f6)",
        ];
        assert_eq!(instruction_lines(&plan), expected);

        let reparsed = parse_plan(&dump_plan(&plan)).unwrap();
        assert_eq!(reparsed, plan);
    }

    #[test]
    fn triangle_collapses_to_three_queries() {
        let p = demo::triangle_pattern();
        let plan = generate_raw_plan(&p, &[0, 1, 2], &CompileOpts::default()).unwrap();
        let expected = [
            "f1:=Init(start)",
            "A1:=GetAdj(f1)",
            "f2:=Foreach(A1)",
            "A2:=GetAdj(f2)",
            "T3:=Intersect(A1,A2)",
            "f3:=Foreach(T3)",
            "f:=ReportMatch(f1,f2,f3)",
        ];
        assert_eq!(instruction_lines(&plan), expected);
    }

    #[test]
    fn protection_keeps_degenerate_candidate_sets() {
        let p = crate::graph::PatternGraph::new(2, vec![(0, 1)], false).unwrap();
        let free = generate_raw_plan(&p, &[0, 1], &CompileOpts::default()).unwrap();
        assert_eq!(
            instruction_lines(&free),
            ["f1:=Init(start)", "A1:=GetAdj(f1)", "f2:=Foreach(A1)", "f:=ReportMatch(f1,f2)"]
        );

        let kept =
            generate_raw_plan(&p, &[0, 1], &CompileOpts { protect_vcbc_sets: true }).unwrap();
        assert_eq!(
            instruction_lines(&kept),
            [
                "f1:=Init(start)",
                "A1:=GetAdj(f1)",
                "C2:=Intersect(A1)",
                "f2:=Foreach(C2)",
                "f:=ReportMatch(f1,f2)"
            ]
        );
    }

    #[test]
    fn unconnected_prefix_scans_the_universe() {
        let p = crate::graph::PatternGraph::new(3, vec![(0, 1), (1, 2)], false).unwrap();
        let plan = generate_raw_plan(&p, &[0, 2, 1], &CompileOpts::default()).unwrap();
        let expected = [
            "f1:=Init(start)",
            "A1:=GetAdj(f1)",
            "C3:=Intersect(V(G))|{≠f1}",
            "f3:=Foreach(C3)",
            "A3:=GetAdj(f3)",
            "T2:=Intersect(A1,A3)",
            "f2:=Foreach(T2)",
            "f:=ReportMatch(f1,f2,f3)",
        ];
        assert_eq!(instruction_lines(&plan), expected);
    }

    #[test]
    fn single_vertex_pattern_is_init_and_report() {
        let p = crate::graph::PatternGraph::new(1, vec![], false).unwrap();
        let plan = generate_raw_plan(&p, &[0], &CompileOpts::default()).unwrap();
        assert_eq!(instruction_lines(&plan), ["f1:=Init(start)", "f:=ReportMatch(f1)"]);
    }

    #[test]
    fn cover_prefix_lengths() {
        let fan = demo::fan_pattern();
        assert_eq!(cover_prefix_len(&fan, &[0, 2, 4, 1, 5, 3]), 3);
        let tri = demo::triangle_pattern();
        assert_eq!(cover_prefix_len(&tri, &[0, 1, 2]), 2);
        let edge = crate::graph::PatternGraph::new(2, vec![(0, 1)], false).unwrap();
        assert_eq!(cover_prefix_len(&edge, &[0, 1]), 1);
        let single = crate::graph::PatternGraph::new(1, vec![], false).unwrap();
        assert_eq!(cover_prefix_len(&single, &[0]), 1);
    }

    #[test]
    fn incremental_triangle_plan_for_second_edge() {
        let p = demo::stream_triangle_pattern();
        let plan = generate_raw_incremental_plan(&p, 2, &[0, 2, 1]).unwrap();
        let expected = [
            "f1:=Init(start)",
            "ADO1:=GetAdj(f1,delta,out,*)",
            "op,f3:=Foreach(ADO1)",
            "AEO1:=GetAdj(f1,either,out,*)",
            "AUI3:=GetAdj(f3,unaltered,in,*)",
            "T2:=Intersect(AEO1,AUI3)",
            "f2:=Foreach(T2)",
            "f:=ReportMatch(f1,f2,f3)",
        ];
        assert_eq!(instruction_lines(&plan), expected);

        let reparsed = parse_plan(&dump_plan(&plan)).unwrap();
        assert_eq!(reparsed, plan);
    }

    #[test]
    fn incremental_two_cycle_uses_membership_probe() {
        // u1 <-> u2: the second endpoint closes the 2-cycle via InSetTest.
        let p = crate::graph::PatternGraph::new(2, vec![(0, 1), (1, 0)], true).unwrap();
        let plan = generate_raw_incremental_plan(&p, 1, &[0, 1]).unwrap();
        let expected = [
            "f1:=Init(start)",
            "ADO1:=GetAdj(f1,delta,out,*)",
            "op,f2:=Foreach(ADO1)",
            "AUO2:=GetAdj(f2,unaltered,out,*)",
            "InSetTest(f1,AUO2)",
            "f:=ReportMatch(f1,f2)",
        ];
        assert_eq!(instruction_lines(&plan), expected);
    }

    #[test]
    fn incremental_order_must_start_with_delta_endpoints() {
        let p = demo::stream_triangle_pattern();
        let err = generate_raw_incremental_plan(&p, 2, &[0, 1, 2]).unwrap_err();
        assert!(matches!(err, Error::InvalidOrder(_)));
    }
}
