//! Plan-level optimizations. All passes preserve the match set; they only
//! shuffle where set intersections happen and how often adjacency is fetched.

use super::compile::{cover_prefix_len, protected_vars, uni_operand_elimination, CompileOpts};
use super::{
    fresh_index, validate_plan, ExecutionPlan, Instruction, InstrKind, Operand, PlanKind, Var,
};
use crate::graph::PatternGraph;
use crate::{Error, Result};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Common-subexpression elimination over intersection operand sets.
///
/// Mines operand subsets (size >= 2) shared by at least two intersections,
/// level-wise: a subset is only examined once all its sub-subsets proved
/// frequent. The winner per round is the largest subset, then the most
/// shared, then the one whose first use appears earliest; it is hoisted into
/// a fresh T-set placed immediately before that first use.
pub fn apply_cse(p: &PatternGraph, plan: &ExecutionPlan, opts: &CompileOpts) -> Result<ExecutionPlan> {
    let mut instrs = plan.instructions.clone();
    loop {
        let tables: Vec<(usize, BTreeSet<Operand>)> = instrs
            .iter()
            .enumerate()
            .filter_map(|(pos, inst)| match inst {
                Instruction::Intersect { operands, .. } if operands.len() >= 2 => {
                    Some((pos, operands.iter().copied().collect()))
                }
                _ => None,
            })
            .collect();
        let Some(subset) = best_common_subset(&tables) else { break };

        let first_pos = tables
            .iter()
            .find(|(_, ops)| subset.is_subset(ops))
            .map(|&(pos, _)| pos)
            .expect("mined subset has a first use");
        let fresh = Var::T(fresh_index(&instrs, plan.pattern_size()));
        // Operand order of the hoisted set follows its first use.
        let hoisted_ops: Vec<Operand> = match &instrs[first_pos] {
            Instruction::Intersect { operands, .. } => {
                operands.iter().copied().filter(|o| subset.contains(o)).collect()
            }
            _ => unreachable!(),
        };
        for inst in instrs.iter_mut() {
            if let Instruction::Intersect { operands, .. } = inst {
                let ops: BTreeSet<Operand> = operands.iter().copied().collect();
                if !subset.is_subset(&ops) {
                    continue;
                }
                let at = operands.iter().position(|o| subset.contains(o)).unwrap();
                operands.retain(|o| !subset.contains(o));
                operands.insert(at.min(operands.len()), Operand::Var(fresh));
            }
        }
        instrs.insert(
            first_pos,
            Instruction::Intersect { target: fresh, operands: hoisted_ops, filters: Vec::new() },
        );
    }
    uni_operand_elimination(&mut instrs, &protected_vars(p, &plan.order, opts));
    let out = ExecutionPlan { instructions: instrs, ..plan.clone() };
    validate_plan(&out, p)?;
    Ok(out)
}

/// Level-wise frequent-subset mining; returns the winner of this round.
fn best_common_subset(tables: &[(usize, BTreeSet<Operand>)]) -> Option<BTreeSet<Operand>> {
    let support = |s: &BTreeSet<Operand>| tables.iter().filter(|(_, ops)| s.is_subset(ops)).count();
    let first_use = |s: &BTreeSet<Operand>| {
        tables.iter().find(|(_, ops)| s.is_subset(ops)).map(|&(pos, _)| pos).unwrap()
    };

    let items: BTreeSet<Operand> = tables.iter().flat_map(|(_, ops)| ops.iter().copied()).collect();
    let mut level: Vec<BTreeSet<Operand>> = items
        .iter()
        .flat_map(|&a| {
            items.iter().filter(move |&&b| b > a).map(move |&b| BTreeSet::from([a, b]))
        })
        .filter(|s| support(s) >= 2)
        .collect();
    let mut frequent: Vec<BTreeSet<Operand>> = Vec::new();
    while !level.is_empty() {
        frequent.extend(level.iter().cloned());
        let mut next: BTreeSet<BTreeSet<Operand>> = BTreeSet::new();
        for s in &level {
            for &item in &items {
                if !s.contains(&item) {
                    let mut grown = s.clone();
                    grown.insert(item);
                    if support(&grown) >= 2 {
                        next.insert(grown);
                    }
                }
            }
        }
        level = next.into_iter().collect();
    }
    frequent.into_iter().min_by_key(|s| {
        (
            std::cmp::Reverse(s.len()),
            std::cmp::Reverse(support(s)),
            first_use(s),
            s.iter().copied().collect::<Vec<_>>(),
        )
    })
}

/// Dependency-driven reschedule. Intersections with more than two operands
/// are first split into binary steps so each can float to its earliest legal
/// slot; then instructions are re-emitted cheapest-kind-first subject to
/// data dependencies. Adjacency queries and loop heads keep their relative
/// order: loops must still nest the same way, and branch-resolved adjacency
/// queries must stay inside the delta loop.
pub fn reorder_instructions(p: &PatternGraph, plan: &ExecutionPlan) -> Result<ExecutionPlan> {
    let mut instrs: Vec<Instruction> = Vec::with_capacity(plan.instructions.len());
    let mut def_pos: HashMap<Var, usize> = HashMap::new();
    let defined_at = |def_pos: &HashMap<Var, usize>, o: &Operand| match o {
        Operand::Var(v) => def_pos.get(v).copied().unwrap_or(0),
        Operand::Universe => 0,
    };
    let mut next_fresh = fresh_index(&plan.instructions, plan.pattern_size());
    for inst in &plan.instructions {
        match inst {
            Instruction::Intersect { target, operands, filters } if operands.len() > 2 => {
                let mut ops = operands.clone();
                ops.sort_by_key(|o| defined_at(&def_pos, o));
                let mut acc = ops[0];
                for (k, &op) in ops.iter().enumerate().skip(1) {
                    let last = k + 1 == ops.len();
                    let tgt = if last {
                        *target
                    } else {
                        let t = Var::T(next_fresh);
                        next_fresh += 1;
                        t
                    };
                    instrs.push(Instruction::Intersect {
                        target: tgt,
                        operands: vec![acc, op],
                        filters: if last { filters.clone() } else { Vec::new() },
                    });
                    def_pos.insert(tgt, instrs.len() - 1);
                    acc = Operand::Var(tgt);
                }
            }
            other => {
                instrs.push(other.clone());
                if let Some(t) = other.target() {
                    def_pos.insert(t, instrs.len() - 1);
                }
            }
        }
    }

    let m = instrs.len();
    let mut deps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    for (i, inst) in instrs.iter().enumerate() {
        for used in inst.uses() {
            let d = *def_pos
                .get(&used)
                .ok_or_else(|| Error::InvalidPlan(format!("{used:?} is never defined")))?;
            if d != i {
                deps[i].insert(d);
            }
        }
    }
    let order_sensitive: Vec<usize> = instrs
        .iter()
        .enumerate()
        .filter(|(_, i)| matches!(i.kind(), InstrKind::Dbq | InstrKind::Enu))
        .map(|(i, _)| i)
        .collect();
    for w in order_sensitive.windows(2) {
        deps[w[1]].insert(w[0]);
    }

    let mut remaining: BTreeSet<usize> = (0..m).collect();
    let mut placed = vec![false; m];
    let mut out = Vec::with_capacity(m);
    while !remaining.is_empty() {
        let pick = remaining
            .iter()
            .copied()
            .filter(|&i| deps[i].iter().all(|&d| placed[d]))
            .min_by_key(|&i| (instrs[i].kind(), i))
            .ok_or_else(|| Error::InvalidPlan("dependency cycle in plan".into()))?;
        remaining.remove(&pick);
        placed[pick] = true;
        out.push(instrs[pick].clone());
    }

    let plan = ExecutionPlan { instructions: out, ..plan.clone() };
    validate_plan(&plan, p)?;
    Ok(plan)
}

/// Rewrite start-anchored, filter-free binary intersections of adjacency
/// sets into cached triangle lookups. Keyed by the two bound vertices, the
/// cache pays off when the inner pair recurs across outer loop iterations.
pub fn apply_trc(p: &PatternGraph, plan: &ExecutionPlan) -> Result<ExecutionPlan> {
    if plan.kind != PlanKind::Batch {
        return Err(Error::InvalidPlan("triangle caching applies to batch plans only".into()));
    }
    let start = plan.order[0];
    let mut instrs = plan.instructions.clone();
    for inst in instrs.iter_mut() {
        let Instruction::Intersect { target, operands, filters } = inst else { continue };
        if !filters.is_empty() || operands.len() != 2 {
            continue;
        }
        let (x, y) = match (operands[0], operands[1]) {
            (Operand::Var(Var::A(x)), Operand::Var(Var::A(y))) => (x, y),
            _ => continue,
        };
        let (sx, other) = if x == start + 1 {
            (x, y)
        } else if y == start + 1 {
            (y, x)
        } else {
            continue;
        };
        if !p.adjacent(start, other - 1) {
            continue;
        }
        *inst = Instruction::TriangleCache {
            target: *target,
            fa: Var::F(sx),
            fb: Var::F(other),
            a: Var::A(sx),
            b: Var::A(other),
        };
    }
    let plan = ExecutionPlan { instructions: instrs, ..plan.clone() };
    validate_plan(&plan, p)?;
    Ok(plan)
}

/// Vertex-cover compression: vertices outside the cover prefix lose their
/// loop; the match is reported as cover bindings plus each outside vertex's
/// candidate set. Inequality filters between two outside vertices are
/// dropped here and re-checked when a compressed match is expanded.
pub fn apply_vcbc(p: &PatternGraph, plan: &ExecutionPlan) -> Result<ExecutionPlan> {
    if plan.kind != PlanKind::Batch {
        return Err(Error::InvalidPlan("compression applies to batch plans only".into()));
    }
    let k = cover_prefix_len(p, &plan.order);
    let outside: BTreeSet<usize> = plan.order[k..].iter().copied().collect();
    let mut image_source: BTreeMap<usize, Var> = BTreeMap::new();
    let mut instrs = Vec::with_capacity(plan.instructions.len());
    for inst in &plan.instructions {
        match inst {
            Instruction::Foreach { target, source }
                if target.vertex().is_some_and(|u| outside.contains(&u)) =>
            {
                let Operand::Var(v) = source else {
                    return Err(Error::InvalidPlan(
                        "cannot compress a universe-bound vertex".into(),
                    ));
                };
                image_source.insert(target.vertex().unwrap(), *v);
            }
            Instruction::Intersect { target, operands, filters } => {
                let kept: Vec<_> = filters
                    .iter()
                    .copied()
                    .filter(|f| !outside.contains(&f.subject))
                    .collect();
                instrs.push(Instruction::Intersect {
                    target: *target,
                    operands: operands.clone(),
                    filters: kept,
                });
            }
            Instruction::Report { outputs } => {
                let outputs = outputs
                    .iter()
                    .enumerate()
                    .map(|(u, &v)| if outside.contains(&u) { image_source[&u] } else { v })
                    .collect();
                instrs.push(Instruction::Report { outputs });
            }
            other => instrs.push(other.clone()),
        }
    }
    let plan = ExecutionPlan { instructions: instrs, vcbc_cover: Some(k), ..plan.clone() };
    validate_plan(&plan, p)?;
    Ok(plan)
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineOpts {
    pub cse: bool,
    pub reorder: bool,
    pub trc: bool,
    pub vcbc: bool,
}

impl Default for PipelineOpts {
    fn default() -> Self {
        PipelineOpts { cse: true, reorder: true, trc: true, vcbc: false }
    }
}

/// Full batch pipeline: raw generation, then the enabled passes in their
/// canonical order.
pub fn compile_batch_plan(
    p: &PatternGraph,
    order: &[usize],
    opts: PipelineOpts,
) -> Result<ExecutionPlan> {
    let copts = CompileOpts { protect_vcbc_sets: opts.vcbc };
    let mut plan = super::generate_raw_plan(p, order, &copts)?;
    if opts.cse {
        plan = apply_cse(p, &plan, &copts)?;
    }
    if opts.reorder {
        plan = reorder_instructions(p, &plan)?;
    }
    if opts.trc {
        plan = apply_trc(p, &plan)?;
    }
    if opts.vcbc {
        plan = apply_vcbc(p, &plan)?;
    }
    Ok(plan)
}

/// Incremental pipeline: raw generation, subexpression sharing, reschedule.
pub fn compile_incremental_plan(
    p: &PatternGraph,
    delta_edge: usize,
    order: &[usize],
) -> Result<ExecutionPlan> {
    let plan = super::generate_raw_incremental_plan(p, delta_edge, order)?;
    let plan = apply_cse(p, &plan, &CompileOpts::default())?;
    reorder_instructions(p, &plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::demo;
    use crate::plan::{dump_plan, generate_raw_plan};

    fn lines(plan: &ExecutionPlan) -> Vec<String> {
        dump_plan(plan).lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
    }

    fn fan_raw() -> (PatternGraph, ExecutionPlan) {
        let p = demo::fan_pattern();
        let plan = generate_raw_plan(&p, &[0, 2, 4, 1, 5, 3], &CompileOpts::default()).unwrap();
        (p, plan)
    }

    #[test]
    fn cse_hoists_the_shared_pair_once() {
        let (p, raw) = fan_raw();
        let plan = apply_cse(&p, &raw, &CompileOpts::default()).unwrap();
        let expected = [
            "f1:=Init(start)",
            "A1:=GetAdj(f1)",
            "f3:=Foreach(A1)",
            "A3:=GetAdj(f3)",
            "C5:=Intersect(A1)|{>f3}",
            "f5:=Foreach(C5)",
            "A5:=GetAdj(f5)",
            "T7:=Intersect(A1,A3)",
            "C2:=Intersect(T7)|{≠f5}",
            "f2:=Foreach(C2)",
            "T6:=Intersect(A1,A5)",
            "C6:=Intersect(T6)|{≠f3,≠f2}",
            "f6:=Foreach(C6)",
            "T4:=Intersect(T7,A5)",
            "C4:=Intersect(T4)|{≠f2,≠f6}",
            "f4:=Foreach(C4)",
            "f:=ReportMatch(f1,f2,f3,f4,f5,f6)",
        ];
        assert_eq!(lines(&plan), expected);
    }

    #[test]
    fn reorder_floats_intersections_above_loops() {
        let (p, raw) = fan_raw();
        let plan = apply_cse(&p, &raw, &CompileOpts::default()).unwrap();
        let plan = reorder_instructions(&p, &plan).unwrap();
        let expected = [
            "f1:=Init(start)",
            "A1:=GetAdj(f1)",
            "f3:=Foreach(A1)",
            "C5:=Intersect(A1)|{>f3}",
            "A3:=GetAdj(f3)",
            "T7:=Intersect(A1,A3)",
            "f5:=Foreach(C5)",
            "C2:=Intersect(T7)|{≠f5}",
            "A5:=GetAdj(f5)",
            "T6:=Intersect(A1,A5)",
            "T4:=Intersect(T7,A5)",
            "f2:=Foreach(C2)",
            "C6:=Intersect(T6)|{≠f3,≠f2}",
            "f6:=Foreach(C6)",
            "C4:=Intersect(T4)|{≠f2,≠f6}",
            "f4:=Foreach(C4)",
            "f:=ReportMatch(f1,f2,f3,f4,f5,f6)",
        ];
        assert_eq!(lines(&plan), expected);
    }

    #[test]
    fn trc_rewrites_start_anchored_pairs_only() {
        let (p, raw) = fan_raw();
        let plan = apply_cse(&p, &raw, &CompileOpts::default()).unwrap();
        let plan = reorder_instructions(&p, &plan).unwrap();
        let plan = apply_trc(&p, &plan).unwrap();
        let cached: Vec<_> = lines(&plan).into_iter().filter(|l| l.contains("TCache")).collect();
        assert_eq!(cached, ["T7:=TCache(f1,f3,A1,A3)", "T6:=TCache(f1,f5,A1,A5)"]);
        // T4 mixes a T-set in; it stays an ordinary intersection.
        assert!(lines(&plan).contains(&"T4:=Intersect(T7,A5)".to_string()));
    }

    #[test]
    fn vcbc_compresses_non_cover_vertices() {
        let p = demo::fan_pattern();
        let plan = compile_batch_plan(
            &p,
            &[0, 2, 4, 1, 5, 3],
            PipelineOpts { vcbc: true, ..PipelineOpts::default() },
        )
        .unwrap();
        assert_eq!(plan.vcbc_cover, Some(3));
        let ls = lines(&plan);
        assert_eq!(ls.len(), 14);
        assert!(ls.contains(&"C6:=Intersect(T6)|{≠f3}".to_string()));
        assert!(ls.contains(&"C4:=Intersect(T4)".to_string()));
        assert_eq!(ls.last().unwrap(), "f:=ReportMatch(f1,C2,f3,C4,f5,C6)");
        assert!(!ls.iter().any(|l| l.contains("f2:=Foreach")
            || l.contains("f6:=Foreach")
            || l.contains("f4:=Foreach")));
    }

    #[test]
    fn flatten_splits_wide_intersections() {
        let (p, raw) = fan_raw();
        // Without CSE, T4 still has three operands; flattening splits it.
        let plan = reorder_instructions(&p, &raw).unwrap();
        let wide = plan
            .instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Intersect { operands, .. } => Some(operands.len()),
                _ => None,
            })
            .max()
            .unwrap();
        assert!(wide <= 2, "all intersections binary after reorder, got width {wide}");
        assert!(lines(&plan).iter().any(|l| l.starts_with("T7:=Intersect(A1,A3)")));
    }

    #[test]
    fn incremental_pipeline_keeps_loop_nesting() {
        let p = demo::stream_triangle_pattern();
        let plan = compile_incremental_plan(&p, 2, &[0, 2, 1]).unwrap();
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
        assert_eq!(lines(&plan), expected);
    }

    #[test]
    fn trc_refuses_incremental_plans() {
        let p = demo::stream_triangle_pattern();
        let plan = compile_incremental_plan(&p, 1, &[0, 1, 2]).unwrap();
        assert!(apply_trc(&p, &plan).is_err());
        assert!(apply_vcbc(&p, &plan).is_err());
    }
}
