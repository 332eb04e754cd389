//! Textual plan form. One instruction per line, metadata in '#' headers;
//! `parse_plan(dump_plan(p)) == p` for every valid plan.

use super::{
    Dir, EdgeKind, ExecutionPlan, Filter, FilterKind, Instruction, Operand, OpSpec, PlanKind, Var,
};
use crate::{Error, Result};
use std::fmt::Write as _;

fn var_name(v: Var) -> String {
    match v {
        Var::F(i) => format!("f{i}"),
        Var::A(i) => format!("A{i}"),
        Var::T(i) => format!("T{i}"),
        Var::C(i) => format!("C{i}"),
        Var::S { kind, dir, i } => {
            let k = match kind {
                EdgeKind::Either => 'E',
                EdgeKind::Delta => 'D',
                EdgeKind::Unaltered => 'U',
            };
            let d = match dir {
                Dir::In => 'I',
                Dir::Out => 'O',
            };
            format!("A{k}{d}{i}")
        }
    }
}

fn operand_name(o: Operand) -> String {
    match o {
        Operand::Var(v) => var_name(v),
        Operand::Universe => "V(G)".into(),
    }
}

fn filter_text(f: Filter) -> String {
    let sym = match f.kind {
        FilterKind::Succ => '>',
        FilterKind::Prec => '<',
        FilterKind::Neq => '≠',
    };
    format!("{sym}f{}", f.subject + 1)
}

fn kind_name(k: EdgeKind) -> &'static str {
    match k {
        EdgeKind::Either => "either",
        EdgeKind::Delta => "delta",
        EdgeKind::Unaltered => "unaltered",
    }
}

pub fn dump_plan(plan: &ExecutionPlan) -> String {
    let mut s = String::new();
    let order: Vec<String> = plan.order.iter().map(|&u| (u + 1).to_string()).collect();
    let _ = writeln!(s, "# order: {}", order.join(" "));
    match plan.kind {
        PlanKind::Batch => {
            let _ = writeln!(s, "# mode: batch");
        }
        PlanKind::Incremental { delta_edge } => {
            let _ = writeln!(s, "# mode: incremental e{delta_edge}");
        }
    }
    if let Some(k) = plan.vcbc_cover {
        let _ = writeln!(s, "# cover: {k}");
    }
    for inst in &plan.instructions {
        let line = match inst {
            Instruction::Init { target } => format!("{}:=Init(start)", var_name(*target)),
            Instruction::GetAdj { target, source } => {
                format!("{}:=GetAdj({})", var_name(*target), var_name(*source))
            }
            Instruction::GetAdjStream { target, source, kind, dir, op } => {
                let op = match op {
                    OpSpec::Plus => "+",
                    OpSpec::Minus => "-",
                    OpSpec::Star => "*",
                };
                let dir = match dir {
                    Dir::In => "in",
                    Dir::Out => "out",
                };
                format!(
                    "{}:=GetAdj({},{},{},{})",
                    var_name(*target),
                    var_name(*source),
                    kind_name(*kind),
                    dir,
                    op
                )
            }
            Instruction::Intersect { target, operands, filters } => {
                let ops: Vec<String> = operands.iter().map(|&o| operand_name(o)).collect();
                let mut line = format!("{}:=Intersect({})", var_name(*target), ops.join(","));
                if !filters.is_empty() {
                    let fs: Vec<String> = filters.iter().map(|&f| filter_text(f)).collect();
                    let _ = write!(line, "|{{{}}}", fs.join(","));
                }
                line
            }
            Instruction::TriangleCache { target, fa, fb, a, b } => format!(
                "{}:=TCache({},{},{},{})",
                var_name(*target),
                var_name(*fa),
                var_name(*fb),
                var_name(*a),
                var_name(*b)
            ),
            Instruction::Foreach { target, source } => {
                format!("{}:=Foreach({})", var_name(*target), operand_name(*source))
            }
            Instruction::ForeachDelta { target, source } => {
                format!("op,{}:=Foreach({})", var_name(*target), operand_name(*source))
            }
            Instruction::InSetTest { subject, set } => {
                format!("InSetTest({},{})", var_name(*subject), var_name(*set))
            }
            Instruction::Report { outputs } => {
                let os: Vec<String> = outputs.iter().map(|&v| var_name(v)).collect();
                format!("f:=ReportMatch({})", os.join(","))
            }
        };
        let _ = writeln!(s, "{line}");
    }
    s
}

struct LineParser {
    lineno: usize,
}

impl LineParser {
    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { line: self.lineno, msg: msg.into() })
    }

    fn parse_var(&self, tok: &str) -> Result<Var> {
        let tok = tok.trim();
        let index = |s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: self.lineno,
                msg: format!("bad variable index in {tok:?}"),
            })
        };
        if let Some(rest) = tok.strip_prefix('f') {
            return Ok(Var::F(index(rest)?));
        }
        if let Some(rest) = tok.strip_prefix('T') {
            return Ok(Var::T(index(rest)?));
        }
        if let Some(rest) = tok.strip_prefix('C') {
            return Ok(Var::C(index(rest)?));
        }
        if let Some(rest) = tok.strip_prefix('A') {
            let mut chars = rest.chars();
            match (chars.next(), chars.next()) {
                (Some(k @ ('E' | 'D' | 'U')), Some(d @ ('I' | 'O'))) => {
                    let kind = match k {
                        'E' => EdgeKind::Either,
                        'D' => EdgeKind::Delta,
                        _ => EdgeKind::Unaltered,
                    };
                    let dir = if d == 'I' { Dir::In } else { Dir::Out };
                    return Ok(Var::S { kind, dir, i: index(chars.as_str())? });
                }
                _ => return Ok(Var::A(index(rest)?)),
            }
        }
        self.fail(format!("unknown variable {tok:?}"))
    }

    fn parse_operand(&self, tok: &str) -> Result<Operand> {
        if tok.trim() == "V(G)" {
            Ok(Operand::Universe)
        } else {
            Ok(Operand::Var(self.parse_var(tok)?))
        }
    }

    fn parse_filter(&self, tok: &str) -> Result<Filter> {
        let tok = tok.trim();
        let (kind, rest) = if let Some(r) = tok.strip_prefix('>') {
            (FilterKind::Succ, r)
        } else if let Some(r) = tok.strip_prefix('<') {
            (FilterKind::Prec, r)
        } else if let Some(r) = tok.strip_prefix('≠') {
            (FilterKind::Neq, r)
        } else if let Some(r) = tok.strip_prefix("!=") {
            (FilterKind::Neq, r)
        } else {
            return self.fail(format!("bad filter {tok:?}"));
        };
        match self.parse_var(rest)? {
            Var::F(i) => Ok(Filter { kind, subject: i - 1 }),
            other => self.fail(format!("filter must reference an f-variable, got {other:?}")),
        }
    }
}

pub fn parse_plan(text: &str) -> Result<ExecutionPlan> {
    let mut order: Option<Vec<usize>> = None;
    let mut kind = PlanKind::Batch;
    let mut cover: Option<usize> = None;
    let mut instructions = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let lp = LineParser { lineno };
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(o) = rest.strip_prefix("order:") {
                let mut v = Vec::new();
                for tok in o.split_whitespace() {
                    let x: usize = tok.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad order vertex {tok:?}"),
                    })?;
                    if x == 0 {
                        return lp.fail("order vertices are 1-based");
                    }
                    v.push(x - 1);
                }
                order = Some(v);
            } else if let Some(m) = rest.strip_prefix("mode:") {
                let m = m.trim();
                if m == "batch" {
                    kind = PlanKind::Batch;
                } else if let Some(e) = m.strip_prefix("incremental e") {
                    let de: usize = e.trim().parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad delta edge {e:?}"),
                    })?;
                    kind = PlanKind::Incremental { delta_edge: de };
                } else {
                    return lp.fail(format!("unknown mode {m:?}"));
                }
            } else if let Some(c) = rest.strip_prefix("cover:") {
                cover = Some(c.trim().parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad cover length {c:?}"),
                })?);
            }
            continue;
        }

        instructions.push(parse_instruction(&lp, line)?);
    }

    let order = order.ok_or_else(|| Error::Parse {
        line: 1,
        msg: "plan text needs a \"# order:\" header".into(),
    })?;
    Ok(ExecutionPlan { instructions, order, kind, vcbc_cover: cover })
}

fn parse_instruction(lp: &LineParser, line: &str) -> Result<Instruction> {
    if let Some(args) = line.strip_prefix("InSetTest(") {
        let args = args.strip_suffix(')').ok_or_else(|| Error::Parse {
            line: lp.lineno,
            msg: "unterminated InSetTest".into(),
        })?;
        let mut it = args.split(',');
        let (a, b) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return lp.fail("InSetTest takes two arguments"),
        };
        return Ok(Instruction::InSetTest { subject: lp.parse_var(a)?, set: lp.parse_var(b)? });
    }

    let (lhs, rhs) = line
        .split_once(":=")
        .ok_or_else(|| Error::Parse { line: lp.lineno, msg: format!("expected :=, got {line:?}") })?;
    let (rhs, filters) = match rhs.split_once("|{") {
        Some((head, tail)) => {
            let tail = tail.strip_suffix('}').ok_or_else(|| Error::Parse {
                line: lp.lineno,
                msg: "unterminated filter list".into(),
            })?;
            let filters = tail
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| lp.parse_filter(t))
                .collect::<Result<Vec<_>>>()?;
            (head, filters)
        }
        None => (rhs, Vec::new()),
    };

    let (op, args) = rhs
        .split_once('(')
        .ok_or_else(|| Error::Parse { line: lp.lineno, msg: format!("expected call in {rhs:?}") })?;
    let args = args
        .trim()
        .strip_suffix(')')
        .ok_or_else(|| Error::Parse { line: lp.lineno, msg: "unterminated argument list".into() })?;
    let split_args = |s: &str| -> Vec<String> {
        // V(G) contains parentheses but no commas; plain comma split is safe.
        s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
    };

    let non_empty_filters = !filters.is_empty();
    let inst = match (lhs.trim(), op.trim()) {
        (lhs, "Init") => {
            if args != "start" {
                return lp.fail("Init takes the literal argument start");
            }
            Instruction::Init { target: lp.parse_var(lhs)? }
        }
        (lhs, "GetAdj") => {
            let a = split_args(args);
            match a.len() {
                1 => Instruction::GetAdj {
                    target: lp.parse_var(lhs)?,
                    source: lp.parse_var(&a[0])?,
                },
                4 => {
                    let kind = match a[1].as_str() {
                        "either" => EdgeKind::Either,
                        "delta" => EdgeKind::Delta,
                        "unaltered" => EdgeKind::Unaltered,
                        other => return lp.fail(format!("bad adjacency kind {other:?}")),
                    };
                    let dir = match a[2].as_str() {
                        "in" => Dir::In,
                        "out" => Dir::Out,
                        other => return lp.fail(format!("bad direction {other:?}")),
                    };
                    let op = match a[3].as_str() {
                        "+" => OpSpec::Plus,
                        "-" => OpSpec::Minus,
                        "*" => OpSpec::Star,
                        other => return lp.fail(format!("bad op {other:?}")),
                    };
                    Instruction::GetAdjStream {
                        target: lp.parse_var(lhs)?,
                        source: lp.parse_var(&a[0])?,
                        kind,
                        dir,
                        op,
                    }
                }
                _ => return lp.fail("GetAdj takes 1 or 4 arguments"),
            }
        }
        (lhs, "Intersect") => {
            let operands = split_args(args)
                .iter()
                .map(|t| lp.parse_operand(t))
                .collect::<Result<Vec<_>>>()?;
            if operands.is_empty() {
                return lp.fail("Intersect needs at least one operand");
            }
            Instruction::Intersect { target: lp.parse_var(lhs)?, operands, filters }
        }
        (lhs, "TCache") => {
            let a = split_args(args);
            if a.len() != 4 {
                return lp.fail("TCache takes four arguments");
            }
            Instruction::TriangleCache {
                target: lp.parse_var(lhs)?,
                fa: lp.parse_var(&a[0])?,
                fb: lp.parse_var(&a[1])?,
                a: lp.parse_var(&a[2])?,
                b: lp.parse_var(&a[3])?,
            }
        }
        (lhs, "Foreach") => {
            let source = lp.parse_operand(args)?;
            if let Some(f) = lhs.strip_prefix("op,") {
                Instruction::ForeachDelta { target: lp.parse_var(f)?, source }
            } else {
                Instruction::Foreach { target: lp.parse_var(lhs)?, source }
            }
        }
        ("f", "ReportMatch") => {
            let outputs = split_args(args)
                .iter()
                .map(|t| lp.parse_var(t))
                .collect::<Result<Vec<_>>>()?;
            Instruction::Report { outputs }
        }
        (lhs, op) => return lp.fail(format!("unknown instruction {op:?} assigned to {lhs:?}")),
    };
    if non_empty_filters && !matches!(inst, Instruction::Intersect { .. }) {
        return lp.fail("filters are only valid on Intersect");
    }
    Ok(inst)
}
