//! Command-line front end: compile plans, run enumerations over edge-list
//! data, and verify engine output against the reference oracle.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use subenum::cost::{
    best_batch_order, best_incremental_order, communication_cost, computation_cost, ErEstimator,
    GraphStats,
};
use subenum::exec::{enumerate, run_batch_plan, RunConfig, RunSummary, SinkMode};
use subenum::graph::{
    load_undirected_edge_list, validate_order, DirectedGraph, IdMap, PatternGraph,
};
use subenum::oracle::{brute_force_enumerate, brute_force_incremental, CanonicalSubgraph};
use subenum::plan::{compile_batch_plan, dump_plan, generate_raw_plan, CompileOpts, Instruction, PipelineOpts};
use subenum::store::{store_batch_graph, stored_bytes, CachedStore, MemoryStore};
use subenum::stream::{StreamConfig, StreamEngine};
use subenum::{gen, Error, Result, Sign, VertexId};

#[derive(Parser)]
#[command(name = "subenum", version, about = "Subgraph enumeration over key-value graph stores")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a pattern and print its plans with modelled costs.
    Plan(CommonArgs),
    /// Enumerate matches of a pattern over a data graph.
    Run(CommonArgs),
    /// Run engine and oracle side by side and diff the results.
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Pattern file (header "n m directed|undirected", 1-based edges,
    /// optional "order:" and "partial:" lines).
    #[arg(long)]
    pattern: PathBuf,

    /// Data file: edge list in batch mode, edge list plus "## step" update
    /// sections in stream mode. Verify synthesizes seeded data when absent.
    #[arg(long)]
    data: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Mode::Batch)]
    mode: Mode,

    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    workers: Option<usize>,

    /// Adjacency cache capacity: bytes, with K/M/G suffix, or "25%" of the
    /// loaded graph's footprint.
    #[arg(long, default_value = "64M")]
    cache: String,

    /// Task-split threshold, or "off" to disable splitting.
    #[arg(long, default_value = "500")]
    theta: String,

    /// Matching order as 1-based pattern vertices, e.g. "1 3 5 2 6 4".
    /// Overrides the pattern file and the cost search. Batch mode only.
    #[arg(long)]
    order: Option<String>,

    #[arg(long, value_enum, default_value_t = SinkArg::Count)]
    sink: SinkArg,

    /// Write the executed plan(s) in their text form to this file.
    #[arg(long)]
    dump_plan: Option<PathBuf>,

    /// Write run metrics as key=value lines to this file.
    #[arg(long)]
    metrics: Option<PathBuf>,

    /// Seed for synthesized verification data.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Fault injection for exercising verify: drop one dedup filter from the
    /// compiled plan before running.
    #[arg(long, hide = true)]
    corrupt_plan: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    Batch,
    Stream,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SinkArg {
    /// Count matches only.
    Count,
    /// Print one line per match, original vertex ids.
    Emit,
    /// Print compressed result codes (batch only).
    EmitCompressed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Plan(a) => cmd_plan(&a),
        Cmd::Run(a) => cmd_run(&a),
        Cmd::Verify(a) => cmd_verify(&a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

// ---- shared plumbing ----

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidPattern(msg.into())
}

fn read_file(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))
}

fn load_pattern(args: &CommonArgs) -> Result<(PatternGraph, Option<Vec<usize>>)> {
    let (p, file_order) = PatternGraph::parse(&read_file(&args.pattern)?)?;
    match args.mode {
        Mode::Batch if p.directed => {
            Err(bad("batch mode enumerates undirected patterns; use --mode stream"))
        }
        Mode::Stream if !p.directed => {
            Err(bad("stream mode enumerates directed patterns; use --mode batch"))
        }
        _ => Ok((p, file_order)),
    }
}

fn parse_theta(s: &str) -> Result<Option<usize>> {
    match s {
        "off" | "none" | "inf" => Ok(None),
        _ => {
            let v: usize =
                s.parse().map_err(|_| bad(format!("bad --theta {s:?}: want a count or \"off\"")))?;
            if v == 0 {
                return Err(bad("--theta must be at least 1 (or \"off\")"));
            }
            Ok(Some(v))
        }
    }
}

fn parse_cache(s: &str, graph_bytes: usize) -> Result<usize> {
    let s = s.trim();
    if let Some(pct) = s.strip_suffix('%') {
        let p: f64 = pct.parse().map_err(|_| bad(format!("bad --cache percentage {s:?}")))?;
        if !(0.0..=100.0).contains(&p) {
            return Err(bad("--cache percentage must be within 0..=100"));
        }
        return Ok((graph_bytes as f64 * p / 100.0).ceil() as usize);
    }
    let (digits, mult) = match s.as_bytes().last() {
        Some(b'K' | b'k') => (&s[..s.len() - 1], 1usize << 10),
        Some(b'M' | b'm') => (&s[..s.len() - 1], 1 << 20),
        Some(b'G' | b'g') => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    let v: usize = digits.parse().map_err(|_| bad(format!("bad --cache size {s:?}")))?;
    Ok(v * mult)
}

fn parse_order_flag(s: &str, p: &PatternGraph) -> Result<Vec<usize>> {
    let mut order = Vec::new();
    for tok in s.split_whitespace() {
        let v: usize = tok.parse().map_err(|_| bad(format!("bad order vertex {tok:?}")))?;
        if v == 0 {
            return Err(bad("--order vertices are 1-based"));
        }
        order.push(v - 1);
    }
    validate_order(p, &order)?;
    Ok(order)
}

fn workers(args: &CommonArgs) -> usize {
    args.workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    })
}

fn order_1based(order: &[usize]) -> String {
    order.iter().map(|&v| (v + 1).to_string()).collect::<Vec<_>>().join(" ")
}

/// Stream data file: arc preamble, then "## step" sections of "+ u v" /
/// "- u v" updates. One id map covers the whole file so update lines refer
/// to the same interned vertices as the initial graph.
type StepBatch = Vec<(Sign, VertexId, VertexId)>;

fn load_stream_file(text: &str) -> Result<(DirectedGraph, Vec<StepBatch>, IdMap)> {
    let mut map = IdMap::default();
    let mut initial: Vec<(VertexId, VertexId)> = Vec::new();
    let mut steps: Vec<StepBatch> = Vec::new();
    let mut in_steps = false;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let is_boundary = raw.trim_start().starts_with("## step");
        if is_boundary {
            steps.push(Vec::new());
            in_steps = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let parse_id = |tok: &str| -> Result<u64> {
            tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad vertex id {tok:?}"),
            })
        };
        if in_steps {
            if toks.len() != 3 || (toks[0] != "+" && toks[0] != "-") {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected \"+ u v\" or \"- u v\", got {line:?}"),
                });
            }
            let sign = if toks[0] == "+" { Sign::Plus } else { Sign::Minus };
            let u = map.intern(parse_id(toks[1])?);
            let v = map.intern(parse_id(toks[2])?);
            steps.last_mut().unwrap().push((sign, u, v));
        } else {
            if toks.len() != 2 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected \"u v\" arc, got {line:?}"),
                });
            }
            let u = map.intern(parse_id(toks[0])?);
            let v = map.intern(parse_id(toks[1])?);
            initial.push((u, v));
        }
    }
    let g = DirectedGraph::from_edges(map.len(), &initial);
    Ok((g, steps, map))
}

fn write_if_asked(path: &Option<PathBuf>, contents: &str) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, contents)
            .map_err(|e| bad(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

// ---- plan ----

fn cmd_plan(args: &CommonArgs) -> Result<bool> {
    let (p, file_order) = load_pattern(args)?;
    let est = ErEstimator;

    let (stats, stats_src) = match (&args.data, args.mode) {
        (Some(path), Mode::Batch) => {
            let (g, _) = load_undirected_edge_list(&read_file(path)?)?;
            (GraphStats::of_undirected(&g), "data")
        }
        (Some(path), Mode::Stream) => {
            let (g, _, _) = load_stream_file(&read_file(path)?)?;
            (GraphStats::of_directed(&g), "data")
        }
        (None, _) => (GraphStats::new(1000, 5000), "assumed"),
    };
    println!(
        "# pattern: {} vertices, {} edges, {}",
        p.n,
        p.edges.len(),
        if p.directed { "directed" } else { "undirected" }
    );
    println!("# stats: vertices={} edges={} ({stats_src})", stats.vertices, stats.edges);

    let mut out = String::new();
    match args.mode {
        Mode::Batch => {
            let flag_order =
                args.order.as_deref().map(|s| parse_order_flag(s, &p)).transpose()?;
            let fixed = flag_order.or(file_order);
            let (order, searched) = match fixed {
                Some(o) => (o, None),
                None => {
                    let found = best_batch_order(&p, &stats, &est)?;
                    let s = found.stats;
                    (found.order, Some(s))
                }
            };
            let optimized = compile_batch_plan(&p, &order, PipelineOpts::default())?;
            println!("order={}", order_1based(&order));
            println!("comm_cost={}", communication_cost(&p, &order, &stats, &est));
            println!("comp_cost={}", computation_cost(&p, &optimized, &stats, &est));
            if let Some(s) = searched {
                println!("search_complete_orders={}", s.complete_orders);
                println!("search_total_orders={}", s.total_orders);
            }

            let raw = generate_raw_plan(&p, &order, &CompileOpts::default())?;
            let compressed = compile_batch_plan(
                &p,
                &order,
                PipelineOpts { vcbc: true, ..PipelineOpts::default() },
            )?;
            println!("# raw plan");
            print!("{}", dump_plan(&raw));
            println!("# optimized plan");
            print!("{}", dump_plan(&optimized));
            println!("# compressed plan");
            print!("{}", dump_plan(&compressed));
            let _ = write!(out, "{}", dump_plan(&optimized));
        }
        Mode::Stream => {
            if args.order.is_some() {
                return Err(bad("--order applies to batch plans; stream orders are per delta edge"));
            }
            for edge in 1..=p.edges.len() {
                let found = best_incremental_order(&p, edge, &stats, &est)?;
                let plan = subenum::plan::compile_incremental_plan(&p, edge, &found.order)?;
                println!("# delta edge {edge}");
                println!("order={}", order_1based(&found.order));
                println!("comm_cost={}", found.comm_cost);
                println!("comp_cost={}", computation_cost(&p, &plan, &stats, &est));
                print!("{}", dump_plan(&plan));
                let _ = write!(out, "{}", dump_plan(&plan));
            }
        }
    }
    write_if_asked(&args.dump_plan, &out)?;
    Ok(true)
}

// ---- run ----

fn cmd_run(args: &CommonArgs) -> Result<bool> {
    match args.mode {
        Mode::Batch => cmd_run_batch(args),
        Mode::Stream => cmd_run_stream(args),
    }
}

fn load_batch_store(
    args: &CommonArgs,
) -> Result<(CachedStore, VertexId, IdMap, GraphStats)> {
    let path = args
        .data
        .as_ref()
        .ok_or_else(|| bad("run needs --data (an edge-list file)"))?;
    let (g, map) = load_undirected_edge_list(&read_file(path)?)?;
    let stats = GraphStats::of_undirected(&g);
    let backend = Arc::new(MemoryStore::new());
    store_batch_graph(backend.as_ref(), &g)?;
    let bytes = stored_bytes(backend.as_ref())?;
    let cache = parse_cache(&args.cache, bytes)?;
    let universe = g.vertex_count() as VertexId;
    Ok((CachedStore::new(backend, cache), universe, map, stats))
}

fn map_embedding(m: &[VertexId], map: &IdMap) -> Vec<u64> {
    m.iter().map(|&v| map.external(v)).collect()
}

/// Rewrites the internal ids inside a compressed code line ("5 [2 7] 9")
/// back to the input file's original ids.
fn map_code_line(line: &str, map: &IdMap) -> String {
    line.split_whitespace()
        .map(|tok| {
            let open = tok.starts_with('[');
            let close = tok.ends_with(']');
            let inner = tok.trim_start_matches('[').trim_end_matches(']');
            let mapped: u64 = inner
                .parse::<VertexId>()
                .map(|v| map.external(v))
                .unwrap_or_else(|_| inner.parse().unwrap_or(0));
            format!("{}{}{}", if open { "[" } else { "" }, mapped, if close { "]" } else { "" })
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn comm_comp_block(out: &mut String, run: &RunSummary) {
    let c = &run.comm;
    let hit_rate = if c.dbq_issued == 0 {
        0.0
    } else {
        c.cache_hits as f64 / c.dbq_issued as f64
    };
    let _ = writeln!(out, "dbq_issued={}", c.dbq_issued);
    let _ = writeln!(out, "backend_queries={}", c.backend_queries);
    let _ = writeln!(out, "cache_hits={}", c.cache_hits);
    let _ = writeln!(out, "cache_hit_rate={hit_rate:.4}");
    let _ = writeln!(out, "int_evaluations={}", run.comp.int_evaluations);
    let _ = writeln!(out, "intersections={}", run.comp.intersections());
    let _ = writeln!(out, "trc_probes={}", run.comp.trc_probes);
    let _ = writeln!(out, "trc_hits={}", run.comp.trc_hits);
    let _ = writeln!(out, "res_firings={}", run.comp.res_firings);
}

fn cmd_run_batch(args: &CommonArgs) -> Result<bool> {
    let (p, file_order) = load_pattern(args)?;
    let (store, universe, map, _stats) = load_batch_store(args)?;

    let flag_order = args.order.as_deref().map(|s| parse_order_flag(s, &p)).transpose()?;
    let sink = match args.sink {
        SinkArg::Count => SinkMode::Count,
        SinkArg::Emit => SinkMode::Emit,
        SinkArg::EmitCompressed => SinkMode::EmitCompressed,
    };
    let cfg = RunConfig {
        workers: workers(args),
        theta: parse_theta(&args.theta)?,
        sink,
        collect: args.sink == SinkArg::Emit,
        order: flag_order.or(file_order),
        opts: PipelineOpts {
            vcbc: args.sink == SinkArg::EmitCompressed,
            ..PipelineOpts::default()
        },
        ..RunConfig::default()
    };

    let started = Instant::now();
    let run = enumerate(&p, &store, universe, &cfg)?;
    let wall = started.elapsed();

    match args.sink {
        SinkArg::Count => {}
        SinkArg::Emit => {
            let mut rows: Vec<Vec<u64>> =
                run.matches.iter().map(|m| map_embedding(m, &map)).collect();
            rows.sort_unstable();
            for row in rows {
                let toks: Vec<String> = row.iter().map(u64::to_string).collect();
                println!("{}", toks.join(" "));
            }
        }
        SinkArg::EmitCompressed => {
            let mut rows: Vec<String> =
                run.lines.iter().map(|l| map_code_line(l, &map)).collect();
            rows.sort_unstable();
            for row in rows {
                println!("{row}");
            }
        }
    }

    let order = run.plan.order.clone();
    let mut report = String::new();
    let _ = writeln!(report, "mode=batch");
    let _ = writeln!(report, "order={}", order_1based(&order));
    let _ = writeln!(report, "workers={}", workers(args));
    let _ = writeln!(report, "tasks={}", run.tasks);
    let _ = writeln!(report, "matches={}", run.match_count);
    comm_comp_block(&mut report, &run);
    let _ = writeln!(report, "wall_ms={}", wall.as_millis());
    print!("{report}");

    write_if_asked(&args.dump_plan, &dump_plan(&run.plan))?;
    write_if_asked(&args.metrics, &report)?;
    Ok(true)
}

fn cmd_run_stream(args: &CommonArgs) -> Result<bool> {
    let (p, _) = load_pattern(args)?;
    if args.sink == SinkArg::EmitCompressed {
        return Err(bad("compressed output applies to batch runs"));
    }
    if args.order.is_some() {
        return Err(bad("--order applies to batch runs; stream orders are per delta edge"));
    }
    let path = args
        .data
        .as_ref()
        .ok_or_else(|| bad("run needs --data (arcs, then \"## step\" update sections)"))?;
    let (initial, steps, map) = load_stream_file(&read_file(path)?)?;
    let initial_bytes = stored_bytes_of_directed(&initial)?;
    let cfg = StreamConfig {
        workers: workers(args),
        theta: parse_theta(&args.theta)?,
        cache_bytes: parse_cache(&args.cache, initial_bytes)?,
        orders: None,
        strict_checks: false,
    };

    let started = Instant::now();
    let mut engine = StreamEngine::new(p, &initial, cfg)?;
    let mut report = String::new();
    let mut total_app = 0usize;
    let mut total_dis = 0usize;
    let (mut comm_tot, mut comp_tot) = (Default::default(), Default::default());
    for batch in &steps {
        let res = engine.process_step(batch)?;
        println!(
            "step={} appearing={} disappearing={}",
            res.step,
            res.appearing.len(),
            res.disappearing.len()
        );
        if args.sink == SinkArg::Emit {
            let mut rows: Vec<(char, Vec<u64>)> = res
                .appearing
                .iter()
                .map(|m| ('+', map_embedding(m, &map)))
                .chain(res.disappearing.iter().map(|m| ('-', map_embedding(m, &map))))
                .collect();
            rows.sort_unstable();
            for (sign, row) in rows {
                let toks: Vec<String> = row.iter().map(u64::to_string).collect();
                println!("{sign} {}", toks.join(" "));
            }
        }
        total_app += res.appearing.len();
        total_dis += res.disappearing.len();
        absorb_counts(&mut comm_tot, &mut comp_tot, &res);
    }
    let wall = started.elapsed();

    let _ = writeln!(report, "mode=stream");
    let _ = writeln!(report, "steps={}", steps.len());
    let _ = writeln!(report, "workers={}", workers(args));
    let _ = writeln!(report, "total_appearing={total_app}");
    let _ = writeln!(report, "total_disappearing={total_dis}");
    let c: subenum::store::CommCounts = comm_tot;
    let hit_rate =
        if c.dbq_issued == 0 { 0.0 } else { c.cache_hits as f64 / c.dbq_issued as f64 };
    let _ = writeln!(report, "dbq_issued={}", c.dbq_issued);
    let _ = writeln!(report, "backend_queries={}", c.backend_queries);
    let _ = writeln!(report, "cache_hits={}", c.cache_hits);
    let _ = writeln!(report, "cache_hit_rate={hit_rate:.4}");
    let comp: subenum::exec::CompCounts = comp_tot;
    let _ = writeln!(report, "int_evaluations={}", comp.int_evaluations);
    let _ = writeln!(report, "intersections={}", comp.intersections());
    let _ = writeln!(report, "wall_ms={}", wall.as_millis());
    print!("{report}");

    let mut plans_text = String::new();
    for plan in engine.plans() {
        let _ = write!(plans_text, "{}", dump_plan(plan));
    }
    write_if_asked(&args.dump_plan, &plans_text)?;
    write_if_asked(&args.metrics, &report)?;
    Ok(true)
}

fn absorb_counts(
    comm: &mut subenum::store::CommCounts,
    comp: &mut subenum::exec::CompCounts,
    res: &subenum::stream::StepResult,
) {
    comm.dbq_issued += res.comm.dbq_issued;
    comm.backend_queries += res.comm.backend_queries;
    comm.cache_hits += res.comm.cache_hits;
    comp.absorb(&res.comp);
}

/// Footprint the initial stream graph will have once stored, for
/// percentage-based cache capacities.
fn stored_bytes_of_directed(g: &DirectedGraph) -> Result<usize> {
    let backend = MemoryStore::new();
    subenum::store::store_snapshot(&backend, g)?;
    stored_bytes(&backend)
}

// ---- verify ----

fn cmd_verify(args: &CommonArgs) -> Result<bool> {
    match args.mode {
        Mode::Batch => cmd_verify_batch(args),
        Mode::Stream => cmd_verify_stream(args),
    }
}

/// Drops the last filter of the first filtered intersection — a realistic
/// plan bug that produces duplicate or extra rows for verify to catch.
fn corrupt(plan: &mut subenum::plan::ExecutionPlan) -> Result<()> {
    for ins in &mut plan.instructions {
        if let Instruction::Intersect { filters, .. } = ins {
            if !filters.is_empty() {
                filters.pop();
                return Ok(());
            }
        }
    }
    Err(bad("plan has no filters to corrupt"))
}

fn cmd_verify_batch(args: &CommonArgs) -> Result<bool> {
    let (p, file_order) = load_pattern(args)?;
    let p = p.with_computed_partial_order()?;

    let (g, src) = match &args.data {
        Some(path) => {
            let (g, _) = load_undirected_edge_list(&read_file(path)?)?;
            (g, format!("{}", path.display()))
        }
        None => {
            let g = gen::er_graph(40, 90, args.seed);
            (g, format!("synthetic er n=40 m=90 seed={}", args.seed))
        }
    };
    println!("mode=batch data={src}");

    let backend = Arc::new(MemoryStore::new());
    store_batch_graph(backend.as_ref(), &g)?;
    let bytes = stored_bytes(backend.as_ref())?;
    let store = CachedStore::new(backend, parse_cache(&args.cache, bytes)?);
    let universe = g.vertex_count() as VertexId;

    let cfg = RunConfig {
        workers: workers(args),
        theta: parse_theta(&args.theta)?,
        collect: true,
        order: file_order.clone(),
        ..RunConfig::default()
    };
    let run = if args.corrupt_plan {
        let order = match &cfg.order {
            Some(o) => o.clone(),
            None => {
                let stats = GraphStats::of_undirected(&g);
                best_batch_order(&p, &stats, &ErEstimator)?.order
            }
        };
        let mut plan = compile_batch_plan(&p, &order, cfg.opts)?;
        corrupt(&mut plan)?;
        run_batch_plan(&p, &plan, &store, universe, &cfg)?
    } else {
        enumerate(&p, &store, universe, &cfg)?
    };

    let expected = brute_force_enumerate(&p, &g)?;
    let mut got: Vec<CanonicalSubgraph> =
        run.matches.iter().map(|m| CanonicalSubgraph::from_match(&p, m)).collect();
    got.sort();
    let duplicates = got.windows(2).filter(|w| w[0] == w[1]).count();
    let got_set: BTreeSet<CanonicalSubgraph> = got.into_iter().collect();

    println!("engine_matches={} oracle_matches={}", run.match_count, expected.len());
    let missing: Vec<_> = expected.difference(&got_set).collect();
    let extra: Vec<_> = got_set.difference(&expected).collect();
    if missing.is_empty() && extra.is_empty() && duplicates == 0 {
        println!("PASS: engine and oracle agree on {} subgraphs", expected.len());
        Ok(true)
    } else {
        println!(
            "FAIL: {} missing, {} extra, {} duplicate",
            missing.len(),
            extra.len(),
            duplicates
        );
        if let Some(m) = missing.first() {
            println!("first_missing={m}");
        }
        if let Some(m) = extra.first() {
            println!("first_extra={m}");
        }
        Ok(false)
    }
}

fn cmd_verify_stream(args: &CommonArgs) -> Result<bool> {
    let (p, _) = load_pattern(args)?;
    let p = p.with_computed_partial_order()?;

    let (initial, steps, src) = match &args.data {
        Some(path) => {
            let (g, steps, _) = load_stream_file(&read_file(path)?)?;
            (g, steps, format!("{}", path.display()))
        }
        None => {
            let g = gen::er_digraph(24, 50, args.seed);
            let mut rng = gen::rng(args.seed ^ 0x5eed);
            let mut cur = g.clone();
            let mut steps = Vec::new();
            for _ in 0..4 {
                let batch = gen::random_update_batch(&cur, 12, &mut rng);
                cur = apply_to_graph(&cur, &batch);
                steps.push(batch);
            }
            (g, steps, format!("synthetic er-digraph n=24 m=50 seed={}", args.seed))
        }
    };
    println!("mode=stream data={src}");

    let cfg = StreamConfig {
        workers: workers(args),
        theta: parse_theta(&args.theta)?,
        cache_bytes: parse_cache(&args.cache, stored_bytes_of_directed(&initial)?)?,
        orders: None,
        strict_checks: true,
    };
    let mut engine = StreamEngine::new(p.clone(), &initial, cfg)?;

    let mut prev = initial.clone();
    let mut ok = true;
    for batch in &steps {
        let cur = apply_to_graph(&prev, batch);
        let res = engine.process_step(batch)?;
        let (want_app, want_dis) = brute_force_incremental(&p, &prev, &cur)?;
        let got_app: BTreeSet<CanonicalSubgraph> =
            res.appearing.iter().map(|m| CanonicalSubgraph::from_match(&p, m)).collect();
        let got_dis: BTreeSet<CanonicalSubgraph> =
            res.disappearing.iter().map(|m| CanonicalSubgraph::from_match(&p, m)).collect();
        let dup_app = res.appearing.len() != got_app.len();
        let dup_dis = res.disappearing.len() != got_dis.len();
        if got_app == want_app && got_dis == want_dis && !dup_app && !dup_dis {
            println!(
                "step={} PASS appearing={} disappearing={}",
                res.step,
                got_app.len(),
                got_dis.len()
            );
        } else {
            ok = false;
            println!("step={} FAIL", res.step);
            if let Some(m) = want_app.difference(&got_app).next() {
                println!("first_missing_appearing={m}");
            }
            if let Some(m) = got_app.difference(&want_app).next() {
                println!("first_extra_appearing={m}");
            }
            if let Some(m) = want_dis.difference(&got_dis).next() {
                println!("first_missing_disappearing={m}");
            }
            if let Some(m) = got_dis.difference(&want_dis).next() {
                println!("first_extra_disappearing={m}");
            }
            if dup_app || dup_dis {
                println!("duplicates=yes");
            }
        }
        prev = cur;
    }
    if ok {
        println!("PASS: {} steps agree", steps.len());
    } else {
        println!("FAIL: engine and oracle diverged");
    }
    Ok(ok)
}

/// The post-step graph: arcs plus insertions minus deletions, with the
/// vertex domain widened to cover new ids.
fn apply_to_graph(g: &DirectedGraph, batch: &StepBatch) -> DirectedGraph {
    let mut arcs: BTreeSet<(VertexId, VertexId)> = g.arcs().into_iter().collect();
    let mut n = g.vertex_count() as VertexId;
    for &(sign, u, v) in batch {
        n = n.max(u + 1).max(v + 1);
        match sign {
            Sign::Plus => {
                arcs.insert((u, v));
            }
            Sign::Minus => {
                arcs.remove(&(u, v));
            }
        }
    }
    let arcs: Vec<(VertexId, VertexId)> = arcs.into_iter().collect();
    DirectedGraph::from_edges(n as usize, &arcs)
}
