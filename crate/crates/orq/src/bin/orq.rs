//! Command-line front end: build indexes from point files, run query
//! batches, cross-verify engines against brute force, and benchmark.

use clap::{Parser, Subcommand};
use orq::config::{Config, Ctx};
use orq::index_file::{self, IndexKind, LoadedIndex};
use orq::range_report::build_report;
use orq::range_successor::build_successor;
use orq::sorted_report::build_sorted_report;
use orq::{counters, oracle, Point, Rect};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "orq", version, about = "Succinct 2-D orthogonal range query indexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from a point file.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "type", value_name = "TYPE")]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        /// Configuration overrides, repeatable: --config key=value
        #[arg(long = "config", value_name = "KEY=VAL")]
        config: Vec<String>,
    },
    /// Run a batch of queries against a stored index.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check all engines against brute force on random instances.
    Verify {
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// report | succ | sorted | all
        #[arg(long = "type", default_value = "all")]
        kind: String,
        #[arg(long = "config", value_name = "KEY=VAL")]
        config: Vec<String>,
    },
    /// Build engines over random data and report counters and latencies.
    Bench {
        #[arg(long, default_value_t = 65536)]
        n: usize,
        #[arg(long)]
        sigma: Option<u64>,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
        #[arg(long = "config", value_name = "KEY=VAL")]
        config: Vec<String>,
    },
}

fn main() -> ExitCode {
    // Usage errors exit 1; data and format errors exit 2; verification
    // mismatches exit 3.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let code = match cli.command {
        Command::Build { input, kind, out, config } => cmd_build(&input, &kind, &out, &config),
        Command::Query { index, queries, out } => cmd_query(&index, &queries, out.as_deref()),
        Command::Verify { n, cases, seed, kind, config } => {
            cmd_verify(n, cases, seed, &kind, &config)
        }
        Command::Bench { n, sigma, queries, seed, json, config } => {
            cmd_bench(n, sigma, queries, seed, json, &config)
        }
    };
    match code {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn parse_config(overrides: &[String]) -> Result<Arc<Ctx>, String> {
    let mut config = Config::default();
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("bad --config value (want key=value): {kv}"))?;
        config.set(k.trim(), v.trim()).map_err(|e| e.to_string())?;
    }
    Ok(Ctx::new(config))
}

/// One `x y` pair per line; blank lines and `#` comments allowed.
fn read_points(path: &std::path::Path) -> Result<Vec<Point>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut points = Vec::new();
    let mut first_line_of = std::collections::HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut parse = |what: &str| -> Result<u64, String> {
            it.next()
                .ok_or_else(|| format!("line {}: expected `x y`, missing {what}", lineno + 1))?
                .parse::<u64>()
                .map_err(|_| format!("line {}: malformed {what}", lineno + 1))
        };
        let x = parse("x")?;
        let y = parse("y")?;
        if it.next().is_some() {
            return Err(format!("line {}: trailing tokens", lineno + 1));
        }
        if let Some(first) = first_line_of.insert((x, y), lineno + 1) {
            return Err(format!(
                "line {}: duplicate point ({x}, {y}) first seen on line {first}",
                lineno + 1
            ));
        }
        points.push(Point { x, y });
    }
    Ok(points)
}

fn cmd_build(
    input: &std::path::Path,
    kind: &str,
    out: &std::path::Path,
    config: &[String],
) -> Result<ExitCode, String> {
    let ctx = parse_config(config)?;
    let kind = IndexKind::parse(kind).map_err(|e| e.to_string())?;
    let points = read_points(input)?;
    let index = match kind {
        IndexKind::Report => {
            LoadedIndex::Report(build_report(&points, &ctx).map_err(|e| e.to_string())?)
        }
        IndexKind::Succ => {
            LoadedIndex::Succ(build_successor(&points, &ctx).map_err(|e| e.to_string())?)
        }
        IndexKind::Sorted => {
            LoadedIndex::Sorted(build_sorted_report(&points, &ctx).map_err(|e| e.to_string())?)
        }
    };
    index_file::store(&index, out).map_err(|e| e.to_string())?;
    println!("built {} index over {} points -> {}", kind.name(), points.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn format_points(mut pts: Vec<Point>, sort: bool) -> String {
    if sort {
        pts.sort_by_key(|p| (p.y, p.x));
    }
    pts.iter().map(|p| format!("{},{}", p.x, p.y)).collect::<Vec<_>>().join(" ")
}

fn cmd_query(
    index_path: &std::path::Path,
    queries: &std::path::Path,
    out: Option<&std::path::Path>,
) -> Result<ExitCode, String> {
    let index = index_file::load(index_path).map_err(|e| e.to_string())?;
    let text =
        std::fs::read_to_string(queries).map_err(|e| format!("{}: {e}", queries.display()))?;
    let mut lines_out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let op = it.next().unwrap();
        let mut num = |what: &str| -> Result<u64, String> {
            it.next()
                .ok_or_else(|| format!("line {}: missing {what}", lineno + 1))?
                .parse::<u64>()
                .map_err(|_| format!("line {}: malformed {what}", lineno + 1))
        };
        let rect = Rect::new(num("x1")?, num("x2")?, num("y1")?, num("y2")?);
        let result = match (op, &index) {
            ("report", LoadedIndex::Report(idx)) => format_points(idx.report(&rect), true),
            ("succ", LoadedIndex::Succ(idx)) => match idx.successor(&rect) {
                Some(p) => format!("{},{}", p.x, p.y),
                None => "none".to_string(),
            },
            ("sorted", LoadedIndex::Sorted(idx)) => {
                let k = match it.next() {
                    Some(t) => Some(
                        t.parse::<usize>()
                            .map_err(|_| format!("line {}: malformed limit", lineno + 1))?,
                    ),
                    None => None,
                };
                format_points(idx.sorted_report(&rect, k), false)
            }
            (op @ ("report" | "succ" | "sorted"), idx) => {
                return Err(format!(
                    "line {}: query type `{op}` does not match index type `{}`",
                    lineno + 1,
                    idx.kind().name()
                ));
            }
            (op, _) => return Err(format!("line {}: unknown query type `{op}`", lineno + 1)),
        };
        lines_out.push(result);
    }
    let body = lines_out.join("\n") + "\n";
    match out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => print!("{body}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn random_instance(rng: &mut StdRng, n: usize, universe: u64) -> Vec<Point> {
    let mut used = std::collections::HashSet::new();
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let p = (rng.random_range(0..universe), rng.random_range(0..universe));
        if used.insert(p) {
            points.push(Point { x: p.0, y: p.1 });
        }
    }
    points
}

fn random_rect(rng: &mut StdRng, universe: u64) -> Rect {
    Rect::new(
        rng.random_range(0..universe),
        rng.random_range(0..universe),
        rng.random_range(0..universe),
        rng.random_range(0..universe),
    )
}

/// Greedily shrink a failing instance while it still mismatches.
fn minimize(
    ctx: &Arc<Ctx>,
    points: &[Point],
    rect: &Rect,
    mismatch: impl Fn(&Arc<Ctx>, &[Point], &Rect) -> bool,
) -> Vec<Point> {
    let mut cur = points.to_vec();
    let mut i = 0;
    while i < cur.len() && cur.len() > 1 {
        let mut trial = cur.clone();
        trial.remove(i);
        if mismatch(ctx, &trial, rect) {
            cur = trial;
        } else {
            i += 1;
        }
    }
    cur
}

fn cmd_verify(
    n: usize,
    cases: usize,
    seed: u64,
    kind: &str,
    config: &[String],
) -> Result<ExitCode, String> {
    let ctx = parse_config(config)?;
    let (do_report, do_succ, do_sorted) = match kind {
        "all" => (true, true, true),
        "report" => (true, false, false),
        "succ" => (false, true, false),
        "sorted" => (false, false, true),
        _ => return Err(format!("unknown --type {kind}")),
    };
    let mut rng = StdRng::seed_from_u64(seed);
    let mut checked = 0u64;
    for case in 0..cases.max(1) {
        let size = if n == 0 { 0 } else { rng.random_range(0..n as u64) as usize + 1 };
        let universe = 3 * size.max(1) as u64 + 1;
        let points = random_instance(&mut rng, size, universe);
        let report = if do_report {
            Some(build_report(&points, &ctx).map_err(|e| e.to_string())?)
        } else {
            None
        };
        let succ = if do_succ {
            Some(build_successor(&points, &ctx).map_err(|e| e.to_string())?)
        } else {
            None
        };
        let sorted = if do_sorted {
            Some(build_sorted_report(&points, &ctx).map_err(|e| e.to_string())?)
        } else {
            None
        };
        for _ in 0..40 {
            let rect = random_rect(&mut rng, universe + 2);
            if let Some(idx) = &report {
                let mut got = idx.report(&rect);
                let mut want = oracle::brute_report(&points, rect.x1, rect.x2, rect.y1, rect.y2);
                got.sort();
                want.sort();
                if got != want {
                    let check = |c: &Arc<Ctx>, pts: &[Point], r: &Rect| {
                        let Ok(idx) = build_report(pts, c) else { return false };
                        let mut g = idx.report(r);
                        let mut w = oracle::brute_report(pts, r.x1, r.x2, r.y1, r.y2);
                        g.sort();
                        w.sort();
                        g != w
                    };
                    let minimal = minimize(&ctx, &points, &rect, check);
                    eprintln!("report mismatch (case {case}) rect={rect:?}");
                    eprintln!("minimized instance: {minimal:?}");
                    return Ok(ExitCode::from(3));
                }
                checked += 1;
            }
            if let Some(idx) = &succ {
                let got = idx.successor(&rect);
                let want = oracle::brute_successor(&points, rect.x1, rect.x2, rect.y1, rect.y2);
                if got != want {
                    let check = |c: &Arc<Ctx>, pts: &[Point], r: &Rect| {
                        let Ok(idx) = build_successor(pts, c) else { return false };
                        idx.successor(r) != oracle::brute_successor(pts, r.x1, r.x2, r.y1, r.y2)
                    };
                    let minimal = minimize(&ctx, &points, &rect, check);
                    eprintln!(
                        "succ mismatch (case {case}) rect={rect:?} got={got:?} want={want:?}"
                    );
                    eprintln!("minimized instance: {minimal:?}");
                    return Ok(ExitCode::from(3));
                }
                checked += 1;
            }
            if let Some(idx) = &sorted {
                let got = idx.sorted_report(&rect, None);
                let want = oracle::brute_sorted(&points, rect.x1, rect.x2, rect.y1, rect.y2, None);
                if got != want {
                    let check = |c: &Arc<Ctx>, pts: &[Point], r: &Rect| {
                        let Ok(idx) = build_sorted_report(pts, c) else { return false };
                        idx.sorted_report(r, None)
                            != oracle::brute_sorted(pts, r.x1, r.x2, r.y1, r.y2, None)
                    };
                    let minimal = minimize(&ctx, &points, &rect, check);
                    eprintln!("sorted mismatch (case {case}) rect={rect:?}");
                    eprintln!("minimized instance: {minimal:?}");
                    return Ok(ExitCode::from(3));
                }
                checked += 1;
            }
        }
    }
    println!("verify: {checked} checks passed ({cases} cases, n up to {n}, seed {seed})");
    Ok(ExitCode::SUCCESS)
}

struct QueryStats {
    mean_probes: f64,
    median_probes: u64,
    mean_ns: f64,
    median_ns: u64,
}

fn stats(mut probes: Vec<u64>, mut ns: Vec<u64>) -> QueryStats {
    probes.sort();
    ns.sort();
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len().max(1) as f64;
    QueryStats {
        mean_probes: mean(&probes),
        median_probes: probes.get(probes.len() / 2).copied().unwrap_or(0),
        mean_ns: mean(&ns),
        median_ns: ns.get(ns.len() / 2).copied().unwrap_or(0),
    }
}

fn bench_one(
    ctx: &Arc<Ctx>,
    points: &[Point],
    kind: IndexKind,
    queries: &[Rect],
) -> Result<(f64, counters::OpCounters, QueryStats), String> {
    let t0 = Instant::now();
    let before = counters::snapshot();
    let index = match kind {
        IndexKind::Report => {
            LoadedIndex::Report(build_report(points, ctx).map_err(|e| e.to_string())?)
        }
        IndexKind::Succ => {
            LoadedIndex::Succ(build_successor(points, ctx).map_err(|e| e.to_string())?)
        }
        IndexKind::Sorted => {
            LoadedIndex::Sorted(build_sorted_report(points, ctx).map_err(|e| e.to_string())?)
        }
    };
    let build_counters = counters::delta(&before);
    let build_secs = t0.elapsed().as_secs_f64();
    let mut probes = Vec::with_capacity(queries.len());
    let mut times = Vec::with_capacity(queries.len());
    for rect in queries {
        let before = counters::snapshot();
        let t = Instant::now();
        match &index {
            LoadedIndex::Report(idx) => {
                let _ = idx.report(rect);
            }
            LoadedIndex::Succ(idx) => {
                let _ = idx.successor(rect);
            }
            LoadedIndex::Sorted(idx) => {
                let _ = idx.sorted_report(rect, Some(16));
            }
        }
        times.push(t.elapsed().as_nanos() as u64);
        probes.push(counters::delta(&before).element_probes);
    }
    Ok((build_secs, build_counters, stats(probes, times)))
}

fn cmd_bench(
    n: usize,
    sigma: Option<u64>,
    queries: usize,
    seed: u64,
    json: bool,
    config: &[String],
) -> Result<ExitCode, String> {
    let ctx = parse_config(config)?;
    let universe = sigma.unwrap_or((4 * n.max(1)) as u64).max(2);
    let mut rng = StdRng::seed_from_u64(seed);
    let points = random_instance(&mut rng, n, universe);
    let rects: Vec<Rect> = (0..queries.max(1)).map(|_| random_rect(&mut rng, universe)).collect();

    // A small reference instance for the probe-growth proxy.
    let n0 = 1024usize.min(n.max(2));
    let mut rng0 = StdRng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let points0 = random_instance(&mut rng0, n0, 4 * n0 as u64 + 1);
    let rects0: Vec<Rect> =
        (0..queries.max(1)).map(|_| random_rect(&mut rng0, 4 * n0 as u64 + 1)).collect();

    let mut sections = Vec::new();
    let mut growth_ratio = 0.0f64;
    for kind in [IndexKind::Report, IndexKind::Succ, IndexKind::Sorted] {
        let (build_secs, build_ops, qs) = bench_one(&ctx, &points, kind, &rects)?;
        if kind == IndexKind::Succ {
            let (_, _, qs0) = bench_one(&ctx, &points0, kind, &rects0)?;
            growth_ratio =
                if qs0.mean_probes > 0.0 { qs.mean_probes / qs0.mean_probes } else { 0.0 };
        }
        sections.push((kind, build_secs, build_ops, qs));
    }

    if json {
        let mut parts = Vec::new();
        for (kind, secs, ops, qs) in &sections {
            parts.push(format!(
                concat!(
                    "    \"{}\": {{\"build_seconds\": {:.6}, \"build_word_ops\": {}, ",
                    "\"build_table_lookups\": {}, \"build_element_probes\": {}, ",
                    "\"mean_probes\": {:.3}, \"median_probes\": {}, ",
                    "\"mean_ns\": {:.1}, \"median_ns\": {}}}"
                ),
                kind.name(),
                secs,
                ops.word_ops,
                ops.table_lookups,
                ops.element_probes,
                qs.mean_probes,
                qs.median_probes,
                qs.mean_ns,
                qs.median_ns,
            ));
        }
        let cfg = &ctx.config;
        println!(
            "{{\n  \"n\": {n},\n  \"sigma\": {universe},\n  \"seed\": {seed},\n  \"queries\": {queries},\n  \"config\": {{\"n_cap\": {}, \"table_cap_bits\": {}, \"large_fanout\": {}, \"small_fanout\": {}, \"narrow_block\": {}, \"three_block\": {}, \"escalation\": {}}},\n  \"probe_growth_ratio\": {growth_ratio:.4},\n  \"engines\": {{\n{}\n  }}\n}}",
            cfg.n_cap,
            cfg.table_cap_bits,
            cfg.large_fanout,
            cfg.small_fanout,
            cfg.narrow_block,
            cfg.three_block,
            cfg.escalation,
            parts.join(",\n")
        );
    } else {
        let cfg = &ctx.config;
        println!("bench n={n} sigma={universe} queries={queries} seed={seed}");
        println!(
            "config: n_cap={} table_cap_bits={} large_fanout={} small_fanout={} narrow_block={} three_block={} escalation={}",
            cfg.n_cap,
            cfg.table_cap_bits,
            cfg.large_fanout,
            cfg.small_fanout,
            cfg.narrow_block,
            cfg.three_block,
            cfg.escalation
        );
        for (kind, secs, ops, qs) in &sections {
            println!(
                "{:>7}: build {:.3}s word_ops={} table_lookups={} | query mean_probes={:.2} median_probes={} mean={:.0}ns median={}ns",
                kind.name(),
                secs,
                ops.word_ops,
                ops.table_lookups,
                qs.mean_probes,
                qs.median_probes,
                qs.mean_ns,
                qs.median_ns
            );
        }
        println!("successor probe growth ratio vs n=1024: {growth_ratio:.3}");
    }
    Ok(ExitCode::SUCCESS)
}
