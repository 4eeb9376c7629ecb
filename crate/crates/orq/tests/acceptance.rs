//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers. Everything is checked against the brute-force
//! oracles at exact (zero-tolerance) equality; the scaling checks use the
//! instrumented operation counters with pinned thresholds.

use orq::config::{Config, Ctx};
use orq::counters;
use orq::oracle;
use orq::packed::PackedSequence;
use orq::partial_rank::ChunkedPartialRank;
use orq::pred_succ::{build_pred_succ, PredSuccVariant};
use orq::range_report::{build_report, GeneralReportIndex};
use orq::range_successor::build_successor;
use orq::rmq::{PackedRmqIndex, RmqIndex};
use orq::seq_index::{SelectIndex, SmallAlphabetRankIndex};
use orq::sorted_report::build_sorted_report;
use orq::{Point, Rect};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use std::sync::Arc;

fn default_ctx() -> Arc<Ctx> {
    Ctx::new(Config::default())
}

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Distinct points; flavor varies the shape of the instance.
fn instance(r: &mut StdRng, n: usize, flavor: usize) -> Vec<Point> {
    let mut used = std::collections::HashSet::new();
    let mut pts = Vec::with_capacity(n);
    match flavor % 4 {
        // Rank-space permutation.
        0 => {
            let mut xs: Vec<u64> = (0..n as u64).collect();
            for i in (1..n).rev() {
                xs.swap(i, r.random_range(0..=i as u64) as usize);
            }
            for (y, &x) in xs.iter().enumerate() {
                pts.push(Point { x, y: y as u64 });
            }
        }
        // Uniform distinct pairs on a loose grid.
        1 => {
            let m = 4 * n as u64 + 2;
            while pts.len() < n {
                let p = (r.random_range(0..m), r.random_range(0..m));
                if used.insert(p) {
                    pts.push(Point { x: p.0, y: p.1 });
                }
            }
        }
        // Clustered x: many points share few x values.
        2 => {
            let m = (n as u64 / 8).max(1);
            while pts.len() < n {
                let p = (r.random_range(0..m), r.random_range(0..4 * n as u64 + 2));
                if used.insert(p) {
                    pts.push(Point { x: p.0, y: p.1 });
                }
            }
        }
        // Diagonal band.
        _ => {
            while pts.len() < n {
                let x = r.random_range(0..2 * n as u64 + 2);
                let y = (x + r.random_range(0..8)) % (2 * n as u64 + 2);
                if used.insert((x, y)) {
                    pts.push(Point { x, y });
                }
            }
        }
    }
    pts
}

fn rect(r: &mut StdRng, m: u64) -> Rect {
    Rect::new(
        r.random_range(0..m),
        r.random_range(0..m),
        r.random_range(0..m),
        r.random_range(0..m),
    )
}

fn sorted_points(mut v: Vec<Point>) -> Vec<Point> {
    v.sort();
    v
}

#[test]
fn criterion_1_primitive_oracle_suites() {
    let ctx = default_ctx();
    let mut checks = 0u64;

    // Exhaustive: rank/select over every sequence with len <= 6, sigma <= 4.
    for sigma in 1..=4u64 {
        for len in 1..=6usize {
            for code in 0..sigma.pow(len as u32) {
                let mut vals = Vec::with_capacity(len);
                let mut c = code;
                for _ in 0..len {
                    vals.push(c % sigma);
                    c /= sigma;
                }
                let rank = SmallAlphabetRankIndex::build(&vals, sigma, 4, 1 << 20).unwrap();
                let select = SelectIndex::build(vals.iter().copied(), sigma, len);
                let pr = {
                    let width = (64 - (sigma - 1).max(1).leading_zeros()).max(1);
                    let packed = PackedSequence::pack(&vals, width).unwrap();
                    ChunkedPartialRank::build(&packed, sigma, &ctx)
                };
                for i in 0..len {
                    for s in 0..sigma {
                        assert_eq!(rank.rank_sym(s, i).unwrap(), oracle::brute_rank(&vals, s, i));
                        checks += 1;
                    }
                    assert_eq!(
                        pr.partial_rank(&mut |k| vals[k], i).unwrap(),
                        oracle::brute_partial_rank(&vals, i)
                    );
                    checks += 1;
                }
                for s in 0..sigma {
                    for k in 1..=len {
                        assert_eq!(select.select_sym(s, k), oracle::brute_select(&vals, s, k));
                        checks += 1;
                    }
                }
            }
        }
    }

    // Exhaustive rmq and pred/succ over length <= 8, values <= 4 shapes.
    for len in 1..=8usize {
        for code in 0..4u64.pow(len as u32) {
            let mut vals = Vec::with_capacity(len);
            let mut c = code;
            for _ in 0..len {
                vals.push(c % 4);
                c /= 4;
            }
            let rmq = RmqIndex::build(&vals);
            for i in 0..len {
                for j in i..len {
                    assert_eq!(rmq.range_min(i, j).unwrap(), oracle::brute_rmq(&vals, i, j));
                    assert_eq!(
                        rmq.range_max(i, j).unwrap(),
                        oracle::brute_rmq_max(&vals, i, j)
                    );
                    checks += 2;
                }
            }
            let mut sorted = vals.clone();
            sorted.sort();
            let general = build_pred_succ(&sorted, PredSuccVariant::General, &ctx).unwrap();
            let dups = build_pred_succ(&sorted, PredSuccVariant::PackedDuplicates, &ctx).unwrap();
            for x in 0..6u64 {
                let mut acc = |i: usize| sorted[i];
                assert_eq!(general.pred(&mut acc, x), oracle::brute_pred(&sorted, x));
                assert_eq!(general.succ(&mut acc, x), oracle::brute_succ(&sorted, x));
                assert_eq!(dups.pred(&mut acc, x), oracle::brute_pred_first_occ(&sorted, x));
                assert_eq!(dups.succ(&mut acc, x), oracle::brute_succ_first_occ(&sorted, x));
                checks += 4;
            }
        }
    }

    // 1000+ randomized larger cases per primitive.
    let mut r = rng(0xACCE1);
    for case in 0..1000 {
        let sigma = 1u64 << r.random_range(1..=8u32);
        let len = r.random_range(1..=4096u64) as usize;
        let vals: Vec<u64> = (0..len).map(|_| r.random_range(0..sigma)).collect();
        let i = r.random_range(0..len as u64) as usize;
        let c = vals[r.random_range(0..len as u64) as usize];

        let rank = SmallAlphabetRankIndex::build(&vals, sigma, 4, 1 << 20).unwrap();
        assert_eq!(rank.rank_sym(c, i).unwrap(), oracle::brute_rank(&vals, c, i));
        let select = SelectIndex::build(vals.iter().copied(), sigma, len);
        let k = r.random_range(1..=len as u64) as usize;
        assert_eq!(select.select_sym(c, k), oracle::brute_select(&vals, c, k));

        let width = (64 - (sigma - 1).max(1).leading_zeros()).max(1);
        let packed = PackedSequence::pack(&vals, width).unwrap();
        let pr = ChunkedPartialRank::build(&packed, sigma, &ctx);
        assert_eq!(
            pr.partial_rank(&mut |k| vals[k], i).unwrap(),
            oracle::brute_partial_rank(&vals, i)
        );

        let rmq = RmqIndex::build(&vals);
        let j = i + r.random_range(0..(len - i) as u64) as usize;
        assert_eq!(rmq.range_min(i, j).unwrap(), oracle::brute_rmq(&vals, i, j));
        assert_eq!(rmq.range_max(i, j).unwrap(), oracle::brute_rmq_max(&vals, i, j));
        if width <= 6 {
            let prmq = PackedRmqIndex::build(&packed, &ctx).unwrap();
            let mut acc = |p: usize| vals[p];
            assert_eq!(prmq.range_min_indexed(&mut acc, i, j).unwrap(), oracle::brute_rmq(&vals, i, j));
        }

        let mut sorted = vals.clone();
        sorted.sort();
        let x = r.random_range(0..sigma + 2);
        let general = build_pred_succ(&sorted, PredSuccVariant::General, &ctx).unwrap();
        let mut acc = |i: usize| sorted[i];
        assert_eq!(general.pred(&mut acc, x), oracle::brute_pred(&sorted, x));
        assert_eq!(general.succ(&mut acc, x), oracle::brute_succ(&sorted, x));
        if case % 4 == 0 {
            let dups = build_pred_succ(&sorted, PredSuccVariant::PackedDuplicates, &ctx).unwrap();
            assert_eq!(dups.succ(&mut acc, x), oracle::brute_succ_first_occ(&sorted, x));
        }
        checks += 7;
    }
    println!("ACCEPTANCE 1 (primitive oracle suites): PASS — {checks} oracle checks, zero mismatches");
}

fn sweep_configs() -> Vec<(&'static str, Arc<Ctx>)> {
    let mut out = Vec::new();
    out.push(("default", default_ctx()));
    let mut c = Config::default();
    c.table_cap_bits = 0;
    out.push(("tables-disabled", Ctx::new(c)));
    let mut c = Config::default();
    c.narrow_block = 8;
    c.three_block = 4;
    c.three_subblock = 2;
    c.tiny_cut = 4;
    c.escalation = 2;
    c.large_fanout = 8;
    c.small_fanout = 2;
    c.pred_block = 2;
    c.index_pred_block = 4;
    out.push(("tiny-blocks", Ctx::new(c)));
    let mut c = Config::default();
    c.force_chunked_partial_rank = true;
    c.tiny_cut = 8;
    c.large_fanout = 16;
    out.push(("forced-chunked-partial-rank", Ctx::new(c)));
    let mut c = Config::default();
    c.rmq_three_sided = true;
    c.tiny_cut = 8;
    out.push(("rmq-three-sided", Ctx::new(c)));
    out.push(("small-capacity", Ctx::new(Config::with_n_cap(1 << 8))));
    out
}

#[test]
fn criterion_2_engine_oracle_equivalence() {
    let mut r = rng(0xACCE2);
    let mut instances = 0u64;
    let mut queries = 0u64;

    // 110 instances at the default configuration, n in 0..=4096.
    let ctx = default_ctx();
    for case in 0..110usize {
        let n = match case {
            0 => 0,
            1 => 1,
            2 => 2,
            _ => r.random_range(3..=4096u64) as usize,
        };
        let pts = instance(&mut r, n, case);
        let m = 4 * n.max(1) as u64 + 4;
        let report = build_report(&pts, &ctx).unwrap();
        let succ = build_successor(&pts, &ctx).unwrap();
        let sorted = build_sorted_report(&pts, &ctx).unwrap();
        instances += 1;
        for _ in 0..100 {
            let q = rect(&mut r, m);
            let want = oracle::brute_report(&pts, q.x1, q.x2, q.y1, q.y2);
            assert_eq!(
                sorted_points(report.report(&q)),
                sorted_points(want.clone()),
                "report n={n} case={case} q={q:?}"
            );
            assert_eq!(
                succ.successor(&q),
                oracle::brute_successor(&pts, q.x1, q.x2, q.y1, q.y2),
                "succ n={n} case={case} q={q:?}"
            );
            let want_sorted = oracle::brute_sorted(&pts, q.x1, q.x2, q.y1, q.y2, None);
            let got_sorted = sorted.sorted_report(&q, None);
            assert_eq!(got_sorted, want_sorted, "sorted n={n} case={case} q={q:?}");
            for k in [0usize, 1, 2, want_sorted.len()] {
                assert_eq!(
                    sorted.sorted_report(&q, Some(k)),
                    want_sorted[..k.min(want_sorted.len())].to_vec(),
                    "prefix k={k} n={n} case={case}"
                );
            }
            queries += 1;
        }
    }

    // Config sweep forcing every structural branch, including disabled
    // tables; identical answers required everywhere.
    for (name, ctx) in sweep_configs() {
        for case in 0..8usize {
            let n = r.random_range(1..=512u64) as usize;
            let pts = instance(&mut r, n, case);
            let m = 4 * n as u64 + 4;
            let report = build_report(&pts, &ctx).unwrap();
            let succ = build_successor(&pts, &ctx).unwrap();
            let sorted = build_sorted_report(&pts, &ctx).unwrap();
            instances += 1;
            for _ in 0..40 {
                let q = rect(&mut r, m);
                let want = oracle::brute_report(&pts, q.x1, q.x2, q.y1, q.y2);
                assert_eq!(
                    sorted_points(report.report(&q)),
                    sorted_points(want),
                    "report config={name} n={n} q={q:?}"
                );
                assert_eq!(
                    succ.successor(&q),
                    oracle::brute_successor(&pts, q.x1, q.x2, q.y1, q.y2),
                    "succ config={name} n={n} q={q:?}"
                );
                assert_eq!(
                    sorted.sorted_report(&q, None),
                    oracle::brute_sorted(&pts, q.x1, q.x2, q.y1, q.y2, None),
                    "sorted config={name} n={n} q={q:?}"
                );
                queries += 1;
            }
        }
    }
    println!(
        "ACCEPTANCE 2 (engine oracle equivalence): PASS — {instances} instances, {queries} rectangles x 3 engines, exact match"
    );
}

#[test]
fn criterion_3_cross_engine_consistency() {
    let ctx = default_ctx();
    let mut r = rng(0xACCE3);
    let mut checks = 0u64;
    for case in 0..25usize {
        let n = r.random_range(1..=2048u64) as usize;
        let pts = instance(&mut r, n, case);
        let m = 4 * n as u64 + 4;
        let report = build_report(&pts, &ctx).unwrap();
        let succ = build_successor(&pts, &ctx).unwrap();
        let sorted = build_sorted_report(&pts, &ctx).unwrap();
        for _ in 0..60 {
            let q = rect(&mut r, m);
            let stream = sorted.sorted_report(&q, None);
            assert_eq!(
                stream.first().copied(),
                succ.successor(&q),
                "first-of-sorted vs successor, case={case} q={q:?}"
            );
            assert_eq!(
                sorted_points(report.report(&q)),
                sorted_points(stream),
                "report set vs sorted set, case={case} q={q:?}"
            );
            checks += 1;
        }
    }
    println!("ACCEPTANCE 3 (cross-engine consistency): PASS — {checks} shared queries, exact");
}

#[test]
fn criterion_4_construction_scaling() {
    let ctx = default_ctx();
    let sizes: Vec<usize> = vec![1 << 16, 1 << 18, 1 << 20, 1 << 22];
    let mut report_norm = Vec::new();
    let mut succ_norm = Vec::new();
    let mut sorted_norm = Vec::new();
    for &n in &sizes {
        let mut r = rng(n as u64);
        let mut xs: Vec<u64> = (0..n as u64).collect();
        for i in (1..n).rev() {
            xs.swap(i, r.random_range(0..=i as u64) as usize);
        }
        let pts: Vec<Point> =
            xs.iter().enumerate().map(|(y, &x)| Point { x, y: y as u64 }).collect();
        let denom = n as f64 * (n as f64).log2().sqrt();

        let before = counters::snapshot();
        let idx = build_report(&pts, &ctx).unwrap();
        report_norm.push(counters::delta(&before).word_ops as f64 / denom);
        drop(idx);

        let before = counters::snapshot();
        let idx = build_successor(&pts, &ctx).unwrap();
        succ_norm.push(counters::delta(&before).word_ops as f64 / denom);
        drop(idx);

        let before = counters::snapshot();
        let idx = build_sorted_report(&pts, &ctx).unwrap();
        sorted_norm.push(counters::delta(&before).word_ops as f64 / denom);
        drop(idx);
    }
    let spread = |v: &[f64]| {
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    };
    let (rs, ss, os) = (spread(&report_norm), spread(&succ_norm), spread(&sorted_norm));
    assert!(rs < 2.5, "report normalized build cost spread {rs:.2} >= 2.5: {report_norm:?}");
    assert!(ss < 2.5, "succ normalized build cost spread {ss:.2} >= 2.5: {succ_norm:?}");
    assert!(os < 2.5, "sorted normalized build cost spread {os:.2} >= 2.5: {sorted_norm:?}");
    println!(
        "ACCEPTANCE 4 (construction scaling, word_ops / n*sqrt(lg n) over n=2^16..2^22): PASS — spreads report {rs:.2}x, succ {ss:.2}x, sorted {os:.2}x (< 2.5x)"
    );
}

#[test]
fn criterion_5_query_scaling() {
    let ctx = default_ctx();
    // Mean successor probes at n=2^20 vs n=2^10.
    let mut means = Vec::new();
    for &n in &[1usize << 10, 1 << 20] {
        let mut r = rng(n as u64 + 5);
        let mut xs: Vec<u64> = (0..n as u64).collect();
        for i in (1..n).rev() {
            xs.swap(i, r.random_range(0..=i as u64) as usize);
        }
        let pts: Vec<Point> =
            xs.iter().enumerate().map(|(y, &x)| Point { x, y: y as u64 }).collect();
        let idx = build_successor(&pts, &ctx).unwrap();
        let mut total = 0u64;
        let queries = 400;
        for _ in 0..queries {
            let q = rect(&mut r, n as u64);
            let before = counters::snapshot();
            let _ = idx.successor(&q);
            total += counters::delta(&before).element_probes;
        }
        means.push(total as f64 / queries as f64);
    }
    let ratio = means[1] / means[0].max(1e-9);
    assert!(
        ratio <= 2.0,
        "successor probe growth {ratio:.3} > 2.0 (means {means:?})"
    );

    // Per-report-query probes <= occ + 8 * tree height.
    let mut max_overhead = 0i64;
    for &n in &[1usize << 10, 1 << 16] {
        let mut r = rng(n as u64 + 9);
        let mut xs: Vec<u64> = (0..n as u64).collect();
        for i in (1..n).rev() {
            xs.swap(i, r.random_range(0..=i as u64) as usize);
        }
        let pts: Vec<Point> =
            xs.iter().enumerate().map(|(y, &x)| Point { x, y: y as u64 }).collect();
        let idx: GeneralReportIndex = build_report(&pts, &ctx).unwrap();
        let height = idx.tree.internal_levels() as u64;
        for _ in 0..120 {
            let q = rect(&mut r, n as u64);
            let before = counters::snapshot();
            let got = idx.report(&q);
            let probes = counters::delta(&before).element_probes;
            assert!(
                probes <= got.len() as u64 + 8 * height,
                "report probes {probes} > occ {} + 8*height {height} (n={n}, q={q:?})",
                got.len()
            );
            max_overhead = max_overhead.max(probes as i64 - got.len() as i64);
        }
    }
    println!(
        "ACCEPTANCE 5 (query scaling): PASS — successor probe ratio 2^20/2^10 = {ratio:.3} (<= 2), report probe overhead <= occ + 8h (max overhead {max_overhead})"
    );
}

#[test]
fn criterion_6_serialization() {
    use orq::index_file::{from_bytes, to_bytes, LoadedIndex};
    let ctx = default_ctx();
    let mut r = rng(0xACCE6);
    let pts = instance(&mut r, 300, 1);
    let m = 4 * 300 + 4u64;
    let rects: Vec<Rect> = (0..100).map(|_| rect(&mut r, m)).collect();

    let report = build_report(&pts, &ctx).unwrap();
    let bytes = to_bytes(&LoadedIndex::Report(report));
    let LoadedIndex::Report(loaded) = from_bytes(&bytes).unwrap() else { panic!() };
    let report = build_report(&pts, &ctx).unwrap();
    for q in &rects {
        assert_eq!(sorted_points(report.report(q)), sorted_points(loaded.report(q)));
    }

    let succ = build_successor(&pts, &ctx).unwrap();
    let bytes_s = to_bytes(&LoadedIndex::Succ(succ));
    let LoadedIndex::Succ(loaded) = from_bytes(&bytes_s).unwrap() else { panic!() };
    let succ = build_successor(&pts, &ctx).unwrap();
    for q in &rects {
        assert_eq!(succ.successor(q), loaded.successor(q));
    }

    let sorted = build_sorted_report(&pts, &ctx).unwrap();
    let bytes_o = to_bytes(&LoadedIndex::Sorted(sorted));
    let LoadedIndex::Sorted(loaded) = from_bytes(&bytes_o).unwrap() else { panic!() };
    let sorted = build_sorted_report(&pts, &ctx).unwrap();
    for q in &rects {
        assert_eq!(sorted.sorted_report(q, None), loaded.sorted_report(q, None));
    }

    // A flipped byte anywhere in a section payload must be rejected.
    let mut corrupted = 0;
    for frac in [3usize, 2] {
        let mut bad = bytes.clone();
        let pos = bad.len() / frac;
        bad[pos] ^= 0x55;
        if from_bytes(&bad).is_err() {
            corrupted += 1;
        }
    }
    assert_eq!(corrupted, 2, "corrupted index files were not rejected");
    println!(
        "ACCEPTANCE 6 (serialization): PASS — 3 engines round-tripped over 100 queries each; corrupted checksums rejected"
    );
}

#[test]
fn criterion_7_cli_verify() {
    let exe = env!("CARGO_BIN_EXE_orq");
    let out = std::process::Command::new(exe)
        .args(["verify", "--n", "1024", "--cases", "50", "--seed", "11"])
        .output()
        .expect("spawn orq");
    assert!(
        out.status.success(),
        "cmd_verify exited {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    println!(
        "ACCEPTANCE 7 (CLI verify end-to-end): PASS — {}",
        String::from_utf8_lossy(&out.stdout).trim()
    );
}
