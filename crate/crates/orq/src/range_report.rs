//! Orthogonal range reporting.
//!
//! The general engine reduces an n-point rank-space instance over a
//! high-fanout wavelet tree: a query rectangle splits at the LCA of its two
//! x-boundary leaves into two three-sided parts (answered inside single
//! children) and a middle part, which becomes a four-sided query on the
//! child-rank sequence `S(u)` — a narrow grid. Narrow grids split into
//! small-grid blocks plus a sampled set with per-(block, column) occurrence
//! lists; small grids are binary wavelet trees with constant-time-point ball
//! inheritance.
//!
//! Three-sided parts are enumerated by canonical tree descent by default
//! (probe count is then one `point` per reported point); the classic
//! rmq recursion over per-node minimum/maximum structures is kept as the
//! `three_sided_report_minmax` operation and can be forced engine-wide via
//! configuration.

use crate::ball_inheritance::{build_ball_large_fanout, build_ball_small_grid, BallIndex};
use crate::bitvec::RankSelectBitVector;
use crate::config::Ctx;
use crate::counters;
use crate::error::{Error, Result};
use crate::packed::PackedSequence;
use crate::rmq::{PackedRmqIndex, RmqIndex};
use crate::seq_index::SmallAlphabetRankIndex;
use crate::wavelet::{NodeId, WaveletOptions, WaveletTree};
use crate::{Point, Rect};
use std::sync::Arc;

/// Bijective map between an arbitrary (duplicate-free) point set and rank
/// space. Rectangle boundaries map through predecessor/successor on the
/// sorted coordinate lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RankSpaceMap {
    xs: Vec<u64>,
    ys: Vec<u64>,
}

impl RankSpaceMap {
    /// Returns the map and the defining permutation `X` (x-rank by y-rank).
    pub fn build(points: &[Point]) -> Result<(RankSpaceMap, Vec<u64>)> {
        let mut by_x: Vec<&Point> = points.iter().collect();
        by_x.sort_by_key(|p| (p.x, p.y));
        for w in by_x.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicatePoint(w[0].x, w[0].y));
            }
        }
        let mut by_y: Vec<(usize, &Point)> = Vec::with_capacity(points.len());
        {
            let mut order: Vec<usize> = (0..points.len()).collect();
            order.sort_by_key(|&i| (points[i].y, points[i].x));
            for i in order {
                by_y.push((i, &points[i]));
            }
        }
        let mut xrank_of_input = vec![0u64; points.len()];
        let mut xs = Vec::with_capacity(points.len());
        {
            let mut order: Vec<usize> = (0..points.len()).collect();
            order.sort_by_key(|&i| (points[i].x, points[i].y));
            for (r, i) in order.into_iter().enumerate() {
                xrank_of_input[i] = r as u64;
                xs.push(points[i].x);
            }
        }
        let mut ys = Vec::with_capacity(points.len());
        let mut x_perm = Vec::with_capacity(points.len());
        for (input_idx, p) in &by_y {
            ys.push(p.y);
            x_perm.push(xrank_of_input[*input_idx]);
        }
        counters::bump_word_ops(points.len() as u64 + 1);
        Ok((RankSpaceMap { xs, ys }, x_perm))
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Map a rectangle to inclusive rank ranges; `None` when nothing can
    /// match.
    pub fn rect_to_ranks(&self, rect: &Rect) -> Option<(u64, u64, u64, u64)> {
        if rect.is_empty() || self.xs.is_empty() {
            return None;
        }
        let x1 = self.xs.partition_point(|&v| v < rect.x1) as u64;
        let x2 = self.xs.partition_point(|&v| v <= rect.x2) as u64;
        let y1 = self.ys.partition_point(|&v| v < rect.y1) as u64;
        let y2 = self.ys.partition_point(|&v| v <= rect.y2) as u64;
        counters::bump_word_ops(4 * (64 - (self.xs.len() as u64).leading_zeros()) as u64);
        if x1 >= x2 || y1 >= y2 {
            return None;
        }
        Some((x1, x2 - 1, y1, y2 - 1))
    }

    pub fn point_from_ranks(&self, xr: u64, yr: u64) -> Point {
        Point { x: self.xs[xr as usize], y: self.ys[yr as usize] }
    }
}

/// Reference-grade range tree with explicit per-level point arrays; the
/// interface-compatible stand-in for the cited optimal structures used on
/// sampled sets. Correctness contract identical, cost contracts relaxed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RefRangeTree {
    len: usize,
    levels: u32,
    xs_sorted: Vec<u64>,
    /// Per level 0..=levels: points (x-rank, y) in node order.
    level_xr: Vec<Vec<u32>>,
    level_y: Vec<Vec<u64>>,
    offsets: Vec<Vec<u64>>,
}

impl RefRangeTree {
    pub fn build(points: &[Point]) -> RefRangeTree {
        let len = points.len();
        let mut order: Vec<usize> = (0..len).collect();
        order.sort_by_key(|&i| (points[i].x, points[i].y));
        let xs_sorted: Vec<u64> = order.iter().map(|&i| points[i].x).collect();
        let mut xr_of = vec![0u32; len];
        for (r, &i) in order.iter().enumerate() {
            xr_of[i] = r as u32;
        }
        let mut levels = 0u32;
        while (1usize << levels) < len.max(1) {
            levels += 1;
        }
        let mut by_y: Vec<(u32, u64)> = points.iter().enumerate().map(|(i, p)| (xr_of[i], p.y)).collect();
        by_y.sort_by_key(|&(_, y)| y);

        let mut level_xr = Vec::with_capacity(levels as usize + 1);
        let mut level_y = Vec::with_capacity(levels as usize + 1);
        let mut offsets = Vec::with_capacity(levels as usize + 1);
        let mut cur: Vec<(u32, u64)> = by_y;
        for l in 0..=levels {
            level_xr.push(cur.iter().map(|&(x, _)| x).collect());
            level_y.push(cur.iter().map(|&(_, y)| y).collect());
            let slots = 1usize << l;
            let shift = levels - l;
            let mut offs = vec![0u64; slots + 1];
            for &(x, _) in &cur {
                offs[(x >> shift) as usize + 1] += 1;
            }
            for s in 0..slots {
                offs[s + 1] += offs[s];
            }
            offsets.push(offs);
            if l == levels {
                break;
            }
            // Stable counting sort by the top l+1 bits of the x-rank.
            let shift = levels - l - 1;
            let buckets = 1usize << (l + 1);
            let mut cnt = vec![0usize; buckets + 1];
            for &(x, _) in &cur {
                cnt[(x >> shift) as usize + 1] += 1;
            }
            for b in 0..buckets {
                cnt[b + 1] += cnt[b];
            }
            let mut next = vec![(0u32, 0u64); cur.len()];
            for &(x, y) in &cur {
                let b = (x >> shift) as usize;
                next[cnt[b]] = (x, y);
                cnt[b] += 1;
            }
            cur = next;
        }
        counters::bump_word_ops(len as u64 * (levels as u64 + 1) + 1);
        RefRangeTree { len, levels, xs_sorted, level_xr, level_y, offsets }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Inclusive x-rank range covering original x in `[x1, x2]`.
    fn xr_range(&self, x1: u64, x2: u64) -> Option<(u32, u32)> {
        let lo = self.xs_sorted.partition_point(|&v| v < x1);
        let hi = self.xs_sorted.partition_point(|&v| v <= x2);
        if lo >= hi {
            None
        } else {
            Some((lo as u32, hi as u32 - 1))
        }
    }

    /// Canonical (level, node, ylo, yhi-exclusive) ranges covering x-ranks
    /// `[a, b]` and y in `[y1, y2]`.
    fn canonical(&self, a: u32, b: u32, y1: u64, y2: u64) -> Vec<(u32, usize, usize, usize)> {
        let mut out = Vec::new();
        if self.len == 0 {
            return out;
        }
        let mut stack = vec![(0u32, 0usize)];
        while let Some((level, node)) = stack.pop() {
            let shift = self.levels - level;
            let node_lo = (node as u64) << shift;
            let node_hi = node_lo + (1u64 << shift) - 1;
            if node_hi < a as u64 || node_lo > b as u64 {
                continue;
            }
            let offs = &self.offsets[level as usize];
            let (s, e) = (offs[node] as usize, offs[node + 1] as usize);
            if s == e {
                continue;
            }
            if node_lo >= a as u64 && node_hi <= b as u64 {
                let ys = &self.level_y[level as usize];
                let lo = s + ys[s..e].partition_point(|&y| y < y1);
                let hi = s + ys[s..e].partition_point(|&y| y <= y2);
                if lo < hi {
                    out.push((level, node, lo, hi));
                }
                continue;
            }
            if level < self.levels {
                stack.push((level + 1, node * 2));
                stack.push((level + 1, node * 2 + 1));
            }
        }
        counters::bump_word_ops(out.len() as u64 * 8 + 16);
        out
    }

    pub fn report(&self, x1: u64, x2: u64, y1: u64, y2: u64) -> Vec<Point> {
        let Some((a, b)) = (if x1 <= x2 && y1 <= y2 { self.xr_range(x1, x2) } else { None }) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for (level, _, lo, hi) in self.canonical(a, b, y1, y2) {
            let xr = &self.level_xr[level as usize];
            let ys = &self.level_y[level as usize];
            for i in lo..hi {
                out.push(Point { x: self.xs_sorted[xr[i] as usize], y: ys[i] });
            }
        }
        out
    }

    pub fn successor(&self, x1: u64, x2: u64, y1: u64, y2: u64) -> Option<Point> {
        if x1 > x2 || y1 > y2 {
            return None;
        }
        let (a, b) = self.xr_range(x1, x2)?;
        let mut best: Option<Point> = None;
        for (level, _, lo, hi) in self.canonical(a, b, y1, y2) {
            if lo < hi {
                let y = self.level_y[level as usize][lo];
                let x = self.xs_sorted[self.level_xr[level as usize][lo] as usize];
                if best.is_none() || y < best.unwrap().y {
                    best = Some(Point { x, y });
                }
            }
        }
        best
    }

    /// Points ordered by increasing y, lazily merged across canonical nodes.
    pub fn sorted_iter(&self, x1: u64, x2: u64, y1: u64, y2: u64) -> RefSortedIter<'_> {
        let ranges = if x1 <= x2 && y1 <= y2 {
            match self.xr_range(x1, x2) {
                Some((a, b)) => self.canonical(a, b, y1, y2),
                None => Vec::new(),
            }
        } else {
            Vec::new()
        };
        let mut heap = std::collections::BinaryHeap::new();
        for (slot, &(level, _, lo, _)) in ranges.iter().enumerate() {
            let y = self.level_y[level as usize][lo];
            heap.push(std::cmp::Reverse((y, slot)));
        }
        RefSortedIter { tree: self, cursors: ranges, heap }
    }
}

pub struct RefSortedIter<'a> {
    tree: &'a RefRangeTree,
    /// (level, node, next, hi) per canonical range.
    cursors: Vec<(u32, usize, usize, usize)>,
    heap: std::collections::BinaryHeap<std::cmp::Reverse<(u64, usize)>>,
}

impl Iterator for RefSortedIter<'_> {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        let std::cmp::Reverse((y, slot)) = self.heap.pop()?;
        let (level, _, lo, hi) = self.cursors[slot];
        let xr = self.tree.level_xr[level as usize][lo] as usize;
        let p = Point { x: self.tree.xs_sorted[xr], y };
        if lo + 1 < hi {
            self.cursors[slot].2 = lo + 1;
            let ny = self.tree.level_y[level as usize][lo + 1];
            self.heap.push(std::cmp::Reverse((ny, slot)));
        }
        Some(p)
    }
}

/// Reference-grade reporting index on a plain point set; the
/// `build_baseline_report` operation of the engine.
pub fn build_baseline_report(points: &[Point]) -> RefRangeTree {
    RefRangeTree::build(points)
}

/// x-bound of a three-sided query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XBound {
    Ge(u64),
    Le(u64),
}

impl XBound {
    fn admits(&self, x: u64) -> bool {
        match *self {
            XBound::Ge(a) => x >= a,
            XBound::Le(b) => x <= b,
        }
    }
}

/// Minimum/maximum structure flavor usable by the rmq recursion.
pub enum RmqFlavor<'a> {
    NonAccessing(&'a RmqIndex),
    Indexed(&'a PackedRmqIndex),
}

/// Three-sided reporting by rmq recursion: repeatedly take the extreme
/// x in the y-range, emit it while it satisfies the bound, and recurse on
/// both sides. Recursion depth is at most the output size plus one.
pub fn three_sided_report_minmax(
    tree: &WaveletTree,
    ball: &BallIndex,
    rmq: &RmqFlavor<'_>,
    v: NodeId,
    bound: XBound,
    c_v: u64,
    d_v: u64,
) -> Result<Vec<(u64, u64)>> {
    let mut out = Vec::new();
    if c_v > d_v {
        return Ok(out);
    }
    let n = tree.node_len(v);
    if d_v >= n {
        return Err(Error::InvalidRange(c_v as usize, d_v as usize));
    }
    let mut stack = vec![(c_v as i64, d_v as i64)];
    while let Some((lo, hi)) = stack.pop() {
        if lo > hi {
            continue;
        }
        let (lo_u, hi_u) = (lo as usize, hi as usize);
        let m = match (&bound, rmq) {
            (XBound::Ge(_), RmqFlavor::NonAccessing(r)) => r.range_max(lo_u, hi_u)?,
            (XBound::Le(_), RmqFlavor::NonAccessing(r)) => r.range_min(lo_u, hi_u)?,
            (XBound::Ge(_), RmqFlavor::Indexed(r)) => {
                let mut acc = |i: usize| ball.point(tree, v, i as u64).unwrap().0;
                r.range_max_indexed(&mut acc, lo_u, hi_u)?
            }
            (XBound::Le(_), RmqFlavor::Indexed(r)) => {
                let mut acc = |i: usize| ball.point(tree, v, i as u64).unwrap().0;
                r.range_min_indexed(&mut acc, lo_u, hi_u)?
            }
        };
        let p = ball.point(tree, v, m as u64)?;
        if bound.admits(p.0) {
            out.push(p);
            stack.push((lo, m as i64 - 1));
            stack.push((m as i64 + 1, hi));
        }
    }
    Ok(out)
}

/// Map a node-local position interval through to one child.
/// `lo..hi` are node-local exclusive bounds; the result likewise.
fn child_span(
    rank: &SmallAlphabetRankIndex,
    node_start: u64,
    t: u64,
    lo: u64,
    hi: u64,
) -> (u64, u64) {
    let base = rank.rank_excl(t, node_start as usize);
    let clo = rank.rank_excl(t, (node_start + lo) as usize) - base;
    let chi = rank.rank_excl(t, (node_start + hi) as usize) - base;
    (clo as u64, chi as u64)
}

/// Binary-tree variant over a per-level bit sequence.
fn child_span_bits(
    bits: &RankSelectBitVector,
    node_start: u64,
    t: u64,
    lo: u64,
    hi: u64,
) -> (u64, u64) {
    let one = t == 1;
    let base = if one {
        bits.rank1_excl(node_start as usize)
    } else {
        bits.rank0_excl(node_start as usize)
    };
    let (clo, chi) = if one {
        (
            bits.rank1_excl((node_start + lo) as usize) - base,
            bits.rank1_excl((node_start + hi) as usize) - base,
        )
    } else {
        (
            bits.rank0_excl((node_start + lo) as usize) - base,
            bits.rank0_excl((node_start + hi) as usize) - base,
        )
    };
    (clo as u64, chi as u64)
}

/// Small-grid engine: binary wavelet tree plus constant-time-point ball
/// inheritance and per-node indexing-model rmq pairs.
#[derive(Debug)]
pub struct SmallGridReportIndex {
    pub tree: WaveletTree,
    pub ball: BallIndex,
    pub sbits: Vec<RankSelectBitVector>,
    /// ys of the grid in leaf (x-sorted) order.
    pub leaf_ys: PackedSequence,
    pub prmq: Vec<Vec<Option<Box<PackedRmqIndex>>>>,
    pub sigma: u64,
    ctx: Arc<Ctx>,
}

impl SmallGridReportIndex {
    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn build(xs: &[u64], sigma: u64, ctx: &Arc<Ctx>) -> Result<SmallGridReportIndex> {
        let sigma = sigma.max(1);
        let width = (64 - (sigma - 1).max(1).leading_zeros()).max(1);
        let packed = PackedSequence::pack(xs, width)?;
        let mut tree = WaveletTree::build_packed(
            &packed,
            sigma,
            2,
            WaveletOptions { with_values: true, with_indexes: true },
            ctx,
        )?;
        let ball = build_ball_small_grid(&tree, true, 1.0 / ctx.config.ball_epsilon_inv as f64, ctx)?;
        let mut sbits = Vec::with_capacity(tree.internal_levels() as usize);
        for l in 0..tree.internal_levels() {
            sbits.push(RankSelectBitVector::build(tree.level_seq(l)));
        }
        let leaf_ys = tree.indexes_at(tree.internal_levels()).unwrap().clone();
        let mut prmq = Vec::with_capacity(tree.internal_levels() as usize);
        for l in 0..tree.internal_levels() {
            let vals = tree.values_at(l).unwrap();
            let offs = tree.offsets_at(l);
            let mut per_node: Vec<Option<Box<PackedRmqIndex>>> =
                Vec::with_capacity(offs.slots() as usize);
            for u in 0..offs.slots() {
                let (s, e) = (offs.get(u), offs.get(u + 1));
                if s == e {
                    per_node.push(None);
                } else {
                    let slice = vals.slice(s as usize, e as usize);
                    // The slice keeps the tree width; narrow to the grid's.
                    let slice = slice.extract_bits(
                        slice.width() - width.min(slice.width()),
                        slice.width() - 1,
                        ctx,
                    )?;
                    per_node.push(Some(Box::new(PackedRmqIndex::build(&slice, ctx)?)));
                }
            }
            prmq.push(per_node);
        }
        tree.discard_arrays();
        Ok(SmallGridReportIndex { tree, ball, sbits, leaf_ys, prmq, sigma, ctx: ctx.clone() })
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    /// Walk one element down to its leaf; returns (x, grid y), reading only
    /// stored data.
    fn resolve(&self, mut v: NodeId, mut i: u64) -> (u64, u64) {
        while !self.tree.is_leaf_level(v.level) {
            let (s, _) = self.tree.node_range(v);
            let bits = &self.sbits[v.level as usize];
            let t = bits.get((s + i) as usize) as u64;
            let (clo, _) = child_span_bits(bits, s, t, i, i + 1);
            v = self.tree.child(v, t);
            i = clo;
        }
        let (s, _) = self.tree.node_range(v);
        (v.index, self.leaf_ys.get((s + i) as usize))
    }

    /// Report x in [a, b], grid y in [ylo, yhi]; output is grid-local pairs.
    pub fn query(&self, a: u64, b: u64, ylo: u64, yhi: u64) -> Result<Vec<(u64, u64)>> {
        let mut out = Vec::new();
        if a > b || ylo > yhi || self.tree.is_empty() {
            return Ok(out);
        }
        let b = b.min(self.sigma - 1);
        if a > b {
            return Ok(out);
        }
        let (mut lo, mut hi) = (
            ylo.min(self.tree.len() as u64),
            (yhi + 1).min(self.tree.len() as u64),
        );
        if lo >= hi {
            return Ok(out);
        }
        let lca = self.tree.lca_leaves(a, b)?;
        // Descend from the root to the lca, mapping the y-position range.
        let mut v = self.tree.root();
        while v.level < lca.level {
            let t = self.tree.path_digit(a, v.level);
            let (s, _) = self.tree.node_range(v);
            let (clo, chi) = child_span_bits(&self.sbits[v.level as usize], s, t, lo, hi);
            v = self.tree.child(v, t);
            lo = clo;
            hi = chi;
            if lo >= hi {
                return Ok(out);
            }
        }
        if self.tree.is_leaf_level(lca.level) {
            let (s, _) = self.tree.node_range(lca);
            for i in lo..hi {
                out.push((lca.index, self.leaf_ys.get((s + i) as usize)));
            }
            return Ok(out);
        }
        if self.ctx.config.rmq_three_sided {
            self.three_sided_rmq(lca, a, true, lo, hi, &mut out)?;
            self.three_sided_rmq(lca, b, false, lo, hi, &mut out)?;
        } else {
            self.three_sided_descent(lca, a, true, lo, hi, &mut out);
            self.three_sided_descent(lca, b, false, lo, hi, &mut out);
        }
        Ok(out)
    }

    /// Canonical descent: step toward the bound's leaf inside the lca
    /// child, emitting sibling subtrees strictly inside the halfplane.
    fn three_sided_descent(
        &self,
        top: NodeId,
        leaf: u64,
        ge: bool,
        lo: u64,
        hi: u64,
        out: &mut Vec<(u64, u64)>,
    ) {
        let t = self.tree.path_digit(leaf, top.level);
        let (s, _) = self.tree.node_range(top);
        let (mut lo, mut hi) = child_span_bits(&self.sbits[top.level as usize], s, t, lo, hi);
        let mut v = self.tree.child(top, t);
        while !self.tree.is_leaf_level(v.level) && lo < hi {
            let t = self.tree.path_digit(leaf, v.level);
            let (s, _) = self.tree.node_range(v);
            let bits = &self.sbits[v.level as usize];
            let sib = 1 - t;
            if (ge && sib > t) || (!ge && sib < t) {
                let (clo, chi) = child_span_bits(bits, s, sib, lo, hi);
                let w = self.tree.child(v, sib);
                for i in clo..chi {
                    out.push(self.resolve(w, i));
                }
            }
            let (clo, chi) = child_span_bits(bits, s, t, lo, hi);
            v = self.tree.child(v, t);
            lo = clo;
            hi = chi;
        }
        if lo < hi && self.tree.is_leaf_level(v.level) {
            let (s, _) = self.tree.node_range(v);
            for i in lo..hi {
                out.push((v.index, self.leaf_ys.get((s + i) as usize)));
            }
        }
    }

    fn three_sided_rmq(
        &self,
        top: NodeId,
        bound_leaf: u64,
        ge: bool,
        lo: u64,
        hi: u64,
        out: &mut Vec<(u64, u64)>,
    ) -> Result<()> {
        let t = self.tree.path_digit(bound_leaf, top.level);
        let (s, _) = self.tree.node_range(top);
        let (clo, chi) = child_span_bits(&self.sbits[top.level as usize], s, t, lo, hi);
        if clo >= chi {
            return Ok(());
        }
        let child = self.tree.child(top, t);
        if self.tree.is_leaf_level(child.level) {
            let (cs, _) = self.tree.node_range(child);
            for i in clo..chi {
                out.push((child.index, self.leaf_ys.get((cs + i) as usize)));
            }
            return Ok(());
        }
        let idx = self.prmq[child.level as usize][child.index as usize]
            .as_ref()
            .expect("nonempty internal node has an rmq pair");
        let bound = if ge { XBound::Ge(bound_leaf) } else { XBound::Le(bound_leaf) };
        let pts = three_sided_report_minmax(
            &self.tree,
            &self.ball,
            &RmqFlavor::Indexed(idx),
            child,
            bound,
            clo,
            chi - 1,
        )?;
        out.extend(pts);
        Ok(())
    }
}

/// Narrow-grid engine: blocks of small grids, a sampled set with a baseline
/// index, and per-(block, column) occurrence lists.
#[derive(Debug)]
pub enum NarrowGridReportIndex {
    /// Below the tiny cut the whole grid is one packed scan.
    Tiny(PackedSequence),
    Single(SmallGridReportIndex),
    Split(NarrowSplit),
}

#[derive(Debug)]
pub struct NarrowSplit {
    pub block: usize,
    pub sigma: u64,
    pub len: usize,
    pub blocks: Vec<SmallGridReportIndex>,
    /// Baseline over one representative per (block, column).
    pub nhat: RefRangeTree,
    /// Occurrence lists: local ys grouped by (block, column).
    pub pl_offsets: Vec<u64>,
    pub pl_data: PackedSequence,
}

impl NarrowGridReportIndex {
    pub fn build(xs: &[u64], sigma: u64, ctx: &Arc<Ctx>) -> Result<NarrowGridReportIndex> {
        let tiny = ctx.config.tiny_cut.max(2 * ctx.config.large_fanout);
        if xs.len() < tiny {
            let width = (64 - (sigma.max(2) - 1).leading_zeros()).max(1);
            return Ok(NarrowGridReportIndex::Tiny(PackedSequence::pack(xs, width)?));
        }
        let block = ctx.config.narrow_block;
        if xs.len() <= block {
            return Ok(NarrowGridReportIndex::Single(SmallGridReportIndex::build(xs, sigma, ctx)?));
        }
        let sigma = sigma.max(1);
        let n_blocks = xs.len().div_ceil(block);
        let mut blocks = Vec::with_capacity(n_blocks);
        let mut samples = Vec::new();
        let mut counts = vec![0u64; n_blocks * sigma as usize + 1];
        for bi in 0..n_blocks {
            let lo = bi * block;
            let hi = ((bi + 1) * block).min(xs.len());
            blocks.push(SmallGridReportIndex::build(&xs[lo..hi], sigma, ctx)?);
            for (off, &x) in xs[lo..hi].iter().enumerate() {
                let slot = bi * sigma as usize + x as usize;
                if counts[slot + 1] == 0 {
                    samples.push(Point { x, y: bi as u64 });
                }
                counts[slot + 1] += 1;
                let _ = off;
            }
        }
        for s in 0..n_blocks * sigma as usize {
            counts[s + 1] += counts[s];
        }
        let y_width = (64 - (block as u64 - 1).max(1).leading_zeros()).max(1);
        let mut pl_data = PackedSequence::zeroed(y_width, xs.len());
        let mut cursor = counts.clone();
        for bi in 0..n_blocks {
            let lo = bi * block;
            let hi = ((bi + 1) * block).min(xs.len());
            for (off, &x) in xs[lo..hi].iter().enumerate() {
                let slot = bi * sigma as usize + x as usize;
                pl_data.set(cursor[slot] as usize, off as u64);
                cursor[slot] += 1;
            }
        }
        counters::bump_word_ops(xs.len() as u64 + n_blocks as u64 * sigma);
        Ok(NarrowGridReportIndex::Split(NarrowSplit {
            block,
            sigma,
            len: xs.len(),
            blocks,
            nhat: RefRangeTree::build(&samples),
            pl_offsets: counts,
            pl_data,
        }))
    }

    /// Report x in [a, b], y in [ylo, yhi] over the narrow grid; pairs are
    /// (x, narrow-grid y).
    pub fn query(&self, a: u64, b: u64, ylo: u64, yhi: u64) -> Result<Vec<(u64, u64)>> {
        match self {
            NarrowGridReportIndex::Tiny(xs) => {
                let mut out = Vec::new();
                if a > b || ylo > yhi {
                    return Ok(out);
                }
                counters::bump_word_ops(xs.bit_len() / 64 + 1);
                for y in ylo..=yhi.min(xs.len().saturating_sub(1) as u64) {
                    let x = xs.get(y as usize);
                    if x >= a && x <= b {
                        out.push((x, y));
                    }
                }
                Ok(out)
            }
            NarrowGridReportIndex::Single(g) => g.query(a, b, ylo, yhi),
            NarrowGridReportIndex::Split(s) => s.query(a, b, ylo, yhi),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            NarrowGridReportIndex::Tiny(xs) => xs.len(),
            NarrowGridReportIndex::Single(g) => g.len(),
            NarrowGridReportIndex::Split(s) => s.len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl NarrowSplit {
    fn query(&self, a: u64, b: u64, ylo: u64, yhi: u64) -> Result<Vec<(u64, u64)>> {
        let mut out = Vec::new();
        if a > b || ylo > yhi || self.len == 0 {
            return Ok(out);
        }
        let yhi = yhi.min(self.len as u64 - 1);
        if ylo > yhi {
            return Ok(out);
        }
        let bs = (ylo / self.block as u64) as usize;
        let be = (yhi / self.block as u64) as usize;
        let base_s = (bs * self.block) as u64;
        let base_e = (be * self.block) as u64;
        if bs == be {
            for (x, y) in self.blocks[bs].query(a, b, ylo - base_s, yhi - base_s)? {
                out.push((x, y + base_s));
            }
            return Ok(out);
        }
        for (x, y) in
            self.blocks[bs].query(a, b, ylo - base_s, self.blocks[bs].len() as u64 - 1)?
        {
            out.push((x, y + base_s));
        }
        for (x, y) in self.blocks[be].query(a, b, 0, yhi - base_e)? {
            out.push((x, y + base_e));
        }
        if bs + 1 <= be - 1 {
            for hit in self.nhat.report(a, b, bs as u64 + 1, be as u64 - 1) {
                let (x, bi) = (hit.x, hit.y);
                let slot = bi as usize * self.sigma as usize + x as usize;
                let (s, e) = (self.pl_offsets[slot], self.pl_offsets[slot + 1]);
                for k in s..e {
                    out.push((x, bi * self.block as u64 + self.pl_data.get(k as usize)));
                }
            }
        }
        Ok(out)
    }
}

/// The general engine over n points in rank space.
#[derive(Debug)]
pub struct GeneralReportIndex {
    pub ctx: Arc<Ctx>,
    pub map: RankSpaceMap,
    n: usize,
    pub tree: WaveletTree,
    pub ball: BallIndex,
    pub srank: Vec<SmallAlphabetRankIndex>,
    pub node_rmq: Vec<Vec<Option<Box<RmqIndex>>>>,
    pub node_narrow: Vec<Vec<Option<Box<NarrowGridReportIndex>>>>,
}

pub fn build_report(points: &[Point], ctx: &Arc<Ctx>) -> Result<GeneralReportIndex> {
    let (map, x_perm) = RankSpaceMap::build(points)?;
    build_report_from_perm(map, x_perm, ctx)
}

pub(crate) fn effective_fanout(n: usize, ctx: &Ctx) -> u64 {
    let sigma = n.max(2) as u64;
    (ctx.config.large_fanout as u64).min(sigma.next_power_of_two()).max(2)
}

fn build_report_from_perm(
    map: RankSpaceMap,
    x_perm: Vec<u64>,
    ctx: &Arc<Ctx>,
) -> Result<GeneralReportIndex> {
    let n = x_perm.len();
    let sigma = n.max(1) as u64;
    let d = effective_fanout(n, ctx);
    let width = (64 - (sigma - 1).max(1).leading_zeros()).max(1);
    let packed = PackedSequence::pack(&x_perm, width)?;
    let mut tree = WaveletTree::build_packed(
        &packed,
        sigma,
        d,
        WaveletOptions { with_values: true, with_indexes: true },
        ctx,
    )?;
    let ball = build_ball_large_fanout(&tree, true, ctx)?;
    let levels = tree.internal_levels();
    let mut srank = Vec::with_capacity(levels as usize);
    let mut node_rmq = Vec::with_capacity(levels as usize);
    let mut node_narrow = Vec::with_capacity(levels as usize);
    for l in 0..levels {
        let seq = tree.level_seq(l);
        srank.push(SmallAlphabetRankIndex::build_packed(
            seq,
            d,
            ctx.config.seq_fanout as u64,
            ctx.config.polylog_sigma.max(d),
        )?);
        let vals = tree.values_at(l).unwrap();
        let offs = tree.offsets_at(l);
        let mut rmqs: Vec<Option<Box<RmqIndex>>> = Vec::with_capacity(offs.slots() as usize);
        let mut narrows: Vec<Option<Box<NarrowGridReportIndex>>> =
            Vec::with_capacity(offs.slots() as usize);
        for u in 0..offs.slots() {
            let (s, e) = (offs.get(u), offs.get(u + 1));
            if s == e {
                rmqs.push(None);
                narrows.push(None);
                continue;
            }
            let values: Vec<u64> = (s..e).map(|i| vals.get(i as usize)).collect();
            rmqs.push(Some(Box::new(RmqIndex::build(&values))));
            let digits: Vec<u64> = (s..e).map(|i| seq.get(i as usize)).collect();
            narrows.push(Some(Box::new(NarrowGridReportIndex::build(&digits, d, ctx)?)));
        }
        node_rmq.push(rmqs);
        node_narrow.push(narrows);
    }
    tree.discard_arrays();
    Ok(GeneralReportIndex { ctx: ctx.clone(), map, n, tree, ball, srank, node_rmq, node_narrow })
}

impl GeneralReportIndex {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// All points in the rectangle, in unspecified order.
    pub fn report(&self, rect: &Rect) -> Vec<Point> {
        let Some((a, b, c, d)) = self.map.rect_to_ranks(rect) else {
            return Vec::new();
        };
        self.report_ranks(a, b, c, d)
            .into_iter()
            .map(|(xr, yr)| self.map.point_from_ranks(xr, yr))
            .collect()
    }

    /// Rank-space reporting; coordinates are (x-rank, y-rank).
    pub fn report_ranks(&self, a: u64, b: u64, c: u64, d: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        if self.n == 0 || a > b || c > d {
            return out;
        }
        let lca = self.tree.lca_leaves(a, b).expect("ranks in range");
        let (mut lo, mut hi) = (c.min(self.n as u64), (d + 1).min(self.n as u64));
        if lo >= hi {
            return out;
        }
        let mut v = self.tree.root();
        while v.level < lca.level {
            let t = self.tree.path_digit(a, v.level);
            let (s, _) = self.tree.node_range(v);
            let (clo, chi) = child_span(&self.srank[v.level as usize], s, t, lo, hi);
            v = self.tree.child(v, t);
            lo = clo;
            hi = chi;
            if lo >= hi {
                return out;
            }
        }
        if self.tree.is_leaf_level(lca.level) {
            for i in lo..hi {
                let (x, y) = self.ball.point(&self.tree, lca, i).expect("in range");
                out.push((x, y));
            }
            return out;
        }
        let ap = self.tree.path_digit(a, lca.level);
        let bp = self.tree.path_digit(b, lca.level);
        debug_assert!(ap < bp);
        self.three_sided(lca, a, true, lo, hi, &mut out);
        self.three_sided(lca, b, false, lo, hi, &mut out);
        if ap + 1 <= bp - 1 {
            let narrow = self.node_narrow[lca.level as usize][lca.index as usize]
                .as_ref()
                .expect("nonempty node has a narrow index");
            let hits = narrow
                .query(ap + 1, bp - 1, lo, hi - 1)
                .expect("in-range narrow query");
            for (_, pos) in hits {
                let (x, y) = self.ball.point(&self.tree, v, pos).expect("in range");
                out.push((x, y));
            }
        }
        out
    }

    /// Three-sided part under the lca child on the path to `leaf`.
    fn three_sided(
        &self,
        u: NodeId,
        leaf: u64,
        ge: bool,
        lo: u64,
        hi: u64,
        out: &mut Vec<(u64, u64)>,
    ) {
        let t = self.tree.path_digit(leaf, u.level);
        let (s, _) = self.tree.node_range(u);
        let (mut lo, mut hi) = child_span(&self.srank[u.level as usize], s, t, lo, hi);
        let mut v = self.tree.child(u, t);
        if lo >= hi {
            return;
        }
        if self.ctx.config.rmq_three_sided && !self.tree.is_leaf_level(v.level) {
            if let Some(rmq) = self.node_rmq[v.level as usize][v.index as usize].as_ref() {
                let bound = if ge { XBound::Ge(leaf) } else { XBound::Le(leaf) };
                let pts = three_sided_report_minmax(
                    &self.tree,
                    &self.ball,
                    &RmqFlavor::NonAccessing(rmq),
                    v,
                    bound,
                    lo,
                    hi - 1,
                )
                .expect("in-range three-sided");
                out.extend(pts);
                return;
            }
        }
        // Canonical descent: emit sibling subtrees strictly inside the
        // halfplane, stepping toward the bound's leaf.
        while !self.tree.is_leaf_level(v.level) && lo < hi {
            let t = self.tree.path_digit(leaf, v.level);
            let (s, _) = self.tree.node_range(v);
            let rank = &self.srank[v.level as usize];
            let sibs: Box<dyn Iterator<Item = u64>> = if ge {
                Box::new(t + 1..self.tree.fanout())
            } else {
                Box::new(0..t)
            };
            for sib in sibs {
                let (clo, chi) = child_span(rank, s, sib, lo, hi);
                if clo < chi {
                    let w = self.tree.child(v, sib);
                    for i in clo..chi {
                        let p = self.ball.point(&self.tree, w, i).expect("in range");
                        out.push(p);
                    }
                }
            }
            let (clo, chi) = child_span(rank, s, t, lo, hi);
            v = self.tree.child(v, t);
            lo = clo;
            hi = chi;
        }
        if self.tree.is_leaf_level(v.level) {
            for i in lo..hi {
                let p = self.ball.point(&self.tree, v, i).expect("in range");
                out.push(p);
            }
        }
    }
}

// --- serialization ---

crate::codec::impl_codec!(RankSpaceMap { xs, ys });
crate::codec::impl_codec!(RefRangeTree { len, levels, xs_sorted, level_xr, level_y, offsets });
crate::codec::impl_codec!(SmallGridReportIndex { tree, ball, sbits, leaf_ys, prmq, sigma, ctx });
crate::codec::impl_codec!(NarrowSplit {
    block,
    sigma,
    len,
    blocks,
    nhat,
    pl_offsets,
    pl_data,
});

impl crate::codec::Codec for NarrowGridReportIndex {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            NarrowGridReportIndex::Single(v) => {
                0u8.encode(w);
                v.encode(w);
            }
            NarrowGridReportIndex::Split(v) => {
                1u8.encode(w);
                v.encode(w);
            }
            NarrowGridReportIndex::Tiny(v) => {
                2u8.encode(w);
                v.encode(w);
            }
        }
    }
    fn decode(
        r: &mut crate::codec::Reader<'_>,
        ctx: &std::sync::Arc<Ctx>,
    ) -> Result<Self> {
        use crate::codec::Codec;
        Ok(match u8::decode(r, ctx)? {
            0 => NarrowGridReportIndex::Single(Codec::decode(r, ctx)?),
            1 => NarrowGridReportIndex::Split(Codec::decode(r, ctx)?),
            2 => NarrowGridReportIndex::Tiny(Codec::decode(r, ctx)?),
            t => return Err(Error::Format(format!("bad narrow tag {t}"))),
        })
    }
}

impl GeneralReportIndex {
    /// Everything except the rank-space map, which the file format keeps in
    /// its own section.
    pub fn encode_body(&self, w: &mut crate::codec::Writer) {
        use crate::codec::Codec;
        self.n.encode(w);
        self.tree.encode(w);
        self.ball.encode(w);
        self.srank.encode(w);
        self.node_rmq.encode(w);
        self.node_narrow.encode(w);
    }

    pub fn decode_body(
        r: &mut crate::codec::Reader<'_>,
        ctx: &Arc<Ctx>,
        map: RankSpaceMap,
    ) -> Result<GeneralReportIndex> {
        use crate::codec::Codec;
        Ok(GeneralReportIndex {
            ctx: ctx.clone(),
            map,
            n: Codec::decode(r, ctx)?,
            tree: Codec::decode(r, ctx)?,
            ball: Codec::decode(r, ctx)?,
            srank: Codec::decode(r, ctx)?,
            node_rmq: Codec::decode(r, ctx)?,
            node_narrow: Codec::decode(r, ctx)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::oracle;

    fn ctx() -> Arc<Ctx> {
        thread_local! {
            static SHARED: Arc<Ctx> = Ctx::new(Config::default());
        }
        SHARED.with(Arc::clone)
    }

    fn pts(v: &[(u64, u64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point { x, y }).collect()
    }

    fn sorted(mut v: Vec<Point>) -> Vec<Point> {
        v.sort();
        v
    }

    #[test]
    fn full_range_four_points() {
        let p = pts(&[(0, 0), (3, 1), (1, 2), (2, 3)]);
        let idx = build_report(&p, &ctx()).unwrap();
        let got = idx.report(&Rect::new(0, 3, 0, 3));
        assert_eq!(sorted(got), sorted(p.clone()));
    }

    #[test]
    fn worked_examples() {
        let p = pts(&[(0, 0), (3, 1), (1, 2), (2, 3)]);
        let idx = build_report(&p, &ctx()).unwrap();
        assert_eq!(
            sorted(idx.report(&Rect::new(1, 2, 1, 3))),
            pts(&[(1, 2), (2, 3)])
        );
        assert!(idx.report(&Rect::new(5, 4, 0, 0)).is_empty());
        assert_eq!(idx.report(&Rect::new(3, 3, 1, 1)), pts(&[(3, 1)]));
    }

    #[test]
    fn empty_set() {
        let idx = build_report(&[], &ctx()).unwrap();
        assert!(idx.report(&Rect::new(0, 100, 0, 100)).is_empty());
    }

    #[test]
    fn duplicate_point_rejected() {
        let p = pts(&[(3, 1), (3, 1)]);
        assert_eq!(
            build_report(&p, &ctx()).unwrap_err(),
            Error::DuplicatePoint(3, 1)
        );
    }

    #[test]
    fn three_sided_op_examples() {
        // Grid with A(root) = [2, 0, 3, 1].
        let idx = SmallGridReportIndex::build(&[2, 0, 3, 1], 4, &ctx()).unwrap();
        let root = idx.tree.root();
        let rmq = idx.prmq[0][0].as_ref().unwrap();
        let got = three_sided_report_minmax(
            &idx.tree,
            &idx.ball,
            &RmqFlavor::Indexed(rmq),
            root,
            XBound::Ge(2),
            0,
            3,
        )
        .unwrap();
        let mut got = got;
        got.sort();
        assert_eq!(got, vec![(2, 0), (3, 2)]);

        // An unsatisfiable bound stops after the first extremum check.
        let before = counters::snapshot();
        let nothing = three_sided_report_minmax(
            &idx.tree,
            &idx.ball,
            &RmqFlavor::Indexed(rmq),
            root,
            XBound::Ge(4),
            0,
            3,
        )
        .unwrap();
        assert!(nothing.is_empty());
        assert!(counters::delta(&before).element_probes <= 4);

        let all = three_sided_report_minmax(
            &idx.tree,
            &idx.ball,
            &RmqFlavor::Indexed(rmq),
            root,
            XBound::Ge(0),
            0,
            3,
        )
        .unwrap();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn matches_oracle_randomized() {
        let ctx = ctx();
        let mut seed = 42u64;
        let mut rand = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            seed >> 33
        };
        for n in [1usize, 2, 3, 7, 40, 200] {
            let mut points = Vec::new();
            let mut used = std::collections::HashSet::new();
            while points.len() < n {
                let p = (rand() % (3 * n as u64 + 1), rand() % (3 * n as u64 + 1));
                if used.insert(p) {
                    points.push(Point { x: p.0, y: p.1 });
                }
            }
            let idx = build_report(&points, &ctx).unwrap();
            let baseline = build_baseline_report(&points);
            for _ in 0..60 {
                let m = 3 * n as u64 + 1;
                let (x1, x2) = (rand() % m, rand() % m);
                let (y1, y2) = (rand() % m, rand() % m);
                let want = sorted(oracle::brute_report(&points, x1, x2, y1, y2));
                let got = sorted(idx.report(&Rect::new(x1, x2, y1, y2)));
                assert_eq!(got, want, "n={n} rect=({x1},{x2},{y1},{y2})");
                assert_eq!(sorted(baseline.report(x1, x2, y1, y2)), want);
            }
        }
    }

    #[test]
    fn exhaustive_tiny() {
        let ctx = ctx();
        // All permutations of sizes up to 5 in rank space, all rectangles.
        for n in 0..=6usize {
            let mut perm: Vec<u64> = (0..n as u64).collect();
            loop {
                let points: Vec<Point> =
                    perm.iter().enumerate().map(|(y, &x)| Point { x, y: y as u64 }).collect();
                let idx = build_report(&points, &ctx).unwrap();
                for x1 in 0..n as u64 {
                    for x2 in x1..n as u64 {
                        for y1 in 0..n as u64 {
                            for y2 in y1..n as u64 {
                                let want = sorted(oracle::brute_report(&points, x1, x2, y1, y2));
                                let got = sorted(idx.report(&Rect::new(x1, x2, y1, y2)));
                                assert_eq!(got, want, "perm={perm:?} ({x1},{x2},{y1},{y2})");
                            }
                        }
                    }
                }
                // Next permutation.
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
    }

    fn next_permutation(arr: &mut [u64]) -> bool {
        if arr.len() < 2 {
            return false;
        }
        let mut i = arr.len() - 1;
        while i > 0 && arr[i - 1] >= arr[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = arr.len() - 1;
        while arr[j] <= arr[i - 1] {
            j -= 1;
        }
        arr.swap(i - 1, j);
        arr[i..].reverse();
        true
    }

    #[test]
    fn probe_budget_per_query() {
        let ctx = ctx();
        let mut seed = 7u64;
        let mut rand = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            seed >> 33
        };
        let n = 1024usize;
        let mut xs: Vec<u64> = (0..n as u64).collect();
        for i in (1..n).rev() {
            xs.swap(i, (rand() % (i as u64 + 1)) as usize);
        }
        let points: Vec<Point> =
            xs.iter().enumerate().map(|(y, &x)| Point { x, y: y as u64 }).collect();
        let idx = build_report(&points, &ctx).unwrap();
        let height = idx.tree.internal_levels() as u64;
        for _ in 0..50 {
            let (x1, x2) = (rand() % n as u64, rand() % n as u64);
            let (y1, y2) = (rand() % n as u64, rand() % n as u64);
            let before = counters::snapshot();
            let got = idx.report(&Rect::new(x1, x2, y1, y2));
            let probes = counters::delta(&before).element_probes;
            assert!(
                probes <= got.len() as u64 + 8 * height,
                "probes {probes} occ {} height {height}",
                got.len()
            );
        }
    }
}
