//! Orthogonal range successor: the lowest point of the query rectangle.
//!
//! The general engine mirrors the reporting decomposition — lca split into
//! two three-sided next-point queries plus one four-sided query over the
//! child-rank sequence — with successor-flavored structures at each grid
//! scale. Three-sided next-point indexes decompose the list into blocks,
//! sample one extreme-x point per block into a reference-grade base
//! structure, rank-reduce coordinates inside blocks, and keep an
//! indexing-model predecessor over each block's sorted x. Medium narrow
//! grids use a small-fanout wavelet tree whose nodes carry small-narrow
//! engines; small narrow grids are binary trees answered by a marked-node
//! walk, or pure sampling tables below the tiny cut.

use crate::ball_inheritance::{build_ball_large_fanout, build_ball_small_grid, BallIndex};
use crate::bitvec::RankSelectBitVector;
use crate::config::Ctx;
use crate::counters;
use crate::error::Result;
use crate::packed::PackedSequence;
use crate::pred_succ::{DuplicatePatriciaIndex, PatriciaBlockIndex};
use crate::range_report::{effective_fanout, RankSpaceMap, RefRangeTree};
use crate::seq_index::{SelectIndex, SmallAlphabetRankIndex};
use crate::wavelet::{NodeId, WaveletOptions, WaveletTree};
use crate::{Point, Rect};
use std::sync::Arc;

/// x-bound for next-point queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Ge(u64),
    Le(u64),
}

/// How a three-sided index sorts its blocks during construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreeSidedVariant {
    /// Comparison sorting, general-universe predecessor blocks.
    General,
    /// Packed mergesort for rank reduction, packed Patricia predecessor.
    Packed,
}

/// Per-block predecessor over sorted x, indexing model.
#[derive(Debug, Clone, PartialEq, Eq)]
enum BlockPred {
    Indexing(PatriciaBlockIndex),
    Packed(DuplicatePatriciaIndex),
}

/// Three-sided next point over a y-ordered list of x values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreeSidedNextIndex {
    n: usize,
    block: usize,
    sub: usize,
    variant: ThreeSidedVariant,
    /// In-block x-rank per position, blocks concatenated.
    xr: PackedSequence,
    /// Per block: sorted-x order -> in-block position.
    sort_to_pos: PackedSequence,
    preds: Vec<BlockPred>,
    /// Per sub-block: max/min x-rank (for qualifying-sub-block scans).
    sub_max: PackedSequence,
    sub_min: PackedSequence,
    /// Sub-block count prefix per block.
    sub_starts: Vec<u64>,
    /// One extreme-x point per block, with original x.
    base_hi: RefRangeTree,
    base_lo: RefRangeTree,
}

impl ThreeSidedNextIndex {
    pub fn build(xs: &[u64], variant: ThreeSidedVariant, ctx: &Ctx) -> Result<ThreeSidedNextIndex> {
        let n = xs.len();
        let block = ctx.config.three_block.max(2);
        let sub = ctx.config.three_subblock.max(2);
        let n_blocks = n.div_ceil(block);
        let rank_width = (64 - (block as u64 - 1).max(1).leading_zeros()).max(1);
        let mut xr = PackedSequence::zeroed(rank_width, n);
        let mut sort_to_pos = PackedSequence::zeroed(rank_width, n);
        let mut preds = Vec::with_capacity(n_blocks);
        let mut sub_max = PackedSequence::new(rank_width);
        let mut sub_min = PackedSequence::new(rank_width);
        let mut sub_starts = vec![0u64];
        let mut hi_samples = Vec::with_capacity(n_blocks);
        let mut lo_samples = Vec::with_capacity(n_blocks);
        for b in 0..n_blocks {
            let lo = b * block;
            let hi = ((b + 1) * block).min(n);
            let len = hi - lo;
            // Rank reduction: sort (x, position) pairs.
            let order: Vec<u64> = match variant {
                ThreeSidedVariant::General => {
                    let mut idx: Vec<u64> = (0..len as u64).collect();
                    idx.sort_by_key(|&i| (xs[lo + i as usize], i));
                    counters::bump_word_ops(len as u64 * (64 - (len as u64).leading_zeros()) as u64 / 8 + 1);
                    idx
                }
                ThreeSidedVariant::Packed => {
                    let x_width = (64
                        - xs[lo..hi].iter().copied().max().unwrap_or(0).leading_zeros())
                    .max(1);
                    let composite: Vec<u64> = (0..len as u64)
                        .map(|i| (xs[lo + i as usize] << rank_width) | i)
                        .collect();
                    let packed = PackedSequence::pack(&composite, x_width + rank_width)?;
                    packed
                        .packed_sort()
                        .iter()
                        .map(|v| v & ((1 << rank_width) - 1))
                        .collect()
                }
            };
            for (r, &pos) in order.iter().enumerate() {
                xr.set(lo + pos as usize, r as u64);
                sort_to_pos.set(lo + r, pos);
            }
            let sorted_x: Vec<u64> = order.iter().map(|&p| xs[lo + p as usize]).collect();
            let width = (64 - sorted_x.last().copied().unwrap_or(0).leading_zeros()).max(1);
            preds.push(match variant {
                ThreeSidedVariant::General => BlockPred::Indexing(PatriciaBlockIndex::build(
                    &dedup_strict(&sorted_x),
                    width,
                    ctx.config.index_pred_block,
                    ctx,
                )?),
                ThreeSidedVariant::Packed => BlockPred::Packed(DuplicatePatriciaIndex::build(
                    &sorted_x,
                    width,
                    ctx.config.pred_block,
                    ctx,
                )?),
            });
            // Wait: the distinct-variant predecessor must keep positions
            // aligned with sorted order, so duplicates are only legal on the
            // packed arm; the general arm sees distinct x by construction.
            let n_sub = len.div_ceil(sub);
            for sb in 0..n_sub {
                let slo = lo + sb * sub;
                let shi = (slo + sub).min(hi);
                let mut mx = 0u64;
                let mut mn = u64::MAX;
                for p in slo..shi {
                    mx = mx.max(xr.get(p));
                    mn = mn.min(xr.get(p));
                }
                sub_max.push(mx);
                sub_min.push(mn);
            }
            sub_starts.push(sub_starts.last().unwrap() + n_sub as u64);
            let (mut best_hi, mut best_lo) = (lo, lo);
            for p in lo..hi {
                if xs[p] > xs[best_hi] {
                    best_hi = p;
                }
                if xs[p] < xs[best_lo] {
                    best_lo = p;
                }
            }
            hi_samples.push(Point { x: xs[best_hi], y: b as u64 });
            lo_samples.push(Point { x: xs[best_lo], y: b as u64 });
            counters::bump_word_ops(len as u64 + 1);
        }
        Ok(ThreeSidedNextIndex {
            n,
            block,
            sub,
            variant,
            xr,
            sort_to_pos,
            preds,
            sub_max,
            sub_min,
            sub_starts,
            base_hi: RefRangeTree::build(&hi_samples),
            base_lo: RefRangeTree::build(&lo_samples),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn block_len(&self, b: usize) -> usize {
        ((b + 1) * self.block).min(self.n) - b * self.block
    }

    /// Inclusive x-rank bound within block `b` equivalent to `bound`, or
    /// `None` when nothing in the block qualifies.
    fn rank_bound(
        &self,
        accessor: &mut dyn FnMut(usize) -> u64,
        b: usize,
        bound: Bound,
    ) -> Option<(u64, bool)> {
        let base = b * self.block;
        let len = self.block_len(b);
        let mut acc = |sorted_pos: usize| {
            let in_block = self.sort_to_pos.get(base + sorted_pos) as usize;
            accessor(base + in_block)
        };
        match bound {
            Bound::Ge(a) => {
                let first = match &self.preds[b] {
                    BlockPred::Indexing(p) => p.succ(&mut acc, a),
                    BlockPred::Packed(p) => p.succ(&mut acc, a),
                }?;
                Some((first as u64, true))
            }
            Bound::Le(v) => {
                let first_above = match v.checked_add(1) {
                    Some(v1) => match &self.preds[b] {
                        BlockPred::Indexing(p) => p.succ(&mut acc, v1),
                        BlockPred::Packed(p) => p.succ(&mut acc, v1),
                    },
                    None => None,
                };
                let last = match first_above {
                    Some(0) => return None,
                    Some(p) => p as u64 - 1,
                    None => len as u64 - 1,
                };
                Some((last, false))
            }
        }
    }

    fn qualifies(&self, pos: usize, rank_bound: u64, ge: bool) -> bool {
        let r = self.xr.get(pos);
        if ge {
            r >= rank_bound
        } else {
            r <= rank_bound
        }
    }

    /// First qualifying position in block `b` over in-block offsets
    /// `[lo, hi]`, scanning head sub-block, qualifying middle sub-block, and
    /// tail sub-block.
    fn in_block(&self, b: usize, lo: u64, hi: u64, rank_bound: u64, ge: bool) -> Option<u64> {
        let base = (b * self.block) as u64;
        let ss = lo / self.sub as u64;
        let se = hi / self.sub as u64;
        let head_end = ((ss + 1) * self.sub as u64 - 1).min(hi);
        for off in lo..=head_end {
            if self.qualifies((base + off) as usize, rank_bound, ge) {
                return Some(off);
            }
        }
        counters::bump_word_ops(head_end - lo + 1);
        if ss == se {
            return None;
        }
        let sub_base = self.sub_starts[b];
        for sb in ss + 1..se {
            let extreme = if ge {
                self.sub_max.get((sub_base + sb) as usize)
            } else {
                self.sub_min.get((sub_base + sb) as usize)
            };
            counters::bump_word_ops(1);
            let hit = if ge { extreme >= rank_bound } else { extreme <= rank_bound };
            if hit {
                let slo = sb * self.sub as u64;
                let shi = ((sb + 1) * self.sub as u64 - 1).min(hi);
                for off in slo..=shi {
                    if self.qualifies((base + off) as usize, rank_bound, ge) {
                        return Some(off);
                    }
                }
                unreachable!("sub-block extreme promised a qualifying element");
            }
        }
        let tlo = se * self.sub as u64;
        for off in tlo..=hi {
            if self.qualifies((base + off) as usize, rank_bound, ge) {
                return Some(off);
            }
        }
        counters::bump_word_ops(hi - tlo + 1);
        None
    }

    /// Position (list index) of the minimum-y point satisfying `bound` with
    /// y in `[c, d]`, using O(1) accessor calls.
    pub fn next_position(
        &self,
        accessor: &mut dyn FnMut(usize) -> u64,
        bound: Bound,
        c: u64,
        d: u64,
    ) -> Option<u64> {
        if self.n == 0 || c > d {
            return None;
        }
        let d = d.min(self.n as u64 - 1);
        if c > d {
            return None;
        }
        let bs = (c / self.block as u64) as usize;
        let be = (d / self.block as u64) as usize;
        let c_loc = c - (bs * self.block) as u64;
        let d_loc = d - (be * self.block) as u64;
        if bs == be {
            let (rb, ge) = self.rank_bound(accessor, bs, bound)?;
            return self
                .in_block(bs, c_loc, d_loc, rb, ge)
                .map(|off| (bs * self.block) as u64 + off);
        }
        if let Some((rb, ge)) = self.rank_bound(accessor, bs, bound) {
            if let Some(off) = self.in_block(bs, c_loc, self.block_len(bs) as u64 - 1, rb, ge) {
                return Some((bs * self.block) as u64 + off);
            }
        }
        if bs + 1 <= be - 1 {
            let hit = match bound {
                Bound::Ge(a) => {
                    self.base_hi.successor(a, u64::MAX, bs as u64 + 1, be as u64 - 1)
                }
                Bound::Le(b) => self.base_lo.successor(0, b, bs as u64 + 1, be as u64 - 1),
            };
            if let Some(sample) = hit {
                let tb = sample.y as usize;
                let (rb, ge) = self
                    .rank_bound(accessor, tb, bound)
                    .expect("sampled block has a qualifying point");
                let off = self
                    .in_block(tb, 0, self.block_len(tb) as u64 - 1, rb, ge)
                    .expect("sampled block has a qualifying point");
                return Some((tb * self.block) as u64 + off);
            }
        }
        let (rb, ge) = self.rank_bound(accessor, be, bound)?;
        self.in_block(be, 0, d_loc, rb, ge)
            .map(|off| (be * self.block) as u64 + off)
    }

    pub(crate) fn block(&self) -> usize {
        self.block
    }

    pub(crate) fn block_count(&self) -> usize {
        self.n.div_ceil(self.block)
    }

    pub(crate) fn block_len_of(&self, b: usize) -> usize {
        self.block_len(b)
    }

    pub(crate) fn rank_bound_of(
        &self,
        accessor: &mut dyn FnMut(usize) -> u64,
        b: usize,
        bound: Bound,
    ) -> Option<(u64, bool)> {
        self.rank_bound(accessor, b, bound)
    }

    /// Qualifying in-block offsets of block `b` within `[lo, hi]`, in y
    /// order, skipping sub-blocks whose extreme rank disqualifies them.
    pub(crate) fn block_positions(
        &self,
        b: usize,
        lo: u64,
        hi: u64,
        rank_bound: u64,
        ge: bool,
    ) -> BlockPositions<'_> {
        BlockPositions { idx: self, b, cur: lo, hi, rank_bound, ge }
    }

    /// Public next-point query: resolve the answer's x with one more
    /// accessor call.
    pub fn three_sided_next(
        &self,
        accessor: &mut dyn FnMut(usize) -> u64,
        bound: Bound,
        c: u64,
        d: u64,
    ) -> Option<(u64, u64)> {
        let pos = self.next_position(accessor, bound, c, d)?;
        counters::bump_element_probe();
        let x = accessor(pos as usize);
        Some((x, pos))
    }
}

/// Lazy iterator over a block's qualifying offsets.
pub(crate) struct BlockPositions<'a> {
    idx: &'a ThreeSidedNextIndex,
    b: usize,
    cur: u64,
    hi: u64,
    rank_bound: u64,
    ge: bool,
}

impl Iterator for BlockPositions<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let base = (self.b * self.idx.block) as u64;
        let sub = self.idx.sub as u64;
        while self.cur <= self.hi {
            // At a sub-block boundary, skip whole disqualified sub-blocks.
            if self.cur % sub == 0 && self.cur + sub - 1 <= self.hi {
                let sb = self.idx.sub_starts[self.b] + self.cur / sub;
                let extreme = if self.ge {
                    self.idx.sub_max.get(sb as usize)
                } else {
                    self.idx.sub_min.get(sb as usize)
                };
                counters::bump_word_ops(1);
                let hit = if self.ge {
                    extreme >= self.rank_bound
                } else {
                    extreme <= self.rank_bound
                };
                if !hit {
                    self.cur += sub;
                    continue;
                }
            }
            let off = self.cur;
            self.cur += 1;
            if self.idx.qualifies((base + off) as usize, self.rank_bound, self.ge) {
                return Some(off);
            }
        }
        None
    }
}

fn dedup_strict(sorted: &[u64]) -> Vec<u64> {
    // The general variant's inputs are distinct already; this guards the
    // structure contract without changing positions.
    debug_assert!(sorted.windows(2).all(|w| w[0] < w[1]));
    sorted.to_vec()
}

/// Small narrow grid (fanout-of-the-medium-tree columns wide).
#[derive(Debug)]
pub enum SmallNarrowSuccIndex {
    Tiny(TinyGridIndex),
    Tree(SmallNarrowTree),
}

/// Below the tiny cut: packed coordinates, sub-block sampling, scans.
#[derive(Debug)]
pub struct TinyGridIndex {
    xs: PackedSequence,
    sigma: u64,
    sub: usize,
    /// Per (sub-block, symbol): min local y + 1, 0 when absent.
    samples: Vec<u64>,
}

impl TinyGridIndex {
    fn build(xs: &[u64], sigma: u64, ctx: &Ctx) -> Result<TinyGridIndex> {
        let sigma = sigma.max(1);
        let width = (64 - (sigma - 1).max(1).leading_zeros()).max(1);
        let sub = ctx.config.three_subblock.max(2);
        let packed = PackedSequence::pack(xs, width)?;
        let n_sub = xs.len().div_ceil(sub);
        let mut samples = vec![0u64; n_sub * sigma as usize];
        for (i, &x) in xs.iter().enumerate() {
            let slot = (i / sub) * sigma as usize + x as usize;
            if samples[slot] == 0 {
                samples[slot] = (i % sub) as u64 + 1;
            }
        }
        counters::bump_word_ops(xs.len() as u64 + 1);
        Ok(TinyGridIndex { xs: packed, sigma, sub, samples })
    }

    fn query(&self, a: u64, b: u64, c: u64, d: u64) -> Option<(u64, u64)> {
        let n = self.xs.len() as u64;
        if n == 0 || a > b || c > d {
            return None;
        }
        let d = d.min(n - 1);
        if c > d {
            return None;
        }
        let ss = c / self.sub as u64;
        let se = d / self.sub as u64;
        let head_end = ((ss + 1) * self.sub as u64 - 1).min(d);
        for y in c..=head_end {
            let x = self.xs.get(y as usize);
            if x >= a && x <= b {
                return Some((x, y));
            }
        }
        counters::bump_word_ops(head_end - c + 1);
        if ss == se {
            return None;
        }
        for sb in ss + 1..se {
            let mut best: Option<(u64, u64)> = None;
            for x in a..=b.min(self.sigma - 1) {
                let s = self.samples[sb as usize * self.sigma as usize + x as usize];
                if s > 0 {
                    let y = sb * self.sub as u64 + (s - 1);
                    if best.is_none() || y < best.unwrap().1 {
                        best = Some((x, y));
                    }
                }
            }
            counters::bump_word_ops(b - a + 1);
            if best.is_some() {
                return best;
            }
        }
        for y in se * self.sub as u64..=d {
            let x = self.xs.get(y as usize);
            if x >= a && x <= b {
                return Some((x, y));
            }
        }
        None
    }
}

/// Binary wavelet tree of logarithmic height with per-level rank/select;
/// queries walk marked nodes off the two boundary paths.
#[derive(Debug)]
pub struct SmallNarrowTree {
    tree: WaveletTree,
    sbits: Vec<RankSelectBitVector>,
    level_vals: Vec<PackedSequence>,
    level_rank: Vec<SmallAlphabetRankIndex>,
    root_select: SelectIndex,
    sigma: u64,
}

impl SmallNarrowTree {
    fn build(xs: &[u64], sigma: u64, ctx: &Ctx) -> Result<SmallNarrowTree> {
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
        let mut sbits = Vec::new();
        let mut level_vals = Vec::new();
        let mut level_rank = Vec::new();
        for l in 0..tree.internal_levels() {
            sbits.push(RankSelectBitVector::build(tree.level_seq(l)));
            let vals = tree.values_at(l).unwrap().clone();
            level_rank.push(SmallAlphabetRankIndex::build_packed(
                &vals,
                tree.sigma_padded(),
                ctx.config.seq_fanout as u64,
                ctx.config.polylog_sigma.max(tree.sigma_padded()),
            )?);
            level_vals.push(vals);
        }
        let root_select = SelectIndex::build(xs.iter().copied(), tree.sigma_padded(), xs.len());
        tree.discard_arrays();
        Ok(SmallNarrowTree { tree, sbits, level_vals, level_rank, root_select, sigma })
    }

    /// Global (grid) y of the element at node-local position `i` of node
    /// `v`, via the rank-to-root select composition.
    fn global_y(&self, v: NodeId, i: u64) -> u64 {
        if self.tree.is_leaf_level(v.level) {
            // Leaf symbol v.index: i-th occurrence overall.
            return self.root_select.select_sym(v.index, i as usize + 1).expect("occupied leaf")
                as u64;
        }
        let (s, _) = self.tree.node_range(v);
        let c = self.level_vals[v.level as usize].get((s + i) as usize);
        let rank = self.level_rank[v.level as usize].rank_excl(c, (s + i + 1) as usize)
            - self.level_rank[v.level as usize].rank_excl(c, s as usize);
        self.root_select.select_sym(c, rank).expect("occurrence exists") as u64
    }

    fn x_of(&self, v: NodeId, i: u64) -> u64 {
        if self.tree.is_leaf_level(v.level) {
            return v.index;
        }
        let (s, _) = self.tree.node_range(v);
        self.level_vals[v.level as usize].get((s + i) as usize)
    }

    /// Marked nodes covering x in [a, b] with their mapped y ranges: the
    /// inner siblings of the two boundary paths plus the boundary leaves.
    fn marked_ranges(&self, a: u64, b: u64, c: u64, d: u64) -> Vec<(NodeId, u64, u64)> {
        let mut out = Vec::new();
        let n = self.tree.len() as u64;
        if n == 0 || a > b || c > d {
            return out;
        }
        let b = b.min(self.sigma - 1);
        if a > b {
            return out;
        }
        let (mut lo, mut hi) = (c.min(n), (d + 1).min(n));
        if lo >= hi {
            return out;
        }
        let Ok(lca) = self.tree.lca_leaves(a, b) else {
            return out;
        };
        let mut v = self.tree.root();
        while v.level < lca.level {
            let t = self.tree.path_digit(a, v.level);
            let (s, _) = self.tree.node_range(v);
            let bits = &self.sbits[v.level as usize];
            let (clo, chi) = bit_span(bits, s, t, lo, hi);
            v = self.tree.child(v, t);
            lo = clo;
            hi = chi;
            if lo >= hi {
                return out;
            }
        }
        if self.tree.is_leaf_level(lca.level) {
            out.push((lca, lo, hi));
            return out;
        }
        for (leaf, ge) in [(a, true), (b, false)] {
            let (mut lo, mut hi) = (lo, hi);
            let mut v = lca;
            while !self.tree.is_leaf_level(v.level) && lo < hi {
                let t = self.tree.path_digit(leaf, v.level);
                let (s, _) = self.tree.node_range(v);
                let bits = &self.sbits[v.level as usize];
                let sib = 1 - t;
                let marked = if ge { sib > t } else { sib < t };
                if marked && v.level > lca.level {
                    let (mlo, mhi) = bit_span(bits, s, sib, lo, hi);
                    if mlo < mhi {
                        out.push((self.tree.child(v, sib), mlo, mhi));
                    }
                }
                let (clo, chi) = bit_span(bits, s, t, lo, hi);
                v = self.tree.child(v, t);
                lo = clo;
                hi = chi;
            }
            if self.tree.is_leaf_level(v.level) && lo < hi {
                out.push((v, lo, hi));
            }
        }
        out
    }

    fn query(&self, a: u64, b: u64, c: u64, d: u64) -> Option<(u64, u64)> {
        let mut best: Option<(u64, u64)> = None;
        for (w, lo, hi) in self.marked_ranges(a, b, c, d) {
            if lo < hi {
                let y = self.global_y(w, lo);
                if best.is_none() || y < best.unwrap().1 {
                    best = Some((self.x_of(w, lo), y));
                }
            }
        }
        best
    }
}

fn bit_span(bits: &RankSelectBitVector, node_start: u64, t: u64, lo: u64, hi: u64) -> (u64, u64) {
    let one = t == 1;
    let base = if one {
        bits.rank1_excl(node_start as usize)
    } else {
        bits.rank0_excl(node_start as usize)
    };
    if one {
        (
            (bits.rank1_excl((node_start + lo) as usize) - base) as u64,
            (bits.rank1_excl((node_start + hi) as usize) - base) as u64,
        )
    } else {
        (
            (bits.rank0_excl((node_start + lo) as usize) - base) as u64,
            (bits.rank0_excl((node_start + hi) as usize) - base) as u64,
        )
    }
}

impl SmallNarrowSuccIndex {
    pub fn build(xs: &[u64], sigma: u64, ctx: &Ctx) -> Result<SmallNarrowSuccIndex> {
        if xs.len() < ctx.config.tiny_cut {
            Ok(SmallNarrowSuccIndex::Tiny(TinyGridIndex::build(xs, sigma, ctx)?))
        } else {
            Ok(SmallNarrowSuccIndex::Tree(SmallNarrowTree::build(xs, sigma, ctx)?))
        }
    }

    /// Lowest point with x in [a, b], y in [c, d]; grid-local coordinates.
    pub fn query(&self, a: u64, b: u64, c: u64, d: u64) -> Option<(u64, u64)> {
        match self {
            SmallNarrowSuccIndex::Tiny(t) => t.query(a, b, c, d),
            SmallNarrowSuccIndex::Tree(t) => t.query(a, b, c, d),
        }
    }

    /// All points of the rectangle in increasing y, lazily. The tree arm
    /// merges the marked nodes' per-node streams with a binary heap of
    /// stream heads.
    pub fn sorted_stream(
        &self,
        a: u64,
        b: u64,
        c: u64,
        d: u64,
    ) -> Box<dyn Iterator<Item = (u64, u64)> + '_> {
        match self {
            SmallNarrowSuccIndex::Tiny(t) => {
                let n = t.xs.len() as u64;
                if n == 0 || a > b || c > d {
                    return Box::new(std::iter::empty());
                }
                let d = d.min(n - 1);
                Box::new((c..=d.max(c)).filter_map(move |y| {
                    if y >= n {
                        return None;
                    }
                    let x = t.xs.get(y as usize);
                    (x >= a && x <= b).then_some((x, y))
                }))
            }
            SmallNarrowSuccIndex::Tree(t) => {
                let marked = t.marked_ranges(a, b, c, d);
                let streams: Vec<Box<dyn Iterator<Item = (u64, u64)> + '_>> = marked
                    .into_iter()
                    .map(|(w, lo, hi)| {
                        let t = &*t;
                        Box::new((lo..hi).map(move |i| (t.x_of(w, i), t.global_y(w, i))))
                            as Box<dyn Iterator<Item = (u64, u64)> + '_>
                    })
                    .collect();
                Box::new(crate::sorted_report::merge_by_y(streams))
            }
        }
    }
}

/// Medium narrow grid engine.
#[derive(Debug)]
pub enum MediumNarrowSuccIndex {
    /// Below the tiny cut the whole grid is one packed scan.
    Tiny(PackedSequence),
    Block(MediumBlockSucc),
    Split(MediumSplitSucc),
}

#[derive(Debug)]
pub struct MediumBlockSucc {
    tree: WaveletTree,
    ball: BallIndex,
    srank: Vec<SmallAlphabetRankIndex>,
    node_small: Vec<Vec<Option<Box<SmallNarrowSuccIndex>>>>,
    node_ts: Vec<Vec<Option<Box<ThreeSidedNextIndex>>>>,
    sigma: u64,
}

#[derive(Debug)]
pub struct MediumSplitSucc {
    block: usize,
    len: usize,
    pub(crate) sigma: u64,
    blocks: Vec<MediumBlockSucc>,
    /// Min-y representative per (block, column), global coordinates.
    nhat: RefRangeTree,
}

impl MediumNarrowSuccIndex {
    pub fn build(xs: &[u64], sigma: u64, ctx: &Arc<Ctx>) -> Result<MediumNarrowSuccIndex> {
        let tiny = ctx.config.tiny_cut.max(2 * ctx.config.large_fanout);
        if xs.len() < tiny {
            let width = (64 - (sigma.max(2) - 1).leading_zeros()).max(1);
            return Ok(MediumNarrowSuccIndex::Tiny(PackedSequence::pack(xs, width)?));
        }
        let block = ctx.config.narrow_block;
        if xs.len() <= block {
            return Ok(MediumNarrowSuccIndex::Block(MediumBlockSucc::build(xs, sigma, ctx)?));
        }
        let sigma = sigma.max(1);
        let n_blocks = xs.len().div_ceil(block);
        let mut blocks = Vec::with_capacity(n_blocks);
        let mut samples = Vec::new();
        let mut seen = vec![false; sigma as usize];
        for bi in 0..n_blocks {
            let lo = bi * block;
            let hi = ((bi + 1) * block).min(xs.len());
            blocks.push(MediumBlockSucc::build(&xs[lo..hi], sigma, ctx)?);
            seen.iter_mut().for_each(|s| *s = false);
            for (off, &x) in xs[lo..hi].iter().enumerate() {
                if !seen[x as usize] {
                    seen[x as usize] = true;
                    samples.push(Point { x, y: (lo + off) as u64 });
                }
            }
        }
        counters::bump_word_ops(xs.len() as u64 + 1);
        Ok(MediumNarrowSuccIndex::Split(MediumSplitSucc {
            block,
            len: xs.len(),
            sigma,
            blocks,
            nhat: RefRangeTree::build(&samples),
        }))
    }

    /// Lowest point with x in [a, b] and grid y in [c, d].
    pub fn query(&self, a: u64, b: u64, c: u64, d: u64) -> Option<(u64, u64)> {
        match self {
            MediumNarrowSuccIndex::Tiny(xs) => {
                if a > b || c > d || xs.is_empty() {
                    return None;
                }
                counters::bump_word_ops(xs.bit_len() / 64 + 1);
                for y in c..=d.min(xs.len() as u64 - 1) {
                    let x = xs.get(y as usize);
                    if x >= a && x <= b {
                        return Some((x, y));
                    }
                }
                None
            }
            MediumNarrowSuccIndex::Block(g) => g.query(a, b, c, d),
            MediumNarrowSuccIndex::Split(s) => s.query(a, b, c, d),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            MediumNarrowSuccIndex::Tiny(xs) => xs.len(),
            MediumNarrowSuccIndex::Block(g) => g.tree.len(),
            MediumNarrowSuccIndex::Split(s) => s.len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl MediumBlockSucc {
    fn build(xs: &[u64], sigma: u64, ctx: &Arc<Ctx>) -> Result<MediumBlockSucc> {
        let sigma = sigma.max(1);
        let width = (64 - (sigma - 1).max(1).leading_zeros()).max(1);
        let d = (ctx.config.small_fanout as u64).min(sigma.next_power_of_two().max(2)).max(2);
        let packed = PackedSequence::pack(xs, width)?;
        let mut tree = WaveletTree::build_packed(
            &packed,
            sigma,
            d,
            WaveletOptions { with_values: true, with_indexes: true },
            ctx,
        )?;
        let ball = build_ball_small_grid(&tree, false, 0.5, ctx)?;
        let levels = tree.internal_levels();
        let mut srank = Vec::with_capacity(levels as usize);
        let mut node_small = Vec::with_capacity(levels as usize);
        let mut node_ts = Vec::with_capacity(levels as usize);
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
            let mut smalls: Vec<Option<Box<SmallNarrowSuccIndex>>> =
                Vec::with_capacity(offs.slots() as usize);
            let mut tss: Vec<Option<Box<ThreeSidedNextIndex>>> =
                Vec::with_capacity(offs.slots() as usize);
            for u in 0..offs.slots() {
                let (s, e) = (offs.get(u), offs.get(u + 1));
                if s == e {
                    smalls.push(None);
                    tss.push(None);
                    continue;
                }
                let digits: Vec<u64> = (s..e).map(|i| seq.get(i as usize)).collect();
                smalls.push(Some(Box::new(SmallNarrowSuccIndex::build(&digits, d, ctx)?)));
                let values: Vec<u64> = (s..e).map(|i| vals.get(i as usize)).collect();
                tss.push(Some(Box::new(ThreeSidedNextIndex::build(
                    &values,
                    ThreeSidedVariant::Packed,
                    ctx,
                )?)));
            }
            node_small.push(smalls);
            node_ts.push(tss);
        }
        tree.discard_arrays();
        Ok(MediumBlockSucc { tree, ball, srank, node_small, node_ts, sigma })
    }

    fn query(&self, a: u64, b: u64, c: u64, d: u64) -> Option<(u64, u64)> {
        let n = self.tree.len() as u64;
        if n == 0 || a > b || c > d {
            return None;
        }
        let b = b.min(self.sigma - 1);
        if a > b {
            return None;
        }
        let (mut lo, mut hi) = (c.min(n), (d + 1).min(n));
        if lo >= hi {
            return None;
        }
        let lca = self.tree.lca_leaves(a, b).ok()?;
        let mut v = self.tree.root();
        while v.level < lca.level {
            let t = self.tree.path_digit(a, v.level);
            let (s, _) = self.tree.node_range(v);
            let (clo, chi) = span(&self.srank[v.level as usize], s, t, lo, hi);
            v = self.tree.child(v, t);
            lo = clo;
            hi = chi;
            if lo >= hi {
                return None;
            }
        }
        if self.tree.is_leaf_level(lca.level) {
            let (x, y) = self.ball.point(&self.tree, lca, lo).ok()?;
            return Some((x, y));
        }
        let ap = self.tree.path_digit(a, lca.level);
        let bp = self.tree.path_digit(b, lca.level);
        let mut best: Option<(u64, u64)> = None;
        let mut consider = |cand: Option<(u64, u64)>| {
            if let Some((x, y)) = cand {
                if best.is_none() || y < best.unwrap().1 {
                    best = Some((x, y));
                }
            }
        };
        consider(self.three_sided_child(lca, a, true, lo, hi));
        consider(self.three_sided_child(lca, b, false, lo, hi));
        if ap + 1 <= bp - 1 {
            let small = self.node_small[lca.level as usize][lca.index as usize]
                .as_ref()
                .expect("nonempty node");
            if let Some((_, pos)) = small.query(ap + 1, bp - 1, lo, hi - 1) {
                consider(self.ball.point(&self.tree, lca, pos).ok());
            }
        }
        best
    }

    /// Three-sided next point inside the lca child on the boundary path.
    fn three_sided_child(
        &self,
        u: NodeId,
        leaf: u64,
        ge: bool,
        lo: u64,
        hi: u64,
    ) -> Option<(u64, u64)> {
        let t = self.tree.path_digit(leaf, u.level);
        let (s, _) = self.tree.node_range(u);
        let (clo, chi) = span(&self.srank[u.level as usize], s, t, lo, hi);
        if clo >= chi {
            return None;
        }
        let v = self.tree.child(u, t);
        if self.tree.is_leaf_level(v.level) {
            // Single column: the whole child qualifies.
            return self.ball.point(&self.tree, v, clo).ok();
        }
        let ts = self.node_ts[v.level as usize][v.index as usize]
            .as_ref()
            .expect("nonempty node");
        let bound = if ge { Bound::Ge(leaf) } else { Bound::Le(leaf) };
        let tree = &self.tree;
        let ball = &self.ball;
        let pos = ts.next_position(
            &mut |i| ball.point(tree, v, i as u64).expect("in range").0,
            bound,
            clo,
            chi - 1,
        )?;
        self.ball.point(&self.tree, v, pos).ok()
    }
}

fn span(rank: &SmallAlphabetRankIndex, node_start: u64, t: u64, lo: u64, hi: u64) -> (u64, u64) {
    let base = rank.rank_excl(t, node_start as usize);
    (
        (rank.rank_excl(t, (node_start + lo) as usize) - base) as u64,
        (rank.rank_excl(t, (node_start + hi) as usize) - base) as u64,
    )
}

impl MediumSplitSucc {
    fn query(&self, a: u64, b: u64, c: u64, d: u64) -> Option<(u64, u64)> {
        if self.len == 0 || a > b || c > d {
            return None;
        }
        let d = d.min(self.len as u64 - 1);
        if c > d {
            return None;
        }
        let bs = (c / self.block as u64) as usize;
        let be = (d / self.block as u64) as usize;
        let base_s = (bs * self.block) as u64;
        let base_e = (be * self.block) as u64;
        if bs == be {
            return self.blocks[bs]
                .query(a, b, c - base_s, d - base_s)
                .map(|(x, y)| (x, y + base_s));
        }
        if let Some((x, y)) =
            self.blocks[bs].query(a, b, c - base_s, self.blocks[bs].tree.len() as u64 - 1)
        {
            return Some((x, y + base_s));
        }
        if bs + 1 <= be - 1 {
            // The sampled representative of the answer's (block, column) is
            // the answer itself.
            let y_lo = (bs as u64 + 1) * self.block as u64;
            let y_hi = be as u64 * self.block as u64 - 1;
            if let Some(p) = self.nhat.successor(a, b, y_lo, y_hi) {
                return Some((p.x, p.y));
            }
        }
        self.blocks[be].query(a, b, 0, d - base_e).map(|(x, y)| (x, y + base_e))
    }
}

/// The general orthogonal range successor engine.
#[derive(Debug)]
pub struct GeneralSuccIndex {
    pub ctx: Arc<Ctx>,
    pub map: RankSpaceMap,
    n: usize,
    pub tree: WaveletTree,
    pub ball: BallIndex,
    pub srank: Vec<SmallAlphabetRankIndex>,
    pub node_ts: Vec<Vec<Option<Box<ThreeSidedNextIndex>>>>,
    pub node_medium: Vec<Vec<Option<Box<MediumNarrowSuccIndex>>>>,
}

pub fn build_successor(points: &[Point], ctx: &Arc<Ctx>) -> Result<GeneralSuccIndex> {
    let (map, x_perm) = RankSpaceMap::build(points)?;
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
    let ball = build_ball_large_fanout(&tree, false, ctx)?;
    let levels = tree.internal_levels();
    let mut srank = Vec::with_capacity(levels as usize);
    let mut node_ts = Vec::with_capacity(levels as usize);
    let mut node_medium = Vec::with_capacity(levels as usize);
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
        let mut tss: Vec<Option<Box<ThreeSidedNextIndex>>> =
            Vec::with_capacity(offs.slots() as usize);
        let mut mediums: Vec<Option<Box<MediumNarrowSuccIndex>>> =
            Vec::with_capacity(offs.slots() as usize);
        for u in 0..offs.slots() {
            let (s, e) = (offs.get(u), offs.get(u + 1));
            if s == e {
                tss.push(None);
                mediums.push(None);
                continue;
            }
            let values: Vec<u64> = (s..e).map(|i| vals.get(i as usize)).collect();
            tss.push(Some(Box::new(ThreeSidedNextIndex::build(
                &values,
                ThreeSidedVariant::General,
                ctx,
            )?)));
            let digits: Vec<u64> = (s..e).map(|i| seq.get(i as usize)).collect();
            mediums.push(Some(Box::new(MediumNarrowSuccIndex::build(&digits, d, ctx)?)));
        }
        node_ts.push(tss);
        node_medium.push(mediums);
    }
    tree.discard_arrays();
    Ok(GeneralSuccIndex { ctx: ctx.clone(), map, n, tree, ball, srank, node_ts, node_medium })
}

impl GeneralSuccIndex {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// The lowest point of the rectangle, or `None`.
    pub fn successor(&self, rect: &Rect) -> Option<Point> {
        let (a, b, c, d) = self.map.rect_to_ranks(rect)?;
        let (xr, yr) = self.successor_ranks(a, b, c, d)?;
        Some(self.map.point_from_ranks(xr, yr))
    }

    /// Rank-space successor.
    pub fn successor_ranks(&self, a: u64, b: u64, c: u64, d: u64) -> Option<(u64, u64)> {
        if self.n == 0 || a > b || c > d {
            return None;
        }
        let lca = self.tree.lca_leaves(a, b).ok()?;
        let (mut lo, mut hi) = (c.min(self.n as u64), (d + 1).min(self.n as u64));
        if lo >= hi {
            return None;
        }
        let mut v = self.tree.root();
        while v.level < lca.level {
            let t = self.tree.path_digit(a, v.level);
            let (s, _) = self.tree.node_range(v);
            let (clo, chi) = span(&self.srank[v.level as usize], s, t, lo, hi);
            v = self.tree.child(v, t);
            lo = clo;
            hi = chi;
            if lo >= hi {
                return None;
            }
        }
        if self.tree.is_leaf_level(lca.level) {
            return self.ball.point(&self.tree, lca, lo).ok();
        }
        let ap = self.tree.path_digit(a, lca.level);
        let bp = self.tree.path_digit(b, lca.level);
        let mut best: Option<(u64, u64)> = None;
        let mut consider = |cand: Option<(u64, u64)>| {
            if let Some((x, y)) = cand {
                if best.is_none() || y < best.unwrap().1 {
                    best = Some((x, y));
                }
            }
        };
        consider(self.three_sided_child(lca, a, true, lo, hi));
        consider(self.three_sided_child(lca, b, false, lo, hi));
        if ap + 1 <= bp - 1 {
            let medium = self.node_medium[lca.level as usize][lca.index as usize]
                .as_ref()
                .expect("nonempty node");
            if let Some((_, pos)) = medium.query(ap + 1, bp - 1, lo, hi - 1) {
                consider(self.ball.point(&self.tree, lca, pos).ok());
            }
        }
        best
    }

    fn three_sided_child(
        &self,
        u: NodeId,
        leaf: u64,
        ge: bool,
        lo: u64,
        hi: u64,
    ) -> Option<(u64, u64)> {
        let t = self.tree.path_digit(leaf, u.level);
        let (s, _) = self.tree.node_range(u);
        let (clo, chi) = span(&self.srank[u.level as usize], s, t, lo, hi);
        if clo >= chi {
            return None;
        }
        let v = self.tree.child(u, t);
        if self.tree.is_leaf_level(v.level) {
            return self.ball.point(&self.tree, v, clo).ok();
        }
        let ts = self.node_ts[v.level as usize][v.index as usize]
            .as_ref()
            .expect("nonempty node");
        let bound = if ge { Bound::Ge(leaf) } else { Bound::Le(leaf) };
        let tree = &self.tree;
        let ball = &self.ball;
        let pos = ts.next_position(
            &mut |i| ball.point(tree, v, i as u64).expect("in range").0,
            bound,
            clo,
            chi - 1,
        )?;
        self.ball.point(&self.tree, v, pos).ok()
    }
}

// --- serialization ---

impl crate::codec::Codec for ThreeSidedVariant {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            ThreeSidedVariant::General => 0u8.encode(w),
            ThreeSidedVariant::Packed => 1u8.encode(w),
        }
    }
    fn decode(
        r: &mut crate::codec::Reader<'_>,
        ctx: &std::sync::Arc<Ctx>,
    ) -> Result<Self> {
        Ok(match u8::decode(r, ctx)? {
            0 => ThreeSidedVariant::General,
            1 => ThreeSidedVariant::Packed,
            t => return Err(crate::error::Error::Format(format!("bad variant tag {t}"))),
        })
    }
}

impl crate::codec::Codec for BlockPred {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            BlockPred::Indexing(v) => {
                0u8.encode(w);
                v.encode(w);
            }
            BlockPred::Packed(v) => {
                1u8.encode(w);
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
            0 => BlockPred::Indexing(Codec::decode(r, ctx)?),
            1 => BlockPred::Packed(Codec::decode(r, ctx)?),
            t => return Err(crate::error::Error::Format(format!("bad pred tag {t}"))),
        })
    }
}

crate::codec::impl_codec!(ThreeSidedNextIndex {
    n,
    block,
    sub,
    variant,
    xr,
    sort_to_pos,
    preds,
    sub_max,
    sub_min,
    sub_starts,
    base_hi,
    base_lo,
});
crate::codec::impl_codec!(TinyGridIndex { xs, sigma, sub, samples });
crate::codec::impl_codec!(SmallNarrowTree {
    tree,
    sbits,
    level_vals,
    level_rank,
    root_select,
    sigma,
});

impl crate::codec::Codec for SmallNarrowSuccIndex {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            SmallNarrowSuccIndex::Tiny(v) => {
                0u8.encode(w);
                v.encode(w);
            }
            SmallNarrowSuccIndex::Tree(v) => {
                1u8.encode(w);
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
            0 => SmallNarrowSuccIndex::Tiny(Codec::decode(r, ctx)?),
            1 => SmallNarrowSuccIndex::Tree(Codec::decode(r, ctx)?),
            t => return Err(crate::error::Error::Format(format!("bad small-narrow tag {t}"))),
        })
    }
}

crate::codec::impl_codec!(MediumBlockSucc { tree, ball, srank, node_small, node_ts, sigma });
crate::codec::impl_codec!(MediumSplitSucc { block, len, sigma, blocks, nhat });

impl crate::codec::Codec for MediumNarrowSuccIndex {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            MediumNarrowSuccIndex::Block(v) => {
                0u8.encode(w);
                v.encode(w);
            }
            MediumNarrowSuccIndex::Split(v) => {
                1u8.encode(w);
                v.encode(w);
            }
            MediumNarrowSuccIndex::Tiny(v) => {
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
            0 => MediumNarrowSuccIndex::Block(Codec::decode(r, ctx)?),
            1 => MediumNarrowSuccIndex::Split(Codec::decode(r, ctx)?),
            2 => MediumNarrowSuccIndex::Tiny(Codec::decode(r, ctx)?),
            t => return Err(crate::error::Error::Format(format!("bad medium tag {t}"))),
        })
    }
}

impl GeneralSuccIndex {
    pub fn encode_body(&self, w: &mut crate::codec::Writer) {
        use crate::codec::Codec;
        self.n.encode(w);
        self.tree.encode(w);
        self.ball.encode(w);
        self.srank.encode(w);
        self.node_ts.encode(w);
        self.node_medium.encode(w);
    }

    pub fn decode_body(
        r: &mut crate::codec::Reader<'_>,
        ctx: &Arc<Ctx>,
        map: RankSpaceMap,
    ) -> Result<GeneralSuccIndex> {
        use crate::codec::Codec;
        Ok(GeneralSuccIndex {
            ctx: ctx.clone(),
            map,
            n: Codec::decode(r, ctx)?,
            tree: Codec::decode(r, ctx)?,
            ball: Codec::decode(r, ctx)?,
            srank: Codec::decode(r, ctx)?,
            node_ts: Codec::decode(r, ctx)?,
            node_medium: Codec::decode(r, ctx)?,
        })
    }
}
