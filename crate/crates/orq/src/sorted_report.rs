//! Online sorted range reporting: points of the rectangle emitted in
//! strictly increasing y, lazily, so a consumer may stop after any prefix.
//!
//! The stack mirrors the successor engine with sampling widened for sorted
//! output: three-sided indexes sample the `t` extreme-x points per block
//! (`t` = the escalation threshold), the medium narrow engine samples the
//! `t` lowest points per (block, column). A sorted query streams the sampled
//! base; hits from one block are buffered until the block is resolved —
//! fewer than `t` sampled hits mean the buffer is the block's complete
//! answer, while the `t`-th consecutive hit escalates to a full per-block
//! query. Streams from sibling subtrees merge through a binary heap keyed
//! on y.

use crate::ball_inheritance::{build_ball_large_fanout, build_ball_small_grid, BallIndex};
use crate::config::Ctx;
use crate::counters;
use crate::error::{Error, Result};
use crate::packed::PackedSequence;
use crate::range_report::{effective_fanout, RankSpaceMap, RefRangeTree, RefSortedIter};
use crate::range_successor::{Bound, SmallNarrowSuccIndex, ThreeSidedNextIndex, ThreeSidedVariant};
use crate::seq_index::SmallAlphabetRankIndex;
use crate::wavelet::{NodeId, WaveletOptions, WaveletTree};
use crate::{Point, Rect};
use std::cell::Cell;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::collections::VecDeque;
use std::sync::Arc;

/// Test-observable counters for the escalation rule.
pub mod diag {
    use super::Cell;
    thread_local! {
        static SAMPLED_HITS: Cell<u64> = const { Cell::new(0) };
        static ESCALATIONS: Cell<u64> = const { Cell::new(0) };
    }

    pub(super) fn bump_sampled() {
        SAMPLED_HITS.with(|c| c.set(c.get() + 1));
    }

    pub(super) fn bump_escalation() {
        ESCALATIONS.with(|c| c.set(c.get() + 1));
    }

    /// (sampled hits, escalations) so far on this thread.
    pub fn snapshot() -> (u64, u64) {
        (SAMPLED_HITS.with(Cell::get), ESCALATIONS.with(Cell::get))
    }
}

/// Lazy K-way merge of y-sorted streams; trusted inputs.
pub fn merge_by_y<'a>(
    streams: Vec<Box<dyn Iterator<Item = (u64, u64)> + 'a>>,
) -> impl Iterator<Item = (u64, u64)> + 'a {
    let mut streams = streams;
    let mut heap: BinaryHeap<Reverse<(u64, u64, usize)>> = BinaryHeap::new();
    for (slot, s) in streams.iter_mut().enumerate() {
        if let Some((x, y)) = s.next() {
            heap.push(Reverse((y, x, slot)));
        }
    }
    std::iter::from_fn(move || {
        let Reverse((y, x, slot)) = heap.pop()?;
        if let Some((nx, ny)) = streams[slot].next() {
            debug_assert!(ny > y, "stream must be strictly increasing in y");
            heap.push(Reverse((ny, nx, slot)));
        }
        Some((x, y))
    })
}

/// The published merge operation: lazily merges candidate streams keyed by
/// y, surfacing a "stream order violation" when an input is non-monotone.
pub fn merge_sorted_streams<'a, I>(streams: Vec<I>) -> impl Iterator<Item = Result<Point>> + 'a
where
    I: Iterator<Item = Point> + 'a,
{
    let mut streams = streams;
    let mut heap: BinaryHeap<Reverse<(u64, u64, usize)>> = BinaryHeap::new();
    for (slot, s) in streams.iter_mut().enumerate() {
        if let Some(p) = s.next() {
            heap.push(Reverse((p.y, p.x, slot)));
        }
    }
    let mut poisoned = false;
    std::iter::from_fn(move || {
        if poisoned {
            return None;
        }
        let Reverse((y, x, slot)) = heap.pop()?;
        if let Some(p) = streams[slot].next() {
            if p.y <= y {
                poisoned = true;
                return Some(Err(Error::StreamOrderViolation(p.y, y)));
            }
            heap.push(Reverse((p.y, p.x, slot)));
        }
        Some(Ok(Point { x, y }))
    })
}

/// Three-sided sorted reporting over a y-ordered list of x values: block
/// machinery shared with the next-point index, plus per-block top-t /
/// bottom-t x samples (with list positions) feeding the sorted bases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreeSidedSortedIndex {
    core: ThreeSidedNextIndex,
    t: usize,
    base_hi: RefRangeTree,
    base_lo: RefRangeTree,
}

impl ThreeSidedSortedIndex {
    pub fn build(
        xs: &[u64],
        variant: ThreeSidedVariant,
        ctx: &Ctx,
    ) -> Result<ThreeSidedSortedIndex> {
        let core = ThreeSidedNextIndex::build(xs, variant, ctx)?;
        let t = ctx.config.escalation.max(2);
        let block = core.block();
        let mut hi_samples = Vec::new();
        let mut lo_samples = Vec::new();
        for b in 0..core.block_count() {
            let lo = b * block;
            let hi = (lo + block).min(xs.len());
            let mut order: Vec<usize> = (lo..hi).collect();
            order.sort_by_key(|&i| (xs[i], i));
            for &i in order.iter().rev().take(t) {
                hi_samples.push(Point { x: xs[i], y: i as u64 });
            }
            for &i in order.iter().take(t) {
                lo_samples.push(Point { x: xs[i], y: i as u64 });
            }
        }
        counters::bump_word_ops(xs.len() as u64 + 1);
        Ok(ThreeSidedSortedIndex {
            core,
            t,
            base_hi: RefRangeTree::build(&hi_samples),
            base_lo: RefRangeTree::build(&lo_samples),
        })
    }

    pub fn len(&self) -> usize {
        self.core.len()
    }

    pub fn is_empty(&self) -> bool {
        self.core.is_empty()
    }

    /// Positions (list indexes) of qualifying points in increasing y.
    pub fn stream<'a>(
        &'a self,
        mut accessor: Box<dyn FnMut(usize) -> u64 + 'a>,
        bound: Bound,
        c: u64,
        d: u64,
    ) -> Box<dyn Iterator<Item = u64> + 'a> {
        let n = self.core.len() as u64;
        if n == 0 || c > d {
            return Box::new(std::iter::empty());
        }
        let d = d.min(n - 1);
        if c > d {
            return Box::new(std::iter::empty());
        }
        let block = self.core.block() as u64;
        let bs = c / block;
        let be = d / block;
        let head_hi = if bs == be {
            d - bs * block
        } else {
            self.core.block_len_of(bs as usize) as u64 - 1
        };
        let head = self.block_stream(&mut accessor, bs as usize, c - bs * block, head_hi, bound);
        if bs == be {
            return head;
        }
        let tail = self.block_stream(&mut accessor, be as usize, 0, d - be * block, bound);
        if bs + 1 > be - 1 {
            return Box::new(head.chain(tail));
        }
        let (x1, x2) = match bound {
            Bound::Ge(a) => (a, u64::MAX),
            Bound::Le(b) => (0, b),
        };
        let base = match bound {
            Bound::Ge(_) => &self.base_hi,
            Bound::Le(_) => &self.base_lo,
        };
        let middle = MiddleStream {
            idx: self,
            accessor,
            bound,
            base: base.sorted_iter(x1, x2, (bs + 1) * block, be * block - 1),
            pending: None,
            buffer: VecDeque::new(),
            escalated: None,
            done: false,
        };
        Box::new(head.chain(middle).chain(tail))
    }

    /// Qualifying positions of one block in y order (global positions).
    fn block_stream<'a>(
        &'a self,
        accessor: &mut dyn FnMut(usize) -> u64,
        b: usize,
        lo: u64,
        hi: u64,
        bound: Bound,
    ) -> Box<dyn Iterator<Item = u64> + 'a> {
        if lo > hi {
            return Box::new(std::iter::empty());
        }
        match self.core.rank_bound_of(accessor, b, bound) {
            None => Box::new(std::iter::empty()),
            Some((rb, ge)) => {
                let base = (b * self.core.block()) as u64;
                Box::new(self.core.block_positions(b, lo, hi, rb, ge).map(move |off| base + off))
            }
        }
    }
}

/// Buffered middle-blocks stream with the escalation rule.
struct MiddleStream<'a> {
    idx: &'a ThreeSidedSortedIndex,
    accessor: Box<dyn FnMut(usize) -> u64 + 'a>,
    bound: Bound,
    base: RefSortedIter<'a>,
    /// A sampled position pulled past its block boundary, not yet staged.
    pending: Option<u64>,
    /// A resolved block's complete answer, in y order.
    buffer: VecDeque<u64>,
    escalated: Option<Box<dyn Iterator<Item = u64> + 'a>>,
    done: bool,
}

impl MiddleStream<'_> {
    fn pull(&mut self) -> Option<u64> {
        if let Some(y) = self.pending.take() {
            return Some(y);
        }
        let p = self.base.next()?;
        diag::bump_sampled();
        Some(p.y)
    }
}

impl Iterator for MiddleStream<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if let Some(es) = self.escalated.as_mut() {
                if let Some(pos) = es.next() {
                    return Some(pos);
                }
                self.escalated = None;
            }
            if let Some(pos) = self.buffer.pop_front() {
                return Some(pos);
            }
            if self.done {
                return None;
            }
            let Some(first) = self.pull() else {
                self.done = true;
                return None;
            };
            let block = self.idx.core.block() as u64;
            let tau = first / block;
            let mut staged = vec![first];
            loop {
                if staged.len() >= self.idx.t {
                    // Escalate: a full per-block query replaces the staged
                    // prefix, whose order is not trustworthy beyond t hits.
                    diag::bump_escalation();
                    loop {
                        match self.pull() {
                            Some(y) if y / block == tau => continue,
                            Some(y) => {
                                self.pending = Some(y);
                                break;
                            }
                            None => {
                                self.done = true;
                                break;
                            }
                        }
                    }
                    let b = tau as usize;
                    let len = self.idx.core.block_len_of(b) as u64;
                    if let Some((rb, ge)) =
                        self.idx.core.rank_bound_of(&mut self.accessor, b, self.bound)
                    {
                        let base_off = tau * block;
                        self.escalated = Some(Box::new(
                            self.idx
                                .core
                                .block_positions(b, 0, len - 1, rb, ge)
                                .map(move |off| base_off + off),
                        ));
                    }
                    break;
                }
                match self.pull() {
                    Some(y) if y / block == tau => staged.push(y),
                    Some(y) => {
                        self.pending = Some(y);
                        self.buffer.extend(staged.drain(..));
                        break;
                    }
                    None => {
                        self.done = true;
                        self.buffer.extend(staged.drain(..));
                        break;
                    }
                }
            }
        }
    }
}

/// Medium narrow sorted engine.
#[derive(Debug)]
pub enum MediumNarrowSorted {
    /// Below the tiny cut the whole grid is one packed scan.
    Tiny(PackedSequence),
    Block(MediumBlockSorted),
    Split(MediumSplitSorted),
}

#[derive(Debug)]
pub struct MediumBlockSorted {
    tree: WaveletTree,
    ball: BallIndex,
    srank: Vec<SmallAlphabetRankIndex>,
    node_ts: Vec<Vec<Option<Box<ThreeSidedSortedIndex>>>>,
    node_small: Vec<Vec<Option<Box<SmallNarrowSuccIndex>>>>,
    sigma: u64,
}

#[derive(Debug)]
pub struct MediumSplitSorted {
    block: usize,
    len: usize,
    pub(crate) sigma: u64,
    t: usize,
    blocks: Vec<MediumBlockSorted>,
    /// The t lowest points per (block, column), global coordinates.
    nhat: RefRangeTree,
}

impl MediumNarrowSorted {
    pub fn build(xs: &[u64], sigma: u64, ctx: &Arc<Ctx>) -> Result<MediumNarrowSorted> {
        let tiny = ctx.config.tiny_cut.max(2 * ctx.config.large_fanout);
        if xs.len() < tiny {
            let width = (64 - (sigma.max(2) - 1).leading_zeros()).max(1);
            return Ok(MediumNarrowSorted::Tiny(PackedSequence::pack(xs, width)?));
        }
        let block = ctx.config.narrow_block;
        if xs.len() <= block {
            return Ok(MediumNarrowSorted::Block(MediumBlockSorted::build(xs, sigma, ctx)?));
        }
        let sigma = sigma.max(1);
        let t = ctx.config.escalation.max(2);
        let n_blocks = xs.len().div_ceil(block);
        let mut blocks = Vec::with_capacity(n_blocks);
        let mut samples = Vec::new();
        let mut counts = vec![0usize; sigma as usize];
        for bi in 0..n_blocks {
            let lo = bi * block;
            let hi = ((bi + 1) * block).min(xs.len());
            blocks.push(MediumBlockSorted::build(&xs[lo..hi], sigma, ctx)?);
            counts.iter_mut().for_each(|c| *c = 0);
            for (off, &x) in xs[lo..hi].iter().enumerate() {
                if counts[x as usize] < t {
                    counts[x as usize] += 1;
                    samples.push(Point { x, y: (lo + off) as u64 });
                }
            }
        }
        counters::bump_word_ops(xs.len() as u64 + 1);
        Ok(MediumNarrowSorted::Split(MediumSplitSorted {
            block,
            len: xs.len(),
            sigma,
            t,
            blocks,
            nhat: RefRangeTree::build(&samples),
        }))
    }

    /// Qualifying grid points in increasing y.
    pub fn stream<'a>(
        &'a self,
        a: u64,
        b: u64,
        c: u64,
        d: u64,
    ) -> Box<dyn Iterator<Item = (u64, u64)> + 'a> {
        match self {
            MediumNarrowSorted::Tiny(xs) => {
                if a > b || c > d || xs.is_empty() {
                    return Box::new(std::iter::empty());
                }
                counters::bump_word_ops(xs.bit_len() / 64 + 1);
                let hi = d.min(xs.len() as u64 - 1);
                Box::new((c..=hi.max(c)).filter_map(move |y| {
                    if y >= xs.len() as u64 {
                        return None;
                    }
                    let x = xs.get(y as usize);
                    (x >= a && x <= b).then_some((x, y))
                }))
            }
            MediumNarrowSorted::Block(g) => g.stream(a, b, c, d),
            MediumNarrowSorted::Split(s) => s.stream(a, b, c, d),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            MediumNarrowSorted::Tiny(xs) => xs.len(),
            MediumNarrowSorted::Block(g) => g.tree.len(),
            MediumNarrowSorted::Split(s) => s.len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl MediumBlockSorted {
    fn build(xs: &[u64], sigma: u64, ctx: &Arc<Ctx>) -> Result<MediumBlockSorted> {
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
        let ball =
            build_ball_small_grid(&tree, true, 1.0 / ctx.config.ball_epsilon_inv as f64, ctx)?;
        let levels = tree.internal_levels();
        let mut srank = Vec::with_capacity(levels as usize);
        let mut node_ts = Vec::with_capacity(levels as usize);
        let mut node_small = Vec::with_capacity(levels as usize);
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
            let mut tss: Vec<Option<Box<ThreeSidedSortedIndex>>> =
                Vec::with_capacity(offs.slots() as usize);
            let mut smalls: Vec<Option<Box<SmallNarrowSuccIndex>>> =
                Vec::with_capacity(offs.slots() as usize);
            for u in 0..offs.slots() {
                let (s, e) = (offs.get(u), offs.get(u + 1));
                if s == e {
                    tss.push(None);
                    smalls.push(None);
                    continue;
                }
                let values: Vec<u64> = (s..e).map(|i| vals.get(i as usize)).collect();
                tss.push(Some(Box::new(ThreeSidedSortedIndex::build(
                    &values,
                    ThreeSidedVariant::Packed,
                    ctx,
                )?)));
                let digits: Vec<u64> = (s..e).map(|i| seq.get(i as usize)).collect();
                smalls.push(Some(Box::new(SmallNarrowSuccIndex::build(&digits, d, ctx)?)));
            }
            node_ts.push(tss);
            node_small.push(smalls);
        }
        tree.discard_arrays();
        Ok(MediumBlockSorted { tree, ball, srank, node_ts, node_small, sigma })
    }

    fn stream<'a>(
        &'a self,
        a: u64,
        b: u64,
        c: u64,
        d: u64,
    ) -> Box<dyn Iterator<Item = (u64, u64)> + 'a> {
        let n = self.tree.len() as u64;
        if n == 0 || a > b || c > d {
            return Box::new(std::iter::empty());
        }
        let b = b.min(self.sigma - 1);
        if a > b {
            return Box::new(std::iter::empty());
        }
        let (mut lo, mut hi) = (c.min(n), (d + 1).min(n));
        if lo >= hi {
            return Box::new(std::iter::empty());
        }
        let Ok(lca) = self.tree.lca_leaves(a, b) else {
            return Box::new(std::iter::empty());
        };
        let mut v = self.tree.root();
        while v.level < lca.level {
            let t = self.tree.path_digit(a, v.level);
            let (s, _) = self.tree.node_range(v);
            let (clo, chi) = span(&self.srank[v.level as usize], s, t, lo, hi);
            v = self.tree.child(v, t);
            lo = clo;
            hi = chi;
            if lo >= hi {
                return Box::new(std::iter::empty());
            }
        }
        if self.tree.is_leaf_level(lca.level) {
            let tree = &self.tree;
            let ball = &self.ball;
            return Box::new(
                (lo..hi).map(move |i| ball.point(tree, lca, i).expect("in range")),
            );
        }
        let ap = self.tree.path_digit(a, lca.level);
        let bp = self.tree.path_digit(b, lca.level);
        let mut streams: Vec<Box<dyn Iterator<Item = (u64, u64)> + 'a>> = Vec::with_capacity(3);
        streams.push(self.three_sided_stream(lca, a, true, lo, hi));
        streams.push(self.three_sided_stream(lca, b, false, lo, hi));
        if ap + 1 <= bp - 1 {
            let small = self.node_small[lca.level as usize][lca.index as usize]
                .as_ref()
                .expect("nonempty node");
            let tree = &self.tree;
            let ball = &self.ball;
            streams.push(Box::new(
                small
                    .sorted_stream(ap + 1, bp - 1, lo, hi - 1)
                    .map(move |(_, pos)| ball.point(tree, lca, pos).expect("in range")),
            ));
        }
        Box::new(merge_by_y(streams))
    }

    fn three_sided_stream<'a>(
        &'a self,
        u: NodeId,
        leaf: u64,
        ge: bool,
        lo: u64,
        hi: u64,
    ) -> Box<dyn Iterator<Item = (u64, u64)> + 'a> {
        let t = self.tree.path_digit(leaf, u.level);
        let (s, _) = self.tree.node_range(u);
        let (clo, chi) = span(&self.srank[u.level as usize], s, t, lo, hi);
        if clo >= chi {
            return Box::new(std::iter::empty());
        }
        let v = self.tree.child(u, t);
        let tree = &self.tree;
        let ball = &self.ball;
        if self.tree.is_leaf_level(v.level) {
            return Box::new(
                (clo..chi).map(move |i| ball.point(tree, v, i).expect("in range")),
            );
        }
        let ts = self.node_ts[v.level as usize][v.index as usize]
            .as_ref()
            .expect("nonempty node");
        let bound = if ge { Bound::Ge(leaf) } else { Bound::Le(leaf) };
        let accessor =
            Box::new(move |i: usize| ball.point(tree, v, i as u64).expect("in range").0);
        Box::new(
            ts.stream(accessor, bound, clo, chi - 1)
                .map(move |pos| ball.point(tree, v, pos).expect("in range")),
        )
    }
}

fn span(rank: &SmallAlphabetRankIndex, node_start: u64, t: u64, lo: u64, hi: u64) -> (u64, u64) {
    let base = rank.rank_excl(t, node_start as usize);
    (
        (rank.rank_excl(t, (node_start + lo) as usize) - base) as u64,
        (rank.rank_excl(t, (node_start + hi) as usize) - base) as u64,
    )
}

impl MediumSplitSorted {
    fn stream<'a>(
        &'a self,
        a: u64,
        b: u64,
        c: u64,
        d: u64,
    ) -> Box<dyn Iterator<Item = (u64, u64)> + 'a> {
        if self.len == 0 || a > b || c > d {
            return Box::new(std::iter::empty());
        }
        let d = d.min(self.len as u64 - 1);
        if c > d {
            return Box::new(std::iter::empty());
        }
        let block = self.block as u64;
        let bs = c / block;
        let be = d / block;
        if bs == be {
            let base = bs * block;
            return Box::new(
                self.blocks[bs as usize]
                    .stream(a, b, c - base, d - base)
                    .map(move |(x, y)| (x, y + base)),
            );
        }
        let head_base = bs * block;
        let head = self.blocks[bs as usize]
            .stream(a, b, c - head_base, self.blocks[bs as usize].tree.len() as u64 - 1)
            .map(move |(x, y)| (x, y + head_base));
        let tail_base = be * block;
        let tail = self.blocks[be as usize]
            .stream(a, b, 0, d - tail_base)
            .map(move |(x, y)| (x, y + tail_base));
        if bs + 1 > be - 1 {
            return Box::new(head.chain(tail));
        }
        let middle = SplitMiddleStream {
            idx: self,
            a,
            b,
            base: self.nhat.sorted_iter(a, b, (bs + 1) * block, be * block - 1),
            pending: None,
            buffer: VecDeque::new(),
            escalated: None,
            done: false,
        };
        Box::new(head.chain(middle).chain(tail))
    }
}

/// Buffered middle stream for the four-sided split: same escalation rule,
/// block queries answered by the per-block engines.
struct SplitMiddleStream<'a> {
    idx: &'a MediumSplitSorted,
    a: u64,
    b: u64,
    base: RefSortedIter<'a>,
    pending: Option<Point>,
    buffer: VecDeque<(u64, u64)>,
    escalated: Option<Box<dyn Iterator<Item = (u64, u64)> + 'a>>,
    done: bool,
}

impl SplitMiddleStream<'_> {
    fn pull(&mut self) -> Option<Point> {
        if let Some(p) = self.pending.take() {
            return Some(p);
        }
        let p = self.base.next()?;
        diag::bump_sampled();
        Some(p)
    }
}

impl Iterator for SplitMiddleStream<'_> {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<(u64, u64)> {
        loop {
            if let Some(es) = self.escalated.as_mut() {
                if let Some(p) = es.next() {
                    return Some(p);
                }
                self.escalated = None;
            }
            if let Some(p) = self.buffer.pop_front() {
                return Some(p);
            }
            if self.done {
                return None;
            }
            let Some(first) = self.pull() else {
                self.done = true;
                return None;
            };
            let block = self.idx.block as u64;
            let tau = first.y / block;
            let mut staged = vec![(first.x, first.y)];
            loop {
                if staged.len() >= self.idx.t {
                    diag::bump_escalation();
                    loop {
                        match self.pull() {
                            Some(p) if p.y / block == tau => continue,
                            Some(p) => {
                                self.pending = Some(p);
                                break;
                            }
                            None => {
                                self.done = true;
                                break;
                            }
                        }
                    }
                    let base = tau * block;
                    let blk = &self.idx.blocks[tau as usize];
                    self.escalated = Some(Box::new(
                        blk.stream(self.a, self.b, 0, blk.tree.len() as u64 - 1)
                            .map(move |(x, y)| (x, y + base)),
                    ));
                    break;
                }
                match self.pull() {
                    Some(p) if p.y / block == tau => staged.push((p.x, p.y)),
                    Some(p) => {
                        self.pending = Some(p);
                        self.buffer.extend(staged.drain(..));
                        break;
                    }
                    None => {
                        self.done = true;
                        self.buffer.extend(staged.drain(..));
                        break;
                    }
                }
            }
        }
    }
}

/// The general online sorted reporting engine.
#[derive(Debug)]
pub struct SortedReportIndex {
    pub ctx: Arc<Ctx>,
    pub map: RankSpaceMap,
    n: usize,
    pub tree: WaveletTree,
    pub ball: BallIndex,
    pub srank: Vec<SmallAlphabetRankIndex>,
    pub node_ts: Vec<Vec<Option<Box<ThreeSidedSortedIndex>>>>,
    pub node_medium: Vec<Vec<Option<Box<MediumNarrowSorted>>>>,
}

pub fn build_sorted_report(points: &[Point], ctx: &Arc<Ctx>) -> Result<SortedReportIndex> {
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
    let ball = build_ball_large_fanout(&tree, true, ctx)?;
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
        let mut tss: Vec<Option<Box<ThreeSidedSortedIndex>>> =
            Vec::with_capacity(offs.slots() as usize);
        let mut mediums: Vec<Option<Box<MediumNarrowSorted>>> =
            Vec::with_capacity(offs.slots() as usize);
        for u in 0..offs.slots() {
            let (s, e) = (offs.get(u), offs.get(u + 1));
            if s == e {
                tss.push(None);
                mediums.push(None);
                continue;
            }
            let values: Vec<u64> = (s..e).map(|i| vals.get(i as usize)).collect();
            tss.push(Some(Box::new(ThreeSidedSortedIndex::build(
                &values,
                ThreeSidedVariant::General,
                ctx,
            )?)));
            let digits: Vec<u64> = (s..e).map(|i| seq.get(i as usize)).collect();
            mediums.push(Some(Box::new(MediumNarrowSorted::build(&digits, d, ctx)?)));
        }
        node_ts.push(tss);
        node_medium.push(mediums);
    }
    tree.discard_arrays();
    Ok(SortedReportIndex { ctx: ctx.clone(), map, n, tree, ball, srank, node_ts, node_medium })
}

impl SortedReportIndex {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Stream of rectangle points in strictly increasing y, original
    /// coordinates, lazy end to end.
    pub fn sorted_iter<'a>(&'a self, rect: &Rect) -> Box<dyn Iterator<Item = Point> + 'a> {
        let Some((a, b, c, d)) = self.map.rect_to_ranks(rect) else {
            return Box::new(std::iter::empty());
        };
        let map = &self.map;
        Box::new(self.sorted_ranks_iter(a, b, c, d).map(move |(xr, yr)| map.point_from_ranks(xr, yr)))
    }

    /// The sorted_report operation: at most `limit` points when given.
    pub fn sorted_report(&self, rect: &Rect, limit: Option<usize>) -> Vec<Point> {
        match limit {
            Some(k) => self.sorted_iter(rect).take(k).collect(),
            None => self.sorted_iter(rect).collect(),
        }
    }

    /// Rank-space sorted stream.
    pub fn sorted_ranks_iter<'a>(
        &'a self,
        a: u64,
        b: u64,
        c: u64,
        d: u64,
    ) -> Box<dyn Iterator<Item = (u64, u64)> + 'a> {
        if self.n == 0 || a > b || c > d {
            return Box::new(std::iter::empty());
        }
        let Ok(lca) = self.tree.lca_leaves(a, b) else {
            return Box::new(std::iter::empty());
        };
        let (mut lo, mut hi) = (c.min(self.n as u64), (d + 1).min(self.n as u64));
        if lo >= hi {
            return Box::new(std::iter::empty());
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
                return Box::new(std::iter::empty());
            }
        }
        let tree = &self.tree;
        let ball = &self.ball;
        if self.tree.is_leaf_level(lca.level) {
            return Box::new(
                (lo..hi).map(move |i| ball.point(tree, lca, i).expect("in range")),
            );
        }
        let ap = self.tree.path_digit(a, lca.level);
        let bp = self.tree.path_digit(b, lca.level);
        let mut streams: Vec<Box<dyn Iterator<Item = (u64, u64)> + 'a>> = Vec::with_capacity(3);
        streams.push(self.three_sided_stream(lca, a, true, lo, hi));
        streams.push(self.three_sided_stream(lca, b, false, lo, hi));
        if ap + 1 <= bp - 1 {
            let medium = self.node_medium[lca.level as usize][lca.index as usize]
                .as_ref()
                .expect("nonempty node");
            streams.push(Box::new(
                medium
                    .stream(ap + 1, bp - 1, lo, hi - 1)
                    .map(move |(_, pos)| ball.point(tree, lca, pos).expect("in range")),
            ));
        }
        Box::new(merge_by_y(streams))
    }

    fn three_sided_stream<'a>(
        &'a self,
        u: NodeId,
        leaf: u64,
        ge: bool,
        lo: u64,
        hi: u64,
    ) -> Box<dyn Iterator<Item = (u64, u64)> + 'a> {
        let t = self.tree.path_digit(leaf, u.level);
        let (s, _) = self.tree.node_range(u);
        let (clo, chi) = span(&self.srank[u.level as usize], s, t, lo, hi);
        if clo >= chi {
            return Box::new(std::iter::empty());
        }
        let v = self.tree.child(u, t);
        let tree = &self.tree;
        let ball = &self.ball;
        if self.tree.is_leaf_level(v.level) {
            return Box::new(
                (clo..chi).map(move |i| ball.point(tree, v, i).expect("in range")),
            );
        }
        let ts = self.node_ts[v.level as usize][v.index as usize]
            .as_ref()
            .expect("nonempty node");
        let bound = if ge { Bound::Ge(leaf) } else { Bound::Le(leaf) };
        let accessor =
            Box::new(move |i: usize| ball.point(tree, v, i as u64).expect("in range").0);
        Box::new(
            ts.stream(accessor, bound, clo, chi - 1)
                .map(move |pos| ball.point(tree, v, pos).expect("in range")),
        )
    }
}

// --- serialization ---

crate::codec::impl_codec!(ThreeSidedSortedIndex { core, t, base_hi, base_lo });
crate::codec::impl_codec!(MediumBlockSorted { tree, ball, srank, node_ts, node_small, sigma });
crate::codec::impl_codec!(MediumSplitSorted { block, len, sigma, t, blocks, nhat });

impl crate::codec::Codec for MediumNarrowSorted {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            MediumNarrowSorted::Block(v) => {
                0u8.encode(w);
                v.encode(w);
            }
            MediumNarrowSorted::Split(v) => {
                1u8.encode(w);
                v.encode(w);
            }
            MediumNarrowSorted::Tiny(v) => {
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
            0 => MediumNarrowSorted::Block(Codec::decode(r, ctx)?),
            1 => MediumNarrowSorted::Split(Codec::decode(r, ctx)?),
            2 => MediumNarrowSorted::Tiny(Codec::decode(r, ctx)?),
            t => return Err(Error::Format(format!("bad medium sorted tag {t}"))),
        })
    }
}

impl SortedReportIndex {
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
    ) -> Result<SortedReportIndex> {
        use crate::codec::Codec;
        Ok(SortedReportIndex {
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

    #[test]
    fn full_range_is_y_order() {
        let p = pts(&[(0, 0), (3, 1), (1, 2), (2, 3)]);
        let idx = build_sorted_report(&p, &ctx()).unwrap();
        let got = idx.sorted_report(&Rect::new(0, 3, 0, 3), None);
        assert_eq!(got, pts(&[(0, 0), (3, 1), (1, 2), (2, 3)]));
    }

    #[test]
    fn worked_examples() {
        let p = pts(&[(0, 0), (3, 1), (1, 2), (2, 3)]);
        let idx = build_sorted_report(&p, &ctx()).unwrap();
        assert_eq!(
            idx.sorted_report(&Rect::new(0, 3, 1, 3), Some(2)),
            pts(&[(3, 1), (1, 2)])
        );
        assert!(idx.sorted_report(&Rect::new(0, 3, 0, 3), Some(0)).is_empty());
        assert_eq!(
            idx.sorted_report(&Rect::new(1, 2, 0, 3), None),
            pts(&[(1, 2), (2, 3)])
        );
    }

    #[test]
    fn empty_set_is_empty_stream() {
        let idx = build_sorted_report(&[], &ctx()).unwrap();
        assert!(idx.sorted_report(&Rect::new(0, 9, 0, 9), None).is_empty());
    }

    #[test]
    fn merge_examples() {
        let one = vec![Point { x: 9, y: 1 }];
        let two = vec![Point { x: 8, y: 2 }];
        let merged: Vec<Point> =
            merge_sorted_streams(vec![one.into_iter(), two.into_iter()])
                .map(|r| r.unwrap())
                .collect();
        assert_eq!(merged.iter().map(|p| p.y).collect::<Vec<_>>(), vec![1, 2]);

        let single = vec![Point { x: 1, y: 4 }, Point { x: 2, y: 9 }];
        let merged: Vec<Point> = merge_sorted_streams(vec![single.clone().into_iter()])
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(merged, single);

        let a = vec![Point { x: 0, y: 1 }, Point { x: 0, y: 5 }];
        let b = vec![Point { x: 0, y: 2 }];
        let c = vec![Point { x: 0, y: 3 }];
        let merged: Vec<u64> =
            merge_sorted_streams(vec![a.into_iter(), b.into_iter(), c.into_iter()])
                .map(|r| r.unwrap().y)
                .collect();
        assert_eq!(merged, vec![1, 2, 3, 5]);
    }

    #[test]
    fn merge_rejects_non_monotone() {
        let bad = vec![Point { x: 0, y: 5 }, Point { x: 0, y: 5 }];
        let items: Vec<_> = merge_sorted_streams(vec![bad.into_iter()]).collect();
        assert!(matches!(
            items.last(),
            Some(Err(Error::StreamOrderViolation(_, _)))
        ));
    }

    #[test]
    fn matches_oracle_with_prefixes() {
        let ctx = ctx();
        let mut seed = 17u64;
        let mut rand = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            seed >> 33
        };
        for n in [1usize, 2, 5, 33, 150] {
            let mut points = Vec::new();
            let mut used = std::collections::HashSet::new();
            while points.len() < n {
                let p = (rand() % (2 * n as u64 + 1), rand() % (2 * n as u64 + 1));
                if used.insert(p) {
                    points.push(Point { x: p.0, y: p.1 });
                }
            }
            let idx = build_sorted_report(&points, &ctx).unwrap();
            for _ in 0..60 {
                let m = 2 * n as u64 + 2;
                let (x1, x2) = (rand() % m, rand() % m);
                let (y1, y2) = (rand() % m, rand() % m);
                let want = oracle::brute_sorted(&points, x1, x2, y1, y2, None);
                let got = idx.sorted_report(&Rect::new(x1, x2, y1, y2), None);
                assert_eq!(got, want, "n={n} rect=({x1},{x2},{y1},{y2})");
                for k in [0usize, 1, 2, want.len()] {
                    let got_k = idx.sorted_report(&Rect::new(x1, x2, y1, y2), Some(k));
                    assert_eq!(got_k, want[..k.min(want.len())].to_vec());
                }
            }
        }
    }

    #[test]
    fn escalation_path_runs() {
        // Small blocks force the sampled middle path and its escalations.
        let mut cfg = Config::default();
        cfg.narrow_block = 8;
        cfg.three_block = 8;
        cfg.three_subblock = 2;
        cfg.tiny_cut = 4;
        cfg.escalation = 2;
        let ctx = Ctx::new(cfg);
        let mut seed = 23u64;
        let mut rand = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            seed >> 33
        };
        let n = 128usize;
        let mut xs: Vec<u64> = (0..n as u64).collect();
        for i in (1..n).rev() {
            xs.swap(i, (rand() % (i as u64 + 1)) as usize);
        }
        let points: Vec<Point> =
            xs.iter().enumerate().map(|(y, &x)| Point { x, y: y as u64 }).collect();
        let idx = build_sorted_report(&points, &ctx).unwrap();
        let before = diag::snapshot();
        for _ in 0..100 {
            let (x1, x2) = (rand() % n as u64, rand() % n as u64);
            let (y1, y2) = (rand() % n as u64, rand() % n as u64);
            let want = oracle::brute_sorted(&points, x1, x2, y1, y2, None);
            let got = idx.sorted_report(&Rect::new(x1, x2, y1, y2), None);
            assert_eq!(got, want);
        }
        let after = diag::snapshot();
        let hits = after.0 - before.0;
        let escalations = after.1 - before.1;
        assert!(escalations > 0, "escalation path never exercised");
        // Every escalation consumed at least t consecutive sampled hits.
        assert!(escalations * 2 <= hits, "escalations {escalations} hits {hits}");
    }
}
