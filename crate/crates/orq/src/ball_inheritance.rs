//! Ball inheritance over wavelet trees: `point(v, i)` recovers the original
//! coordinates of the i-th point in node v's y-ordered list, and
//! `noderange(c, d, v)` maps a global y-range into local list positions.
//!
//! Levels are colored by divisibility by powers of `tau` (level 0 gets color
//! 0). A node at a color-`c` level stores, per element, a skipping pointer to
//! its descendant at the next level divisible by `tau^{c+1}`, together with a
//! partial-rank structure over the pointer sequence; following pointers and
//! taking partial ranks walks a point down to a level where coordinates are
//! stored explicitly. Where coordinates land depends on the regime: the
//! generic and large-fanout builds store them at the leaf level only, the
//! constant-time-point small-grid build also at every level of the top
//! color.

use crate::config::Ctx;
use crate::counters;
use crate::error::{Error, Result};
use crate::packed::PackedSequence;
use crate::partial_rank::ChunkedPartialRank;
use crate::pred_succ::{DuplicatePatriciaIndex, PatriciaBlockIndex};
use crate::seq_index::SmallAlphabetRankIndex;
use crate::wavelet::{NodeId, WaveletTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallMode {
    /// Caller-chosen `tau`, coordinates at leaves.
    Generic,
    /// High-fanout tree, `tau = 2`.
    LargeFanoutA,
    /// High-fanout tree, `tau ~ lg^eps(sigma)`: constant-hop point.
    LargeFanoutB,
    /// Small grid, `tau = 2`, Patricia noderange.
    SmallGridBalanced,
    /// Small grid, coordinates at all levels of the top color.
    SmallGridConstantPoint,
}

/// Per-level payload: explicit coordinates, or skipping pointers with
/// partial-rank support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelKind {
    Coords { xs: PackedSequence, ys: PackedSequence },
    Skip { sp: PackedSequence, target: u32, pr: LevelPartialRank },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelPartialRank {
    /// One rank index over the level's concatenated pointers, differenced at
    /// node boundaries.
    Shared(SmallAlphabetRankIndex),
    /// Precomputed per-position answers (large pointer alphabets).
    Explicit(PackedSequence),
    /// Chunked structure per node (forced via configuration).
    Chunked(Vec<Option<Box<ChunkedPartialRank>>>),
}

/// Per-level noderange support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeRangeLevel {
    /// Coordinates stored at this level: binary-search the ys directly.
    Stored,
    /// Indexing-model predecessor structures per node.
    Indexing(Vec<Option<Box<PatriciaBlockIndex>>>),
    /// Packed duplicates-capable Patricia per node.
    Patricia(Vec<Option<Box<DuplicatePatriciaIndex>>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallIndex {
    pub mode: BallMode,
    tau: u64,
    inv_eps: u32,
    levels: u32,
    len: usize,
    kinds: Vec<LevelKind>,
    noderange_levels: Vec<NodeRangeLevel>,
}

fn color_of(level: u32, tau: u64, cap: Option<u32>) -> u32 {
    if level == 0 {
        return 0;
    }
    let mut c = 0u32;
    let mut p = tau;
    loop {
        if let Some(cap) = cap {
            if c >= cap {
                return cap;
            }
        }
        if level as u64 % p != 0 {
            return c;
        }
        c += 1;
        match p.checked_mul(tau) {
            Some(np) => p = np,
            None => return c,
        }
    }
}

fn hop_target(level: u32, color: u32, tau: u64, max_level: u32) -> u32 {
    let step = tau.saturating_pow(color + 1);
    let next = (level as u64 / step + 1).saturating_mul(step);
    (next.min(max_level as u64)) as u32
}

pub fn build_ball_generic(tree: &WaveletTree, tau: u64, ctx: &Ctx) -> Result<BallIndex> {
    build(tree, BallMode::Generic, tau.max(2), 1, ctx)
}

pub fn build_ball_large_fanout(tree: &WaveletTree, variant_b: bool, ctx: &Ctx) -> Result<BallIndex> {
    let h = tree.internal_levels().max(1);
    let (mode, tau) = if variant_b {
        let lg_sigma = (h * tree.lg_d()) as f64;
        (BallMode::LargeFanoutB, (lg_sigma.sqrt().ceil() as u64).max(2))
    } else {
        (BallMode::LargeFanoutA, 2)
    };
    build(tree, mode, tau, 1, ctx)
}

pub fn build_ball_small_grid(
    tree: &WaveletTree,
    constant_point: bool,
    epsilon: f64,
    ctx: &Ctx,
) -> Result<BallIndex> {
    if constant_point {
        let inv_eps = ((1.0 / epsilon).round() as u32).max(1);
        let h = tree.internal_levels().max(1) as f64;
        // tau = (log_d sigma)^eps, rounded up, floored at 2.
        let tau = (h.powf(1.0 / inv_eps as f64).ceil() as u64).max(2);
        build(tree, BallMode::SmallGridConstantPoint, tau, inv_eps, ctx)
    } else {
        build(tree, BallMode::SmallGridBalanced, 2, 1, ctx)
    }
}

fn build(tree: &WaveletTree, mode: BallMode, tau: u64, inv_eps: u32, ctx: &Ctx) -> Result<BallIndex> {
    let levels = tree.internal_levels();
    let lg_d = tree.lg_d();
    let width = levels * lg_d;
    let color_cap = match mode {
        BallMode::SmallGridConstantPoint => Some(inv_eps.saturating_sub(1)),
        _ => None,
    };
    let mut kinds = Vec::with_capacity(levels as usize + 1);
    let mut noderange_levels = Vec::with_capacity(levels as usize + 1);
    for l in 0..=levels {
        let vals = tree
            .values_at(l)
            .expect("ball construction needs the tree's value arrays");
        let idxs = tree
            .indexes_at(l)
            .expect("ball construction needs the tree's index arrays");
        let color = color_of(l, tau, color_cap);
        let store_coords = l == levels
            || (mode == BallMode::SmallGridConstantPoint && color == inv_eps.saturating_sub(1) && l > 0);
        if store_coords {
            kinds.push(LevelKind::Coords { xs: vals.clone(), ys: idxs.clone() });
            noderange_levels.push(NodeRangeLevel::Stored);
            continue;
        }
        let target = hop_target(l, color, tau, levels);
        let sp = vals.extract_bits(l * lg_d, target * lg_d - 1, ctx)?;
        let sigma_sp = 1u64 << ((target - l) * lg_d).min(63);
        let pr = build_level_partial_rank(tree, l, &sp, sigma_sp, ctx)?;
        kinds.push(LevelKind::Skip { sp, target, pr });
        noderange_levels.push(build_noderange_level(tree, l, idxs, mode, ctx)?);
        let _ = width;
    }
    Ok(BallIndex { mode, tau, inv_eps, levels, len: tree.len(), kinds, noderange_levels })
}

fn build_level_partial_rank(
    tree: &WaveletTree,
    level: u32,
    sp: &PackedSequence,
    sigma_sp: u64,
    ctx: &Ctx,
) -> Result<LevelPartialRank> {
    let cfg = &ctx.config;
    if cfg.force_chunked_partial_rank && sigma_sp <= cfg.chunked_sigma_max {
        let offs = tree.offsets_at(level);
        let slots = offs.slots();
        let mut per_node: Vec<Option<Box<ChunkedPartialRank>>> = Vec::with_capacity(slots as usize);
        for u in 0..slots {
            let (s, e) = (offs.get(u), offs.get(u + 1));
            if s == e {
                per_node.push(None);
            } else {
                let slice = sp.slice(s as usize, e as usize);
                per_node.push(Some(Box::new(ChunkedPartialRank::build(&slice, sigma_sp, ctx))));
            }
        }
        return Ok(LevelPartialRank::Chunked(per_node));
    }
    if sigma_sp <= cfg.polylog_sigma && sp.width() <= 16 {
        let idx = SmallAlphabetRankIndex::build_packed(sp, sigma_sp, cfg.seq_fanout as u64, cfg.polylog_sigma)?;
        return Ok(LevelPartialRank::Shared(idx));
    }
    // Large pointer alphabet: store the answers per position, computed per
    // node with a counting scan.
    let offs = tree.offsets_at(level);
    let width = (64 - (tree.len().max(2) as u64 - 1).leading_zeros()).max(1);
    let mut answers = PackedSequence::zeroed(width, sp.len());
    let mut counts: std::collections::HashMap<u64, u64> = std::collections::HashMap::new();
    for u in 0..offs.slots() {
        let (s, e) = (offs.get(u), offs.get(u + 1));
        if s == e {
            continue;
        }
        counts.clear();
        for i in s..e {
            let v = sp.get(i as usize);
            let c = counts.entry(v).or_insert(0);
            *c += 1;
            answers.set(i as usize, *c);
        }
    }
    counters::bump_word_ops(sp.len() as u64 + 1);
    Ok(LevelPartialRank::Explicit(answers))
}

fn build_noderange_level(
    tree: &WaveletTree,
    level: u32,
    idxs: &PackedSequence,
    mode: BallMode,
    ctx: &Ctx,
) -> Result<NodeRangeLevel> {
    let offs = tree.offsets_at(level);
    let slots = offs.slots();
    let patricia = matches!(mode, BallMode::SmallGridBalanced | BallMode::SmallGridConstantPoint);
    if patricia {
        let mut v: Vec<Option<Box<DuplicatePatriciaIndex>>> = Vec::with_capacity(slots as usize);
        for u in 0..slots {
            let (s, e) = (offs.get(u), offs.get(u + 1));
            if s == e {
                v.push(None);
            } else {
                let keys: Vec<u64> = (s..e).map(|i| idxs.get(i as usize)).collect();
                let width = (64 - keys.last().copied().unwrap_or(0).leading_zeros()).max(1);
                v.push(Some(Box::new(DuplicatePatriciaIndex::build(
                    &keys,
                    width,
                    ctx.config.pred_block,
                    ctx,
                )?)));
            }
        }
        Ok(NodeRangeLevel::Patricia(v))
    } else {
        let mut v: Vec<Option<Box<PatriciaBlockIndex>>> = Vec::with_capacity(slots as usize);
        for u in 0..slots {
            let (s, e) = (offs.get(u), offs.get(u + 1));
            if s == e {
                v.push(None);
            } else {
                let keys: Vec<u64> = (s..e).map(|i| idxs.get(i as usize)).collect();
                let width = (64 - keys.last().copied().unwrap_or(0).leading_zeros()).max(1);
                v.push(Some(Box::new(PatriciaBlockIndex::build(
                    &keys,
                    width,
                    ctx.config.index_pred_block,
                    ctx,
                )?)));
            }
        }
        Ok(NodeRangeLevel::Indexing(v))
    }
}

impl BallIndex {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Original coordinates of the i-th point of node v's y-ordered list.
    pub fn point(&self, tree: &WaveletTree, v: NodeId, i: u64) -> Result<(u64, u64)> {
        Ok(self.point_with_hops(tree, v, i)?.0)
    }

    /// As `point`, also reporting the number of partial-rank hops taken.
    pub fn point_with_hops(
        &self,
        tree: &WaveletTree,
        v: NodeId,
        i: u64,
    ) -> Result<((u64, u64), u32)> {
        if i >= tree.node_len(v) {
            return Err(Error::PositionOutOfBounds(i as usize));
        }
        counters::bump_element_probe();
        let mut v = v;
        let mut i = i;
        let mut hops = 0u32;
        loop {
            let (s, _) = tree.node_range(v);
            match &self.kinds[v.level as usize] {
                LevelKind::Coords { xs, ys } => {
                    return Ok(((xs.get((s + i) as usize), ys.get((s + i) as usize)), hops));
                }
                LevelKind::Skip { sp, target, pr } => {
                    let pos = (s + i) as usize;
                    let spv = sp.get(pos);
                    let rank = match pr {
                        LevelPartialRank::Shared(idx) => {
                            idx.rank_excl(spv, pos + 1) - idx.rank_excl(spv, s as usize)
                        }
                        LevelPartialRank::Explicit(answers) => answers.get(pos) as usize,
                        LevelPartialRank::Chunked(nodes) => {
                            let chunked = nodes[v.index as usize]
                                .as_ref()
                                .expect("nonempty node has a chunked index");
                            chunked
                                .partial_rank(&mut |k| sp.get((s as usize) + k), i as usize)
                                .expect("in-range partial rank")
                        }
                    };
                    hops += 1;
                    v = tree.descendant(v, *target, spv);
                    i = rank as u64 - 1;
                }
            }
        }
    }

    /// Local positions `[c_v, d_v]` of node v's points whose global y lies in
    /// `[c, d]`; empty is encoded as `c_v > d_v`.
    pub fn noderange(&self, tree: &WaveletTree, c: u64, d: u64, v: NodeId) -> Result<(u64, u64)> {
        if c > d {
            return Err(Error::InvalidRange(c as usize, d as usize));
        }
        let (s, e) = tree.node_range(v);
        if s == e {
            return Ok((1, 0));
        }
        let n = e - s;
        let lo = match &self.noderange_levels[v.level as usize] {
            NodeRangeLevel::Stored => {
                let ys = match &self.kinds[v.level as usize] {
                    LevelKind::Coords { ys, .. } => ys,
                    _ => unreachable!("stored noderange implies stored coords"),
                };
                counters::bump_word_ops(64 - n.leading_zeros() as u64);
                partition_point(n, |i| ys.get((s + i) as usize) < c)
            }
            NodeRangeLevel::Indexing(nodes) => {
                let idx = nodes[v.index as usize].as_ref().unwrap();
                match idx.succ(&mut |i| self.y_of(tree, v, i as u64), c) {
                    Some(p) => p as u64,
                    None => n,
                }
            }
            NodeRangeLevel::Patricia(nodes) => {
                let idx = nodes[v.index as usize].as_ref().unwrap();
                match idx.succ(&mut |i| self.y_of(tree, v, i as u64), c) {
                    Some(p) => p as u64,
                    None => n,
                }
            }
        };
        if lo >= n {
            return Ok((1, 0));
        }
        let hi = match &self.noderange_levels[v.level as usize] {
            NodeRangeLevel::Stored => {
                let ys = match &self.kinds[v.level as usize] {
                    LevelKind::Coords { ys, .. } => ys,
                    _ => unreachable!(),
                };
                counters::bump_word_ops(64 - n.leading_zeros() as u64);
                partition_point(n, |i| ys.get((s + i) as usize) <= d)
            }
            NodeRangeLevel::Indexing(nodes) => {
                let idx = nodes[v.index as usize].as_ref().unwrap();
                match idx.pred(&mut |i| self.y_of(tree, v, i as u64), d) {
                    Some(p) => p as u64 + 1,
                    None => 0,
                }
            }
            NodeRangeLevel::Patricia(nodes) => {
                let idx = nodes[v.index as usize].as_ref().unwrap();
                match idx.pred(&mut |i| self.y_of(tree, v, i as u64), d) {
                    Some(p) => p as u64 + 1,
                    None => 0,
                }
            }
        };
        if hi == 0 || lo >= hi {
            return Ok((1, 0));
        }
        Ok((lo, hi - 1))
    }

    fn y_of(&self, tree: &WaveletTree, v: NodeId, i: u64) -> u64 {
        self.point(tree, v, i).expect("accessor position in range").1
    }
}

fn partition_point(n: u64, mut pred: impl FnMut(u64) -> bool) -> u64 {
    let mut lo = 0u64;
    let mut hi = n;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

// --- serialization ---

impl crate::codec::Codec for BallMode {
    fn encode(&self, w: &mut crate::codec::Writer) {
        let t: u8 = match self {
            BallMode::Generic => 0,
            BallMode::LargeFanoutA => 1,
            BallMode::LargeFanoutB => 2,
            BallMode::SmallGridBalanced => 3,
            BallMode::SmallGridConstantPoint => 4,
        };
        t.encode(w);
    }
    fn decode(
        r: &mut crate::codec::Reader<'_>,
        ctx: &std::sync::Arc<Ctx>,
    ) -> Result<Self> {
        Ok(match u8::decode(r, ctx)? {
            0 => BallMode::Generic,
            1 => BallMode::LargeFanoutA,
            2 => BallMode::LargeFanoutB,
            3 => BallMode::SmallGridBalanced,
            4 => BallMode::SmallGridConstantPoint,
            t => return Err(Error::Format(format!("bad ball mode {t}"))),
        })
    }
}

impl crate::codec::Codec for LevelPartialRank {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            LevelPartialRank::Shared(v) => {
                0u8.encode(w);
                v.encode(w);
            }
            LevelPartialRank::Explicit(v) => {
                1u8.encode(w);
                v.encode(w);
            }
            LevelPartialRank::Chunked(v) => {
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
            0 => LevelPartialRank::Shared(Codec::decode(r, ctx)?),
            1 => LevelPartialRank::Explicit(Codec::decode(r, ctx)?),
            2 => LevelPartialRank::Chunked(Codec::decode(r, ctx)?),
            t => return Err(Error::Format(format!("bad level partial-rank tag {t}"))),
        })
    }
}

impl crate::codec::Codec for LevelKind {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            LevelKind::Coords { xs, ys } => {
                0u8.encode(w);
                xs.encode(w);
                ys.encode(w);
            }
            LevelKind::Skip { sp, target, pr } => {
                1u8.encode(w);
                sp.encode(w);
                target.encode(w);
                pr.encode(w);
            }
        }
    }
    fn decode(
        r: &mut crate::codec::Reader<'_>,
        ctx: &std::sync::Arc<Ctx>,
    ) -> Result<Self> {
        use crate::codec::Codec;
        Ok(match u8::decode(r, ctx)? {
            0 => LevelKind::Coords { xs: Codec::decode(r, ctx)?, ys: Codec::decode(r, ctx)? },
            1 => LevelKind::Skip {
                sp: Codec::decode(r, ctx)?,
                target: Codec::decode(r, ctx)?,
                pr: Codec::decode(r, ctx)?,
            },
            t => return Err(Error::Format(format!("bad level kind tag {t}"))),
        })
    }
}

impl crate::codec::Codec for NodeRangeLevel {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            NodeRangeLevel::Stored => 0u8.encode(w),
            NodeRangeLevel::Indexing(v) => {
                1u8.encode(w);
                v.encode(w);
            }
            NodeRangeLevel::Patricia(v) => {
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
            0 => NodeRangeLevel::Stored,
            1 => NodeRangeLevel::Indexing(Codec::decode(r, ctx)?),
            2 => NodeRangeLevel::Patricia(Codec::decode(r, ctx)?),
            t => return Err(Error::Format(format!("bad noderange tag {t}"))),
        })
    }
}

crate::codec::impl_codec!(BallIndex {
    mode,
    tau,
    inv_eps,
    levels,
    len,
    kinds,
    noderange_levels,
});

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::wavelet::WaveletOptions;
    use std::sync::Arc;

    fn ctx() -> Arc<Ctx> {
        thread_local! {
            static SHARED: Arc<Ctx> = Ctx::new(Config::default());
        }
        SHARED.with(Arc::clone)
    }

    fn tree_of(vals: &[u64], sigma: u64, d: u64) -> WaveletTree {
        let width = (64 - (sigma - 1).max(1).leading_zeros()).max(1);
        let a = PackedSequence::pack(vals, width).unwrap();
        WaveletTree::build_packed(
            &a,
            sigma,
            d,
            WaveletOptions { with_values: true, with_indexes: true },
            &ctx(),
        )
        .unwrap()
    }

    fn build_mode(tree: &WaveletTree, mode: BallMode) -> BallIndex {
        let ctx = ctx();
        match mode {
            BallMode::Generic => build_ball_generic(tree, 2, &ctx).unwrap(),
            BallMode::LargeFanoutA => build_ball_large_fanout(tree, false, &ctx).unwrap(),
            BallMode::LargeFanoutB => build_ball_large_fanout(tree, true, &ctx).unwrap(),
            BallMode::SmallGridBalanced => build_ball_small_grid(tree, false, 0.5, &ctx).unwrap(),
            BallMode::SmallGridConstantPoint => {
                build_ball_small_grid(tree, true, 0.5, &ctx).unwrap()
            }
        }
    }

    const ALL_MODES: [BallMode; 5] = [
        BallMode::Generic,
        BallMode::LargeFanoutA,
        BallMode::LargeFanoutB,
        BallMode::SmallGridBalanced,
        BallMode::SmallGridConstantPoint,
    ];

    #[test]
    fn worked_example() {
        let tree = tree_of(&[1, 0, 3, 2], 4, 2);
        for mode in ALL_MODES {
            let ball = build_mode(&tree, mode);
            // Right child of the root holds values 3, 2 in y-order (ys 2, 3).
            let right = tree.child(tree.root(), 1);
            assert_eq!(ball.point(&tree, right, 0).unwrap(), (3, 2), "{mode:?}");
            // Root identity.
            for (i, &x) in [1u64, 0, 3, 2].iter().enumerate() {
                assert_eq!(ball.point(&tree, tree.root(), i as u64).unwrap(), (x, i as u64));
            }
            // Leaf for symbol 3 holds (3, 2).
            let leaf = tree.leaf(3).unwrap();
            assert_eq!(ball.point(&tree, leaf, 0).unwrap(), (3, 2));
        }
    }

    #[test]
    fn constant_sequence_routes_through_child_zero() {
        let tree = tree_of(&[0, 0, 0, 0], 4, 2);
        for mode in ALL_MODES {
            let ball = build_mode(&tree, mode);
            let child0 = tree.child(tree.root(), 0);
            assert_eq!(ball.point(&tree, child0, 2).unwrap(), (0, 2), "{mode:?}");
        }
    }

    #[test]
    fn noderange_examples() {
        let tree = tree_of(&[1, 0, 3, 2], 4, 2);
        for mode in ALL_MODES {
            let ball = build_mode(&tree, mode);
            // Full range at the root.
            assert_eq!(ball.noderange(&tree, 0, 3, tree.root()).unwrap(), (0, 3));
            // Left child holds ys [0, 1]; global range [1, 3] covers local 1..=1.
            let left = tree.child(tree.root(), 0);
            assert_eq!(ball.noderange(&tree, 1, 3, left).unwrap(), (1, 1), "{mode:?}");
            // No ys of the left child lie in [2, 3].
            let (c_v, d_v) = ball.noderange(&tree, 2, 3, left).unwrap();
            assert!(c_v > d_v);
            // Inverted input range is an error.
            assert!(ball.noderange(&tree, 3, 1, left).is_err());
        }
    }

    #[test]
    fn point_position_out_of_bounds() {
        let tree = tree_of(&[1, 0], 2, 2);
        let ball = build_mode(&tree, BallMode::Generic);
        assert!(matches!(
            ball.point(&tree, tree.root(), 2),
            Err(Error::PositionOutOfBounds(2))
        ));
    }

    #[test]
    fn constant_point_hop_ceiling() {
        let tree = tree_of(&(0..64u64).rev().collect::<Vec<_>>(), 64, 2);
        let ctx = ctx();
        let ball = build_ball_small_grid(&tree, true, 0.5, &ctx).unwrap();
        let cap = 2; // ceil(1/eps) with eps = 1/2
        for i in 0..64u64 {
            let (_, hops) = ball.point_with_hops(&tree, tree.root(), i).unwrap();
            assert!(hops <= cap, "hops {hops} > {cap}");
        }
    }

    /// Oracle: explicit arrays retained by the tree.
    fn check_against_arrays(tree: &WaveletTree, ball: &BallIndex) {
        for level in 0..=tree.internal_levels() {
            let vals = tree.values_at(level).unwrap();
            let idxs = tree.indexes_at(level).unwrap();
            let offs = tree.offsets_at(level);
            for u in 0..offs.slots() {
                let v = NodeId { level, index: u };
                let (s, e) = tree.node_range(v);
                for i in 0..e - s {
                    let want = (vals.get((s + i) as usize), idxs.get((s + i) as usize));
                    assert_eq!(
                        ball.point(tree, v, i).unwrap(),
                        want,
                        "level {level} node {u} pos {i}"
                    );
                }
                // noderange oracle over all (c, d) pairs.
                let ys: Vec<u64> = (s..e).map(|i| idxs.get(i as usize)).collect();
                let n = tree.len() as u64;
                for c in 0..n {
                    for d in c..n {
                        let lo = ys.iter().position(|&y| y >= c);
                        let hi = ys.iter().rposition(|&y| y <= d);
                        let got = ball.noderange(tree, c, d, v).unwrap();
                        match (lo, hi) {
                            (Some(lo), Some(hi)) if lo <= hi => {
                                assert_eq!(got, (lo as u64, hi as u64));
                            }
                            _ => assert!(got.0 > got.1, "expected empty, got {got:?}"),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_equivalence_exhaustive() {
        let mut x = 99u64;
        for sigma in [2u64, 4, 8] {
            for d in [2u64, 4] {
                if d > sigma {
                    continue;
                }
                for len in 1..=8usize {
                    let mut vals = Vec::with_capacity(len);
                    for _ in 0..len {
                        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        vals.push((x >> 33) % sigma);
                    }
                    let tree = tree_of(&vals, sigma, d);
                    for mode in ALL_MODES {
                        let ball = build_mode(&tree, mode);
                        check_against_arrays(&tree, &ball);
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_equivalence_randomized_larger() {
        let mut x = 7u64;
        let n = 1 << 10;
        let mut vals: Vec<u64> = (0..n).collect();
        // Deterministic shuffle to a permutation.
        for i in (1..n as usize).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            vals.swap(i, (x >> 33) as usize % (i + 1));
        }
        let tree = tree_of(&vals, n, 4);
        for mode in ALL_MODES {
            let ball = build_mode(&tree, mode);
            let idx_root = tree.indexes_at(0).unwrap();
            for i in (0..n as usize).step_by(37) {
                assert_eq!(
                    ball.point(&tree, tree.root(), i as u64).unwrap(),
                    (vals[i], idx_root.get(i)),
                    "{mode:?}"
                );
            }
            // Spot-check deeper nodes.
            let child = tree.child(tree.root(), 1);
            let (s, e) = tree.node_range(child);
            let valsl = tree.values_at(1).unwrap();
            let idxsl = tree.indexes_at(1).unwrap();
            for i in (0..e - s).step_by(17) {
                assert_eq!(
                    ball.point(&tree, child, i).unwrap(),
                    (valsl.get((s + i) as usize), idxsl.get((s + i) as usize))
                );
            }
        }
    }

    #[test]
    fn forced_chunked_partial_rank_agrees() {
        let mut cfg = Config::default();
        cfg.force_chunked_partial_rank = true;
        let forced_ctx = Ctx::new(cfg);
        let vals = [5u64, 2, 7, 0, 1, 6, 3, 4];
        let width = 3;
        let a = PackedSequence::pack(&vals, width).unwrap();
        let tree = WaveletTree::build_packed(
            &a,
            8,
            2,
            WaveletOptions { with_values: true, with_indexes: true },
            &forced_ctx,
        )
        .unwrap();
        let ball = build_ball_generic(&tree, 2, &forced_ctx).unwrap();
        for (i, &x) in vals.iter().enumerate() {
            assert_eq!(ball.point(&tree, tree.root(), i as u64).unwrap(), (x, i as u64));
        }
    }
}
