//! Range minimum / maximum position queries, leftmost among ties.
//!
//! `RmqIndex` is self-contained: it keeps a packed copy of the values plus a
//! block-level sparse table, so queries never touch the original array after
//! construction. `PackedRmqIndex` works in the indexing model: it stores only
//! block extrema and in-block rank encodings of O(lg b) bits per element, and
//! answers queries with at most three calls to an element accessor.

use crate::config::Ctx;
use crate::counters;
use crate::error::{Error, Result};
use crate::packed::PackedSequence;
use crate::tables::{Table, TableKey};

const BLOCK: usize = 32;

/// Succinct-leaning min+max structure over an integer array.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RmqIndex {
    len: usize,
    vals: PackedSequence,
    /// sparse_min[l][b] = leftmost-min position over blocks b..b+2^l-1.
    sparse_min: Vec<Vec<u32>>,
    sparse_max: Vec<Vec<u32>>,
}

impl RmqIndex {
    pub fn build(values: &[u64]) -> Self {
        let len = values.len();
        let width = values
            .iter()
            .map(|&v| 64 - v.leading_zeros())
            .max()
            .unwrap_or(1)
            .max(1);
        let vals = PackedSequence::pack(values, width).expect("width covers all values");
        let n_blocks = len.div_ceil(BLOCK);
        let mut base_min = Vec::with_capacity(n_blocks);
        let mut base_max = Vec::with_capacity(n_blocks);
        for b in 0..n_blocks {
            let lo = b * BLOCK;
            let hi = ((b + 1) * BLOCK).min(len);
            let mut pmin = lo;
            let mut pmax = lo;
            for i in lo + 1..hi {
                if values[i] < values[pmin] {
                    pmin = i;
                }
                if values[i] > values[pmax] {
                    pmax = i;
                }
            }
            base_min.push(pmin as u32);
            base_max.push(pmax as u32);
        }
        counters::bump_word_ops(len as u64 + 1);
        let mut idx =
            RmqIndex { len, vals, sparse_min: vec![base_min], sparse_max: vec![base_max] };
        let mut span = 1usize;
        while span * 2 <= n_blocks {
            let prev_min = idx.sparse_min.last().unwrap();
            let prev_max = idx.sparse_max.last().unwrap();
            let m = n_blocks - span * 2 + 1;
            let mut row_min = Vec::with_capacity(m);
            let mut row_max = Vec::with_capacity(m);
            for b in 0..m {
                let (l, r) = (prev_min[b], prev_min[b + span]);
                row_min.push(if idx.vals.get(r as usize) < idx.vals.get(l as usize) {
                    r
                } else {
                    l
                });
                let (l, r) = (prev_max[b], prev_max[b + span]);
                row_max.push(if idx.vals.get(r as usize) > idx.vals.get(l as usize) {
                    r
                } else {
                    l
                });
            }
            counters::bump_word_ops(m as u64 + 1);
            idx.sparse_min.push(row_min);
            idx.sparse_max.push(row_max);
            span *= 2;
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value_at(&self, i: usize) -> u64 {
        self.vals.get(i)
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        if i > j || j >= self.len {
            return Err(Error::InvalidRange(i, j));
        }
        Ok(())
    }

    fn scan(&self, lo: usize, hi: usize, max: bool) -> (u64, usize) {
        let mut best_pos = lo;
        let mut best = self.vals.get(lo);
        for i in lo + 1..=hi {
            let v = self.vals.get(i);
            if (max && v > best) || (!max && v < best) {
                best = v;
                best_pos = i;
            }
        }
        counters::bump_word_ops((hi - lo) as u64 + 1);
        (best, best_pos)
    }

    fn blocks_extreme(&self, bs: usize, be: usize, max: bool) -> (u64, usize) {
        // Extremum over whole blocks bs..=be via two overlapping rows.
        let table = if max { &self.sparse_max } else { &self.sparse_min };
        let cnt = be - bs + 1;
        let lvl = (usize::BITS - 1 - cnt.leading_zeros()) as usize;
        let a = table[lvl][bs] as usize;
        let b = table[lvl][be + 1 - (1 << lvl)] as usize;
        let (va, vb) = (self.vals.get(a), self.vals.get(b));
        counters::bump_word_ops(2);
        let better_b = if max { vb > va } else { vb < va };
        if better_b || (va == vb && b < a) {
            (vb, b)
        } else {
            (va, a)
        }
    }

    fn query(&self, i: usize, j: usize, max: bool) -> Result<usize> {
        self.check(i, j)?;
        let bs = i / BLOCK;
        let be = j / BLOCK;
        if bs == be {
            return Ok(self.scan(i, j, max).1);
        }
        let mut cands = Vec::with_capacity(3);
        cands.push(self.scan(i, (bs + 1) * BLOCK - 1, max));
        if bs + 1 <= be - 1 {
            cands.push(self.blocks_extreme(bs + 1, be - 1, max));
        }
        cands.push(self.scan(be * BLOCK, j, max));
        let mut best = cands[0];
        for &c in &cands[1..] {
            let better = if max { c.0 > best.0 } else { c.0 < best.0 };
            if better || (c.0 == best.0 && c.1 < best.1) {
                best = c;
            }
        }
        Ok(best.1)
    }

    /// Leftmost position of the minimum of `A[i..=j]`.
    pub fn range_min(&self, i: usize, j: usize) -> Result<usize> {
        self.query(i, j, false)
    }

    /// Leftmost position of the maximum of `A[i..=j]`.
    pub fn range_max(&self, i: usize, j: usize) -> Result<usize> {
        self.query(i, j, true)
    }
}

/// Indexing-model rmq/rMq over a packed small-width sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PackedRmqIndex {
    /// Narrow values are cheap enough to store verbatim.
    Verbatim(RmqIndex),
    Blocked(BlockedRmq),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BlockedRmq {
    len: usize,
    block: usize,
    /// Per element: number of strictly smaller elements in its block.
    ranks: PackedSequence,
    min_vals: PackedSequence,
    max_vals: PackedSequence,
    inner_min: RmqIndex,
    inner_max: RmqIndex,
}

impl PackedRmqIndex {
    pub fn build(a: &PackedSequence, ctx: &Ctx) -> Result<Self> {
        Self::build_with_block(a, None, ctx)
    }

    /// `block_override` pins the block length (tests exercise specific
    /// geometries); `None` derives it from the configuration.
    pub fn build_with_block(
        a: &PackedSequence,
        block_override: Option<usize>,
        ctx: &Ctx,
    ) -> Result<Self> {
        let width = a.width();
        if width > ctx.config.packed_width_max {
            return Err(Error::AlphabetOutOfRegime(width, ctx.config.packed_width_max));
        }
        let lglg = 64 - (ctx.config.lg_cap() as u64 - 1).leading_zeros();
        if width <= lglg && block_override.is_none() {
            // sigma <= lg n: store elements verbatim plus an RmqIndex.
            return Ok(PackedRmqIndex::Verbatim(RmqIndex::build(&a.to_vec())));
        }
        let block = block_override
            .unwrap_or_else(|| (ctx.config.lg_cap() / (2 * width)).max(1) as usize)
            .max(1);
        let n = a.len();
        let n_blocks = n.div_ceil(block);
        let rank_width = (64 - (block as u64 - 1).max(1).leading_zeros()).max(1);
        let mut ranks = PackedSequence::with_capacity(rank_width, n);
        let mut min_vals = PackedSequence::with_capacity(width, n_blocks);
        let mut max_vals = PackedSequence::with_capacity(width, n_blocks);
        let mut buf = Vec::with_capacity(block);
        for b in 0..n_blocks {
            let lo = b * block;
            let hi = ((b + 1) * block).min(n);
            buf.clear();
            buf.extend((lo..hi).map(|i| a.get(i)));
            let (bmin, bmax, brs) = block_summary(&buf, width, block as u32, ctx);
            min_vals.push(bmin);
            max_vals.push(bmax);
            for r in brs {
                ranks.push(r);
            }
        }
        counters::bump_word_ops(a.bit_len() / 64 + 1);
        let inner_min = RmqIndex::build(&min_vals.to_vec());
        let inner_max = RmqIndex::build(&max_vals.to_vec());
        Ok(PackedRmqIndex::Blocked(BlockedRmq {
            len: n,
            block,
            ranks,
            min_vals,
            max_vals,
            inner_min,
            inner_max,
        }))
    }

    pub fn from_parts_verbatim(r: RmqIndex) -> Self {
        PackedRmqIndex::Verbatim(r)
    }

    pub fn len(&self) -> usize {
        match self {
            PackedRmqIndex::Verbatim(r) => r.len(),
            PackedRmqIndex::Blocked(b) => b.len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Leftmost minimum position of `A[i..=j]`, with O(1) accessor calls.
    pub fn range_min_indexed(
        &self,
        accessor: &mut dyn FnMut(usize) -> u64,
        i: usize,
        j: usize,
    ) -> Result<usize> {
        self.query(accessor, i, j, false)
    }

    /// Leftmost maximum position of `A[i..=j]`, with O(1) accessor calls.
    pub fn range_max_indexed(
        &self,
        accessor: &mut dyn FnMut(usize) -> u64,
        i: usize,
        j: usize,
    ) -> Result<usize> {
        self.query(accessor, i, j, true)
    }

    fn query(
        &self,
        accessor: &mut dyn FnMut(usize) -> u64,
        i: usize,
        j: usize,
        max: bool,
    ) -> Result<usize> {
        let b = match self {
            PackedRmqIndex::Verbatim(r) => {
                return if max { r.range_max(i, j) } else { r.range_min(i, j) };
            }
            PackedRmqIndex::Blocked(b) => b,
        };
        if i > j || j >= b.len {
            return Err(Error::InvalidRange(i, j));
        }
        if i == j {
            return Ok(i);
        }
        let bs = i / b.block;
        let be = j / b.block;
        if bs == be {
            return Ok(b.argext_in_block(bs, i % b.block, j % b.block, max));
        }
        // Candidates: suffix of block bs, whole middle blocks, prefix of
        // block be. The middle candidate's value comes from the stored block
        // extrema; edge candidates each cost one accessor call.
        let p1 = b.argext_in_block(bs, i % b.block, b.block_len(bs) - 1, max);
        let v1 = accessor(p1);
        let p3 = b.argext_in_block(be, 0, j % b.block, max);
        let v3 = accessor(p3);
        let mut best = (v1, p1);
        if bs + 1 <= be - 1 {
            let (inner, vals) = if max {
                (&b.inner_max, &b.max_vals)
            } else {
                (&b.inner_min, &b.min_vals)
            };
            let tau = if max {
                inner.range_max(bs + 1, be - 1).unwrap()
            } else {
                inner.range_min(bs + 1, be - 1).unwrap()
            };
            let v2 = vals.get(tau);
            let p2 = b.argext_in_block(tau, 0, b.block_len(tau) - 1, max);
            let better = if max { v2 > best.0 } else { v2 < best.0 };
            if better || (v2 == best.0 && p2 < best.1) {
                best = (v2, p2);
            }
        }
        let better = if max { v3 > best.0 } else { v3 < best.0 };
        if better || (v3 == best.0 && p3 < best.1) {
            best = (v3, p3);
        }
        Ok(best.1)
    }
}

impl BlockedRmq {
    fn block_len(&self, b: usize) -> usize {
        ((b + 1) * self.block).min(self.len) - b * self.block
    }

    /// Leftmost extremum position within block `b`, range given in in-block
    /// offsets. Resolved entirely from the rank encoding.
    fn argext_in_block(&self, b: usize, lo: usize, hi: usize, max: bool) -> usize {
        let base = b * self.block;
        let mut best_off = lo;
        let mut best_rank = self.ranks.get(base + lo);
        for off in lo + 1..=hi {
            let r = self.ranks.get(base + off);
            if (max && r > best_rank) || (!max && r < best_rank) {
                best_rank = r;
                best_off = off;
            }
        }
        counters::bump_word_ops((hi - lo) as u64 + 1);
        base + best_off
    }

    pub fn min_block_values(&self) -> &PackedSequence {
        &self.min_vals
    }
}

/// Min value, max value, and per-element strict ranks of one block, via the
/// universal tables when they fit the registry budget.
fn block_summary(buf: &[u64], width: u32, block: u32, ctx: &Ctx) -> (u64, u64, Vec<u64>) {
    let rank_width = (64 - (block as u64 - 1).max(1).leading_zeros()).max(1);
    if block >= 2 && block * width <= 18 && block as u64 * rank_width as u64 <= 58 {
        let key_min = TableKey::BlockMin { width, block };
        let entries = 1u64 << (block * width);
        let min_table = ctx.registry.get_or_build(key_min, entries.saturating_mul(64), || {
            let mut data = vec![0u64; entries as usize];
            for (pat, slot) in data.iter_mut().enumerate() {
                let vals: Vec<u64> = (0..block)
                    .map(|e| (pat as u64 >> (e * width)) & ((1 << width) - 1))
                    .collect();
                let mn = *vals.iter().min().unwrap();
                let mx = *vals.iter().max().unwrap();
                *slot = mn | (mx << 32);
            }
            Table { data, entry_words: 1 }
        });
        let key_rk = TableKey::BlockRanks { width, block };
        let rank_table = ctx.registry.get_or_build(key_rk, entries.saturating_mul(64), || {
            let mut data = vec![0u64; entries as usize];
            for (pat, slot) in data.iter_mut().enumerate() {
                let vals: Vec<u64> = (0..block)
                    .map(|e| (pat as u64 >> (e * width)) & ((1 << width) - 1))
                    .collect();
                let mut packed = 0u64;
                for (i, &v) in vals.iter().enumerate() {
                    let r = vals.iter().filter(|&&x| x < v).count() as u64;
                    packed |= r << (i as u32 * rank_width);
                }
                *slot = packed;
            }
            Table { data, entry_words: 1 }
        });
        if let (Some(mt), Some(rt)) = (min_table, rank_table) {
            if buf.len() == block as usize {
                let mut pat = 0u64;
                for (e, &v) in buf.iter().enumerate() {
                    pat |= v << (e as u32 * width);
                }
                let mm = mt.entry(pat as usize)[0];
                let packed = rt.entry(pat as usize)[0];
                let ranks = (0..buf.len())
                    .map(|i| (packed >> (i as u32 * rank_width)) & ((1 << rank_width) - 1))
                    .collect();
                return (mm & 0xffff_ffff, mm >> 32, ranks);
            }
        }
    }
    let mn = *buf.iter().min().unwrap();
    let mx = *buf.iter().max().unwrap();
    let ranks = buf
        .iter()
        .map(|&v| buf.iter().filter(|&&x| x < v).count() as u64)
        .collect();
    counters::bump_word_ops(buf.len() as u64 + 1);
    (mn, mx, ranks)
}

// --- serialization ---

crate::codec::impl_codec!(RmqIndex { len, vals, sparse_min, sparse_max });
crate::codec::impl_codec!(BlockedRmq {
    len,
    block,
    ranks,
    min_vals,
    max_vals,
    inner_min,
    inner_max,
});

impl crate::codec::Codec for PackedRmqIndex {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            PackedRmqIndex::Verbatim(v) => {
                0u8.encode(w);
                v.encode(w);
            }
            PackedRmqIndex::Blocked(v) => {
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
            0 => PackedRmqIndex::Verbatim(Codec::decode(r, ctx)?),
            1 => PackedRmqIndex::Blocked(Codec::decode(r, ctx)?),
            t => return Err(Error::Format(format!("bad rmq tag {t}"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::oracle;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn ctx() -> Arc<Ctx> {
        thread_local! {
            static SHARED: Arc<Ctx> = Ctx::new(Config::default());
        }
        SHARED.with(Arc::clone)
    }

    #[test]
    fn rmq_examples() {
        let idx = RmqIndex::build(&[3, 1, 4, 1, 5]);
        assert_eq!(idx.range_min(1, 3).unwrap(), 1);
        for i in 0..5 {
            assert_eq!(idx.range_min(i, i).unwrap(), i);
        }
        let flat = RmqIndex::build(&[2, 2, 2]);
        assert_eq!(flat.range_max(0, 2).unwrap(), 0);
    }

    #[test]
    fn packed_rmq_examples() {
        let ctx = ctx();
        let a = PackedSequence::pack(&[5, 2, 7, 2], 3).unwrap();
        let idx = PackedRmqIndex::build_with_block(&a, Some(2), &ctx).unwrap();
        if let PackedRmqIndex::Blocked(b) = &idx {
            assert_eq!(b.min_block_values().to_vec(), vec![2, 2]);
        } else {
            panic!("expected blocked form");
        }
        let vals = [5u64, 2, 7, 2];
        let mut acc = |i: usize| vals[i];
        assert_eq!(idx.range_min_indexed(&mut acc, 0, 3).unwrap(), 1);

        let one = PackedSequence::pack(&[1], 4).unwrap();
        let idx1 = PackedRmqIndex::build(&one, &ctx).unwrap();
        assert_eq!(idx1.range_min_indexed(&mut |_| 9, 0, 0).unwrap(), 0);

        let bits = PackedSequence::pack(&[1, 0, 0, 1], 1).unwrap();
        let idxb = PackedRmqIndex::build_with_block(&bits, Some(2), &ctx).unwrap();
        let bvals = [1u64, 0, 0, 1];
        assert_eq!(idxb.range_max_indexed(&mut |i| bvals[i], 1, 2).unwrap(), 1);
    }

    #[test]
    fn more_examples() {
        let ctx = ctx();
        let a = PackedSequence::pack(&[4, 4, 1, 4], 3).unwrap();
        let idx = PackedRmqIndex::build_with_block(&a, Some(2), &ctx).unwrap();
        let vals = [4u64, 4, 1, 4];
        assert_eq!(idx.range_min_indexed(&mut |i| vals[i], 0, 3).unwrap(), 2);
        let b = PackedSequence::pack(&[0, 1, 2, 3], 2).unwrap();
        let idxb = PackedRmqIndex::build_with_block(&b, Some(2), &ctx).unwrap();
        let bvals = [0u64, 1, 2, 3];
        assert_eq!(idxb.range_max_indexed(&mut |i| bvals[i], 0, 3).unwrap(), 3);
    }

    #[test]
    fn invalid_ranges() {
        let idx = RmqIndex::build(&[1, 2]);
        assert_eq!(idx.range_min(1, 0), Err(Error::InvalidRange(1, 0)));
        assert_eq!(idx.range_min(0, 2), Err(Error::InvalidRange(0, 2)));
        let ctx = ctx();
        let wide = PackedSequence::pack(&[0], 40).unwrap();
        assert!(matches!(
            PackedRmqIndex::build(&wide, &ctx),
            Err(Error::AlphabetOutOfRegime(40, _))
        ));
    }

    #[test]
    fn exhaustive_small_both_structures() {
        let ctx = ctx();
        for len in 1..=8usize {
            for code in 0..(5u64.pow(len as u32)) {
                let mut vals = Vec::with_capacity(len);
                let mut c = code;
                for _ in 0..len {
                    vals.push(c % 5);
                    c /= 5;
                }
                let idx = RmqIndex::build(&vals);
                let packed = PackedSequence::pack(&vals, 3).unwrap();
                for block in [None, Some(2), Some(3)] {
                    let pidx = PackedRmqIndex::build_with_block(&packed, block, &ctx).unwrap();
                    for i in 0..len {
                        for j in i..len {
                            let want_min = oracle::brute_rmq(&vals, i, j);
                            let want_max = oracle::brute_rmq_max(&vals, i, j);
                            assert_eq!(idx.range_min(i, j).unwrap(), want_min);
                            assert_eq!(idx.range_max(i, j).unwrap(), want_max);
                            let mut calls = 0;
                            let got = pidx
                                .range_min_indexed(
                                    &mut |p| {
                                        calls += 1;
                                        vals[p]
                                    },
                                    i,
                                    j,
                                )
                                .unwrap();
                            assert!(calls <= 3, "{calls} accessor calls");
                            assert_eq!(got, want_min, "vals={vals:?} [{i},{j}] block={block:?}");
                            let mut calls = 0;
                            let got = pidx
                                .range_max_indexed(
                                    &mut |p| {
                                        calls += 1;
                                        vals[p]
                                    },
                                    i,
                                    j,
                                )
                                .unwrap();
                            assert!(calls <= 3);
                            assert_eq!(got, want_max);
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn random_large_matches_oracle(
            vals in proptest::collection::vec(0u64..64, 1..4000),
            queries in proptest::collection::vec(any::<(usize, usize)>(), 1..32),
        ) {
            let idx = RmqIndex::build(&vals);
            let packed = PackedSequence::pack(&vals, 6).unwrap();
            let pidx = PackedRmqIndex::build(&packed, &ctx()).unwrap();
            let mut no_tables = Config::default();
            no_tables.table_cap_bits = 0;
            let pidx_nt = PackedRmqIndex::build(&packed, &Ctx::new(no_tables)).unwrap();
            for &(a, b) in &queries {
                let i = a % vals.len();
                let j = i + b % (vals.len() - i);
                let want_min = oracle::brute_rmq(&vals, i, j);
                let want_max = oracle::brute_rmq_max(&vals, i, j);
                prop_assert_eq!(idx.range_min(i, j).unwrap(), want_min);
                prop_assert_eq!(idx.range_max(i, j).unwrap(), want_max);
                let mut acc = |p: usize| vals[p];
                prop_assert_eq!(pidx.range_min_indexed(&mut acc, i, j).unwrap(), want_min);
                prop_assert_eq!(pidx.range_max_indexed(&mut acc, i, j).unwrap(), want_max);
                prop_assert_eq!(pidx_nt.range_min_indexed(&mut acc, i, j).unwrap(), want_min);
                prop_assert_eq!(pidx_nt.range_max_indexed(&mut acc, i, j).unwrap(), want_max);
            }
        }
    }
}
