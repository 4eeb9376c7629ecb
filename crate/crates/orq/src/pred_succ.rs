//! Predecessor / successor over sorted integer sequences.
//!
//! `pred(x) = max{ j | A[j] <= x }` and `succ(x) = min{ j | x <= A[j] }`.
//!
//! Three regimes:
//! * `YFastIndex` owns the sorted data and layers a prefix dictionary over a
//!   sampled subsequence, answering in O(lg lg u) probes with linear build.
//! * `PatriciaBlockIndex` is an indexing-model structure for packed
//!   sequences: a boundary `YFastIndex` over block-last elements plus one
//!   Patricia trie per block, touching the sequence O(1) times per query.
//!   A duplicates-aware wrapper resolves queries on the distinct
//!   subsequence through a first-occurrence bitvector.
//! * The same trie machinery with a larger block length serves as the
//!   general-universe indexing structure used over wavelet-tree index
//!   arrays.

use crate::bitvec::RankSelectBitVector;
use crate::config::Ctx;
use crate::counters;
use crate::error::{Error, Result};
use crate::packed::PackedSequence;
use crate::tables::{Table, TableKey};
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

type DetMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

/// Sorted-sequence predecessor/successor with layered prefix dictionaries
/// over a sampled subsequence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct YFastIndex {
    keys: Vec<u64>,
    u_bits: u32,
    stride: usize,
    /// levels[l] maps an l-bit prefix of a sampled key to the (min, max)
    /// sampled-array indexes below it.
    levels: Vec<DetMap<u64, (u32, u32)>>,
}

impl YFastIndex {
    pub fn build(keys: Vec<u64>) -> Result<Self> {
        for w in 1..keys.len() {
            if keys[w - 1] > keys[w] {
                return Err(Error::NotSorted(w));
            }
        }
        let max = keys.iter().copied().max().unwrap_or(0);
        let u_bits = (64 - max.leading_zeros()).max(1);
        let stride = (u_bits as usize).max(2);
        // Inputs shorter than stride^2 binary-search within the O(lg lg u)
        // probe budget; the prefix directories would be all overhead.
        if keys.len() <= stride * stride {
            return Ok(YFastIndex { keys, u_bits, stride, levels: Vec::new() });
        }
        let n_sampled = keys.len().div_ceil(stride);
        let mut levels: Vec<DetMap<u64, (u32, u32)>> =
            (0..=u_bits).map(|_| DetMap::default()).collect();
        for s in 0..n_sampled {
            let key = keys[s * stride];
            for (l, level) in levels.iter_mut().enumerate() {
                let prefix = if l == 0 { 0 } else { key >> (u_bits as usize - l) };
                level
                    .entry(prefix)
                    .and_modify(|e| {
                        e.0 = e.0.min(s as u32);
                        e.1 = e.1.max(s as u32);
                    })
                    .or_insert((s as u32, s as u32));
            }
        }
        counters::bump_word_ops((n_sampled as u64) * (u_bits as u64) + keys.len() as u64 / 8 + 1);
        Ok(YFastIndex { keys, u_bits, stride, levels })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, i: usize) -> u64 {
        self.keys[i]
    }

    /// Longest prefix length of `x` present in the sampled dictionary.
    fn longest_prefix(&self, x: u64) -> u32 {
        let mut lo = 0u32;
        let mut hi = self.u_bits;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            counters::bump_word_ops(1);
            if self.levels[mid as usize].contains_key(&(x >> (self.u_bits - mid))) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }

    /// Index of the largest sampled key `<= x` in the sampled array.
    fn pred_sampled(&self, x: u64) -> Option<u32> {
        if self.keys.is_empty() || x >= (1u64 << (self.u_bits - 1)) << 1 {
            return if self.keys.is_empty() {
                None
            } else {
                Some((self.keys.len().div_ceil(self.stride) - 1) as u32)
            };
        }
        let l = self.longest_prefix(x);
        if l == self.u_bits {
            return Some(self.levels[l as usize][&x].1);
        }
        let bit = x >> (self.u_bits - 1 - l) & 1;
        let child = ((if l == 0 { 0 } else { x >> (self.u_bits - l) }) << 1) | bit;
        if bit == 1 {
            // The 0-sibling exists and everything under it is below x.
            let sibling = child ^ 1;
            Some(self.levels[l as usize + 1][&sibling].1)
        } else {
            let sibling = child ^ 1;
            let first_above = self.levels[l as usize + 1][&sibling].0;
            first_above.checked_sub(1)
        }
    }

    pub fn pred(&self, x: u64) -> Option<usize> {
        if self.levels.is_empty() {
            counters::bump_word_ops(64 - (self.keys.len() as u64).leading_zeros() as u64);
            let p = self.keys.partition_point(|&k| k <= x);
            return p.checked_sub(1);
        }
        let s = self.pred_sampled(x)? as usize;
        // The answer lies in [s*stride, (s+1)*stride).
        let lo = s * self.stride;
        let hi = ((s + 1) * self.stride).min(self.keys.len());
        let within = self.keys[lo..hi].partition_point(|&k| k <= x);
        counters::bump_word_ops((64 - (self.stride as u64).leading_zeros()) as u64);
        if within == 0 {
            None
        } else {
            Some(lo + within - 1)
        }
    }

    /// Index of the smallest sampled key `>= x` in the sampled array.
    fn succ_sampled(&self, x: u64) -> Option<u32> {
        if self.keys.is_empty() {
            return None;
        }
        if x >= (1u64 << (self.u_bits - 1)) << 1 {
            return None;
        }
        let l = self.longest_prefix(x);
        if l == self.u_bits {
            return Some(self.levels[l as usize][&x].0);
        }
        let bit = x >> (self.u_bits - 1 - l) & 1;
        let child = ((if l == 0 { 0 } else { x >> (self.u_bits - l) }) << 1) | bit;
        if bit == 0 {
            // The 1-sibling exists and everything under it is above x.
            let sibling = child ^ 1;
            Some(self.levels[l as usize + 1][&sibling].0)
        } else {
            let sibling = child ^ 1;
            let last_below = self.levels[l as usize + 1][&sibling].1;
            let next = last_below + 1;
            if (next as usize) * self.stride < self.keys.len().div_ceil(self.stride) * self.stride
                && (next as usize) < self.keys.len().div_ceil(self.stride)
            {
                Some(next)
            } else {
                None
            }
        }
    }

    pub fn succ(&self, x: u64) -> Option<usize> {
        if self.keys.is_empty() {
            return None;
        }
        if self.levels.is_empty() {
            counters::bump_word_ops(64 - (self.keys.len() as u64).leading_zeros() as u64);
            let p = self.keys.partition_point(|&k| k < x);
            return (p < self.keys.len()).then_some(p);
        }
        counters::bump_word_ops((64 - (self.stride as u64).leading_zeros()) as u64);
        match self.succ_sampled(x) {
            Some(s) => {
                let s = s as usize;
                // The previous sample is strictly below x, so the first key
                // >= x sits in ((s-1)*stride, s*stride].
                let lo = if s == 0 { 0 } else { (s - 1) * self.stride + 1 };
                let hi = s * self.stride;
                let within = self.keys[lo..=hi].partition_point(|&k| k < x);
                Some(lo + within)
            }
            None => {
                // No sample reaches x; only the tail after the last sample
                // can.
                let n_sampled = self.keys.len().div_ceil(self.stride);
                let lo = (n_sampled - 1) * self.stride + 1;
                if lo >= self.keys.len() {
                    return None;
                }
                let within = self.keys[lo..].partition_point(|&k| k < x);
                if lo + within < self.keys.len() {
                    Some(lo + within)
                } else {
                    None
                }
            }
        }
    }
}

/// Preorder-encoded Patricia tries over fixed-length blocks of a sorted
/// distinct sequence, plus a `YFastIndex` over block-last values.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatriciaBlockIndex {
    n: usize,
    width: u32,
    block: usize,
    node_bits: u32,
    boundary: YFastIndex,
    nodes: PackedSequence,
    starts: Vec<u32>,
}

const SKIP_BITS: u32 = 6;

#[derive(Debug, Clone, Copy)]
struct TrieNode {
    leaf: bool,
    skip: u32,
    left_size: u32,
}

fn encode_node(n: TrieNode, left_bits: u32) -> u64 {
    (n.leaf as u64) | ((n.skip as u64) << 1) | ((n.left_size as u64) << (1 + SKIP_BITS)) as u64
        & ((1u64 << (1 + SKIP_BITS + left_bits)) - 1)
}

fn build_trie_nodes(keys: &[u64], width: u32, out: &mut Vec<TrieNode>) {
    if keys.len() == 1 {
        out.push(TrieNode { leaf: true, skip: 0, left_size: 0 });
        return;
    }
    let diff = keys[0] ^ keys[keys.len() - 1];
    debug_assert!(diff != 0, "keys must be distinct");
    let hb = 63 - diff.leading_zeros();
    let skip = width - 1 - hb;
    let split = keys.partition_point(|&k| k >> hb & 1 == 0);
    let slot = out.len();
    out.push(TrieNode { leaf: false, skip, left_size: 0 });
    build_trie_nodes(&keys[..split], width, out);
    let left_size = (out.len() - slot - 1) as u32;
    out[slot].left_size = left_size;
    build_trie_nodes(&keys[split..], width, out);
}

impl PatriciaBlockIndex {
    /// Build over strictly increasing values. `block` is the per-trie key
    /// count.
    pub fn build(values: &[u64], width: u32, block: usize, ctx: &Ctx) -> Result<Self> {
        for w in 1..values.len() {
            if values[w - 1] > values[w] {
                return Err(Error::NotSorted(w));
            }
            if values[w - 1] == values[w] {
                return Err(Error::DuplicatesNotAllowed(w));
            }
        }
        let width = width.max(1);
        debug_assert!(width <= 64 && values.iter().all(|&v| width == 64 || v < (1u64 << width)));
        let block = block.max(1);
        let n = values.len();
        let n_blocks = n.div_ceil(block);
        let boundary = YFastIndex::build(
            (0..n_blocks).map(|b| values[(((b + 1) * block).min(n)) - 1]).collect(),
        )?;
        let left_bits = (64 - (2 * block as u64).leading_zeros()).max(1);
        let node_bits = 1 + SKIP_BITS + left_bits;
        let mut nodes = PackedSequence::new(node_bits);
        let mut starts = Vec::with_capacity(n_blocks + 1);
        starts.push(0u32);
        let mut scratch = Vec::with_capacity(2 * block);
        for b in 0..n_blocks {
            let lo = b * block;
            let hi = ((b + 1) * block).min(n);
            scratch.clear();
            self::block_trie(&values[lo..hi], width, block as u32, left_bits, ctx, &mut scratch);
            for &node in &scratch {
                nodes.push(encode_node(node, left_bits));
            }
            starts.push(nodes.len() as u32);
        }
        counters::bump_word_ops(n as u64 + 1);
        Ok(PatriciaBlockIndex { n, width, block, node_bits, boundary, nodes, starts })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn node(&self, pos: usize) -> TrieNode {
        let raw = self.nodes.get(pos);
        TrieNode {
            leaf: raw & 1 == 1,
            skip: (raw >> 1 & ((1 << SKIP_BITS) - 1)) as u32,
            left_size: (raw >> (1 + SKIP_BITS)) as u32,
        }
    }

    fn block_len(&self, b: usize) -> usize {
        ((b + 1) * self.block).min(self.n) - b * self.block
    }

    /// Blind-search leaf index for `x` within block `b` (no accesses).
    fn blind_leaf(&self, b: usize, x: u64) -> usize {
        let mut pos = self.starts[b] as usize;
        let mut leaf_base = 0usize;
        loop {
            let node = self.node(pos);
            counters::bump_word_ops(1);
            if node.leaf {
                return leaf_base;
            }
            let bit = x >> (self.width - 1 - node.skip) & 1;
            if bit == 0 {
                pos += 1;
            } else {
                pos += 1 + node.left_size as usize;
                leaf_base += (node.left_size as usize + 1) / 2;
            }
        }
    }

    /// Splitting walk: descend while skip < p, returning the leaf range
    /// [base, base+count) of the stopping subtree.
    fn stop_subtree(&self, b: usize, x: u64, p: u32) -> (usize, usize) {
        let mut pos = self.starts[b] as usize;
        let mut leaf_base = 0usize;
        let mut total = (self.starts[b + 1] - self.starts[b]) as usize;
        loop {
            let node = self.node(pos);
            counters::bump_word_ops(1);
            if node.leaf || node.skip >= p {
                return (leaf_base, (total + 1) / 2);
            }
            let bit = x >> (self.width - 1 - node.skip) & 1;
            if bit == 0 {
                pos += 1;
                total = node.left_size as usize;
            } else {
                pos += 1 + node.left_size as usize;
                leaf_base += (node.left_size as usize + 1) / 2;
                total = total - 1 - node.left_size as usize;
            }
        }
    }

    /// In-block succ: index (within block) of first key >= x, one access.
    fn block_succ(
        &self,
        b: usize,
        x: u64,
        accessor: &mut dyn FnMut(usize) -> u64,
    ) -> Option<usize> {
        let leaf = self.blind_leaf(b, x);
        let v = accessor(b * self.block + leaf);
        if v == x {
            return Some(leaf);
        }
        let p = self.width - 1 - (63 - (v ^ x).leading_zeros());
        let (base, count) = self.stop_subtree(b, x, p);
        let idx = if x >> (self.width - 1 - p) & 1 == 1 { base + count } else { base };
        if idx < self.block_len(b) {
            Some(idx)
        } else {
            None
        }
    }

    /// In-block pred: index (within block) of last key <= x, one access.
    fn block_pred(
        &self,
        b: usize,
        x: u64,
        accessor: &mut dyn FnMut(usize) -> u64,
    ) -> Option<usize> {
        let leaf = self.blind_leaf(b, x);
        let v = accessor(b * self.block + leaf);
        if v == x {
            return Some(leaf);
        }
        let p = self.width - 1 - (63 - (v ^ x).leading_zeros());
        let (base, count) = self.stop_subtree(b, x, p);
        if x >> (self.width - 1 - p) & 1 == 1 {
            Some(base + count - 1)
        } else {
            base.checked_sub(1)
        }
    }

    pub fn succ(&self, accessor: &mut dyn FnMut(usize) -> u64, x: u64) -> Option<usize> {
        if self.n == 0 {
            return None;
        }
        let b = self.boundary.succ(x)?;
        let within = self.block_succ(b, x, accessor)?;
        Some(b * self.block + within)
    }

    pub fn pred(&self, accessor: &mut dyn FnMut(usize) -> u64, x: u64) -> Option<usize> {
        if self.n == 0 {
            return None;
        }
        match self.boundary.succ(x) {
            None => Some(self.n - 1),
            Some(b) => match self.block_pred(b, x, accessor) {
                Some(within) => Some(b * self.block + within),
                None => {
                    if b == 0 {
                        None
                    } else {
                        Some(b * self.block - 1)
                    }
                }
            },
        }
    }
}

/// Build one block's trie, via the universal table when it fits.
fn block_trie(
    keys: &[u64],
    width: u32,
    block: u32,
    left_bits: u32,
    ctx: &Ctx,
    out: &mut Vec<TrieNode>,
) {
    let node_bits = 1 + SKIP_BITS + left_bits;
    if keys.len() == block as usize && block >= 2 && block * width <= 18 {
        let key = TableKey::TrieBlock { width, block };
        let entries = 1u64 << (block * width);
        let words_per = ((2 * block as u64 - 1) * node_bits as u64).div_ceil(64) as usize;
        let size_bits = entries.saturating_mul(words_per as u64 * 64);
        let table = ctx.registry.get_or_build(key, size_bits, || {
            let mut data = vec![0u64; entries as usize * words_per];
            let mut tmp = Vec::new();
            for pat in 0..entries {
                let vals: Vec<u64> = (0..block)
                    .map(|e| (pat >> (e * width)) & ((1 << width) - 1))
                    .collect();
                if !vals.windows(2).all(|w| w[0] < w[1]) {
                    continue;
                }
                tmp.clear();
                build_trie_nodes(&vals, width, &mut tmp);
                let base = pat as usize * words_per;
                let mut bitpos = 0u64;
                for &node in &tmp {
                    let enc = encode_node(node, left_bits);
                    let wi = (bitpos / 64) as usize;
                    let off = (bitpos % 64) as u32;
                    data[base + wi] |= enc << off;
                    if off + node_bits > 64 {
                        data[base + wi + 1] |= enc >> (64 - off);
                    }
                    bitpos += node_bits as u64;
                }
            }
            Table { data, entry_words: words_per }
        });
        if let Some(table) = table {
            let mut pat = 0u64;
            for (e, &v) in keys.iter().enumerate() {
                pat |= v << (e as u32 * width);
            }
            let entry = table.entry(pat as usize);
            let count = 2 * keys.len() - 1;
            for i in 0..count {
                let bitpos = i as u64 * node_bits as u64;
                let wi = (bitpos / 64) as usize;
                let off = (bitpos % 64) as u32;
                let mut raw = entry[wi] >> off;
                if off + node_bits > 64 {
                    raw |= entry[wi + 1] << (64 - off);
                }
                raw &= (1u64 << node_bits) - 1;
                out.push(TrieNode {
                    leaf: raw & 1 == 1,
                    skip: (raw >> 1 & ((1 << SKIP_BITS) - 1)) as u32,
                    left_size: (raw >> (1 + SKIP_BITS)) as u32,
                });
            }
            return;
        }
    }
    build_trie_nodes(keys, width, out);
    counters::bump_word_ops(keys.len() as u64 + 1);
}

/// Duplicates-aware wrapper: queries run on the distinct subsequence and
/// return the first occurrence of the answering value.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DuplicatePatriciaIndex {
    first_occ: RankSelectBitVector,
    inner: PatriciaBlockIndex,
}

impl DuplicatePatriciaIndex {
    pub fn build(values: &[u64], width: u32, block: usize, ctx: &Ctx) -> Result<Self> {
        for w in 1..values.len() {
            if values[w - 1] > values[w] {
                return Err(Error::NotSorted(w));
            }
        }
        let mut flags = PackedSequence::with_capacity(1, values.len());
        let mut distinct = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if i == 0 || v > values[i - 1] {
                flags.push(1);
                distinct.push(v);
            } else {
                flags.push(0);
            }
        }
        counters::bump_word_ops(values.len() as u64 / 8 + 1);
        let first_occ = RankSelectBitVector::build(&flags);
        let inner = PatriciaBlockIndex::build(&distinct, width, block, ctx)?;
        Ok(DuplicatePatriciaIndex { first_occ, inner })
    }

    pub fn len(&self) -> usize {
        self.first_occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_occ.is_empty()
    }

    fn map_out(&self, i: usize) -> usize {
        self.first_occ.select_bit(true, i + 1).expect("distinct index in range") as usize
    }

    pub fn succ(&self, accessor: &mut dyn FnMut(usize) -> u64, x: u64) -> Option<usize> {
        let fo = &self.first_occ;
        let mut inner_acc = |i: usize| accessor(fo.select_bit(true, i + 1).unwrap() as usize);
        let i = self.inner.succ(&mut inner_acc, x)?;
        Some(self.map_out(i))
    }

    pub fn pred(&self, accessor: &mut dyn FnMut(usize) -> u64, x: u64) -> Option<usize> {
        let fo = &self.first_occ;
        let mut inner_acc = |i: usize| accessor(fo.select_bit(true, i + 1).unwrap() as usize);
        let i = self.inner.pred(&mut inner_acc, x)?;
        Some(self.map_out(i))
    }
}

/// Which structure backs a predecessor index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredSuccVariant {
    General,
    PackedDistinct,
    PackedDuplicates,
    Indexing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredSuccIndex {
    General(YFastIndex),
    PackedDistinct(PatriciaBlockIndex),
    PackedDuplicates(DuplicatePatriciaIndex),
    Indexing(PatriciaBlockIndex),
}

fn width_of(values: &[u64]) -> u32 {
    (64 - values.iter().copied().max().unwrap_or(0).leading_zeros()).max(1)
}

/// Build a predecessor/successor index over a sorted sequence.
pub fn build_pred_succ(
    values: &[u64],
    variant: PredSuccVariant,
    ctx: &Ctx,
) -> Result<PredSuccIndex> {
    let width = width_of(values);
    match variant {
        PredSuccVariant::General => Ok(PredSuccIndex::General(YFastIndex::build(values.to_vec())?)),
        PredSuccVariant::PackedDistinct => {
            if width > 4 * ctx.config.packed_width_max {
                return Err(Error::AlphabetOutOfRegime(width, 4 * ctx.config.packed_width_max));
            }
            Ok(PredSuccIndex::PackedDistinct(PatriciaBlockIndex::build(
                values,
                width,
                ctx.config.pred_block,
                ctx,
            )?))
        }
        PredSuccVariant::PackedDuplicates => {
            if width > 4 * ctx.config.packed_width_max {
                return Err(Error::AlphabetOutOfRegime(width, 4 * ctx.config.packed_width_max));
            }
            Ok(PredSuccIndex::PackedDuplicates(DuplicatePatriciaIndex::build(
                values,
                width,
                ctx.config.pred_block,
                ctx,
            )?))
        }
        PredSuccVariant::Indexing => Ok(PredSuccIndex::Indexing(PatriciaBlockIndex::build(
            values,
            width,
            ctx.config.index_pred_block,
            ctx,
        )?)),
    }
}

impl PredSuccIndex {
    pub fn pred(&self, accessor: &mut dyn FnMut(usize) -> u64, x: u64) -> Option<usize> {
        match self {
            PredSuccIndex::General(y) => y.pred(x),
            PredSuccIndex::PackedDistinct(p) | PredSuccIndex::Indexing(p) => p.pred(accessor, x),
            PredSuccIndex::PackedDuplicates(p) => p.pred(accessor, x),
        }
    }

    pub fn succ(&self, accessor: &mut dyn FnMut(usize) -> u64, x: u64) -> Option<usize> {
        match self {
            PredSuccIndex::General(y) => y.succ(x),
            PredSuccIndex::PackedDistinct(p) | PredSuccIndex::Indexing(p) => p.succ(accessor, x),
            PredSuccIndex::PackedDuplicates(p) => p.succ(accessor, x),
        }
    }
}

// --- serialization ---

impl crate::codec::Codec for YFastIndex {
    fn encode(&self, w: &mut crate::codec::Writer) {
        // The prefix directories rebuild deterministically from the keys.
        self.keys.encode(w);
    }
    fn decode(
        r: &mut crate::codec::Reader<'_>,
        ctx: &std::sync::Arc<Ctx>,
    ) -> Result<Self> {
        use crate::codec::Codec;
        let keys: Vec<u64> = Codec::decode(r, ctx)?;
        YFastIndex::build(keys)
    }
}

crate::codec::impl_codec!(PatriciaBlockIndex {
    n,
    width,
    block,
    node_bits,
    boundary,
    nodes,
    starts,
});
crate::codec::impl_codec!(DuplicatePatriciaIndex { first_occ, inner });
