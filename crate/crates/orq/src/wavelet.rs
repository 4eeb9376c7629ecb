//! Generalized d-ary wavelet trees.
//!
//! A tree over `A in [sigma]^n` with power-of-two fanout `d`. Internal node
//! `u` at level `l` carries `S(u)`, the level-`l` base-d digit of each of its
//! elements; nodes at a level are stored concatenated with an offsets
//! directory, and node identity is implicit heap numbering on the complete
//! d-ary tree (index = the leading digits of the covered alphabet range), so
//! child, parent, and leaf-LCA arithmetic are O(1) with no pointer
//! preprocessing. Alphabets that are not a power of `d` are padded with
//! permanently empty leaves.
//!
//! Two construction paths produce bit-identical trees: the packed path
//! splits level by level on single bits (table-accelerated extraction) and
//! keeps only levels at multiples of `lg d`; the plain path counting-sorts
//! each level directly.

use crate::config::Ctx;
use crate::counters;
use crate::error::{Error, Result};
use crate::packed::PackedSequence;

/// Node handle: `level` (root = 0) and the node's left-to-right slot among
/// the `d^level` positions of that level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId {
    pub level: u32,
    pub index: u64,
}

/// Per-level node start offsets. Identity form covers the leaf level of a
/// rank-space permutation, where leaf `i` holds exactly one element for
/// `i < n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Offsets {
    Explicit(Vec<u64>),
    Identity { n: u64, slots: u64 },
}

impl Offsets {
    #[inline]
    pub fn get(&self, slot: u64) -> u64 {
        match self {
            Offsets::Explicit(v) => v[slot as usize],
            Offsets::Identity { n, .. } => slot.min(*n),
        }
    }

    pub fn slots(&self) -> u64 {
        match self {
            Offsets::Explicit(v) => v.len() as u64 - 1,
            Offsets::Identity { slots, .. } => *slots,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WaveletOptions {
    pub with_values: bool,
    pub with_indexes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaveletTree {
    len: usize,
    sigma: u64,
    sigma_padded: u64,
    fanout: u64,
    lg_d: u32,
    /// Number of internal levels; leaves live at level `levels`.
    levels: u32,
    /// S at each internal level, nodes concatenated left to right.
    level_seqs: Vec<PackedSequence>,
    /// Offsets per level 0..=levels (the last entry is the leaf level).
    offsets: Vec<Offsets>,
    /// Construction-time value/index arrays per level 0..=levels, retained
    /// only when requested.
    values: Option<Vec<PackedSequence>>,
    indexes: Option<Vec<PackedSequence>>,
}

fn check_fanout(d: u64) -> Result<()> {
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::InvalidFanout(d as usize));
    }
    Ok(())
}

fn tree_shape(sigma: u64, d: u64) -> (u64, u32, u32) {
    let lg_d = 63 - d.leading_zeros();
    let mut padded = d;
    let mut levels = 1u32;
    while padded < sigma {
        padded *= d;
        levels += 1;
    }
    (padded, levels, lg_d)
}

impl WaveletTree {
    /// Packed construction: binary splits driven by table-accelerated bit
    /// extraction, d-ary levels kept at multiples of `lg d`.
    pub fn build_packed(
        a: &PackedSequence,
        sigma: u64,
        d: u64,
        opts: WaveletOptions,
        ctx: &Ctx,
    ) -> Result<WaveletTree> {
        check_fanout(d)?;
        let sigma = sigma.max(1);
        let (sigma_padded, levels, lg_d) = tree_shape(sigma, d);
        let width = levels * lg_d;
        // Normalize storage width so msb-first digit arithmetic lines up.
        let vals0 = repack(a, width);
        let idx_width = (64 - (a.len().max(2) as u64 - 1).leading_zeros()).max(1);
        let mut idxs0 = PackedSequence::with_capacity(idx_width, a.len());
        for i in 0..a.len() {
            idxs0.push(i as u64);
        }

        let mut tree = WaveletTree {
            len: a.len(),
            sigma,
            sigma_padded,
            fanout: d,
            lg_d,
            levels,
            level_seqs: Vec::with_capacity(levels as usize),
            offsets: Vec::with_capacity(levels as usize + 1),
            values: opts.with_values.then(Vec::new),
            indexes: opts.with_indexes.then(Vec::new),
        };

        let mut vals = vals0;
        let mut idxs = idxs0;
        // Binary-node boundaries of the current order; children occupy
        // exactly their parent's range, so splitting happens per node.
        let mut boundaries: Vec<u64> = vec![0, a.len() as u64];
        for l in 0..=levels {
            tree.offsets.push(level_offsets(&vals, l, lg_d, width, tree.len));
            if l < levels {
                tree.level_seqs.push(vals.extract_bits(l * lg_d, (l + 1) * lg_d - 1, ctx)?);
            }
            if let Some(vs) = tree.values.as_mut() {
                vs.push(vals.clone());
            }
            if let Some(is) = tree.indexes.as_mut() {
                is.push(idxs.clone());
            }
            if l == levels {
                break;
            }
            // One stable in-node binary split per bit of this level's digit.
            for bit in l * lg_d..(l + 1) * lg_d {
                let selector = vals.extract_bits(bit, bit, ctx)?;
                let mut new_vals = PackedSequence::zeroed(vals.width(), vals.len());
                let mut new_idxs = PackedSequence::zeroed(idxs.width(), idxs.len());
                let mut new_boundaries = Vec::with_capacity(boundaries.len() * 2);
                for w in boundaries.windows(2) {
                    let (s, e) = (w[0], w[1]);
                    let mut zeros = 0u64;
                    for i in s..e {
                        zeros += (selector.get(i as usize) == 0) as u64;
                    }
                    let mut c0 = s;
                    let mut c1 = s + zeros;
                    for i in s..e {
                        let dst = if selector.get(i as usize) == 0 {
                            c0 += 1;
                            c0 - 1
                        } else {
                            c1 += 1;
                            c1 - 1
                        };
                        new_vals.set(dst as usize, vals.get(i as usize));
                        new_idxs.set(dst as usize, idxs.get(i as usize));
                    }
                    if *new_boundaries.last().unwrap_or(&u64::MAX) != s {
                        new_boundaries.push(s);
                    }
                    if s + zeros > s && s + zeros < e {
                        new_boundaries.push(s + zeros);
                    }
                }
                new_boundaries.push(a.len() as u64);
                new_boundaries.dedup();
                counters::bump_word_ops(vals.bit_len() / 32 + boundaries.len() as u64 + 1);
                vals = new_vals;
                idxs = new_idxs;
                boundaries = new_boundaries;
            }
        }
        Ok(tree)
    }

    /// Plain construction: per-level counting sorts; structurally identical
    /// output to the packed path.
    pub fn build_plain(
        values: &[u64],
        sigma: u64,
        d: u64,
        opts: WaveletOptions,
    ) -> Result<WaveletTree> {
        check_fanout(d)?;
        let sigma = sigma.max(1);
        let (sigma_padded, levels, lg_d) = tree_shape(sigma, d);
        let width = levels * lg_d;
        let idx_width = (64 - (values.len().max(2) as u64 - 1).leading_zeros()).max(1);

        let mut tree = WaveletTree {
            len: values.len(),
            sigma,
            sigma_padded,
            fanout: d,
            lg_d,
            levels,
            level_seqs: Vec::with_capacity(levels as usize),
            offsets: Vec::with_capacity(levels as usize + 1),
            values: opts.with_values.then(Vec::new),
            indexes: opts.with_indexes.then(Vec::new),
        };

        let mut vals: Vec<u64> = values.to_vec();
        let mut idxs: Vec<u64> = (0..values.len() as u64).collect();
        for l in 0..=levels {
            let packed_vals = PackedSequence::pack(&vals, width).expect("values within sigma");
            tree.offsets.push(level_offsets(&packed_vals, l, lg_d, width, tree.len));
            if l < levels {
                let shift = width - (l + 1) * lg_d;
                let digits: Vec<u64> =
                    vals.iter().map(|&v| (v >> shift) & ((1 << lg_d) - 1)).collect();
                tree.level_seqs.push(PackedSequence::pack(&digits, lg_d).unwrap());
            }
            if let Some(vs) = tree.values.as_mut() {
                vs.push(packed_vals);
            }
            if let Some(is) = tree.indexes.as_mut() {
                is.push(PackedSequence::pack(&idxs, idx_width).unwrap());
            }
            if l == levels {
                break;
            }
            // Counting sort by the top (l+1) digits.
            let shift = width - (l + 1) * lg_d;
            let buckets = 1usize << ((l + 1) * lg_d).min(48);
            let mut cnt = vec![0usize; buckets + 1];
            for &v in &vals {
                cnt[(v >> shift) as usize + 1] += 1;
            }
            for b in 0..buckets {
                cnt[b + 1] += cnt[b];
            }
            let mut nv = vec![0u64; vals.len()];
            let mut ni = vec![0u64; vals.len()];
            for (&v, &i) in vals.iter().zip(idxs.iter()) {
                let b = (v >> shift) as usize;
                nv[cnt[b]] = v;
                ni[cnt[b]] = i;
                cnt[b] += 1;
            }
            counters::bump_word_ops(vals.len() as u64 + buckets as u64);
            vals = nv;
            idxs = ni;
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sigma(&self) -> u64 {
        self.sigma
    }

    pub fn sigma_padded(&self) -> u64 {
        self.sigma_padded
    }

    pub fn fanout(&self) -> u64 {
        self.fanout
    }

    pub fn lg_d(&self) -> u32 {
        self.lg_d
    }

    /// Internal levels; leaves are at `internal_levels()`.
    pub fn internal_levels(&self) -> u32 {
        self.levels
    }

    pub fn root(&self) -> NodeId {
        NodeId { level: 0, index: 0 }
    }

    pub fn is_leaf_level(&self, level: u32) -> bool {
        level == self.levels
    }

    pub fn leaf(&self, symbol: u64) -> Result<NodeId> {
        if symbol >= self.sigma_padded {
            return Err(Error::LeafOutOfBounds(symbol));
        }
        Ok(NodeId { level: self.levels, index: symbol })
    }

    pub fn child(&self, node: NodeId, t: u64) -> NodeId {
        debug_assert!(t < self.fanout && node.level < self.levels);
        NodeId { level: node.level + 1, index: (node.index << self.lg_d) | t }
    }

    pub fn parent(&self, node: NodeId) -> NodeId {
        debug_assert!(node.level > 0);
        NodeId { level: node.level - 1, index: node.index >> self.lg_d }
    }

    /// Descendant of `node` at `level` whose slot among `node`'s descendants
    /// there is `rank`.
    pub fn descendant(&self, node: NodeId, level: u32, rank: u64) -> NodeId {
        debug_assert!(level >= node.level);
        NodeId { level, index: (node.index << ((level - node.level) * self.lg_d)) | rank }
    }

    /// The digit of leaf `symbol`'s path selecting the child at `level`.
    pub fn path_digit(&self, symbol: u64, level: u32) -> u64 {
        (symbol >> ((self.levels - 1 - level) * self.lg_d)) & (self.fanout - 1)
    }

    /// Ancestor of leaf `symbol` at `level`.
    pub fn ancestor_of_leaf(&self, symbol: u64, level: u32) -> NodeId {
        NodeId { level, index: symbol >> ((self.levels - level) * self.lg_d) }
    }

    /// Deepest node whose alphabet range contains both leaves.
    pub fn lca_leaves(&self, a: u64, b: u64) -> Result<NodeId> {
        if a >= self.sigma_padded {
            return Err(Error::LeafOutOfBounds(a));
        }
        if b >= self.sigma_padded {
            return Err(Error::LeafOutOfBounds(b));
        }
        if a == b {
            return Ok(NodeId { level: self.levels, index: a });
        }
        let hb = 63 - (a ^ b).leading_zeros();
        let drop = hb / self.lg_d + 1;
        Ok(NodeId { level: self.levels - drop, index: a >> (drop * self.lg_d) })
    }

    /// Element range `[start, end)` of `node` in its level's concatenation.
    pub fn node_range(&self, node: NodeId) -> (u64, u64) {
        let offs = &self.offsets[node.level as usize];
        (offs.get(node.index), offs.get(node.index + 1))
    }

    pub fn node_len(&self, node: NodeId) -> u64 {
        let (s, e) = self.node_range(node);
        e - s
    }

    /// S digits at an internal level, nodes concatenated.
    pub fn level_seq(&self, level: u32) -> &PackedSequence {
        &self.level_seqs[level as usize]
    }

    pub fn offsets_at(&self, level: u32) -> &Offsets {
        &self.offsets[level as usize]
    }

    /// Retained value arrays (level-concatenated), when built with them.
    pub fn values_at(&self, level: u32) -> Option<&PackedSequence> {
        self.values.as_ref().map(|v| &v[level as usize])
    }

    pub fn indexes_at(&self, level: u32) -> Option<&PackedSequence> {
        self.indexes.as_ref().map(|v| &v[level as usize])
    }

    /// Drop the construction-time arrays.
    pub fn discard_arrays(&mut self) {
        self.values = None;
        self.indexes = None;
    }

    pub fn from_parts(
        len: usize,
        sigma: u64,
        fanout: u64,
        level_seqs: Vec<PackedSequence>,
        offsets: Vec<Offsets>,
    ) -> WaveletTree {
        let (sigma_padded, levels, lg_d) = tree_shape(sigma.max(1), fanout);
        WaveletTree {
            len,
            sigma: sigma.max(1),
            sigma_padded,
            fanout,
            lg_d,
            levels,
            level_seqs,
            offsets,
            values: None,
            indexes: None,
        }
    }

    pub fn parts(&self) -> (&[PackedSequence], &[Offsets]) {
        (&self.level_seqs, &self.offsets)
    }
}

fn repack(a: &PackedSequence, width: u32) -> PackedSequence {
    if a.width() == width {
        return a.clone();
    }
    let mut out = PackedSequence::with_capacity(width, a.len());
    for v in a.iter() {
        out.push(v);
    }
    counters::bump_word_ops(a.bit_len() / 64 + 1);
    out
}

/// Offsets of the `d^l` node slots at level `l`, from the level-ordered
/// packed values.
fn level_offsets(vals: &PackedSequence, l: u32, lg_d: u32, width: u32, len: usize) -> Offsets {
    let slots = 1u64 << (l * lg_d).min(62);
    if l == 0 {
        return Offsets::Explicit(vec![0, len as u64]);
    }
    // A permutation's leaf level is the identity.
    if (l * lg_d) >= width && slots >= len as u64 {
        let mut identity = true;
        for (i, v) in vals.iter().enumerate() {
            if v != i as u64 {
                identity = false;
                break;
            }
        }
        if identity {
            return Offsets::Identity { n: len as u64, slots };
        }
    }
    let shift = width - l * lg_d;
    let mut offs = vec![0u64; slots as usize + 1];
    for v in vals.iter() {
        offs[(v >> shift) as usize + 1] += 1;
    }
    for s in 0..slots as usize {
        offs[s + 1] += offs[s];
    }
    counters::bump_word_ops(len as u64 + slots);
    Offsets::Explicit(offs)
}

// --- serialization ---

impl crate::codec::Codec for Offsets {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            Offsets::Explicit(v) => {
                0u8.encode(w);
                v.encode(w);
            }
            Offsets::Identity { n, slots } => {
                1u8.encode(w);
                n.encode(w);
                slots.encode(w);
            }
        }
    }
    fn decode(
        r: &mut crate::codec::Reader<'_>,
        ctx: &std::sync::Arc<Ctx>,
    ) -> Result<Self> {
        use crate::codec::Codec;
        Ok(match u8::decode(r, ctx)? {
            0 => Offsets::Explicit(Codec::decode(r, ctx)?),
            1 => Offsets::Identity { n: Codec::decode(r, ctx)?, slots: Codec::decode(r, ctx)? },
            t => return Err(Error::Format(format!("bad offsets tag {t}"))),
        })
    }
}

crate::codec::impl_codec!(WaveletTree {
    len,
    sigma,
    sigma_padded,
    fanout,
    lg_d,
    levels,
    level_seqs,
    offsets,
    values,
    indexes,
});

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use std::sync::Arc;

    fn ctx() -> Arc<Ctx> {
        thread_local! {
            static SHARED: Arc<Ctx> = Ctx::new(Config::default());
        }
        SHARED.with(Arc::clone)
    }

    fn node_digits(t: &WaveletTree, node: NodeId) -> Vec<u64> {
        let (s, e) = t.node_range(node);
        (s..e).map(|i| t.level_seq(node.level).get(i as usize)).collect()
    }

    #[test]
    fn binary_example() {
        let a = PackedSequence::pack(&[1, 0, 3, 2], 2).unwrap();
        let t = WaveletTree::build_packed(&a, 4, 2, WaveletOptions::default(), &ctx()).unwrap();
        assert_eq!(node_digits(&t, t.root()), vec![0, 0, 1, 1]);
        assert_eq!(node_digits(&t, t.child(t.root(), 0)), vec![1, 0]);
        assert_eq!(node_digits(&t, t.child(t.root(), 1)), vec![1, 0]);
    }

    #[test]
    fn singleton() {
        let a = PackedSequence::pack(&[0], 1).unwrap();
        let t = WaveletTree::build_packed(&a, 2, 2, WaveletOptions::default(), &ctx()).unwrap();
        assert_eq!(node_digits(&t, t.root()), vec![0]);
        assert_eq!(t.node_len(t.leaf(0).unwrap()), 1);
        assert_eq!(t.node_len(t.leaf(1).unwrap()), 0);
    }

    #[test]
    fn empty_children_are_placeholders() {
        let a = PackedSequence::pack(&[3, 3], 2).unwrap();
        let t = WaveletTree::build_packed(&a, 4, 4, WaveletOptions::default(), &ctx()).unwrap();
        assert_eq!(node_digits(&t, t.root()), vec![3, 3]);
        for c in 0..3 {
            assert_eq!(t.node_len(t.leaf(c).unwrap()), 0);
        }
        assert_eq!(t.node_len(t.leaf(3).unwrap()), 2);
    }

    #[test]
    fn fanout_equals_sigma() {
        let t = WaveletTree::build_plain(&[2, 0, 1, 3], 4, 4, WaveletOptions::default()).unwrap();
        assert_eq!(t.internal_levels(), 1);
        assert_eq!(node_digits(&t, t.root()), vec![2, 0, 1, 3]);
    }

    #[test]
    fn invalid_fanout() {
        let a = PackedSequence::pack(&[0], 2).unwrap();
        assert!(matches!(
            WaveletTree::build_packed(&a, 4, 3, WaveletOptions::default(), &ctx()),
            Err(Error::InvalidFanout(3))
        ));
        assert!(matches!(
            WaveletTree::build_plain(&[0], 4, 1, WaveletOptions::default()),
            Err(Error::InvalidFanout(1))
        ));
    }

    #[test]
    fn empty_input() {
        let a = PackedSequence::pack(&[], 2).unwrap();
        let t = WaveletTree::build_packed(&a, 4, 2, WaveletOptions::default(), &ctx()).unwrap();
        assert_eq!(t.len(), 0);
        assert_eq!(t.node_len(t.root()), 0);
    }

    #[test]
    fn lca_examples() {
        let a = PackedSequence::pack(&[1, 0, 3, 2], 2).unwrap();
        let t = WaveletTree::build_packed(&a, 4, 2, WaveletOptions::default(), &ctx()).unwrap();
        assert_eq!(t.lca_leaves(1, 2).unwrap(), t.root());
        assert_eq!(t.lca_leaves(2, 2).unwrap(), t.leaf(2).unwrap());
        assert_eq!(t.lca_leaves(2, 3).unwrap(), t.child(t.root(), 1));
        assert!(matches!(t.lca_leaves(4, 0), Err(Error::LeafOutOfBounds(4))));
    }

    /// Decode the original sequence from the level digit sequences.
    fn reconstruct(t: &WaveletTree) -> Vec<u64> {
        let mut out = vec![0u64; t.len()];
        // Walk each element down from the root by brute-force rank within
        // its node.
        for start in 0..t.len() {
            let mut node = t.root();
            let mut pos = start as u64;
            let mut symbol = 0u64;
            for _ in 0..t.internal_levels() {
                let (s, _) = t.node_range(node);
                let digit = t.level_seq(node.level).get((s + pos) as u64 as usize);
                let mut rank = 0u64;
                for i in s..s + pos {
                    if t.level_seq(node.level).get(i as usize) == digit {
                        rank += 1;
                    }
                }
                symbol = (symbol << t.lg_d()) | digit;
                node = t.child(node, digit);
                pos = rank;
            }
            out[start] = symbol;
        }
        out
    }

    #[test]
    fn packed_equals_plain_and_decodes() {
        let ctx = ctx();
        let mut x = 12345u64;
        for sigma in [2u64, 3, 4, 5, 8] {
            for d in [2u64, 4, 8] {
                if d > sigma.next_power_of_two().max(2) {
                    continue;
                }
                for len in 0..=8usize {
                    let mut vals = Vec::with_capacity(len);
                    for _ in 0..len {
                        x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
                        vals.push((x >> 33) % sigma);
                    }
                    let width = (64 - (sigma - 1).max(1).leading_zeros()).max(1);
                    let a = PackedSequence::pack(&vals, width).unwrap();
                    let opts = WaveletOptions { with_values: true, with_indexes: true };
                    let p = WaveletTree::build_packed(&a, sigma, d, opts, &ctx).unwrap();
                    let q = WaveletTree::build_plain(&vals, sigma, d, opts).unwrap();
                    assert_eq!(p.level_seqs, q.level_seqs, "sigma={sigma} d={d} vals={vals:?}");
                    assert_eq!(p.offsets, q.offsets);
                    assert_eq!(p.values, q.values);
                    assert_eq!(p.indexes, q.indexes);
                    assert_eq!(reconstruct(&p), vals);
                    // Padded leaves hold nothing.
                    for s in sigma..p.sigma_padded() {
                        assert_eq!(p.node_len(p.leaf(s).unwrap()), 0);
                    }
                }
            }
        }
    }
}
