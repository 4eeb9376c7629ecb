//! Partial rank: `rank'(A, j)` = occurrences of `A[j]` in `A[0..=j]`.
//!
//! The chunked structure divides `A` into chunks of `sigma` elements. Per
//! symbol `c`, the bitvector `B_c` encodes the per-chunk occurrence counts of
//! `c` in unary; per in-chunk offset `tau`, the sequence `P_tau` stores the
//! local partial rank at offset `tau` of every chunk. A query then is
//!
//! `rank'(A, j) = select_0(B_c, t) - (t - 1) + P_tau[t]`
//!
//! with `tau = j mod sigma`, `t = j / sigma`, `c = A[j]`, reading `A` exactly
//! once. Construction builds the `B_c` by routing an interleaved
//! element/boundary sequence `M` down a bit-classification tree, and the
//! `P_tau` in two phases: per-chunk local answers from a leaf-pruned wavelet
//! tree, then a global regrouping by in-chunk offset.

use crate::bitvec::RankSelectBitVector;
use crate::config::Ctx;
use crate::counters;
use crate::error::{Error, Result};
use crate::packed::PackedSequence;
use crate::seq_index::SmallAlphabetRankIndex;
use crate::tables::{Table, TableKey};

/// The chunked partial-rank structure (`B_c` / `P_tau` decomposition).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChunkedPartialRank {
    sigma: u64,
    len: usize,
    b: Vec<RankSelectBitVector>,
    p: Vec<PackedSequence>,
}

impl ChunkedPartialRank {
    pub fn build(a: &PackedSequence, sigma: u64, ctx: &Ctx) -> Self {
        let sigma = sigma.max(1);
        let n = a.len();
        let lg_sigma = (64 - (sigma - 1).max(1).leading_zeros()).max(1);
        let chunk = sigma as usize;
        let n_chunks = n.div_ceil(chunk);

        // The interleaved sequence M: per chunk, the chunk's elements with a
        // 1 flag appended, then an all-zero boundary element.
        let m_width = lg_sigma + 1;
        let mut m = PackedSequence::with_capacity(m_width, n + n_chunks);
        for (i, v) in a.iter().enumerate() {
            m.push((v << 1) | 1);
            if (i + 1) % chunk == 0 {
                m.push(0);
            }
        }
        if n % chunk != 0 {
            m.push(0);
        }
        counters::bump_word_ops(m.bit_len() / 64 + 1);

        // Classification tree: split on value bits (most significant first),
        // boundaries replicated to both children. Leaves in left-to-right
        // order are M_0 .. M_{2^ceil(lg sigma) - 1}.
        let mut nodes = vec![m];
        for bit in 0..lg_sigma {
            let mut next = Vec::with_capacity(nodes.len() * 2);
            for seq in &nodes {
                let (zero, one) = split_boundary(seq, bit, lg_sigma, ctx);
                next.push(zero);
                next.push(one);
            }
            nodes = next;
        }

        let mut b = Vec::with_capacity(sigma as usize);
        for c in 0..sigma {
            let leaf = &nodes[c as usize];
            let mut bits = PackedSequence::with_capacity(1, leaf.len());
            for v in leaf.iter() {
                bits.push(v & 1);
            }
            counters::bump_word_ops(leaf.bit_len() / 64 + 1);
            b.push(RankSelectBitVector::build(&bits));
        }

        let p = build_p_sequences(a, sigma, ctx);
        ChunkedPartialRank { sigma, len: n, b, p }
    }

    pub fn from_parts(
        sigma: u64,
        len: usize,
        b: Vec<RankSelectBitVector>,
        p: Vec<PackedSequence>,
    ) -> Self {
        ChunkedPartialRank { sigma, len, b, p }
    }

    pub fn parts(&self) -> (u64, usize, &[RankSelectBitVector], &[PackedSequence]) {
        (self.sigma, self.len, &self.b, &self.p)
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

    /// `rank'` with exactly one call to `accessor`.
    pub fn partial_rank(&self, accessor: &mut dyn FnMut(usize) -> u64, j: usize) -> Result<usize> {
        if j >= self.len {
            return Err(Error::IndexOutOfBounds(j, self.len));
        }
        let tau = j % self.sigma as usize;
        let t = j / self.sigma as usize;
        counters::bump_element_probe();
        let c = accessor(j);
        debug_assert!(c < self.sigma);
        let sel = self.b[c as usize]
            .select_bit(false, t)
            .expect("B_c has one zero per chunk");
        let local = self.p[tau].get(t) as i64;
        Ok((sel - (t as i64 - 1) + local) as usize)
    }

    /// Bits of `B_c`, for inspection in tests.
    pub fn b_bits(&self, c: u64) -> Vec<u8> {
        let bv = &self.b[c as usize];
        (0..bv.len()).map(|i| bv.get(i) as u8).collect()
    }

    /// `P_tau[t]`, for inspection in tests.
    pub fn p_entry(&self, tau: usize, t: usize) -> u64 {
        self.p[tau].get(t)
    }
}

/// Split off the elements of `seq` whose value bit `bit` (msb-first among
/// `lg_sigma` value bits) is 0 / 1; boundary elements (flag bit clear) go to
/// both outputs. Uses a universal table over blocks when one fits.
fn split_boundary(
    seq: &PackedSequence,
    bit: u32,
    lg_sigma: u32,
    ctx: &Ctx,
) -> (PackedSequence, PackedSequence) {
    let w = lg_sigma + 1;
    // Element layout: value << 1 | flag; value bit `bit` msb-first sits at
    // element bit position lg_sigma - bit.
    let probe = 1u64 << (lg_sigma - bit);
    let mut zero = PackedSequence::new(w);
    let mut one = PackedSequence::new(w);

    let block = (ctx.config.lg_cap() / (2 * w)).max(1);
    if block >= 2 && block * w <= 18 {
        let key = TableKey::BoundarySplit { width: w, bit, block };
        let entries = 1u64 << (block * w);
        let size_bits = entries.saturating_mul(3 * 64);
        let table = ctx.registry.get_or_build(key, size_bits, || {
            let mut data = vec![0u64; entries as usize * 3];
            for pat in 0..entries {
                let mut z = 0u64;
                let mut o = 0u64;
                let (mut nz, mut no) = (0u64, 0u64);
                for e in 0..block {
                    let v = (pat >> (e * w)) & ((1 << w) - 1);
                    let boundary = v & 1 == 0;
                    if boundary || v & probe == 0 {
                        z |= v << (nz * w as u64);
                        nz += 1;
                    }
                    if boundary || v & probe != 0 {
                        o |= v << (no * w as u64);
                        no += 1;
                    }
                }
                let i = pat as usize * 3;
                data[i] = z;
                data[i + 1] = o;
                data[i + 2] = nz | (no << 32);
            }
            Table { data, entry_words: 3 }
        });
        if let Some(table) = table {
            let full = seq.len() / block as usize;
            for bkt in 0..full {
                let pat = seq.read_bits(bkt as u64 * (block * w) as u64, block * w);
                let entry = table.entry(pat as usize);
                let (nz, no) = (entry[2] & 0xffff_ffff, entry[2] >> 32);
                for e in 0..nz {
                    zero.push((entry[0] >> (e * w as u64)) & ((1 << w) - 1));
                }
                for e in 0..no {
                    one.push((entry[1] >> (e * w as u64)) & ((1 << w) - 1));
                }
            }
            for i in full * block as usize..seq.len() {
                let v = seq.get(i);
                let boundary = v & 1 == 0;
                if boundary || v & probe == 0 {
                    zero.push(v);
                }
                if boundary || v & probe != 0 {
                    one.push(v);
                }
            }
            counters::bump_word_ops(full as u64 + block as u64);
            return (zero, one);
        }
    }

    for v in seq.iter() {
        let boundary = v & 1 == 0;
        if boundary || v & probe == 0 {
            zero.push(v);
        }
        if boundary || v & probe != 0 {
            one.push(v);
        }
    }
    counters::bump_word_ops(seq.bit_len() / 64 + 1);
    (zero, one)
}

/// Local partial-rank answers for one chunk, via a wavelet tree over the
/// chunk that is pruned to a leaf once a node holds at most `b` elements;
/// by then either the node fits a table block or all its elements are equal.
fn chunk_local_ranks(chunk: &[u64], lg_sigma: u32, ctx: &Ctx) -> Vec<u64> {
    let b = (ctx.config.lg_cap() / (2 * lg_sigma)).max(1) as usize;
    let mut answers = vec![0u64; chunk.len()];
    // Stack of (values, original offsets, level).
    let mut stack: Vec<(Vec<u64>, Vec<u32>, u32)> =
        vec![(chunk.to_vec(), (0..chunk.len() as u32).collect(), 0)];
    while let Some((vals, idxs, level)) = stack.pop() {
        if vals.is_empty() {
            continue;
        }
        if level == lg_sigma || vals.len() <= b {
            if level == lg_sigma {
                // All equal: answer is the running occurrence number.
                for (k, &i) in idxs.iter().enumerate() {
                    answers[i as usize] = k as u64 + 1;
                }
            } else {
                let local = leaf_partial_ranks(&vals, lg_sigma, ctx);
                for (k, &i) in idxs.iter().enumerate() {
                    answers[i as usize] = local[k];
                }
            }
            counters::bump_word_ops(vals.len() as u64 * lg_sigma as u64 / 64 + 1);
            continue;
        }
        let probe = 1u64 << (lg_sigma - 1 - level);
        let mut v0 = Vec::new();
        let mut i0 = Vec::new();
        let mut v1 = Vec::new();
        let mut i1 = Vec::new();
        for (v, i) in vals.into_iter().zip(idxs) {
            if v & probe == 0 {
                v0.push(v);
                i0.push(i);
            } else {
                v1.push(v);
                i1.push(i);
            }
        }
        counters::bump_word_ops((v0.len() + v1.len()) as u64 * lg_sigma as u64 / 64 + 1);
        stack.push((v0, i0, level + 1));
        stack.push((v1, i1, level + 1));
    }
    answers
}

/// Partial ranks of a short run, via the universal table when it fits.
fn leaf_partial_ranks(vals: &[u64], lg_sigma: u32, ctx: &Ctx) -> Vec<u64> {
    let b = (ctx.config.lg_cap() / (2 * lg_sigma)).max(1);
    let out_width = 64 - (b as u64).leading_zeros();
    if b >= 2 && b * lg_sigma <= 18 && b * out_width <= 64 && vals.len() <= b as usize {
        let key = TableKey::PartialRank { width: lg_sigma, block: b };
        let entries = 1u64 << (b * lg_sigma);
        let size_bits = entries.saturating_mul(64);
        let table = ctx.registry.get_or_build(key, size_bits, || {
            let mut data = vec![0u64; entries as usize];
            for (pat, slot) in data.iter_mut().enumerate() {
                let mut packed = 0u64;
                for i in 0..b as usize {
                    let vi = (pat as u64 >> (i as u32 * lg_sigma)) & ((1 << lg_sigma) - 1);
                    let mut r = 0u64;
                    for k in 0..=i {
                        let vk = (pat as u64 >> (k as u32 * lg_sigma)) & ((1 << lg_sigma) - 1);
                        if vk == vi {
                            r += 1;
                        }
                    }
                    packed |= r << (i as u32 * out_width);
                }
                *slot = packed;
            }
            Table { data, entry_words: 1 }
        });
        if let Some(table) = table {
            let mut pat = 0u64;
            for (i, &v) in vals.iter().enumerate() {
                pat |= v << (i as u32 * lg_sigma);
            }
            let packed = table.entry(pat as usize)[0];
            return (0..vals.len())
                .map(|i| (packed >> (i as u32 * out_width)) & ((1 << out_width) - 1))
                .collect();
        }
    }
    vals.iter()
        .enumerate()
        .map(|(i, &v)| vals[..=i].iter().filter(|&&x| x == v).count() as u64)
        .collect()
}

/// Two-phase construction of `P_0 .. P_{sigma-1}`.
fn build_p_sequences(a: &PackedSequence, sigma: u64, ctx: &Ctx) -> Vec<PackedSequence> {
    let n = a.len();
    let chunk = sigma as usize;
    let n_chunks = n.div_ceil(chunk);
    let lg_sigma = (64 - (sigma - 1).max(1).leading_zeros()).max(1);
    let p_width = 64 - sigma.leading_zeros();

    // Phase 1: per chunk, local answers paired with in-chunk offsets.
    let mut offs = PackedSequence::with_capacity(lg_sigma, n);
    let mut quals = PackedSequence::with_capacity(p_width, n);
    let mut buf = Vec::with_capacity(chunk);
    for k in 0..n_chunks {
        let start = k * chunk;
        let end = ((k + 1) * chunk).min(n);
        buf.clear();
        buf.extend((start..end).map(|i| a.get(i)));
        let local = chunk_local_ranks(&buf, lg_sigma, ctx);
        for (tau, &r) in local.iter().enumerate() {
            offs.push(tau as u64);
            quals.push(r);
        }
    }

    // Phase 2: route the pairs down a binary wavelet tree keyed on the
    // offset; leaf tau collects P_tau in chunk order.
    let mut seqs = vec![(offs, quals)];
    for bit in 0..lg_sigma {
        let probe_shift = lg_sigma - 1 - bit;
        let mut next = Vec::with_capacity(seqs.len() * 2);
        for (o, q) in &seqs {
            let mut o0 = PackedSequence::new(lg_sigma);
            let mut q0 = PackedSequence::new(p_width);
            let mut o1 = PackedSequence::new(lg_sigma);
            let mut q1 = PackedSequence::new(p_width);
            for (ov, qv) in o.iter().zip(q.iter()) {
                if ov >> probe_shift & 1 == 0 {
                    o0.push(ov);
                    q0.push(qv);
                } else {
                    o1.push(ov);
                    q1.push(qv);
                }
            }
            counters::bump_word_ops(o.bit_len() / 64 + q.bit_len() / 64 + 1);
            next.push((o0, q0));
            next.push((o1, q1));
        }
        seqs = next;
    }
    let mut p: Vec<PackedSequence> = seqs.into_iter().map(|(_, q)| q).collect();
    p.truncate(chunk);
    while p.len() < chunk {
        p.push(PackedSequence::new(p_width));
    }
    p
}

/// Partial rank behind a single build entry point, dispatching on the
/// alphabet regime. Small alphabets delegate to the small-alphabet rank
/// index, mid-size alphabets use the chunked structure, and anything larger
/// stores the answers outright.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartialRankIndex {
    Small(SmallAlphabetRankIndex),
    Chunked(ChunkedPartialRank),
    Explicit(PackedSequence),
}

pub fn build_partial_rank(a: &PackedSequence, sigma: u64, ctx: &Ctx) -> Result<PartialRankIndex> {
    let cfg = &ctx.config;
    if cfg.force_chunked_partial_rank && sigma <= cfg.chunked_sigma_max {
        return Ok(PartialRankIndex::Chunked(ChunkedPartialRank::build(a, sigma, ctx)));
    }
    if sigma <= cfg.polylog_sigma {
        let idx =
            SmallAlphabetRankIndex::build_packed(a, sigma, cfg.seq_fanout as u64, cfg.polylog_sigma)?;
        return Ok(PartialRankIndex::Small(idx));
    }
    if sigma <= cfg.chunked_sigma_max {
        return Ok(PartialRankIndex::Chunked(ChunkedPartialRank::build(a, sigma, ctx)));
    }
    // Alphabet beyond the packed regime: store every answer, computed by a
    // counting scan.
    let mut counts = std::collections::HashMap::new();
    let width = (64 - sigma.leading_zeros()).max(1);
    let mut answers = PackedSequence::with_capacity(width, a.len());
    for v in a.iter() {
        let e = counts.entry(v).or_insert(0u64);
        *e += 1;
        answers.push(*e);
    }
    counters::bump_word_ops(a.len() as u64 + 1);
    Ok(PartialRankIndex::Explicit(answers))
}

impl PartialRankIndex {
    /// `rank'(A, j)`; exactly one accessor call on the non-explicit arms.
    pub fn partial_rank(&self, accessor: &mut dyn FnMut(usize) -> u64, j: usize) -> Result<usize> {
        match self {
            PartialRankIndex::Small(idx) => {
                if j >= idx.len() {
                    return Err(Error::IndexOutOfBounds(j, idx.len()));
                }
                counters::bump_element_probe();
                let c = accessor(j);
                idx.rank_sym(c, j)
            }
            PartialRankIndex::Chunked(idx) => idx.partial_rank(accessor, j),
            PartialRankIndex::Explicit(answers) => {
                if j >= answers.len() {
                    return Err(Error::IndexOutOfBounds(j, answers.len()));
                }
                Ok(answers.get(j) as usize)
            }
        }
    }
}

// --- serialization ---

crate::codec::impl_codec!(ChunkedPartialRank { sigma, len, b, p });

impl crate::codec::Codec for PartialRankIndex {
    fn encode(&self, w: &mut crate::codec::Writer) {
        match self {
            PartialRankIndex::Small(v) => {
                0u8.encode(w);
                v.encode(w);
            }
            PartialRankIndex::Chunked(v) => {
                1u8.encode(w);
                v.encode(w);
            }
            PartialRankIndex::Explicit(v) => {
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
            0 => PartialRankIndex::Small(Codec::decode(r, ctx)?),
            1 => PartialRankIndex::Chunked(Codec::decode(r, ctx)?),
            2 => PartialRankIndex::Explicit(Codec::decode(r, ctx)?),
            t => return Err(Error::Format(format!("bad partial-rank tag {t}"))),
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
        Ctx::new(Config::default())
    }

    fn ctx_no_tables() -> Arc<Ctx> {
        let mut c = Config::default();
        c.table_cap_bits = 0;
        Ctx::new(c)
    }

    fn chunked_in(vals: &[u64], sigma: u64, ctx: &Ctx) -> ChunkedPartialRank {
        let a =
            PackedSequence::pack(vals, (64 - (sigma - 1).max(1).leading_zeros()).max(1)).unwrap();
        ChunkedPartialRank::build(&a, sigma, ctx)
    }

    fn chunked(vals: &[u64], sigma: u64) -> ChunkedPartialRank {
        thread_local! {
            static SHARED: Arc<Ctx> = Ctx::new(Config::default());
        }
        SHARED.with(|c| chunked_in(vals, sigma, c))
    }

    fn query(idx: &ChunkedPartialRank, vals: &[u64], j: usize) -> usize {
        let mut probes = 0;
        let r = idx
            .partial_rank(
                &mut |i| {
                    probes += 1;
                    vals[i]
                },
                j,
            )
            .unwrap();
        assert_eq!(probes, 1, "exactly one access to A");
        r
    }

    #[test]
    fn worked_example_structure() {
        let vals = [2u64, 1, 2, 2, 1, 2, 1, 1];
        let idx = chunked(&vals, 4);
        assert_eq!(idx.b_bits(2), vec![1, 1, 1, 0, 1, 0]);
        assert_eq!(idx.p_entry(1, 1), 1);
        assert_eq!(query(&idx, &vals, 5), 4);
    }

    #[test]
    fn empty_input() {
        let idx = chunked(&[], 4);
        for c in 0..4 {
            assert!(idx.b_bits(c).is_empty());
        }
        let err = idx.partial_rank(&mut |_| 0, 0);
        assert_eq!(err, Err(Error::IndexOutOfBounds(0, 0)));
    }

    #[test]
    fn constant_sequence() {
        let vals = [0u64, 0, 0, 0];
        let idx = chunked(&vals, 4);
        assert_eq!(idx.b_bits(0), vec![1, 1, 1, 1, 0]);
        assert_eq!(idx.b_bits(1), vec![0]);
        assert_eq!(idx.b_bits(2), vec![0]);
        assert_eq!(idx.b_bits(3), vec![0]);
        let ones = [1u64, 1, 1, 1];
        let idx1 = chunked(&ones, 4);
        assert_eq!(query(&idx1, &ones, 3), 4);
    }

    #[test]
    fn first_occurrence_is_one() {
        let vals = [3u64, 1, 4, 1, 5, 2, 6, 5, 3];
        let idx = chunked(&vals, 8);
        let mut seen = std::collections::HashSet::new();
        for (j, v) in vals.iter().enumerate() {
            if seen.insert(*v) {
                assert_eq!(query(&idx, &vals, j), 1);
            }
        }
        assert_eq!(query(&idx, &vals, 0), 1);
    }

    #[test]
    fn exhaustive_small() {
        for sigma in 1..=4u64 {
            for len in 0..=6usize {
                let total = sigma.pow(len as u32);
                for code in 0..total {
                    let mut vals = Vec::with_capacity(len);
                    let mut c = code;
                    for _ in 0..len {
                        vals.push(c % sigma);
                        c /= sigma;
                    }
                    let idx = chunked(&vals, sigma);
                    for j in 0..len {
                        assert_eq!(
                            query(&idx, &vals, j),
                            oracle::brute_partial_rank(&vals, j),
                            "vals={vals:?} sigma={sigma} j={j}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dispatch_small_vs_chunked_agree() {
        let vals: Vec<u64> = (0..200).map(|i| (i * 37 + 11) % 16).collect();
        let a = PackedSequence::pack(&vals, 4).unwrap();
        let small = build_partial_rank(&a, 16, &ctx()).unwrap();
        assert!(matches!(small, PartialRankIndex::Small(_)));
        let mut forced_cfg = Config::default();
        forced_cfg.force_chunked_partial_rank = true;
        let forced = build_partial_rank(&a, 16, &Ctx::new(forced_cfg)).unwrap();
        assert!(matches!(forced, PartialRankIndex::Chunked(_)));
        for j in 0..vals.len() {
            let r1 = small.partial_rank(&mut |i| vals[i], j).unwrap();
            let r2 = forced.partial_rank(&mut |i| vals[i], j).unwrap();
            assert_eq!(r1, r2);
            assert_eq!(r1, oracle::brute_partial_rank(&vals, j));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_oracle_random(
            sigma_pow in 1u32..=8,
            vals in proptest::collection::vec(any::<u64>(), 1..1500),
        ) {
            let sigma = 1u64 << sigma_pow;
            let vals: Vec<u64> = vals.iter().map(|v| v % sigma).collect();
            let idx = chunked(&vals, sigma);
            let idx_nt = {
                let a = PackedSequence::pack(&vals, sigma_pow).unwrap();
                ChunkedPartialRank::build(&a, sigma, &ctx_no_tables())
            };
            let step = (vals.len() / 48).max(1);
            for j in (0..vals.len()).step_by(step) {
                let want = oracle::brute_partial_rank(&vals, j);
                prop_assert_eq!(query(&idx, &vals, j), want);
                prop_assert_eq!(query(&idx_nt, &vals, j), want);
            }
        }
    }

    #[test]
    fn construction_scaling_proxy() {
        // word_ops normalized by n * lg^2(sigma) / lg(n_cap) + sigma should
        // stay within 3x across sizes at fixed sigma.
        let sigma = 64u64;
        let ctx = ctx();
        let lg_cap = ctx.config.lg_cap() as f64;
        let mut ratios = Vec::new();
        for shift in [12u32, 16, 20] {
            let n = 1usize << shift;
            let vals: Vec<u64> = (0..n).map(|i| (i as u64 * 2654435761) % sigma).collect();
            let a = PackedSequence::pack(&vals, 6).unwrap();
            let before = crate::counters::snapshot();
            let _idx = ChunkedPartialRank::build(&a, sigma, &ctx);
            let d = crate::counters::delta(&before);
            let denom = n as f64 * 36.0 / lg_cap + sigma as f64;
            ratios.push(d.word_ops as f64 / denom);
        }
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            max / min < 3.0,
            "scaling ratio {:.2} (normalized costs {:?})",
            max / min,
            ratios
        );
    }
}
