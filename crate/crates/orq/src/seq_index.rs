//! Rank, count, and select over sequences from larger-than-binary alphabets.
//!
//! `CountIndex` answers count/rank over a tiny alphabet with word-parallel
//! lane comparisons; `SmallAlphabetRankIndex` stacks `CountIndex` levels into
//! a short d-ary tree to cover any polylog-bounded alphabet. `SelectIndex`
//! holds per-symbol occurrence directories. All three are immutable after
//! build.

use crate::counters;
use crate::error::{Error, Result};
use crate::packed::PackedSequence;

/// Elements re-packed into lanes whose width divides 64 so a word holds a
/// whole number of lanes; counting `<= c` touches words, not elements.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountIndex {
    d: u64,
    lane: u32,
    words: Vec<u64>,
    len: usize,
    /// Cumulative `count_le(c, block_start)` per block, laid out
    /// `[block * d + c]`.
    samples: Vec<u32>,
    step: usize,
}

fn lane_width_for(d: u64) -> u32 {
    let need = 64 - (d - 1).max(1).leading_zeros();
    [1u32, 2, 4, 8, 16, 32, 64]
        .into_iter()
        .find(|&w| w >= need)
        .unwrap()
}

impl CountIndex {
    pub fn build(values: impl Iterator<Item = u64> + Clone, d: u64) -> Self {
        debug_assert!(d >= 1);
        let lane = lane_width_for(d);
        let lanes_per_word = (64 / lane) as usize;
        let step = lanes_per_word * 32;
        let mut words = Vec::new();
        let mut samples = Vec::new();
        let mut running = vec![0u32; d as usize];
        let mut len = 0usize;
        let mut cur = 0u64;
        for v in values {
            debug_assert!(v < d);
            if len % step == 0 {
                samples.extend_from_slice(&running);
            }
            let slot = len % lanes_per_word;
            cur |= v << (slot as u32 * lane);
            if slot == lanes_per_word - 1 {
                words.push(cur);
                cur = 0;
            }
            for c in v as usize..d as usize {
                running[c] += 1;
            }
            len += 1;
        }
        if len % lanes_per_word != 0 {
            words.push(cur);
        }
        if len % step == 0 {
            // Queries ending exactly on a block boundary read this sample.
            samples.extend_from_slice(&running);
        }
        counters::bump_word_ops(words.len() as u64 + samples.len() as u64 / 8 + 1);
        CountIndex { d, lane, words, len, samples, step }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        debug_assert!(i < self.len);
        let lanes_per_word = (64 / self.lane) as usize;
        let w = self.words[i / lanes_per_word];
        (w >> ((i % lanes_per_word) as u32 * self.lane)) & lane_mask(self.lane)
    }

    /// Number of elements `<= c` in the prefix `[0, e)`.
    pub fn count_le_excl(&self, c: u64, e: usize) -> usize {
        debug_assert!(e <= self.len);
        debug_assert!(c < self.d);
        if e == 0 {
            return 0;
        }
        let block = e / self.step;
        let mut cnt = self.samples[block * self.d as usize + c as usize] as usize;
        let lanes_per_word = (64 / self.lane) as usize;
        let start = block * self.step;
        let full_words_end = e / lanes_per_word;
        let mut wi = start / lanes_per_word;
        counters::bump_word_ops((full_words_end.saturating_sub(wi)) as u64 + 2);
        if self.lane <= 16 {
            let wide = 2 * self.lane;
            let ones = repeat_pattern(1, wide);
            let guard = 1u64 << self.lane;
            let minuend = ones.wrapping_mul(c + guard);
            let test = ones << self.lane;
            let lo_mask = repeat_pattern(lane_mask(self.lane), wide);
            while wi < full_words_end {
                let w = self.words[wi];
                let even = w & lo_mask;
                let odd = (w >> self.lane) & lo_mask;
                cnt += ((minuend - even) & test).count_ones() as usize;
                cnt += ((minuend - odd) & test).count_ones() as usize;
                wi += 1;
            }
        } else {
            while wi < full_words_end {
                let w = self.words[wi];
                for slot in 0..lanes_per_word {
                    if (w >> (slot as u32 * self.lane)) & lane_mask(self.lane) <= c {
                        cnt += 1;
                    }
                }
                wi += 1;
            }
        }
        for i in full_words_end * lanes_per_word..e {
            if self.get(i) <= c {
                cnt += 1;
            }
        }
        cnt
    }

    /// Occurrences of exactly `c` in `[0, e)`.
    pub fn rank_excl(&self, c: u64, e: usize) -> usize {
        let le = self.count_le_excl(c, e);
        if c == 0 {
            le
        } else {
            le - self.count_le_excl(c - 1, e)
        }
    }

    pub fn lane_bits(&self) -> u64 {
        self.words.len() as u64 * 64
    }

    pub fn sample_bits(&self) -> u64 {
        self.samples.len() as u64 * 32
    }
}

#[inline]
fn lane_mask(lane: u32) -> u64 {
    if lane >= 64 {
        u64::MAX
    } else {
        (1u64 << lane) - 1
    }
}

#[inline]
fn repeat_pattern(chunk: u64, period: u32) -> u64 {
    let mut out = 0u64;
    let mut shift = 0;
    while shift < 64 {
        out |= chunk << shift;
        shift += period;
    }
    out
}

/// Constant-height d-ary decomposition answering rank over alphabets up to
/// the configured polylog bound. Levels hold the input's digits in
/// prefix-sorted order, so a node's elements stay contiguous at every level.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SmallAlphabetRankIndex {
    sigma: u64,
    d: u64,
    levels: u32,
    len: usize,
    counts: Vec<CountIndex>,
}

impl SmallAlphabetRankIndex {
    pub fn build(values: &[u64], sigma: u64, d: u64, polylog_sigma: u64) -> Result<Self> {
        if sigma > polylog_sigma {
            return Err(Error::AlphabetTooLarge(sigma));
        }
        let sigma = sigma.max(1);
        let d = d.max(2).next_power_of_two();
        let mut levels = 1u32;
        let mut padded = d;
        while padded < sigma {
            padded *= d;
            levels += 1;
        }
        let lg_d = 63 - d.leading_zeros();
        let mut order: Vec<u64> = values.to_vec();
        let mut counts = Vec::with_capacity(levels as usize);
        for l in 0..levels {
            let shift = (levels - 1 - l) * lg_d;
            counts.push(CountIndex::build(
                order.iter().map(move |&v| (v >> shift) & ((1 << lg_d) - 1)),
                d,
            ));
            if l + 1 < levels {
                // Stable counting sort by the top l+1 digits keeps every
                // node's elements contiguous at the next level.
                let buckets = (padded >> shift) as usize;
                let mut cnt = vec![0usize; buckets + 1];
                for &v in &order {
                    cnt[(v >> shift) as usize + 1] += 1;
                }
                for b in 0..buckets {
                    cnt[b + 1] += cnt[b];
                }
                let mut next = vec![0u64; order.len()];
                for &v in &order {
                    let b = (v >> shift) as usize;
                    next[cnt[b]] = v;
                    cnt[b] += 1;
                }
                order = next;
            }
            counters::bump_word_ops(values.len() as u64 * lg_d as u64 / 64 + d);
        }
        Ok(SmallAlphabetRankIndex { sigma, d, levels, len: values.len(), counts })
    }

    pub fn build_packed(
        seq: &PackedSequence,
        sigma: u64,
        d: u64,
        polylog_sigma: u64,
    ) -> Result<Self> {
        Self::build(&seq.to_vec(), sigma, d, polylog_sigma)
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

    /// Occurrences of `c` in `[0, e)`.
    pub fn rank_excl(&self, c: u64, e: usize) -> usize {
        debug_assert!(e <= self.len);
        debug_assert!(c < self.sigma);
        let lg_d = 63 - self.d.leading_zeros();
        let mut off = 0usize;
        let mut sz = self.len;
        let mut p = e;
        for l in 0..self.levels {
            let idx = &self.counts[l as usize];
            let shift = (self.levels - 1 - l) * lg_d;
            let t = (c >> shift) & ((1 << lg_d) - 1);
            let lt_prefix = if t == 0 {
                0
            } else {
                idx.count_le_excl(t - 1, off + p) - idx.count_le_excl(t - 1, off)
            };
            let le_prefix = idx.count_le_excl(t, off + p) - idx.count_le_excl(t, off);
            let lt_full = if t == 0 {
                0
            } else {
                idx.count_le_excl(t - 1, off + sz) - idx.count_le_excl(t - 1, off)
            };
            let le_full = idx.count_le_excl(t, off + sz) - idx.count_le_excl(t, off);
            p = le_prefix - lt_prefix;
            off += lt_full;
            sz = le_full - lt_full;
            if sz == 0 {
                return 0;
            }
        }
        p
    }

    /// Inclusive rank with checked bounds.
    pub fn rank_sym(&self, c: u64, i: usize) -> Result<usize> {
        if i >= self.len {
            return Err(Error::IndexOutOfBounds(i, self.len));
        }
        if c >= self.sigma {
            return Err(Error::AlphabetTooLarge(c));
        }
        Ok(self.rank_excl(c, i + 1))
    }

    /// Storage split: (sequence copies, directory bits). The copies total
    /// one input-sized rewrite of the sequence; the directory must stay a
    /// small fraction of it.
    pub fn space_bits(&self) -> (u64, u64) {
        let mut data = 0;
        let mut aux = 0;
        for c in &self.counts {
            data += c.lane_bits();
            aux += c.sample_bits();
        }
        (data, aux)
    }

    /// Count of elements `<= c` in `[0, e)`.
    pub fn count_le_excl(&self, c: u64, e: usize) -> usize {
        debug_assert!(c < self.sigma);
        let lg_d = 63 - self.d.leading_zeros();
        let mut off = 0usize;
        let mut sz = self.len;
        let mut p = e;
        let mut below = 0usize;
        for l in 0..self.levels {
            let idx = &self.counts[l as usize];
            let shift = (self.levels - 1 - l) * lg_d;
            let t = (c >> shift) & ((1 << lg_d) - 1);
            let lt_prefix = if t == 0 {
                0
            } else {
                idx.count_le_excl(t - 1, off + p) - idx.count_le_excl(t - 1, off)
            };
            let le_prefix = idx.count_le_excl(t, off + p) - idx.count_le_excl(t, off);
            let lt_full = if t == 0 {
                0
            } else {
                idx.count_le_excl(t - 1, off + sz) - idx.count_le_excl(t - 1, off)
            };
            let le_full = idx.count_le_excl(t, off + sz) - idx.count_le_excl(t, off);
            below += lt_prefix;
            p = le_prefix - lt_prefix;
            off += lt_full;
            sz = le_full - lt_full;
            if sz == 0 {
                break;
            }
        }
        below + p
    }
}

/// Per-symbol occurrence directories: `select_sym(c, k)` is an array read.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SelectIndex {
    sigma: u64,
    positions: PackedSequence,
    starts: Vec<u64>,
}

impl SelectIndex {
    pub fn build(values: impl Iterator<Item = u64> + Clone, sigma: u64, len: usize) -> Self {
        let sigma = sigma.max(1);
        let mut starts = vec![0u64; sigma as usize + 1];
        for v in values.clone() {
            starts[v as usize + 1] += 1;
        }
        for c in 0..sigma as usize {
            starts[c + 1] += starts[c];
        }
        let width = (64 - (len.max(2) as u64 - 1).leading_zeros()).max(1);
        let mut positions = PackedSequence::with_capacity(width, len);
        for _ in 0..len {
            positions.push(0);
        }
        let mut cursor = starts.clone();
        for (i, v) in values.enumerate() {
            positions.set(cursor[v as usize] as usize, i as u64);
            cursor[v as usize] += 1;
        }
        counters::bump_word_ops(len as u64 + sigma);
        SelectIndex { sigma, positions, starts }
    }

    pub fn sigma(&self) -> u64 {
        self.sigma
    }

    /// 0-based position of the k-th (1-based) occurrence of `c`.
    pub fn select_sym(&self, c: u64, k: usize) -> Option<usize> {
        if c >= self.sigma || k == 0 {
            return None;
        }
        let start = self.starts[c as usize] as usize;
        let end = self.starts[c as usize + 1] as usize;
        if start + k > end {
            return None;
        }
        counters::bump_word_ops(1);
        Some(self.positions.get(start + k - 1) as usize)
    }

    pub fn occurrences(&self, c: u64) -> usize {
        if c >= self.sigma {
            return 0;
        }
        (self.starts[c as usize + 1] - self.starts[c as usize]) as usize
    }
}

// --- serialization ---

crate::codec::impl_codec!(CountIndex { d, lane, words, len, samples, step });
crate::codec::impl_codec!(SmallAlphabetRankIndex { sigma, d, levels, len, counts });
crate::codec::impl_codec!(SelectIndex { sigma, positions, starts });

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn sar(values: &[u64], sigma: u64) -> SmallAlphabetRankIndex {
        SmallAlphabetRankIndex::build(values, sigma, 4, 1 << 20).unwrap()
    }

    #[test]
    fn rank_examples() {
        let a = [1, 0, 2, 1, 1, 0];
        let idx = sar(&a, 3);
        assert_eq!(idx.rank_sym(1, 4).unwrap(), 3);
        let zeros = sar(&[0, 0, 0], 3);
        assert_eq!(zeros.rank_sym(2, 2).unwrap(), 0);
        let single = sar(&[2], 3);
        assert_eq!(single.rank_sym(2, 0).unwrap(), 1);
        let b = sar(&[1, 2, 1, 2], 3);
        assert_eq!(b.rank_sym(2, 3).unwrap(), 2);
        let c = sar(&[0, 1, 0], 2);
        assert_eq!(c.rank_sym(0, 1).unwrap(), 1);
    }

    #[test]
    fn full_prefix_identity() {
        let a = [3u64, 0, 3, 1, 2, 3, 3];
        let idx = sar(&a, 4);
        for c in 0..4u64 {
            let total = a.iter().filter(|&&v| v == c).count();
            assert_eq!(idx.rank_sym(c, a.len() - 1).unwrap(), total);
        }
    }

    #[test]
    fn select_examples() {
        let a = [1u64, 0, 2, 1];
        let idx = SelectIndex::build(a.iter().copied(), 4, a.len());
        assert_eq!(idx.select_sym(1, 2), Some(3));
        assert_eq!(idx.select_sym(2, 1), Some(2));
        assert_eq!(idx.select_sym(3, 1), None);
    }

    #[test]
    fn sigma_above_threshold_rejected() {
        let err = SmallAlphabetRankIndex::build(&[0], 1 << 30, 4, 1 << 20);
        assert!(matches!(err, Err(Error::AlphabetTooLarge(_))));
    }

    #[test]
    fn space_overhead_small() {
        // Directory bits stay below 10% of the input-sized data copy at
        // length >= 2^16.
        let n = 1 << 16;
        for sigma in [4u64, 64, 256, 4096] {
            let vals: Vec<u64> = (0..n).map(|i| (i as u64 * 2654435761) % sigma).collect();
            let idx = sar(&vals, sigma);
            let (data, aux) = idx.space_bits();
            let input_bits = n as u64 * (64 - (sigma - 1).leading_zeros()).max(1) as u64;
            assert!(
                aux * 10 < input_bits,
                "sigma={sigma}: aux {aux} bits vs input {input_bits}"
            );
            // The lane copies stay within a constant of the input.
            assert!(data <= 2 * input_bits + 128, "sigma={sigma}: data {data} input {input_bits}");
        }
    }

    #[test]
    fn out_of_range_rank() {
        let idx = sar(&[0, 1], 2);
        assert_eq!(idx.rank_sym(0, 2), Err(Error::IndexOutOfBounds(2, 2)));
    }

    #[test]
    fn exhaustive_small() {
        for sigma in 1..=4u64 {
            for len in 1..=6usize {
                let total = sigma.pow(len as u32);
                for code in 0..total {
                    let mut cur = Vec::with_capacity(len);
                    let mut c = code;
                    for _ in 0..len {
                        cur.push(c % sigma);
                        c /= sigma;
                    }
                    let idx = sar(&cur, sigma);
                    let sel = SelectIndex::build(cur.iter().copied(), sigma, len);
                    for c in 0..sigma {
                        for i in 0..len {
                            assert_eq!(
                                idx.rank_sym(c, i).unwrap(),
                                oracle::brute_rank(&cur, c, i),
                                "a={cur:?} c={c} i={i}"
                            );
                        }
                        for k in 1..=len + 1 {
                            assert_eq!(sel.select_sym(c, k), oracle::brute_select(&cur, c, k));
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn rank_select_match_oracle(
            sigma in 1u64..4096,
            vals in proptest::collection::vec(any::<u64>(), 1..2000),
        ) {
            let vals: Vec<u64> = vals.iter().map(|v| v % sigma).collect();
            let idx = sar(&vals, sigma);
            let sel = SelectIndex::build(vals.iter().copied(), sigma, vals.len());
            let probe_syms: Vec<u64> = (0..4).map(|i| vals[i * vals.len() / 4]).collect();
            for &c in &probe_syms {
                for i in [0, vals.len() / 2, vals.len() - 1] {
                    prop_assert_eq!(idx.rank_sym(c, i).unwrap(), oracle::brute_rank(&vals, c, i));
                }
                let total = vals.iter().filter(|&&v| v == c).count();
                for k in [1, total, total + 1] {
                    prop_assert_eq!(sel.select_sym(c, k), oracle::brute_select(&vals, c, k));
                }
            }
        }

        #[test]
        fn count_le_matches_oracle(
            sigma in 2u64..64,
            vals in proptest::collection::vec(any::<u64>(), 1..500),
            c_raw in any::<u64>(),
        ) {
            let vals: Vec<u64> = vals.iter().map(|v| v % sigma).collect();
            let idx = sar(&vals, sigma);
            let c = c_raw % sigma;
            for e in [1usize, vals.len() / 2, vals.len()] {
                if e == 0 { continue; }
                prop_assert_eq!(idx.count_le_excl(c, e), oracle::brute_count_le(&vals, c, e - 1));
            }
        }

        #[test]
        fn select_rank_adjoint(
            sigma in 1u64..16,
            vals in proptest::collection::vec(any::<u64>(), 1..300),
            i_raw in any::<usize>(),
        ) {
            let vals: Vec<u64> = vals.iter().map(|v| v % sigma).collect();
            let idx = sar(&vals, sigma);
            let sel = SelectIndex::build(vals.iter().copied(), sigma, vals.len());
            let i = i_raw % vals.len();
            for c in 0..sigma {
                let r = idx.rank_sym(c, i).unwrap();
                if r > 0 {
                    let s = sel.select_sym(c, r).unwrap();
                    prop_assert!(s <= i);
                    prop_assert_eq!(s == i, vals[i] == c);
                } else {
                    prop_assert!(vals[i] != c);
                }
            }
        }
    }
}
