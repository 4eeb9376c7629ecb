//! Plain bit sequences with constant-time rank and select.
//!
//! Systematic: the bits are stored verbatim alongside the directory. The
//! directory is a classic two-level scheme (cumulative counts per superblock
//! of 8 words, 16-bit in-superblock offsets per word) plus sampled select
//! hints that narrow the superblock binary search to a constant window.
//! Construction scans words, not bits.

use crate::counters;
use crate::error::{Error, Result};
use crate::packed::PackedSequence;

const WORDS_PER_SUPER: usize = 8;
const SUPER_BITS: usize = WORDS_PER_SUPER * 64;
const SELECT_SAMPLE: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RankSelectBitVector {
    words: Vec<u64>,
    len: usize,
    ones: usize,
    /// Ones before each superblock.
    super_ranks: Vec<u64>,
    /// Ones before each word, relative to its superblock.
    word_ranks: Vec<u16>,
    /// Superblock index of every SELECT_SAMPLE-th one / zero.
    sel1_hints: Vec<u32>,
    sel0_hints: Vec<u32>,
}

impl RankSelectBitVector {
    /// Build from a width-1 packed sequence.
    pub fn build(bits: &PackedSequence) -> Self {
        assert_eq!(bits.width(), 1, "bit vector input must have width 1");
        Self::from_words(bits.words().to_vec(), bits.len())
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut seq = PackedSequence::with_capacity(1, bits.len());
        for &b in bits {
            seq.push(b as u64);
        }
        Self::build(&seq)
    }

    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        let n_words = len.div_ceil(64);
        words.truncate(n_words);
        words.resize(n_words, 0);
        if len % 64 != 0 {
            // Clear padding so word popcounts are exact.
            let last = words.len() - 1;
            words[last] &= (1u64 << (len % 64)) - 1;
        }
        let n_super = n_words.div_ceil(WORDS_PER_SUPER).max(1);
        let mut super_ranks = Vec::with_capacity(n_super);
        let mut word_ranks = Vec::with_capacity(n_words);
        let mut total = 0u64;
        let mut in_super = 0u16;
        for (wi, &w) in words.iter().enumerate() {
            if wi % WORDS_PER_SUPER == 0 {
                super_ranks.push(total);
                in_super = 0;
            }
            word_ranks.push(in_super);
            let pc = w.count_ones() as u64;
            total += pc;
            in_super += pc as u16;
        }
        if super_ranks.is_empty() {
            super_ranks.push(0);
        }
        counters::bump_word_ops(n_words as u64 + 1);

        let mut bv = RankSelectBitVector {
            words,
            len,
            ones: total as usize,
            super_ranks,
            word_ranks,
            sel1_hints: Vec::new(),
            sel0_hints: Vec::new(),
        };
        bv.sel1_hints = bv.build_hints(true);
        bv.sel0_hints = bv.build_hints(false);
        bv
    }

    /// `hints[m]` = superblock holding occurrence `m * SELECT_SAMPLE + 1`.
    fn build_hints(&self, one: bool) -> Vec<u32> {
        let count = if one { self.ones } else { self.len - self.ones };
        let mut hints = Vec::with_capacity(count / SELECT_SAMPLE + 1);
        let mut si = 0usize;
        let mut m = 0usize;
        while m * SELECT_SAMPLE + 1 <= count {
            let target = m * SELECT_SAMPLE + 1;
            while self.count_before_super(si + 1, one) < target {
                si += 1;
            }
            hints.push(si as u32);
            m += 1;
        }
        counters::bump_word_ops(self.super_ranks.len() as u64 + 1);
        hints
    }

    fn count_before_super(&self, si: usize, one: bool) -> usize {
        if si >= self.super_ranks.len() {
            return if one { self.ones } else { self.len - self.ones };
        }
        let ones = self.super_ranks[si] as usize;
        if one {
            ones
        } else {
            (si * SUPER_BITS).min(self.len) - ones
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> usize {
        self.ones
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Ones in `[0, i)` (exclusive). The inclusive counterpart is
    /// `rank_bit`.
    #[inline]
    pub fn rank1_excl(&self, i: usize) -> usize {
        debug_assert!(i <= self.len);
        if i == 0 {
            return 0;
        }
        if i >= self.len {
            return self.ones;
        }
        let wi = i / 64;
        let si = wi / WORDS_PER_SUPER;
        counters::bump_word_ops(1);
        let mut r = self.super_ranks[si] as usize;
        if wi < self.words.len() {
            r += self.word_ranks[wi] as usize;
            let off = i % 64;
            if off > 0 {
                r += (self.words[wi] & ((1u64 << off) - 1)).count_ones() as usize;
            }
        } else {
            r = self.ones;
        }
        r
    }

    #[inline]
    pub fn rank0_excl(&self, i: usize) -> usize {
        i - self.rank1_excl(i)
    }

    /// Inclusive rank: occurrences of bit `c` in positions `0..=i`.
    pub fn rank_bit(&self, c: bool, i: usize) -> Result<usize> {
        if i >= self.len {
            return Err(Error::IndexOutOfBounds(i, self.len));
        }
        Ok(if c { self.rank1_excl(i + 1) } else { self.rank0_excl(i + 1) })
    }

    /// Position of the k-th (1-based) occurrence of bit `c`. `k = 0` returns
    /// the pinned -1 sentinel; `k` beyond the total count returns `None`.
    pub fn select_bit(&self, c: bool, k: usize) -> Option<i64> {
        if k == 0 {
            return Some(-1);
        }
        let total = if c { self.ones } else { self.len - self.ones };
        if k > total {
            return None;
        }
        // Narrow to a superblock window from the sampled hints, then binary
        // search within it.
        let hints = if c { &self.sel1_hints } else { &self.sel0_hints };
        let m = (k - 1) / SELECT_SAMPLE;
        let mut lo = hints[m] as usize;
        let mut hi = hints
            .get(m + 1)
            .map(|&s| s as usize + 1)
            .unwrap_or(self.super_ranks.len());
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if self.count_before_super(mid, c) < k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut remaining = k - self.count_before_super(lo, c);
        let word_start = lo * WORDS_PER_SUPER;
        let word_end = (word_start + WORDS_PER_SUPER).min(self.words.len());
        counters::bump_word_ops((word_end - word_start) as u64);
        for wi in word_start..word_end {
            let w = if c { self.words[wi] } else { !self.words[wi] };
            // Padding zeros of the final word look like ones under negation;
            // mask them off.
            let w = if !c && wi == self.words.len() - 1 && self.len % 64 != 0 {
                w & ((1u64 << (self.len % 64)) - 1)
            } else {
                w
            };
            let pc = w.count_ones() as usize;
            if remaining <= pc {
                return Some((wi * 64 + select_in_word(w, remaining as u32)) as i64);
            }
            remaining -= pc;
        }
        None
    }

    /// Bits of directory data beyond the raw bit storage.
    pub fn aux_bits(&self) -> u64 {
        (self.super_ranks.len() * 64
            + self.word_ranks.len() * 16
            + (self.sel1_hints.len() + self.sel0_hints.len()) * 32) as u64
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// Position of the k-th (1-based) set bit of `w`.
#[inline]
fn select_in_word(w: u64, k: u32) -> usize {
    debug_assert!(k >= 1 && k <= w.count_ones());
    let mut remaining = k;
    let mut base = 0usize;
    let mut w = w;
    loop {
        let byte = (w & 0xff) as u8;
        let pc = byte.count_ones();
        if remaining <= pc {
            let mut b = byte;
            for _ in 1..remaining {
                b &= b - 1;
            }
            return base + b.trailing_zeros() as usize;
        }
        remaining -= pc;
        base += 8;
        w >>= 8;
    }
}

// --- serialization ---

crate::codec::impl_codec!(RankSelectBitVector {
    words,
    len,
    ones,
    super_ranks,
    word_ranks,
    sel1_hints,
    sel0_hints,
});
