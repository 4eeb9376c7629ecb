//! Fixed-width integers packed into 64-bit words.
//!
//! `PackedSequence` is the substrate every structure in this crate is built
//! on: `n` elements of `width` bits occupy `ceil(n*width/64)` words, padded
//! with zero bits. Elements are laid out LSB-first, element 0 in the low bits
//! of word 0. Within an element, bit positions follow the convention that
//! bit 0 is the most significant bit of the element.

use crate::config::Ctx;
use crate::counters;
use crate::error::{Error, Result};
use crate::tables::{Table, TableKey};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PackedSequence {
    words: Vec<u64>,
    len: usize,
    width: u32,
}

#[inline]
fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl PackedSequence {
    pub fn new(width: u32) -> Self {
        assert!((1..=64).contains(&width), "width must be in 1..=64");
        PackedSequence { words: Vec::new(), len: 0, width }
    }

    /// A sequence of `n` zero elements, ready for `set`.
    pub fn zeroed(width: u32, n: usize) -> Self {
        let words = (n as u64 * width as u64).div_ceil(64) as usize;
        PackedSequence { words: vec![0; words], len: n, width }
    }

    pub fn with_capacity(width: u32, n: usize) -> Self {
        assert!((1..=64).contains(&width), "width must be in 1..=64");
        let words = (n as u64 * width as u64).div_ceil(64) as usize;
        PackedSequence { words: Vec::with_capacity(words), len: 0, width }
    }

    /// Pack a slice of values. Fails with "value overflow" if any value needs
    /// more than `width` bits.
    pub fn pack(values: &[u64], width: u32) -> Result<Self> {
        let mut seq = PackedSequence::with_capacity(width, values.len());
        let m = mask(width);
        for &v in values {
            if v & !m != 0 {
                return Err(Error::ValueOverflow(v, width));
            }
            seq.push(v);
        }
        counters::bump_word_ops(seq.words.len() as u64 + 1);
        Ok(seq)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit_len(&self) -> u64 {
        self.len as u64 * self.width as u64
    }

    #[inline]
    pub fn push(&mut self, v: u64) {
        debug_assert!(v & !mask(self.width) == 0, "value does not fit width");
        let pos = self.len as u64 * self.width as u64;
        let wi = (pos / 64) as usize;
        let off = (pos % 64) as u32;
        if wi == self.words.len() {
            self.words.push(0);
        }
        self.words[wi] |= v << off;
        if off + self.width > 64 {
            self.words.push(v >> (64 - off));
        }
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        debug_assert!(i < self.len, "index {} out of bounds {}", i, self.len);
        let pos = i as u64 * self.width as u64;
        let wi = (pos / 64) as usize;
        let off = (pos % 64) as u32;
        let lo = self.words[wi] >> off;
        let v = if off + self.width <= 64 {
            lo
        } else {
            lo | (self.words[wi + 1] << (64 - off))
        };
        v & mask(self.width)
    }

    /// Checked access returning an index-out-of-bounds error.
    pub fn value(&self, i: usize) -> Result<u64> {
        if i >= self.len {
            return Err(Error::IndexOutOfBounds(i, self.len));
        }
        Ok(self.get(i))
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: u64) {
        debug_assert!(i < self.len && v & !mask(self.width) == 0);
        let pos = i as u64 * self.width as u64;
        let wi = (pos / 64) as usize;
        let off = (pos % 64) as u32;
        let m = mask(self.width);
        self.words[wi] = (self.words[wi] & !(m << off)) | (v << off);
        if off + self.width > 64 {
            let hi_bits = off + self.width - 64;
            let hm = mask(hi_bits);
            self.words[wi + 1] = (self.words[wi + 1] & !hm) | (v >> (64 - off));
        }
    }

    /// Read `nbits` (1..=64) raw bits starting at absolute bit position `pos`.
    #[inline]
    pub fn read_bits(&self, pos: u64, nbits: u32) -> u64 {
        debug_assert!(nbits >= 1 && nbits <= 64);
        let wi = (pos / 64) as usize;
        let off = (pos % 64) as u32;
        let lo = self.words.get(wi).copied().unwrap_or(0) >> off;
        let v = if off + nbits <= 64 {
            lo
        } else {
            lo | (self.words.get(wi + 1).copied().unwrap_or(0) << (64 - off))
        };
        v & mask(nbits)
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn extend_from(&mut self, other: &PackedSequence) {
        debug_assert_eq!(self.width, other.width);
        for v in other.iter() {
            self.push(v);
        }
        counters::bump_word_ops(other.words.len() as u64 + 1);
    }

    /// Bitwise complement of every element within its width. Order-reversing,
    /// used to answer maximum queries with minimum machinery.
    pub fn complement(&self) -> PackedSequence {
        let m = mask(self.width);
        let mut out = PackedSequence::with_capacity(self.width, self.len);
        for v in self.iter() {
            out.push(v ^ m);
        }
        counters::bump_word_ops(self.words.len() as u64 + 1);
        out
    }

    /// New sequence keeping elements of `range`.
    pub fn slice(&self, start: usize, end: usize) -> PackedSequence {
        debug_assert!(start <= end && end <= self.len);
        let mut out = PackedSequence::with_capacity(self.width, end - start);
        for i in start..end {
            out.push(self.get(i));
        }
        counters::bump_word_ops(((end - start) as u64 * self.width as u64) / 64 + 1);
        out
    }

    /// Extract bits `s..=f` (0 = most significant) of every element into a
    /// new sequence of width `f-s+1`. Runs over a universal table when one
    /// fits the registry budget, otherwise per element; results are
    /// bit-identical either way.
    pub fn extract_bits(&self, s: u32, f: u32, ctx: &Ctx) -> Result<PackedSequence> {
        let c = self.width;
        if s > f || f >= c {
            return Err(Error::InvalidBitRange(s, f, c));
        }
        let out_width = f - s + 1;
        let shift = c - 1 - f;
        let m = mask(out_width);

        let block = (ctx.config.lg_cap() / (2 * c)).max(1);
        if block >= 2 && (block * c) <= 20 && block * out_width <= 64 {
            let key = TableKey::Extract { width: c, s, f, block };
            let entries = 1u64 << (block * c);
            let size_bits = entries.saturating_mul(64);
            let table = ctx.registry.get_or_build(key, size_bits, || {
                let mut data = vec![0u64; entries as usize];
                for (pat, slot) in data.iter_mut().enumerate() {
                    let mut packed = 0u64;
                    for e in 0..block {
                        let v = (pat as u64 >> (e * c)) & mask(c);
                        let x = (v >> shift) & m;
                        packed |= x << (e * out_width);
                    }
                    *slot = packed;
                }
                Table { data, entry_words: 1 }
            });
            if let Some(table) = table {
                let mut out = PackedSequence::with_capacity(out_width, self.len);
                let full = self.len / block as usize;
                for b in 0..full {
                    let pat = self.read_bits(b as u64 * (block * c) as u64, block * c);
                    let packed = table.entry(pat as usize)[0];
                    for e in 0..block {
                        out.push((packed >> (e * out_width)) & m);
                    }
                }
                for i in full * block as usize..self.len {
                    out.push((self.get(i) >> shift) & m);
                }
                counters::bump_word_ops(full as u64 + block as u64);
                return Ok(out);
            }
        }

        let mut out = PackedSequence::with_capacity(out_width, self.len);
        for v in self.iter() {
            out.push((v >> shift) & m);
        }
        counters::bump_word_ops(self.len as u64 * c as u64 / 64 + 1);
        Ok(out)
    }

    /// Stable mergesort producing a nondecreasing permutation of the
    /// elements, kept in packed form throughout.
    pub fn packed_sort(&self) -> PackedSequence {
        let n = self.len;
        if n <= 1 {
            return self.clone();
        }
        let mut cur = self.clone();
        let mut tmp = PackedSequence::with_capacity(self.width, n);
        tmp.words.resize(cur.words.len(), 0);
        tmp.len = n;
        let mut run = 1usize;
        while run < n {
            let mut start = 0usize;
            while start < n {
                let mid = (start + run).min(n);
                let end = (start + 2 * run).min(n);
                let (mut a, mut b, mut o) = (start, mid, start);
                while a < mid && b < end {
                    let va = cur.get(a);
                    let vb = cur.get(b);
                    if va <= vb {
                        tmp.set(o, va);
                        a += 1;
                    } else {
                        tmp.set(o, vb);
                        b += 1;
                    }
                    o += 1;
                }
                while a < mid {
                    tmp.set(o, cur.get(a));
                    a += 1;
                    o += 1;
                }
                while b < end {
                    tmp.set(o, cur.get(b));
                    b += 1;
                    o += 1;
                }
                start = end;
            }
            std::mem::swap(&mut cur, &mut tmp);
            counters::bump_word_ops(n as u64 * self.width as u64 / 64 + 1);
            run *= 2;
        }
        cur
    }
}

impl FromIterator<u64> for PackedSequence {
    /// Collect into width-64 storage; callers wanting tight widths use
    /// `pack`.
    fn from_iter<T: IntoIterator<Item = u64>>(iter: T) -> Self {
        let mut s = PackedSequence::new(64);
        for v in iter {
            s.push(v);
        }
        s
    }
}

// --- serialization ---

crate::codec::impl_codec!(PackedSequence { words, len, width });

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn ctx() -> std::sync::Arc<Ctx> {
        Ctx::new(crate::config::Config::default())
    }

    fn ctx_no_tables() -> std::sync::Arc<Ctx> {
        let mut c = crate::config::Config::default();
        c.table_cap_bits = 0;
        Ctx::new(c)
    }

    #[test]
    fn pack_empty() {
        let s = PackedSequence::pack(&[], 4).unwrap();
        assert_eq!(s.len(), 0);
        assert_eq!(s.bit_len(), 0);
    }

    #[test]
    fn pack_zeros() {
        let s = PackedSequence::pack(&[0, 0, 0], 1).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.to_vec(), vec![0, 0, 0]);
    }

    #[test]
    fn pack_and_read_element() {
        let s = PackedSequence::pack(&[11, 4], 4).unwrap();
        assert_eq!(s.get(1), 4);
        assert_eq!(s.get(0), 11);
    }

    #[test]
    fn pack_overflow_rejected() {
        assert_eq!(
            PackedSequence::pack(&[16], 4),
            Err(Error::ValueOverflow(16, 4))
        );
    }

    #[test]
    fn extract_identity_range() {
        let s = PackedSequence::pack(&[11, 4], 4).unwrap();
        let e = s.extract_bits(0, 3, &ctx()).unwrap();
        assert_eq!(e.to_vec(), vec![11, 4]);
    }

    #[test]
    fn extract_middle_bits() {
        // 11 = 1011b, bits 1..2 (msb-first) = 01b = 1; 4 = 0100b -> 10b = 2.
        let s = PackedSequence::pack(&[11, 4], 4).unwrap();
        let e = s.extract_bits(1, 2, &ctx()).unwrap();
        assert_eq!(e.to_vec(), vec![1, 2]);
        assert_eq!(e.width(), 2);
    }

    #[test]
    fn extract_last_bit() {
        let s = PackedSequence::pack(&[15], 4).unwrap();
        let e = s.extract_bits(3, 3, &ctx()).unwrap();
        assert_eq!(e.to_vec(), vec![1]);
    }

    #[test]
    fn extract_invalid_ranges() {
        let s = PackedSequence::pack(&[1], 4).unwrap();
        assert!(matches!(
            s.extract_bits(2, 1, &ctx()),
            Err(Error::InvalidBitRange(2, 1, 4))
        ));
        assert!(matches!(
            s.extract_bits(0, 4, &ctx()),
            Err(Error::InvalidBitRange(0, 4, 4))
        ));
    }

    #[test]
    fn sort_examples() {
        let empty = PackedSequence::pack(&[], 2).unwrap();
        assert_eq!(empty.packed_sort().to_vec(), Vec::<u64>::new());
        let s = PackedSequence::pack(&[3, 1, 2], 2).unwrap();
        assert_eq!(s.packed_sort().to_vec(), vec![1, 2, 3]);
        let c = PackedSequence::pack(&[5, 5, 5], 3).unwrap();
        assert_eq!(c.packed_sort().to_vec(), vec![5, 5, 5]);
    }

    #[test]
    fn extract_matches_oracle_exhaustive() {
        // All sequences of length <= 8 over width <= 4 is too many to list
        // one by one; enumerate lengths and widths with dense value coverage.
        let ctx = ctx();
        let ctx0 = ctx_no_tables();
        for width in 1..=4u32 {
            let sigma = 1u64 << width;
            for len in 0..=8usize {
                // Stripe through the value space deterministically.
                let mut vals = Vec::with_capacity(len);
                let mut x = 0xdead_beefu64;
                for _ in 0..len {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    vals.push(x % sigma);
                }
                let s = PackedSequence::pack(&vals, width).unwrap();
                for a in 0..width {
                    for f in a..width {
                        let got = s.extract_bits(a, f, &ctx).unwrap();
                        let got0 = s.extract_bits(a, f, &ctx0).unwrap();
                        let want: Vec<u64> = vals
                            .iter()
                            .map(|&v| oracle::brute_extract_bits(v, width, a, f))
                            .collect();
                        assert_eq!(got.to_vec(), want);
                        assert_eq!(got0, got, "table and scalar paths must agree");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn extract_matches_oracle_random(
            width in 1u32..=16,
            vals in proptest::collection::vec(any::<u64>(), 0..200),
            sf in any::<(u32, u32)>(),
        ) {
            let vals: Vec<u64> = vals.iter().map(|v| v & mask(width)).collect();
            let s = PackedSequence::pack(&vals, width).unwrap();
            let a = sf.0 % width;
            let f = a + sf.1 % (width - a);
            let got = s.extract_bits(a, f, &ctx()).unwrap();
            let got0 = s.extract_bits(a, f, &ctx_no_tables()).unwrap();
            prop_assert_eq!(&got, &got0);
            for (i, &v) in vals.iter().enumerate() {
                prop_assert_eq!(got.get(i), oracle::brute_extract_bits(v, width, a, f));
            }
        }

        #[test]
        fn sort_is_sorted_permutation(
            width in 1u32..=12,
            vals in proptest::collection::vec(any::<u64>(), 0..300),
        ) {
            let vals: Vec<u64> = vals.iter().map(|v| v & mask(width)).collect();
            let s = PackedSequence::pack(&vals, width).unwrap();
            let sorted = s.packed_sort().to_vec();
            let mut want = vals.clone();
            want.sort();
            prop_assert_eq!(sorted, want);
        }

        #[test]
        fn roundtrip_get(width in 1u32..=64, vals in proptest::collection::vec(any::<u64>(), 0..100)) {
            let vals: Vec<u64> = vals.iter().map(|v| v & mask(width)).collect();
            let s = PackedSequence::pack(&vals, width).unwrap();
            prop_assert_eq!(s.to_vec(), vals);
        }
    }
}
