//! Fixed-length bit buffers and the bit-twiddling helpers the write schemes share.
//!
//! Bit index `i` of a buffer built from bytes is bit `7 - i % 8` of byte `i / 8`,
//! i.e. bits are numbered in reading order, most significant bit of the first
//! byte first. Internally bit `i` lives in word `i / 64` at position `i % 64`.

use std::fmt;

/// Mask with the low `width` bits set.
#[inline]
pub fn low_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Rotates a `width`-bit pattern so that index `k` moves to index `(k + r) % width`.
///
/// Index `k` is bit `k` of `x` (LSB first), which matches [`BitBuf::get_range`].
#[inline]
pub fn rotate_right(x: u64, width: usize, r: usize) -> u64 {
    debug_assert!(width > 0 && width <= 64);
    let r = r % width;
    let x = x & low_mask(width);
    if r == 0 {
        return x;
    }
    ((x << r) | (x >> (width - r))) & low_mask(width)
}

/// Inverse of [`rotate_right`].
#[inline]
pub fn rotate_left(x: u64, width: usize, r: usize) -> u64 {
    let r = r % width;
    rotate_right(x, width, (width - r) % width)
}

/// A fixed-length bit array.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitBuf {
    len: usize,
    words: Vec<u64>,
}

impl BitBuf {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        b.clear_tail();
        b
    }

    /// Parses a string of `0`/`1` characters in index order.
    pub fn from_bit_str(s: &str) -> Option<Self> {
        let mut b = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => b.set(i, true),
                _ => return None,
            }
        }
        Some(b)
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut b = Self::zeros(bytes.len() * 8);
        for (i, &byte) in bytes.iter().enumerate() {
            // Reverse so the byte's MSB lands on the lowest index.
            let v = byte.reverse_bits() as u64;
            let bit = i * 8;
            b.words[bit / 64] |= v << (bit % 64);
        }
        b
    }

    /// Packs the buffer back into bytes. `len` must be a multiple of 8.
    pub fn to_bytes(&self) -> Vec<u8> {
        debug_assert_eq!(self.len % 8, 0);
        (0..self.len / 8)
            .map(|i| {
                let bit = i * 8;
                (((self.words[bit / 64] >> (bit % 64)) & 0xff) as u8).reverse_bits()
            })
            .collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let m = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming(&self, other: &BitBuf) -> usize {
        assert_eq!(self.len, other.len, "hamming distance of unequal lengths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Reads `width <= 64` bits starting at `start`; index `start + k` becomes bit `k`.
    #[inline]
    pub fn get_range(&self, start: usize, width: usize) -> u64 {
        debug_assert!(width <= 64 && start + width <= self.len);
        if width == 0 {
            return 0;
        }
        let w = start / 64;
        let off = start % 64;
        let mut v = self.words[w] >> off;
        if off != 0 && off + width > 64 {
            v |= self.words[w + 1] << (64 - off);
        }
        v & low_mask(width)
    }

    /// Inverse of [`BitBuf::get_range`].
    #[inline]
    pub fn set_range(&mut self, start: usize, width: usize, value: u64) {
        debug_assert!(width <= 64 && start + width <= self.len);
        if width == 0 {
            return;
        }
        let value = value & low_mask(width);
        let w = start / 64;
        let off = start % 64;
        let m = low_mask(width);
        self.words[w] = (self.words[w] & !(m << off)) | (value << off);
        if off != 0 && off + width > 64 {
            let spill = 64 - off;
            let hm = low_mask(width - spill);
            self.words[w + 1] = (self.words[w + 1] & !hm) | (value >> spill);
        }
    }

    /// Reads a `width`-bit field (`width <= 64`) with index `start` as its most
    /// significant bit, which is how granule values are read out of a block.
    pub fn get_field_msb(&self, start: usize, width: usize) -> u64 {
        (0..width).fold(0u64, |acc, k| (acc << 1) | self.get(start + k) as u64)
    }

    /// Inverse of [`BitBuf::get_field_msb`].
    pub fn set_field_msb(&mut self, start: usize, width: usize, value: u64) {
        for k in 0..width {
            self.set(start + k, (value >> (width - 1 - k)) & 1 == 1);
        }
    }

    /// Copies `len` bits starting at `start` into a new buffer.
    pub fn slice(&self, start: usize, len: usize) -> BitBuf {
        let mut out = BitBuf::zeros(len);
        let mut k = 0;
        while k < len {
            let w = (len - k).min(64);
            out.set_range(k, w, self.get_range(start + k, w));
            k += w;
        }
        out
    }

    /// Overwrites `src.len()` bits starting at `start` with `src`.
    pub fn splice(&mut self, start: usize, src: &BitBuf) {
        let mut k = 0;
        while k < src.len {
            let w = (src.len - k).min(64);
            self.set_range(start + k, w, src.get_range(k, w));
            k += w;
        }
    }

    /// Whole-buffer version of [`rotate_right`] for buffers of any length.
    pub fn rotated_right(&self, r: usize) -> BitBuf {
        if self.len == 0 {
            return self.clone();
        }
        if self.len <= 64 {
            let mut out = BitBuf::zeros(self.len);
            out.set_range(0, self.len, rotate_right(self.words[0], self.len, r));
            return out;
        }
        let r = r % self.len;
        let mut out = BitBuf::zeros(self.len);
        for k in 0..self.len {
            if self.get(k) {
                out.set((k + r) % self.len, true);
            }
        }
        out
    }

    /// Inverse of [`BitBuf::rotated_right`].
    pub fn rotated_left(&self, r: usize) -> BitBuf {
        if self.len == 0 {
            return self.clone();
        }
        let r = r % self.len;
        self.rotated_right((self.len - r) % self.len)
    }

    fn clear_tail(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= low_mask(tail);
            }
        }
    }
}

impl fmt::Debug for BitBuf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitBuf(")?;
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}

/// Hamming distance between the low `width` bits of two words.
#[inline]
pub fn hamming_u64(a: u64, b: u64, width: usize) -> u32 {
    ((a ^ b) & low_mask(width)).count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn byte_order_is_msb_first() {
        let b = BitBuf::from_bytes(&[0b1000_0001, 0x00]);
        assert!(b.get(0));
        assert!(b.get(7));
        assert!(!b.get(8));
        assert_eq!(b.get_field_msb(0, 4), 0b1000);
    }

    #[test]
    fn rotate_right_moves_towards_higher_index() {
        // "0010" rotated right by two is "1000"
        let e = BitBuf::from_bit_str("0010").unwrap();
        assert_eq!(e.rotated_right(2), BitBuf::from_bit_str("1000").unwrap());
        assert_eq!(e.rotated_right(1), BitBuf::from_bit_str("0001").unwrap());
    }

    #[test]
    fn range_across_word_boundary() {
        let mut b = BitBuf::zeros(200);
        b.set_range(60, 10, 0b11_0000_0001);
        assert!(b.get(60));
        assert!(b.get(68) && b.get(69));
        assert_eq!(b.get_range(60, 10), 0b11_0000_0001);
        assert_eq!(b.count_ones(), 3);
    }

    #[test]
    fn ones_has_clean_tail() {
        let b = BitBuf::ones(70);
        assert_eq!(b.count_ones(), 70);
    }

    proptest! {
        #[test]
        fn bytes_round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..80)) {
            prop_assert_eq!(BitBuf::from_bytes(&bytes).to_bytes(), bytes);
        }

        #[test]
        fn wide_rotation_matches_bit_loop(bytes in proptest::collection::vec(any::<u8>(), 1..24), r in 0usize..300) {
            let b = BitBuf::from_bytes(&bytes);
            let n = b.len();
            let rot = b.rotated_right(r);
            for k in 0..n {
                prop_assert_eq!(rot.get((k + r) % n), b.get(k));
            }
            prop_assert_eq!(rot.rotated_left(r), b);
        }

        #[test]
        fn word_rotation_inverts(x in any::<u64>(), width in 1usize..=64, r in 0usize..128) {
            let x = x & low_mask(width);
            prop_assert_eq!(rotate_left(rotate_right(x, width, r), width, r), x);
            prop_assert_eq!(rotate_right(x, width, r).count_ones(), x.count_ones());
        }

        #[test]
        fn hamming_matches_bit_loop(a in proptest::collection::vec(any::<u8>(), 8), b in proptest::collection::vec(any::<u8>(), 8)) {
            let (x, y) = (BitBuf::from_bytes(&a), BitBuf::from_bytes(&b));
            let slow = (0..64).filter(|&i| x.get(i) != y.get(i)).count();
            prop_assert_eq!(x.hamming(&y), slow);
        }
    }
}
