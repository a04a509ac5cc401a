//! Fixed-length packed bit vector.
//!
//! Bit `k` lives in word `k / 64` at position `63 - k % 64`, so the first bit
//! of the vector is the most significant bit of the first word. Unused tail
//! bits of the last word are always zero.

use std::fmt;
use std::ops::{BitOrAssign, Not};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

#[inline]
fn mask(k: usize) -> u64 {
    1u64 << (63 - (k & 63))
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut v = BitVec::zeros(0);
        for b in bits {
            v.push(b);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, k: usize) -> bool {
        assert!(k < self.len, "bit {k} out of range {}", self.len);
        self.words[k >> 6] & mask(k) != 0
    }

    #[inline]
    pub fn set(&mut self, k: usize, value: bool) {
        assert!(k < self.len, "bit {k} out of range {}", self.len);
        if value {
            self.words[k >> 6] |= mask(k);
        } else {
            self.words[k >> 6] &= !mask(k);
        }
    }

    #[inline]
    pub fn flip(&mut self, k: usize) {
        assert!(k < self.len, "bit {k} out of range {}", self.len);
        self.words[k >> 6] ^= mask(k);
    }

    pub fn push(&mut self, value: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_uint(&mut self, value: u64, width: usize) {
        debug_assert!(width <= 64);
        for j in (0..width).rev() {
            self.push((value >> j) & 1 == 1);
        }
    }

    pub fn extend_from(&mut self, other: &BitVec) {
        for k in 0..other.len {
            self.push(other.get(k));
        }
    }

    /// Reads `width` bits starting at `start` as an MSB-first unsigned integer.
    pub fn read_uint(&self, start: usize, width: usize) -> u64 {
        debug_assert!(width <= 64);
        let mut v = 0u64;
        for k in start..start + width {
            v = (v << 1) | self.get(k) as u64;
        }
        v
    }

    /// Hamming weight.
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn count_ones_in(&self, start: usize, width: usize) -> usize {
        (start..start + width).filter(|&k| self.get(k)).count()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |k| self.get(k))
    }

    pub fn hamming_distance(&self, other: &BitVec) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    fn clear_tail(&mut self) {
        let used = self.len % 64;
        if used != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= !0u64 << (64 - used);
            }
        }
    }

    /// Lowercase hex, MSB-first, zero-padded to a whole nibble.
    pub fn to_hex(&self) -> String {
        let nibbles = self.len.div_ceil(4);
        let mut s = String::with_capacity(nibbles);
        for i in 0..nibbles {
            let word = self.words[i / 16];
            let nib = (word >> (60 - 4 * (i % 16))) & 0xf;
            s.push(char::from_digit(nib as u32, 16).unwrap());
        }
        s
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let nibbles = len.div_ceil(4);
        if hex.len() != nibbles {
            return Err(Error::LengthMismatch {
                expected: nibbles,
                actual: hex.len(),
            });
        }
        let mut v = BitVec::zeros(len);
        for (i, c) in hex.chars().enumerate() {
            let nib = match c {
                '0'..='9' | 'a'..='f' => c.to_digit(16).unwrap() as u64,
                _ => return Err(Error::InvalidParameter(format!("bad hex digit {c:?}"))),
            };
            v.words[i / 16] |= nib << (60 - 4 * (i % 16));
        }
        let before = v.words.clone();
        v.clear_tail();
        if v.words != before {
            return Err(Error::InvalidParameter(
                "nonzero padding bits after last bit".into(),
            ));
        }
        Ok(v)
    }
}

impl BitOrAssign<&BitVec> for BitVec {
    fn bitor_assign(&mut self, rhs: &BitVec) {
        assert_eq!(self.len, rhs.len, "OR of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a |= b;
        }
    }
}

impl Not for &BitVec {
    type Output = BitVec;

    fn not(self) -> BitVec {
        let mut out = BitVec {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.clear_tail();
        out
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec[")?;
        for b in self.iter() {
            write!(f, "{}", b as u8)?;
        }
        write!(f, "]")
    }
}
