//! Systematic Reed-Solomon over GF(2^8).
//!
//! Generator roots are `alpha^0 .. alpha^(nsym-1)`. Codewords are stored
//! highest-degree coefficient first, message bytes leading. Decoding is
//! syndrome based: Berlekamp-Massey for the locator, Chien search for the
//! positions, Forney for the magnitudes.

use super::gf256::{self as gf, alpha_pow};
use super::BlockCode;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReedSolomon {
    k: usize,
    n: usize,
    generator: Vec<u8>,
}

impl ReedSolomon {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k >= n || n > 255 {
            return Err(Error::InvalidParameter(format!(
                "Reed-Solomon needs 0 < c_k < c_n <= 255, got c_k={k}, c_n={n}"
            )));
        }
        let nsym = n - k;
        let mut generator = vec![1u8];
        for i in 0..nsym {
            // multiply by (x - alpha^i)
            let root = alpha_pow(i as i64);
            let mut next = vec![0u8; generator.len() + 1];
            for (j, &c) in generator.iter().enumerate() {
                next[j] ^= c;
                next[j + 1] ^= gf::mul(c, root);
            }
            generator = next;
        }
        Ok(ReedSolomon { k, n, generator })
    }

    pub fn parity_len(&self) -> usize {
        self.n - self.k
    }

    /// Correctable symbol errors, `floor((c_n - c_k) / 2)`.
    pub fn correctable(&self) -> usize {
        self.parity_len() / 2
    }

    fn syndromes(&self, word: &[u8]) -> Vec<u8> {
        (0..self.parity_len())
            .map(|j| gf::eval_be(word, alpha_pow(j as i64)))
            .collect()
    }

    /// Error locator polynomial, lowest degree first.
    fn berlekamp_massey(synd: &[u8]) -> Vec<u8> {
        let mut c = vec![1u8];
        let mut b = vec![1u8];
        let mut l = 0usize;
        let mut m = 1usize;
        let mut last = 1u8;
        for n in 0..synd.len() {
            let mut d = synd[n];
            for i in 1..=l.min(c.len() - 1) {
                d ^= gf::mul(c[i], synd[n - i]);
            }
            if d == 0 {
                m += 1;
                continue;
            }
            let coef = gf::div(d, last);
            let mut next = c.clone();
            if next.len() < b.len() + m {
                next.resize(b.len() + m, 0);
            }
            for (i, &bi) in b.iter().enumerate() {
                next[i + m] ^= gf::mul(coef, bi);
            }
            if 2 * l <= n {
                b = std::mem::replace(&mut c, next);
                l = n + 1 - l;
                last = d;
                m = 1;
            } else {
                c = next;
                m += 1;
            }
        }
        c.truncate(l + 1);
        c.resize(l + 1, 0);
        c
    }

    fn correct(&self, word: &mut [u8]) -> bool {
        let synd = self.syndromes(word);
        if synd.iter().all(|&s| s == 0) {
            return true;
        }
        let locator = Self::berlekamp_massey(&synd);
        let errors = locator.len() - 1;
        if errors > self.correctable() || locator[errors] == 0 {
            return false;
        }

        let positions: Vec<usize> = (0..self.n)
            .filter(|&k| {
                let power = (self.n - 1 - k) as i64;
                gf::eval_le(&locator, alpha_pow(-power)) == 0
            })
            .collect();
        if positions.len() != errors {
            return false;
        }

        // evaluator = S(x) * locator(x) mod x^nsym
        let nsym = self.parity_len();
        let mut evaluator = vec![0u8; nsym];
        for (i, &s) in synd.iter().enumerate() {
            for (j, &l) in locator.iter().enumerate() {
                if i + j < nsym {
                    evaluator[i + j] ^= gf::mul(s, l);
                }
            }
        }
        // formal derivative: only odd powers survive in characteristic 2
        let derivative: Vec<u8> = locator
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| if i % 2 == 1 { c } else { 0 })
            .collect();

        for &k in &positions {
            let power = (self.n - 1 - k) as i64;
            let x = alpha_pow(power);
            let x_inv = alpha_pow(-power);
            let denom = gf::eval_le(&derivative, x_inv);
            if denom == 0 {
                return false;
            }
            let magnitude = gf::div(gf::mul(x, gf::eval_le(&evaluator, x_inv)), denom);
            word[k] ^= magnitude;
        }
        self.syndromes(word).iter().all(|&s| s == 0)
    }
}

impl BlockCode for ReedSolomon {
    fn message_len(&self) -> usize {
        self.k
    }

    fn codeword_len(&self) -> usize {
        self.n
    }

    fn encode(&self, msg: &[u8]) -> Result<Vec<u8>> {
        if msg.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: msg.len(),
            });
        }
        let nsym = self.parity_len();
        let mut buf = vec![0u8; self.n];
        buf[..self.k].copy_from_slice(msg);
        for i in 0..self.k {
            let coef = buf[i];
            if coef != 0 {
                for j in 1..=nsym {
                    buf[i + j] ^= gf::mul(self.generator[j], coef);
                }
            }
        }
        buf[..self.k].copy_from_slice(msg);
        Ok(buf)
    }

    fn decode(&self, word: &[u8]) -> Option<Vec<u8>> {
        if word.len() != self.n {
            return None;
        }
        let mut w = word.to_vec();
        if !self.correct(&mut w) {
            return None;
        }
        w.truncate(self.k);
        Some(w)
    }
}
