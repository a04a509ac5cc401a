//! Robust signatures: every index block is Reed-Solomon encoded before it is
//! laid out, so singletons and resolvable doubletons survive bit flips.

use serde::{Deserialize, Serialize};

use super::{BlockCode, EccSpec, ReedSolomon};
use crate::bitvec::BitVec;
use crate::error::{invalid, Result};
use crate::signature::{Sections, SignatureCode, SignatureSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `f(b_i), !f(b_i), f(b_s1), !f(b_s1), f(b_s2), !f(b_s2)`; robust peeling.
    SixComplemented,
    /// `f(b_i), f(b_s1), f(b_s2)`; robust Singleton-Only.
    ThreePlain,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustSignatureSpec {
    base: SignatureSpec,
    ecc: EccSpec,
    codec: ReedSolomon,
}

impl RobustSignatureSpec {
    /// The layout follows `base.complemented()`; `base` must have six sections.
    pub fn new(base: SignatureSpec, ecc: EccSpec) -> Result<Self> {
        ecc.validate()?;
        if base.sections() != Sections::Six {
            return Err(invalid("robust signatures need six-section check sequences"));
        }
        if ecc.ck * 8 < base.bits() {
            return Err(invalid(format!(
                "c_k = {} bytes cannot hold L = {} index bits",
                ecc.ck,
                base.bits()
            )));
        }
        Ok(RobustSignatureSpec {
            codec: ecc.codec()?,
            base,
            ecc,
        })
    }

    pub fn base(&self) -> &SignatureSpec {
        &self.base
    }

    pub fn ecc(&self) -> EccSpec {
        self.ecc
    }

    pub fn layout(&self) -> Layout {
        if self.base.complemented() {
            Layout::SixComplemented
        } else {
            Layout::ThreePlain
        }
    }

    /// Bits per encoded block, `c_n * 8`.
    pub fn block_bits(&self) -> usize {
        self.ecc.cn * 8
    }

    /// Bit offsets of the three un-complemented encoded blocks.
    fn plain_offsets(&self) -> [usize; 3] {
        let b = self.block_bits();
        match self.layout() {
            Layout::SixComplemented => [0, 2 * b, 4 * b],
            Layout::ThreePlain => [0, b, 2 * b],
        }
    }

    /// Codeword of the index `i - 1`, zero-padded on the left to `c_k` bytes.
    pub fn encode_index(&self, item: u64) -> Vec<u8> {
        let v = item - 1;
        let msg: Vec<u8> = (0..self.ecc.ck)
            .rev()
            .map(|j| if j < 8 { (v >> (8 * j)) as u8 } else { 0 })
            .collect();
        self.codec.encode(&msg).expect("message length matches c_k")
    }

    /// RS-decodes `c_n` bytes starting at `offset` into a 1-based item.
    fn decode_block(&self, bits: &BitVec, offset: usize) -> Option<u64> {
        let word: Vec<u8> = (0..self.ecc.cn)
            .map(|j| bits.read_uint(offset + 8 * j, 8) as u8)
            .collect();
        self.decode_word(&word)
    }

    fn decode_word(&self, word: &[u8]) -> Option<u64> {
        let msg = self.codec.decode(word)?;
        let mut v = 0u64;
        for (j, &byte) in msg.iter().enumerate() {
            let shift = msg.len() - 1 - j;
            if shift >= 8 {
                if byte != 0 {
                    return None;
                }
            } else {
                v |= (byte as u64) << (8 * shift);
            }
        }
        (v < self.base.n()).then_some(v + 1)
    }

    /// Recovers the other item's (noisy) encoded block for check pair `pair`:
    /// plain section where the known column has a 0, inverted complement
    /// section where it has a 1.
    pub fn extract_pair(&self, z: &BitVec, known_col: &BitVec, pair: usize) -> BitVec {
        let b = self.block_bits();
        let plain = 2 * pair * b;
        let comp = plain + b;
        BitVec::from_bits((0..b).map(|j| {
            if known_col.get(plain + j) {
                !z.get(comp + j)
            } else {
                z.get(plain + j)
            }
        }))
    }

    fn passes_checks(&self, l1: u64, l2: u64, l3: u64) -> bool {
        let (s1, s2) = self.base.checks_unchecked(l1);
        s1 == l2 && s2 == l3
    }

    /// Decodes the three plain blocks and applies both check equations.
    pub fn robust_detect_singleton(&self, z: &BitVec) -> Option<u64> {
        if z.len() != self.column_len() {
            return None;
        }
        let [o1, o2, o3] = self.plain_offsets();
        let l1 = self.decode_block(z, o1)?;
        let l2 = self.decode_block(z, o2)?;
        let l3 = self.decode_block(z, o3)?;
        self.passes_checks(l1, l2, l3).then_some(l1)
    }

    /// Doubleton resolution given one identified item; only defined for the
    /// complemented layout.
    pub fn robust_resolve_doubleton(&self, z: &BitVec, known: u64) -> Option<u64> {
        if self.layout() != Layout::SixComplemented
            || z.len() != self.column_len()
            || known == 0
            || known > self.base.n()
        {
            return None;
        }
        let known_col = self.column(known);
        let mut found = [0u64; 3];
        for (pair, slot) in found.iter_mut().enumerate() {
            let block = self.extract_pair(z, &known_col, pair);
            *slot = self.decode_block(&block, 0)?;
        }
        let [l1, l2, l3] = found;
        (l1 != known && self.passes_checks(l1, l2, l3)).then_some(l1)
    }

    pub fn robust_signature_column(&self, i: u64) -> Result<BitVec> {
        self.base.check_item(i)?;
        Ok(self.column(i))
    }
}

impl SignatureCode for RobustSignatureSpec {
    fn n(&self) -> u64 {
        self.base.n()
    }

    fn column_len(&self) -> usize {
        let blocks = match self.layout() {
            Layout::SixComplemented => 6,
            Layout::ThreePlain => 3,
        };
        blocks * self.block_bits()
    }

    fn column(&self, item: u64) -> BitVec {
        assert!(item >= 1 && item <= self.base.n(), "item {item} out of range");
        let (items, _) = self.base.block_items(item);
        let complemented = self.layout() == Layout::SixComplemented;
        let mut col = BitVec::zeros(0);
        for &it in &items {
            let cw = self.encode_index(it);
            for &byte in &cw {
                col.push_uint(byte as u64, 8);
            }
            if complemented {
                for &byte in &cw {
                    col.push_uint(!byte as u64, 8);
                }
            }
        }
        col
    }
}

impl From<RobustSignatureSpec> for SignatureSpec {
    fn from(r: RobustSignatureSpec) -> Self {
        r.base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(n: u64, complemented: bool, cn: usize) -> RobustSignatureSpec {
        let base = SignatureSpec::new(n, Sections::Six, 321, complemented).unwrap();
        RobustSignatureSpec::new(base, EccSpec::new(4, cn).unwrap()).unwrap()
    }

    fn flip_bsc(rng: &mut ChaCha8Rng, z: &mut BitVec, q: f64) {
        for k in 0..z.len() {
            if rng.gen_bool(q) {
                z.flip(k);
            }
        }
    }

    #[test]
    fn rejects_short_messages_and_wrong_sections() {
        let base = SignatureSpec::new(1 << 40, Sections::Six, 0, true).unwrap();
        assert!(RobustSignatureSpec::new(base, EccSpec::new(4, 12).unwrap()).is_err());
        let base = SignatureSpec::new(1 << 10, Sections::Four, 0, true).unwrap();
        assert!(RobustSignatureSpec::new(base, EccSpec::new(4, 12).unwrap()).is_err());
    }

    #[test]
    fn complemented_column_weight() {
        let s = spec(1 << 10, true, 12);
        for i in [1, 2, 500, 1024] {
            assert_eq!(s.column(i).count_ones(), 3 * 12 * 8);
        }
    }

    #[test]
    fn plain_column_weight_is_sum_of_codeword_weights() {
        let s = spec(1 << 10, false, 12);
        let (s1, s2) = s.base().check_sequences(1).unwrap();
        let w: usize = [1, s1, s2]
            .iter()
            .map(|&it| s.encode_index(it).iter().map(|b| b.count_ones() as usize).sum::<usize>())
            .sum();
        assert_eq!(s.column(1).count_ones(), w);
        assert_eq!(s.column_len(), 3 * 96);
    }

    #[test]
    fn complement_blocks_exhaustive() {
        let s = spec(1 << 10, true, 12);
        let b = s.block_bits();
        for i in 1..=1024 {
            let col = s.column(i);
            for pair in 0..3 {
                for j in 0..b {
                    assert_ne!(col.get(2 * pair * b + j), col.get((2 * pair + 1) * b + j));
                }
            }
        }
    }

    #[test]
    fn noiseless_singletons_exhaustive() {
        for complemented in [true, false] {
            let s = spec(1 << 10, complemented, 12);
            for i in 1..=1024 {
                assert_eq!(s.robust_detect_singleton(&s.column(i)), Some(i));
            }
        }
    }

    #[test]
    fn noiseless_doubletons() {
        let s = spec(1 << 10, true, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a = rng.gen_range(1..=1024u64);
            let mut b = rng.gen_range(1..=1024u64);
            while b == a {
                b = rng.gen_range(1..=1024u64);
            }
            let mut z = s.column(a);
            z |= &s.column(b);
            assert_eq!(s.robust_resolve_doubleton(&z, a), Some(b));
        }
    }

    #[test]
    fn extraction_reproduces_codeword_exhaustive() {
        let s = spec(1 << 10, true, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for a in 1..=1024u64 {
            let b = rng.gen_range(1..=1024u64);
            if a == b {
                continue;
            }
            let ka = s.column(a);
            let mut z = ka.clone();
            z |= &s.column(b);
            let (items, _) = s.base().block_items(b);
            for (pair, &item) in items.iter().enumerate() {
                let cw = s.encode_index(item);
                let expected = BitVec::from_bits(
                    cw.iter().flat_map(|&byte| (0..8).rev().map(move |k| (byte >> k) & 1 == 1)),
                );
                assert_eq!(s.extract_pair(&z, &ka, pair), expected);
            }
        }
    }

    #[test]
    fn singleton_miss_rate_under_noise() {
        // symbol error rate 1 - 0.98^8; a block fails if more than 4 of its
        // 12 symbols are hit. Tail computed independently below.
        let sym = 1.0 - 0.98f64.powi(8);
        let block_fail: f64 = (5..=12)
            .map(|k| binom(12, k) * sym.powi(k as i32) * (1.0 - sym).powi(12 - k as i32))
            .sum();
        let predicted = 1.0 - (1.0 - block_fail).powi(3);
        let s = spec(1 << 10, true, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 10_000;
        let mut missed = 0;
        for _ in 0..trials {
            let i = rng.gen_range(1..=1024u64);
            let mut z = s.column(i);
            flip_bsc(&mut rng, &mut z, 0.02);
            if s.robust_detect_singleton(&z) != Some(i) {
                missed += 1;
            }
        }
        let rate = missed as f64 / trials as f64;
        // decoding beyond t can still succeed occasionally, so the miss rate
        // sits at or below the tail prediction
        assert!(rate <= predicted + 0.01, "miss rate {rate}, predicted {predicted}");
        assert!(rate >= predicted - 0.03, "miss rate {rate}, predicted {predicted}");
    }

    #[test]
    fn doubleton_recovery_rate_under_noise() {
        let sym = 1.0 - 0.98f64.powi(8);
        let block_fail: f64 = (5..=12)
            .map(|k| binom(12, k) * sym.powi(k as i32) * (1.0 - sym).powi(12 - k as i32))
            .sum();
        let predicted = (1.0 - block_fail).powi(3);
        let s = spec(1 << 10, true, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let trials = 10_000;
        let mut ok = 0;
        for _ in 0..trials {
            let a = rng.gen_range(1..=1024u64);
            let b = loop {
                let b = rng.gen_range(1..=1024u64);
                if b != a {
                    break b;
                }
            };
            let mut z = s.column(a);
            z |= &s.column(b);
            flip_bsc(&mut rng, &mut z, 0.02);
            if s.robust_resolve_doubleton(&z, a) == Some(b) {
                ok += 1;
            }
        }
        let rate = ok as f64 / trials as f64;
        assert!((rate - predicted).abs() <= 0.02, "rate {rate}, predicted {predicted}");
    }

    #[test]
    fn extracted_noise_keeps_channel_statistics() {
        let s = spec(1 << 10, true, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = 0.02;
        let mut flips = 0usize;
        let mut total = 0usize;
        for _ in 0..5_000 {
            let a = rng.gen_range(1..=1024u64);
            let b = rng.gen_range(1..=1024u64);
            let ka = s.column(a);
            let mut clean = ka.clone();
            clean |= &s.column(b);
            let mut noisy = clean.clone();
            flip_bsc(&mut rng, &mut noisy, q);
            for pair in 0..3 {
                flips += s
                    .extract_pair(&noisy, &ka, pair)
                    .hamming_distance(&s.extract_pair(&clean, &ka, pair));
                total += s.block_bits();
            }
        }
        let rate = flips as f64 / total as f64;
        let sigma = (q * (1.0 - q) / total as f64).sqrt();
        assert!((rate - q).abs() <= 3.0 * sigma, "rate {rate}");
    }

    #[test]
    fn wrong_hypothesis_is_rejected() {
        let s = spec(1 << 10, true, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let trials = 100_000;
        let mut accepted = 0;
        for _ in 0..trials {
            let a = rng.gen_range(1..=1024u64);
            let b = rng.gen_range(1..=1024u64);
            let known = rng.gen_range(1..=1024u64);
            if a == b || known == a || known == b {
                continue;
            }
            let mut z = s.column(a);
            z |= &s.column(b);
            if s.robust_resolve_doubleton(&z, known).is_some() {
                accepted += 1;
            }
        }
        assert!(accepted as f64 / trials as f64 <= 1e-4, "accepted {accepted}");
    }

    #[test]
    fn multiton_wrong_declarations_are_rare() {
        let s = spec(1 << 10, true, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 1_000_000;
        let mut wrong = 0;
        for _ in 0..trials {
            let items: Vec<u64> = (0..rng.gen_range(2..=4))
                .map(|_| rng.gen_range(1..=1024u64))
                .collect();
            let mut z = BitVec::zeros(s.column_len());
            for &i in &items {
                z |= &s.column(i);
            }
            if let Some(x) = s.robust_detect_singleton(&z) {
                if !items.contains(&x) {
                    wrong += 1;
                }
            }
        }
        assert!(wrong as f64 / trials as f64 <= 1e-4, "wrong {wrong}");
    }

    fn binom(n: u32, k: u32) -> f64 {
        (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
    }
}
