//! Per-item signature columns.
//!
//! Column `i` is the vertical concatenation of `b_i`, its complement, and the
//! same pair for the two check indices `s1(i)` and `s2(i)`, where `b_i` is the
//! `L`-bit MSB-first encoding of `i - 1`. The `h x n` matrix is never built;
//! columns are produced on demand.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bitvec::BitVec;
use crate::error::{invalid, Error, Result};
use crate::prf::{self, tag};

/// Number of `L`-bit sections in a complemented column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Sections {
    /// `[b_i; !b_i]`, no checks.
    Two,
    /// One check pair (`s1`).
    Four,
    /// Two check pairs (`s1`, `s2`).
    Six,
}

impl Sections {
    pub fn count(self) -> usize {
        match self {
            Sections::Two => 2,
            Sections::Four => 4,
            Sections::Six => 6,
        }
    }

    /// Number of distinct index blocks (item plus checks).
    pub fn index_blocks(self) -> usize {
        self.count() / 2
    }
}

impl TryFrom<u8> for Sections {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            2 => Ok(Sections::Two),
            4 => Ok(Sections::Four),
            6 => Ok(Sections::Six),
            _ => Err(format!("sections must be 2, 4 or 6, got {v}")),
        }
    }
}

impl From<Sections> for u8 {
    fn from(s: Sections) -> u8 {
        s.count() as u8
    }
}

/// Anything that can hand out per-item signature columns.
pub trait SignatureCode {
    fn n(&self) -> u64;

    fn column_len(&self) -> usize;

    /// Column of a 1-based item index. Panics if the index is out of range.
    fn column(&self, item: u64) -> BitVec;
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct CheckTables {
    s1: Vec<u64>,
    s2: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignatureSpec {
    n: u64,
    bits: u32,
    sections: Sections,
    seed: u64,
    complemented: bool,
    tables: Option<Arc<CheckTables>>,
}

pub fn log2_exact(n: u64) -> Result<u32> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros())
}

/// `L`-bit MSB-first encoding of `i - 1`.
pub fn binary_repr(i: u64, bits: u32) -> Result<BitVec> {
    if bits == 0 || bits > 63 {
        return Err(invalid(format!("bit count {bits} outside 1..=63")));
    }
    let n = 1u64 << bits;
    if i == 0 || i > n {
        return Err(Error::ItemOutOfRange { item: i, n });
    }
    let mut v = BitVec::zeros(0);
    v.push_uint(i - 1, bits as usize);
    Ok(v)
}

impl SignatureSpec {
    /// PRF-backed check sequences keyed by `seed`.
    pub fn new(n: u64, sections: Sections, seed: u64, complemented: bool) -> Result<Self> {
        let bits = log2_exact(n)?;
        if bits > 63 {
            return Err(invalid("n must be at most 2^63"));
        }
        Ok(SignatureSpec {
            n,
            bits,
            sections,
            seed,
            complemented,
            tables: None,
        })
    }

    /// Fixture constructor with explicit 1-based check sequences.
    pub fn with_check_tables(
        n: u64,
        sections: Sections,
        complemented: bool,
        s1: Vec<u64>,
        s2: Vec<u64>,
    ) -> Result<Self> {
        let mut spec = SignatureSpec::new(n, sections, 0, complemented)?;
        for s in [&s1, &s2] {
            if s.len() as u64 != n {
                return Err(Error::LengthMismatch {
                    expected: n as usize,
                    actual: s.len(),
                });
            }
            if let Some(&bad) = s.iter().find(|&&v| v == 0 || v > n) {
                return Err(Error::ItemOutOfRange { item: bad, n });
            }
        }
        spec.tables = Some(Arc::new(CheckTables { s1, s2 }));
        Ok(spec)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Bits per section, `log2 n`.
    pub fn bits(&self) -> usize {
        self.bits as usize
    }

    pub fn sections(&self) -> Sections {
        self.sections
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn complemented(&self) -> bool {
        self.complemented
    }

    pub fn has_fixture_tables(&self) -> bool {
        self.tables.is_some()
    }

    pub fn check_item(&self, i: u64) -> Result<()> {
        if i == 0 || i > self.n {
            return Err(Error::ItemOutOfRange { item: i, n: self.n });
        }
        Ok(())
    }

    /// `(s1(i), s2(i))`, both in `1..=n`.
    pub fn check_sequences(&self, i: u64) -> Result<(u64, u64)> {
        self.check_item(i)?;
        Ok(self.checks_unchecked(i))
    }

    #[inline]
    pub(crate) fn checks_unchecked(&self, i: u64) -> (u64, u64) {
        match &self.tables {
            Some(t) => (t.s1[(i - 1) as usize], t.s2[(i - 1) as usize]),
            None => {
                let m = self.n - 1;
                (
                    1 + (prf::derive(self.seed, tag::CHECK_S1, i) & m),
                    1 + (prf::derive(self.seed, tag::CHECK_S2, i) & m),
                )
            }
        }
    }

    /// Item indices whose encodings fill the index blocks: `i`, then `s1(i)`,
    /// `s2(i)` as far as the section count allows.
    pub(crate) fn block_items(&self, i: u64) -> ([u64; 3], usize) {
        let (s1, s2) = self.checks_unchecked(i);
        ([i, s1, s2], self.sections.index_blocks())
    }

    pub fn signature_column(&self, i: u64) -> Result<BitVec> {
        self.check_item(i)?;
        Ok(self.column(i))
    }
}

impl SignatureCode for SignatureSpec {
    fn n(&self) -> u64 {
        self.n
    }

    fn column_len(&self) -> usize {
        let blocks = self.sections.index_blocks() * if self.complemented { 2 } else { 1 };
        blocks * self.bits()
    }

    fn column(&self, item: u64) -> BitVec {
        assert!(item >= 1 && item <= self.n, "item {item} out of range");
        let l = self.bits();
        let (items, blocks) = self.block_items(item);
        let mut col = BitVec::zeros(0);
        for &it in &items[..blocks] {
            col.push_uint(it - 1, l);
            if self.complemented {
                col.push_uint(!(it - 1), l);
            }
        }
        col
    }
}

#[derive(Serialize, Deserialize)]
struct SignatureSpecRepr {
    n: u64,
    #[serde(rename = "L")]
    bits: u32,
    sections: Sections,
    seed: u64,
    complemented: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s1: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s2: Option<Vec<u64>>,
}

impl Serialize for SignatureSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SignatureSpecRepr {
            n: self.n,
            bits: self.bits,
            sections: self.sections,
            seed: self.seed,
            complemented: self.complemented,
            s1: self.tables.as_ref().map(|t| t.s1.clone()),
            s2: self.tables.as_ref().map(|t| t.s2.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SignatureSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = SignatureSpecRepr::deserialize(d)?;
        let spec = match (r.s1, r.s2) {
            (Some(s1), Some(s2)) => {
                SignatureSpec::with_check_tables(r.n, r.sections, r.complemented, s1, s2)
            }
            (None, None) => SignatureSpec::new(r.n, r.sections, r.seed, r.complemented),
            _ => Err(invalid("s1 and s2 must be given together")),
        }
        .map_err(D::Error::custom)?;
        if spec.bits != r.bits {
            return Err(D::Error::custom(format!(
                "L = {} inconsistent with n = {}",
                r.bits, r.n
            )));
        }
        let mut spec = spec;
        spec.seed = r.seed;
        Ok(spec)
    }
}

#[cfg(test)]
pub(crate) mod fixture {
    use super::*;

    pub const S1: [u64; 8] = [5, 2, 4, 8, 7, 1, 3, 6];
    pub const S2: [u64; 8] = [3, 1, 5, 6, 3, 8, 2, 7];

    /// n = 8 worked example with explicit check sequences.
    pub fn spec() -> SignatureSpec {
        SignatureSpec::with_check_tables(8, Sections::Six, true, S1.to_vec(), S2.to_vec()).unwrap()
    }

    pub fn bits(s: &str) -> BitVec {
        BitVec::from_bits(s.chars().filter(|c| !c.is_whitespace()).map(|c| c == '1'))
    }
}

#[cfg(test)]
mod tests {
    use super::fixture::*;
    use super::*;

    #[test]
    fn binary_repr_examples() {
        assert_eq!(binary_repr(1, 3).unwrap(), bits("000"));
        assert_eq!(binary_repr(3, 3).unwrap(), bits("010"));
        assert_eq!(binary_repr(8, 3).unwrap(), bits("111"));
        assert_eq!(binary_repr(5, 3).unwrap(), bits("100"));
        assert!(matches!(binary_repr(0, 3), Err(Error::ItemOutOfRange { .. })));
        assert!(matches!(binary_repr(9, 3), Err(Error::ItemOutOfRange { .. })));
    }

    #[test]
    fn binary_repr_round_trip() {
        for l in 1..=16u32 {
            for i in 1..=(1u64 << l) {
                let v = binary_repr(i, l).unwrap();
                assert_eq!(v.read_uint(0, l as usize), i - 1);
            }
        }
    }

    #[test]
    fn fixture_check_sequences() {
        let spec = fixture::spec();
        assert_eq!(spec.check_sequences(8).unwrap(), (6, 7));
        assert_eq!(spec.check_sequences(1).unwrap(), (5, 3));
        assert!(spec.check_sequences(9).is_err());
    }

    #[test]
    fn fixture_column_three() {
        let spec = fixture::spec();
        assert_eq!(
            spec.signature_column(3).unwrap(),
            bits("010 101 011 100 100 011")
        );
    }

    #[test]
    fn fixture_columns_or_to_third_measurement() {
        let spec = fixture::spec();
        let mut z = spec.signature_column(1).unwrap();
        z |= &spec.signature_column(8).unwrap();
        assert_eq!(z, bits("1,1,1,1,1,1,1,0,1,0,1,1,1,1,0,1,0,1".replace(',', "").as_str()));
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(
            SignatureSpec::new(12, Sections::Six, 0, true),
            Err(Error::NotPowerOfTwo(12))
        ));
    }

    #[test]
    fn prf_checks_are_pure_and_in_range() {
        let a = SignatureSpec::new(1 << 10, Sections::Six, 99, true).unwrap();
        let b = SignatureSpec::new(1 << 10, Sections::Six, 99, true).unwrap();
        for i in 1..=1024 {
            let (s1, s2) = a.check_sequences(i).unwrap();
            assert!((1..=1024).contains(&s1) && (1..=1024).contains(&s2));
            assert_eq!((s1, s2), b.check_sequences(i).unwrap());
        }
    }

    #[test]
    fn prf_checks_pass_chi_square() {
        // 1024 draws into 64 buckets of 16 consecutive values; 63 dof,
        // the 0.999 quantile is about 103.4
        let spec = SignatureSpec::new(1 << 10, Sections::Six, 2024, true).unwrap();
        for which in 0..2 {
            let mut hist = [0u32; 64];
            for i in 1..=1024 {
                let (s1, s2) = spec.check_sequences(i).unwrap();
                let v = if which == 0 { s1 } else { s2 };
                hist[((v - 1) / 16) as usize] += 1;
            }
            let chi: f64 = hist
                .iter()
                .map(|&c| (c as f64 - 16.0).powi(2) / 16.0)
                .sum();
            assert!(chi < 103.4, "chi-square {chi}");
        }
    }

    #[test]
    fn weight_law_exhaustive_n1024() {
        let spec = SignatureSpec::new(1 << 10, Sections::Six, 5, true).unwrap();
        let l = spec.bits();
        let cols: Vec<BitVec> = (1..=1024).map(|i| spec.column(i)).collect();
        for (i, u) in cols.iter().enumerate() {
            assert_eq!(u.count_ones(), 3 * l);
            for u2 in &cols[i + 1..] {
                let mut z = u.clone();
                z |= u2;
                assert!(z.count_ones() > 3 * l);
            }
        }
    }

    #[test]
    fn plain_layout_has_no_complements() {
        let spec = SignatureSpec::new(16, Sections::Six, 1, false).unwrap();
        assert_eq!(spec.column_len(), 12);
        let (s1, s2) = spec.check_sequences(5).unwrap();
        let col = spec.column(5);
        assert_eq!(col.read_uint(0, 4), 4);
        assert_eq!(col.read_uint(4, 4), s1 - 1);
        assert_eq!(col.read_uint(8, 4), s2 - 1);
    }

    #[test]
    fn json_round_trip() {
        let spec = SignatureSpec::new(1 << 32, Sections::Four, 77, true).unwrap();
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"n":4294967296,"L":32,"sections":4,"seed":77,"complemented":true}"#);
        assert_eq!(serde_json::from_str::<SignatureSpec>(&s).unwrap(), spec);

        let f = fixture::spec();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<SignatureSpec>(&s).unwrap(), f);

        assert!(serde_json::from_str::<SignatureSpec>(
            r#"{"n":8,"L":4,"sections":6,"seed":0,"complemented":true}"#
        )
        .is_err());
    }
}
