//! Boolean-OR measurements and the binary symmetric channel.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitvec::BitVec;
use crate::error::{invalid, Error, Result};
use crate::pool_design::PoolDesign;
use crate::signature::SignatureCode;

/// Sorted set of defective items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportVector {
    n: u64,
    defective: Vec<u64>,
}

impl SupportVector {
    pub fn new(n: u64, items: impl IntoIterator<Item = u64>) -> Result<Self> {
        let set: BTreeSet<u64> = items.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&i| i == 0 || i > n) {
            return Err(Error::ItemOutOfRange { item: bad, n });
        }
        Ok(SupportVector {
            n,
            defective: set.into_iter().collect(),
        })
    }

    /// `k` distinct items drawn uniformly from `1..=n` (Floyd's algorithm).
    pub fn sample(n: u64, k: usize, seed: u64) -> Result<Self> {
        if k as u64 > n {
            return Err(invalid(format!("cannot draw K = {k} distinct items from n = {n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = BTreeSet::new();
        for j in (n - k as u64)..n {
            let t = rng.gen_range(0..=j);
            if !set.insert(t + 1) {
                set.insert(j + 1);
            }
        }
        Ok(SupportVector {
            n,
            defective: set.into_iter().collect(),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn items(&self) -> &[u64] {
        &self.defective
    }

    pub fn k(&self) -> usize {
        self.defective.len()
    }

    pub fn contains(&self, i: u64) -> bool {
        self.defective.binary_search(&i).is_ok()
    }
}

/// One measurement vector per right node.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub n: u64,
    pub bits: usize,
    pub noise_q: f64,
    pub noise_seed: Option<u64>,
    pub vectors: Vec<BitVec>,
}

impl MeasurementSet {
    pub fn right_nodes(&self) -> usize {
        self.vectors.len()
    }

    pub fn weights(&self) -> Vec<usize> {
        self.vectors.iter().map(BitVec::count_ones).collect()
    }

    pub fn total_bits(&self) -> usize {
        self.bits * self.vectors.len()
    }
}

/// OR of the signature columns of the defective items on each right node.
/// Only the pruned graph is walked, so the cost is `O(K d h)`.
pub fn measure(design: &PoolDesign, x: &SupportVector) -> Result<MeasurementSet> {
    if x.n() != design.n() {
        return Err(invalid(format!(
            "support over n = {} does not match design n = {}",
            x.n(),
            design.n()
        )));
    }
    let code = design.code();
    let bits = code.column_len();
    let mut vectors = vec![BitVec::zeros(bits); design.right_nodes()];
    for &i in x.items() {
        let col = code.column(i);
        for r in design.neighbors(i) {
            vectors[r] |= &col;
        }
    }
    Ok(MeasurementSet {
        n: design.n(),
        bits,
        noise_q: 0.0,
        noise_seed: None,
        vectors,
    })
}

/// Flips every bit independently with probability `q`, deterministically in
/// `seed`. Flip positions are drawn by geometric skipping over the
/// concatenated measurement bits.
pub fn apply_noise(ms: &MeasurementSet, q: f64, seed: u64) -> Result<MeasurementSet> {
    if !(0.0..0.5).contains(&q) {
        return Err(Error::InvalidProbability {
            name: "q",
            value: q,
            range: "[0, 1/2)",
        });
    }
    let mut out = ms.clone();
    // composing two channels gives crossover q1 + q2 - 2 q1 q2
    out.noise_q = ms.noise_q + q - 2.0 * ms.noise_q * q;
    out.noise_seed = Some(seed);
    if q == 0.0 || ms.bits == 0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = ms.total_bits() as u64;
    let log1mq = (-q).ln_1p();
    let mut pos: u64 = 0;
    loop {
        // number of non-flipped bits before the next flip ~ Geometric(q)
        let u: f64 = 1.0 - rng.gen::<f64>();
        let skip = (u.ln() / log1mq).floor();
        if !skip.is_finite() || skip >= (total - pos) as f64 {
            break;
        }
        pos += skip as u64;
        let (node, bit) = ((pos / ms.bits as u64) as usize, (pos % ms.bits as u64) as usize);
        out.vectors[node].flip(bit);
        pos += 1;
        if pos >= total {
            break;
        }
    }
    Ok(out)
}

pub const DUMP_MAGIC: &str = "SAFFRON-MS v1";

/// `SAFFRON-MS v1 n=<n> M=<M> bits=<len> q=<q>` then one hex vector per line.
pub fn write_dump(ms: &MeasurementSet) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{DUMP_MAGIC} n={} M={} bits={} q={}",
        ms.n,
        ms.vectors.len(),
        ms.bits,
        ms.noise_q
    )
    .unwrap();
    for v in &ms.vectors {
        s.push_str(&v.to_hex());
        s.push('\n');
    }
    s
}

pub fn read_dump(text: &str) -> Result<MeasurementSet> {
    let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty input".into()))?;
    let rest = header
        .strip_prefix(DUMP_MAGIC)
        .ok_or_else(|| parse_err(1, format!("expected header starting with {DUMP_MAGIC:?}")))?;
    let mut fields = [None::<&str>; 4];
    for tok in rest.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("malformed header field {tok:?}")))?;
        let slot = match key {
            "n" => 0,
            "M" => 1,
            "bits" => 2,
            "q" => 3,
            _ => return Err(parse_err(1, format!("unknown header field {key:?}"))),
        };
        fields[slot] = Some(value);
    }
    let get = |slot: usize, name: &str| {
        fields[slot].ok_or_else(|| parse_err(1, format!("header missing {name}")))
    };
    let n: u64 = get(0, "n")?
        .parse()
        .map_err(|e| parse_err(1, format!("n: {e}")))?;
    let m: usize = get(1, "M")?
        .parse()
        .map_err(|e| parse_err(1, format!("M: {e}")))?;
    let bits: usize = get(2, "bits")?
        .parse()
        .map_err(|e| parse_err(1, format!("bits: {e}")))?;
    let q: f64 = get(3, "q")?
        .parse()
        .map_err(|e| parse_err(1, format!("q: {e}")))?;

    let mut vectors = Vec::with_capacity(m);
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        if vectors.len() == m {
            if line.trim().is_empty() {
                continue;
            }
            return Err(parse_err(lineno, format!("more than M = {m} vectors")));
        }
        let v = BitVec::from_hex(line.trim_end(), bits)
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        vectors.push(v);
    }
    if vectors.len() != m {
        return Err(parse_err(
            vectors.len() + 2,
            format!("truncated: expected {m} vectors, found {}", vectors.len()),
        ));
    }
    Ok(MeasurementSet {
        n,
        bits,
        noise_q: q,
        noise_seed: None,
        vectors,
    })
}
