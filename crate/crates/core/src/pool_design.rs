//! Bipartite pooling graph between items (left) and right nodes.
//!
//! Adjacency is derived on demand from `graph_seed`, in both directions, so an
//! `M x n` matrix is never held in memory. Items are 1-based; right nodes are
//! 0-based slots into the measurement set.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitvec::BitVec;
use crate::ecc::{EccSpec, RobustSignatureSpec};
use crate::error::{invalid, Error, Result};
use crate::prf::{self, tag};
use crate::signature::{SignatureCode, SignatureSpec};

/// Largest `n` for which [`PoolDesign::dense_matrix`] will materialize `T`.
pub const DENSE_EXPORT_LIMIT: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    /// Every item joins exactly `d` distinct right nodes, uniformly at random.
    LeftRegular { d: usize },
    /// Every (item, right node) pair is an edge with probability `p`.
    Bernoulli { p: f64 },
    /// Explicit per-item neighbor lists (0-based right nodes); fixtures only.
    Explicit { adjacency: Vec<Vec<usize>> },
}

/// Targets the design was derived from. Informational; decoding ignores them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    #[serde(rename = "K")]
    pub k: Option<u64>,
    pub eps: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(default)]
    pub q: f64,
}

/// Signature columns a design hands out: plain or ECC-encoded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DesignCode {
    Plain(SignatureSpec),
    Robust(RobustSignatureSpec),
}

impl SignatureCode for DesignCode {
    fn n(&self) -> u64 {
        match self {
            DesignCode::Plain(s) => s.n(),
            DesignCode::Robust(r) => r.n(),
        }
    }

    fn column_len(&self) -> usize {
        match self {
            DesignCode::Plain(s) => s.column_len(),
            DesignCode::Robust(r) => r.column_len(),
        }
    }

    fn column(&self, item: u64) -> BitVec {
        match self {
            DesignCode::Plain(s) => s.column(item),
            DesignCode::Robust(r) => r.column(item),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct PoolDesignRepr {
    n: u64,
    #[serde(rename = "M")]
    m: usize,
    #[serde(flatten)]
    kind: GraphKind,
    graph_seed: u64,
    signature: SignatureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ecc: Option<EccSpec>,
    #[serde(default)]
    params: DesignParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoolDesignRepr", into = "PoolDesignRepr")]
pub struct PoolDesign {
    repr: PoolDesignRepr,
    code: DesignCode,
}

impl TryFrom<PoolDesignRepr> for PoolDesign {
    type Error = Error;

    fn try_from(repr: PoolDesignRepr) -> Result<Self> {
        if repr.signature.n() != repr.n {
            return Err(invalid(format!(
                "signature n = {} but design n = {}",
                repr.signature.n(),
                repr.n
            )));
        }
        match &repr.kind {
            GraphKind::LeftRegular { d } => {
                if *d == 0 || *d > repr.m {
                    return Err(invalid(format!("left degree d = {d} must lie in 1..=M = {}", repr.m)));
                }
            }
            GraphKind::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) || p.is_nan() {
                    return Err(Error::InvalidProbability {
                        name: "p",
                        value: *p,
                        range: "[0, 1]",
                    });
                }
            }
            GraphKind::Explicit { adjacency } => {
                if adjacency.len() as u64 != repr.n {
                    return Err(Error::LengthMismatch {
                        expected: repr.n as usize,
                        actual: adjacency.len(),
                    });
                }
                for nbrs in adjacency {
                    if nbrs.iter().any(|&r| r >= repr.m) {
                        return Err(invalid("explicit adjacency names a right node >= M"));
                    }
                    if nbrs.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(invalid("explicit adjacency lists must be strictly increasing"));
                    }
                }
            }
        }
        let code = match repr.ecc {
            Some(ecc) => DesignCode::Robust(RobustSignatureSpec::new(repr.signature.clone(), ecc)?),
            None => {
                if !repr.signature.complemented() {
                    return Err(invalid("noiseless designs need complemented signatures"));
                }
                DesignCode::Plain(repr.signature.clone())
            }
        };
        Ok(PoolDesign { repr, code })
    }
}

impl From<PoolDesign> for PoolDesignRepr {
    fn from(d: PoolDesign) -> Self {
        d.repr
    }
}

impl PoolDesign {
    pub fn new(
        m: usize,
        kind: GraphKind,
        graph_seed: u64,
        signature: SignatureSpec,
        ecc: Option<EccSpec>,
        params: DesignParams,
    ) -> Result<Self> {
        PoolDesign::try_from(PoolDesignRepr {
            n: signature.n(),
            m,
            kind,
            graph_seed,
            signature,
            ecc,
            params,
        })
    }

    /// Fixture constructor from an explicit `M x n` 0/1 incidence matrix.
    pub fn from_matrix(rows: &[Vec<u8>], signature: SignatureSpec) -> Result<Self> {
        let n = signature.n() as usize;
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        let adjacency = (0..n)
            .map(|i| (0..rows.len()).filter(|&r| rows[r][i] != 0).collect())
            .collect();
        PoolDesign::new(
            rows.len(),
            GraphKind::Explicit { adjacency },
            0,
            signature,
            None,
            DesignParams::default(),
        )
    }

    pub fn n(&self) -> u64 {
        self.repr.n
    }

    /// Number of right nodes `M`.
    pub fn right_nodes(&self) -> usize {
        self.repr.m
    }

    pub fn kind(&self) -> &GraphKind {
        &self.repr.kind
    }

    pub fn graph_seed(&self) -> u64 {
        self.repr.graph_seed
    }

    pub fn signature(&self) -> &SignatureSpec {
        &self.repr.signature
    }

    pub fn ecc(&self) -> Option<EccSpec> {
        self.repr.ecc
    }

    pub fn params(&self) -> &DesignParams {
        &self.repr.params
    }

    pub fn code(&self) -> &DesignCode {
        &self.code
    }

    pub fn is_robust(&self) -> bool {
        self.repr.ecc.is_some()
    }

    /// Tests per right node (column length).
    pub fn tests_per_node(&self) -> usize {
        self.code.column_len()
    }

    /// Total test count `m`.
    pub fn total_tests(&self) -> u64 {
        self.repr.m as u64 * self.tests_per_node() as u64
    }

    pub fn neighbors_of_item(&self, i: u64) -> Result<Vec<usize>> {
        self.repr.signature.check_item(i)?;
        Ok(self.neighbors(i))
    }

    /// Sorted 0-based right nodes adjacent to item `i` (1-based, unchecked).
    pub(crate) fn neighbors(&self, i: u64) -> Vec<usize> {
        match &self.repr.kind {
            GraphKind::LeftRegular { d } => {
                let seed = prf::derive(self.repr.graph_seed, tag::LEFT_REGULAR, i);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut v = rand::seq::index::sample(&mut rng, self.repr.m, *d).into_vec();
                v.sort_unstable();
                v
            }
            GraphKind::Bernoulli { .. } => (0..self.repr.m).filter(|&r| self.bernoulli_edge(i, r)).collect(),
            GraphKind::Explicit { adjacency } => adjacency[(i - 1) as usize].clone(),
        }
    }

    fn bernoulli_edge(&self, i: u64, node: usize) -> bool {
        let GraphKind::Bernoulli { p } = self.repr.kind else {
            unreachable!()
        };
        let h = prf::derive2(self.repr.graph_seed, tag::BERNOULLI, i, node as u64);
        ((h >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < p
    }

    /// Whether item `i` feeds right node `node`.
    pub fn is_connected(&self, i: u64, node: usize) -> Result<bool> {
        self.repr.signature.check_item(i)?;
        if node >= self.repr.m {
            return Err(invalid(format!("right node {node} >= M = {}", self.repr.m)));
        }
        Ok(match &self.repr.kind {
            GraphKind::Bernoulli { .. } => self.bernoulli_edge(i, node),
            _ => self.neighbors(i).binary_search(&node).is_ok(),
        })
    }

    /// Pruned degree of every right node: how many of `defective` it touches.
    pub fn pruned_degrees(&self, defective: &[u64]) -> Result<Vec<usize>> {
        let mut deg = vec![0usize; self.repr.m];
        for &i in defective {
            for r in self.neighbors_of_item(i)? {
                deg[r] += 1;
            }
        }
        Ok(deg)
    }

    /// Histogram of pruned right degrees over `0..=|defective|`.
    pub fn right_node_degree_stats(&self, defective: &[u64]) -> Result<Vec<usize>> {
        let mut hist = vec![0usize; defective.len() + 1];
        for d in self.pruned_degrees(defective)? {
            hist[d] += 1;
        }
        Ok(hist)
    }

    /// Dense `M x n` incidence matrix; refused above [`DENSE_EXPORT_LIMIT`].
    pub fn dense_matrix(&self) -> Result<Vec<Vec<u8>>> {
        if self.repr.n > DENSE_EXPORT_LIMIT {
            return Err(invalid(format!(
                "dense export refused for n = {} > {DENSE_EXPORT_LIMIT}",
                self.repr.n
            )));
        }
        let mut rows = vec![vec![0u8; self.repr.n as usize]; self.repr.m];
        for i in 1..=self.repr.n {
            for r in self.neighbors(i) {
                rows[r][(i - 1) as usize] = 1;
            }
        }
        Ok(rows)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::Sections;
    use rand::Rng;

    fn left_regular(n: u64, m: usize, d: usize, seed: u64) -> PoolDesign {
        let sig = SignatureSpec::new(n, Sections::Six, seed ^ 1, true).unwrap();
        PoolDesign::new(m, GraphKind::LeftRegular { d }, seed, sig, None, DesignParams::default()).unwrap()
    }

    #[test]
    fn fixture_neighbors() {
        let d = fixture::design();
        assert_eq!(d.neighbors_of_item(1).unwrap(), vec![1, 2]);
        assert_eq!(d.neighbors_of_item(3).unwrap(), vec![0, 1, 3]);
        assert!(d.neighbors_of_item(9).is_err());
    }

    #[test]
    fn fixture_degrees() {
        let d = fixture::design();
        assert_eq!(d.pruned_degrees(&[1, 3, 8]).unwrap(), vec![1, 3, 2, 2]);
        assert_eq!(d.right_node_degree_stats(&[1, 3, 8]).unwrap(), vec![0, 1, 2, 1]);
        assert_eq!(d.right_node_degree_stats(&[]).unwrap(), vec![4]);
    }

    #[test]
    fn left_regular_is_regular_and_stable() {
        let d = left_regular(1 << 32, 1455, 12, 9);
        let mut rng = rand::thread_rng();
        for _ in 0..200 {
            let i = rng.gen_range(1..=(1u64 << 32));
            let v = d.neighbors_of_item(i).unwrap();
            assert_eq!(v.len(), 12);
            assert!(v.windows(2).all(|w| w[0] < w[1]));
            assert!(v.iter().all(|&r| r < 1455));
            assert_eq!(v, d.neighbors_of_item(i).unwrap());
        }
    }

    #[test]
    fn left_regular_uniform_over_seeds() {
        // item 1 picks node 0 with frequency d / M
        let (m, dd, seeds) = (50usize, 5usize, 20_000u64);
        let hits = (0..seeds)
            .filter(|&s| left_regular(1024, m, dd, s).neighbors(1).contains(&0))
            .count();
        let p = dd as f64 / m as f64;
        let sigma = (p * (1.0 - p) / seeds as f64).sqrt();
        assert!((hits as f64 / seeds as f64 - p).abs() < 4.0 * sigma);
    }

    #[test]
    fn pruned_degrees_approach_poisson() {
        // K = 100, d = 7, M = 700: lambda = 1
        let (k, dd, m) = (100usize, 7usize, 700usize);
        let mut hist = vec![0f64; k + 1];
        let mut rng = rand::thread_rng();
        for seed in 0..200u64 {
            let d = left_regular(1 << 16, m, dd, seed);
            let items: Vec<u64> = rand::seq::index::sample(&mut rng, 1 << 16, k)
                .into_iter()
                .map(|i| i as u64 + 1)
                .collect();
            for (deg, c) in d.right_node_degree_stats(&items).unwrap().into_iter().enumerate() {
                hist[deg] += c as f64;
            }
        }
        let total: f64 = hist.iter().sum();
        let mut pois = (-1f64).exp();
        let mut tv = 0.0;
        for (deg, h) in hist.iter().enumerate() {
            if deg > 0 {
                pois /= deg as f64;
            }
            tv += (h / total - pois).abs();
        }
        assert!(tv / 2.0 < 0.05, "total variation {}", tv / 2.0);
    }

    #[test]
    fn adjacency_symmetry() {
        let d = left_regular(1 << 10, 40, 4, 3);
        for i in 1..=1024u64 {
            let nb = d.neighbors_of_item(i).unwrap();
            for r in 0..40 {
                assert_eq!(d.is_connected(i, r).unwrap(), nb.contains(&r));
            }
        }
    }

    #[test]
    fn bernoulli_edges_have_rate_p() {
        let sig = SignatureSpec::new(1 << 16, Sections::Two, 0, true).unwrap();
        let d = PoolDesign::new(1000, GraphKind::Bernoulli { p: 0.02 }, 5, sig, None, DesignParams::default()).unwrap();
        let edges: usize = (1..=500u64).map(|i| d.neighbors(i).len()).sum();
        let expected = 500.0 * 1000.0 * 0.02;
        assert!((edges as f64 - expected).abs() < 4.0 * (expected * 0.98).sqrt());
        assert!(d.is_connected(1, d.neighbors(1)[0]).unwrap());
    }

    #[test]
    fn validation() {
        let sig = SignatureSpec::new(16, Sections::Six, 0, true).unwrap();
        let p = DesignParams::default();
        assert!(PoolDesign::new(4, GraphKind::LeftRegular { d: 5 }, 0, sig.clone(), None, p.clone()).is_err());
        assert!(PoolDesign::new(4, GraphKind::Bernoulli { p: 1.5 }, 0, sig.clone(), None, p.clone()).is_err());
        let plain = SignatureSpec::new(16, Sections::Six, 0, false).unwrap();
        assert!(PoolDesign::new(4, GraphKind::LeftRegular { d: 2 }, 0, plain.clone(), None, p.clone()).is_err());
        assert!(PoolDesign::new(4, GraphKind::LeftRegular { d: 2 }, 0, plain, Some(EccSpec::new(4, 12).unwrap()), p).is_ok());
    }

    #[test]
    fn dense_export_guard() {
        assert_eq!(fixture::design().dense_matrix().unwrap()[0], fixture::T[0].to_vec());
        assert!(left_regular(1 << 17, 10, 2, 0).dense_matrix().is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let sig = SignatureSpec::new(1 << 32, Sections::Six, 17, true).unwrap();
        let params = DesignParams { k: Some(128), eps: Some(1e-6), alpha: None, q: 0.02 };
        let d = PoolDesign::new(1455, GraphKind::LeftRegular { d: 12 }, 99, sig, Some(EccSpec::new(4, 12).unwrap()), params).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.starts_with(r#"{"n":4294967296,"M":1455,"kind":"left_regular","d":12,"graph_seed":99,"#), "{s}");
        let back: PoolDesign = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);

        let sig = SignatureSpec::new(1 << 16, Sections::Two, 3, true).unwrap();
        let b = PoolDesign::new(1064, GraphKind::Bernoulli { p: 0.1 + 0.2 }, 1, sig, None, DesignParams::default()).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::to_string(&serde_json::from_str::<PoolDesign>(&s).unwrap()).unwrap(), s);

        let f = fixture::design();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<PoolDesign>(&s).unwrap(), f);
    }
}
