use serde::{Deserialize, Serialize};

use crate::density::{optimize_design, singleton_only_nodes, Variant};
use crate::ecc::EccSpec;
use crate::error::{invalid, Error, Result};
use crate::pool_design::{DesignParams, GraphKind, PoolDesign};
use crate::prf::{derive, tag};
use crate::signature::{log2_exact, Sections, SignatureSpec};

use super::sweep::AxisSpec;

fn default_trials() -> usize {
    1
}

fn default_inflation() -> f64 {
    1.0
}

fn default_sections() -> Sections {
    Sections::Six
}

/// Parameter surface of one experiment. `M` and `d`/`p` may be left out and
/// derived from `eps` (SAFFRON) or `alpha` (Singleton-Only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub variant: Variant,
    pub n: u64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(rename = "M", default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub ecc: Option<EccSpec>,
    /// Noiseless SAFFRON section count (six or four).
    #[serde(default = "default_sections")]
    pub sections: Sections,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Robust right-node inflation factor.
    #[serde(default = "default_inflation")]
    pub inflation: f64,
    /// Sweep axes; their cartesian product is evaluated in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<AxisSpec>,
    /// Trials allowed to miss or misdeclare before `--strict` fails.
    #[serde(default)]
    pub max_failures: usize,
}

impl ExperimentConfig {
    pub fn new(variant: Variant, n: u64, k: usize) -> Self {
        ExperimentConfig {
            variant,
            n,
            k,
            d: None,
            p: None,
            m: None,
            eps: None,
            alpha: None,
            q: 0.0,
            ecc: None,
            sections: Sections::Six,
            trials: 1,
            master_seed: 0,
            inflation: 1.0,
            sweep: Vec::new(),
            max_failures: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Fills in derived fields and checks consistency.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        log2_exact(self.n)?;
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.k as u64 > self.n {
            return Err(invalid(format!("K = {} exceeds n = {}", self.k, self.n)));
        }
        if !(0.0..0.5).contains(&self.q) {
            return Err(Error::InvalidProbability {
                name: "q",
                value: self.q,
                range: "[0, 0.5)",
            });
        }
        if !(self.inflation >= 1.0) {
            return Err(invalid(format!("inflation must be >= 1, got {}", self.inflation)));
        }
        if self.q > 0.0 && !self.variant.is_robust() {
            return Err(invalid("noise needs a robust variant"));
        }
        let ecc = if self.variant.is_robust() {
            let ecc = self.ecc.ok_or_else(|| invalid("robust variants need an ecc block"))?;
            ecc.validate()?;
            Some(ecc)
        } else {
            None
        };
        let inflate = |m: usize| {
            if self.variant.is_robust() {
                (m as f64 * self.inflation).ceil() as usize
            } else {
                m
            }
        };

        let (right_nodes, kind) = if self.variant.is_singleton_only() {
            let m = match self.m {
                Some(m) => m,
                None => {
                    let alpha = self.alpha.ok_or_else(|| invalid("Singleton-Only needs M or alpha"))?;
                    inflate(singleton_only_nodes(self.k as u64, alpha)?)
                }
            };
            let p = match self.p {
                Some(p) => p,
                None if self.k > 0 => 1.0 / self.k as f64,
                None => return Err(invalid("Singleton-Only with K = 0 needs an explicit p")),
            };
            (m, GraphKind::Bernoulli { p })
        } else {
            let derived = match self.eps {
                Some(eps) => Some(optimize_design(eps)?),
                None => None,
            };
            let d = match (self.d, &derived) {
                (Some(d), _) => d,
                (None, Some(de)) => de.d_star,
                (None, None) => return Err(invalid("SAFFRON needs d or eps")),
            };
            let m = match (self.m, &derived) {
                (Some(m), _) => m,
                (None, Some(de)) => inflate((de.c * self.k as f64).ceil() as usize),
                (None, None) => return Err(invalid("SAFFRON needs M or eps")),
            };
            (m, GraphKind::LeftRegular { d })
        };
        if right_nodes == 0 {
            return Err(invalid("design has no right nodes"));
        }

        let (sections, complemented) = match self.variant {
            Variant::Saffron => (self.sections, true),
            Variant::SingletonOnly => (Sections::Two, true),
            Variant::RobustSaffron => (Sections::Six, true),
            Variant::RobustSingletonOnly => (Sections::Six, false),
        };
        if self.variant == Variant::Saffron && self.sections == Sections::Two {
            return Err(invalid("SAFFRON peeling needs four or six sections"));
        }

        let resolved = ResolvedConfig {
            base: self.clone(),
            right_nodes,
            kind,
            sections,
            complemented,
            ecc,
        };
        // surface construction errors (bad d, short ck) before any trial runs
        resolved.design_for(0)?;
        Ok(resolved)
    }
}

/// An [`ExperimentConfig`] with every derived quantity pinned down.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub base: ExperimentConfig,
    pub right_nodes: usize,
    pub kind: GraphKind,
    pub sections: Sections,
    pub complemented: bool,
    pub ecc: Option<EccSpec>,
}

/// Per-trial seeds, all domain-separated from one trial seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialSeeds {
    pub trial: u64,
    pub graph: u64,
    pub signature: u64,
    pub support: u64,
    pub noise: u64,
}

impl TrialSeeds {
    pub fn derive(master: u64, trial: usize) -> Self {
        let seed = derive(master, tag::TRIAL, trial as u64);
        TrialSeeds {
            trial: seed,
            graph: derive(seed, tag::GRAPH, 0),
            signature: derive(seed, tag::SIGNATURE, 0),
            support: derive(seed, tag::SUPPORT, 0),
            noise: derive(seed, tag::NOISE, 0),
        }
    }
}

impl ResolvedConfig {
    pub fn seeds(&self, trial: usize) -> TrialSeeds {
        TrialSeeds::derive(self.base.master_seed, trial)
    }

    /// A fresh draw from the design ensemble for one trial.
    pub fn design_for(&self, trial: usize) -> Result<PoolDesign> {
        let seeds = self.seeds(trial);
        self.design_with(seeds.graph, seeds.signature)
    }

    pub fn design_with(&self, graph_seed: u64, signature_seed: u64) -> Result<PoolDesign> {
        let signature = SignatureSpec::new(self.base.n, self.sections, signature_seed, self.complemented)?;
        let params = DesignParams {
            k: Some(self.base.k as u64),
            eps: self.base.eps,
            alpha: self.base.alpha,
            q: self.base.q,
        };
        PoolDesign::new(self.right_nodes, self.kind.clone(), graph_seed, signature, self.ecc, params)
    }

    /// Total tests `m` = `M` times the bits per right node.
    pub fn test_count(&self) -> Result<u64> {
        Ok(self.design_for(0)?.total_tests())
    }

    pub fn left_degree(&self) -> Option<usize> {
        match self.kind {
            GraphKind::LeftRegular { d } => Some(d),
            _ => None,
        }
    }

    pub fn edge_probability(&self) -> Option<f64> {
        match self.kind {
            GraphKind::Bernoulli { p } => Some(p),
            _ => None,
        }
    }
}
