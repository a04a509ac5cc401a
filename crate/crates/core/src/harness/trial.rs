use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{apply_noise, measure, SupportVector};
use crate::density::Variant;
use crate::error::Result;
use crate::peeling::{decode_singleton_only, peel, DecodeResult};
use crate::pool_design::PoolDesign;

use super::config::ResolvedConfig;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub identified: usize,
    pub missed: usize,
    pub false_positives: usize,
    pub decode_ns: u64,
    /// Total test count `m`.
    pub tests: u64,
    pub attempts: usize,
    /// The attempt bound `(1 + d) K + M`, when the graph is left-regular.
    pub attempt_bound: Option<usize>,
    pub iterations: usize,
}

impl TrialRecord {
    pub fn exact(&self) -> bool {
        self.missed == 0 && self.false_positives == 0
    }

    /// Missed fraction of the support; zero when `K = 0`.
    pub fn unidentified_fraction(&self) -> f64 {
        if self.k == 0 {
            0.0
        } else {
            self.missed as f64 / self.k as f64
        }
    }
}

pub fn decode(variant: Variant, ms: &crate::channel::MeasurementSet, design: &PoolDesign) -> Result<DecodeResult> {
    if variant.is_singleton_only() {
        decode_singleton_only(ms, design)
    } else {
        peel(ms, design)
    }
}

/// One end-to-end trial: draw a design and support, measure, add noise, decode.
pub fn run_trial(cfg: &ResolvedConfig, trial: usize) -> Result<TrialRecord> {
    let seeds = cfg.seeds(trial);
    let design = cfg.design_with(seeds.graph, seeds.signature)?;
    let support = SupportVector::sample(cfg.base.n, cfg.base.k, seeds.support)?;
    let mut ms = measure(&design, &support)?;
    if cfg.base.q > 0.0 {
        ms = apply_noise(&ms, cfg.base.q, seeds.noise)?;
    }

    let start = Instant::now();
    let result = decode(cfg.base.variant, &ms, &design)?;
    let decode_ns = start.elapsed().as_nanos() as u64;

    let false_positives = result.false_positives(&support).len();
    Ok(TrialRecord {
        trial,
        seed: seeds.trial,
        k: support.k(),
        identified: result.identified.len(),
        missed: result.missed(&support).len(),
        false_positives,
        decode_ns,
        tests: design.total_tests(),
        attempts: result.attempts,
        attempt_bound: cfg.left_degree().map(|d| (1 + d) * support.k() + design.right_nodes()),
        iterations: result.iterations,
    })
}

/// Aggregate statistics over a batch of trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub exact_trials: usize,
    pub mean_unidentified: f64,
    pub std_unidentified: f64,
    /// Mean per-trial false declarations divided by `K` (or by 1 when `K = 0`).
    pub false_positive_rate: f64,
    pub trials_with_false_positives: usize,
    pub mean_decode_ns: f64,
    pub max_attempt_ratio: f64,
    /// Set when `K = 0`, where the unidentified fraction 0/0 is reported as 0.
    pub k_zero: bool,
}

impl Summary {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let count = records.len().max(1) as f64;
        let fractions: Vec<f64> = records.iter().map(TrialRecord::unidentified_fraction).collect();
        let mean = fractions.iter().sum::<f64>() / count;
        let var = if records.len() > 1 {
            fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (records.len() - 1) as f64
        } else {
            0.0
        };
        Summary {
            trials: records.len(),
            exact_trials: records.iter().filter(|r| r.exact()).count(),
            mean_unidentified: mean,
            std_unidentified: var.sqrt(),
            false_positive_rate: records
                .iter()
                .map(|r| r.false_positives as f64 / r.k.max(1) as f64)
                .sum::<f64>()
                / count,
            trials_with_false_positives: records.iter().filter(|r| r.false_positives > 0).count(),
            mean_decode_ns: records.iter().map(|r| r.decode_ns as f64).sum::<f64>() / count,
            max_attempt_ratio: records
                .iter()
                .filter_map(|r| r.attempt_bound.map(|b| r.attempts as f64 / b as f64))
                .fold(0.0, f64::max),
            k_zero: records.iter().any(|r| r.k == 0),
        }
    }

    pub fn failures(&self) -> usize {
        self.trials - self.exact_trials
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Simulation {
    #[serde(rename = "M")]
    pub right_nodes: usize,
    #[serde(rename = "m")]
    pub tests: u64,
    pub summary: Summary,
    pub records: Vec<TrialRecord>,
}

/// Runs every trial in parallel; records come back in trial order.
pub fn simulate(cfg: &ResolvedConfig) -> Result<Simulation> {
    let records = (0..cfg.base.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Simulation {
        right_nodes: cfg.right_nodes,
        tests: cfg.test_count()?,
        summary: Summary::from_records(&records),
        records,
    })
}
