use std::time::Instant;

use serde::Serialize;

use crate::channel::{apply_noise, measure, SupportVector};
use crate::error::{invalid, Result};

use super::config::ExperimentConfig;
use super::sweep::Axis;
use super::trial::decode;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub value: f64,
    pub n: u64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub right_nodes: usize,
    pub samples: usize,
    pub median_ns: f64,
    pub mean_ns: f64,
    pub min_ns: f64,
}

/// Times decoding along one axis (typically `K` or `log2_n`). Each point uses
/// `cfg.trials` independent instances decoded `repeats` times apiece; the
/// measurement generation is excluded from the timing. Runs single-threaded.
///
/// All instances are built first and then timed round-robin across points, so
/// slow drift or a burst of background load spreads over every point instead
/// of skewing a contiguous run of them.
pub fn run_benchmark(cfg: &ExperimentConfig, axis: Axis, values: &[f64], repeats: usize) -> Result<Vec<BenchRow>> {
    if repeats == 0 {
        return Err(invalid("repeats must be at least 1"));
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut local = cfg.clone();
        local.sweep.clear();
        axis.apply(&mut local, value)?;
        let resolved = local.resolve()?;
        let mut instances = Vec::with_capacity(resolved.base.trials);
        for trial in 0..resolved.base.trials {
            let seeds = resolved.seeds(trial);
            let design = resolved.design_with(seeds.graph, seeds.signature)?;
            let support = SupportVector::sample(local.n, local.k, seeds.support)?;
            let mut ms = measure(&design, &support)?;
            if local.q > 0.0 {
                ms = apply_noise(&ms, local.q, seeds.noise)?;
            }
            // one untimed warm-up
            std::hint::black_box(decode(local.variant, &ms, &design)?);
            instances.push((design, ms));
        }
        points.push((value, local, resolved.right_nodes, instances));
    }

    let trials = cfg.trials;
    let mut samples = vec![Vec::with_capacity(trials * repeats); points.len()];
    for _ in 0..repeats {
        for trial in 0..trials {
            for (p, (_, local, _, instances)) in points.iter().enumerate() {
                let (design, ms) = &instances[trial];
                let start = Instant::now();
                std::hint::black_box(decode(local.variant, ms, design)?);
                samples[p].push(start.elapsed().as_nanos() as f64);
            }
        }
    }

    Ok(points
        .into_iter()
        .zip(samples)
        .map(|((value, local, right_nodes, _), mut samples)| {
            samples.sort_by(f64::total_cmp);
            BenchRow {
                value,
                n: local.n,
                k: local.k,
                right_nodes,
                samples: samples.len(),
                median_ns: median(&samples),
                mean_ns: samples.iter().sum::<f64>() / samples.len() as f64,
                min_ns: samples[0],
            }
        })
        .collect())
}

fn median(sorted: &[f64]) -> f64 {
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

/// Least-squares line `y = intercept + slope x` and its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("linear fit needs two or more paired points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("linear fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}
