//! Density evolution over the Poisson right-degree ensemble, the (d, lambda)
//! design optimization and the test-count formulas of every scheme variant.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::ecc::EccSpec;
use crate::error::{invalid, Error, Result};
use crate::signature::{log2_exact, Sections};

pub const MIN_LEFT_DEGREE: usize = 2;
pub const MAX_LEFT_DEGREE: usize = 64;
const LAMBDA_BRACKET: (f64, f64) = (1e-6, 20.0);
const LAMBDA_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Saffron,
    SingletonOnly,
    RobustSaffron,
    RobustSingletonOnly,
}

impl Variant {
    pub fn is_robust(self) -> bool {
        matches!(self, Variant::RobustSaffron | Variant::RobustSingletonOnly)
    }

    pub fn is_singleton_only(self) -> bool {
        matches!(self, Variant::SingletonOnly | Variant::RobustSingletonOnly)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Saffron => "saffron",
            Variant::SingletonOnly => "singleton_only",
            Variant::RobustSaffron => "robust_saffron",
            Variant::RobustSingletonOnly => "robust_singleton_only",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "saffron" => Ok(Variant::Saffron),
            "singleton_only" => Ok(Variant::SingletonOnly),
            "robust_saffron" => Ok(Variant::RobustSaffron),
            "robust_singleton_only" => Ok(Variant::RobustSingletonOnly),
            other => Err(invalid(format!("unknown variant {other:?}"))),
        }
    }
}

/// Probability that a right node of Poisson(lambda) degree has fewer than two
/// edges, or exactly two with the other edge already peeled.
fn resolvable_mass(p: f64, lambda: f64) -> f64 {
    let rho1 = (-lambda).exp();
    let rho2 = lambda * rho1;
    rho1 + rho2 * (1.0 - p)
}

/// One density-evolution step: the chance an item stays unidentified given
/// the previous-iteration chance `p`.
pub fn de_step(p: f64, lambda: f64, d: usize) -> f64 {
    (1.0 - resolvable_mass(p, lambda)).max(0.0).powi(d as i32 - 1)
}

/// `(1 - e^-lambda - lambda e^-lambda)^(d-1)`, the recursion's fixed point
/// when started from zero.
pub fn closed_form_eps(lambda: f64, d: usize) -> f64 {
    de_step(0.0, lambda, d)
}

/// Iterates [`de_step`] from `p = 1` until the relative change drops below `tol`.
pub fn de_fixed_point(lambda: f64, d: usize, tol: f64, max_iters: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    if !(lambda > 0.0) || d < MIN_LEFT_DEGREE {
        return Err(invalid(format!("need lambda > 0 and d >= 2, got lambda={lambda}, d={d}")));
    }
    let mut p = 1.0;
    for _ in 0..max_iters {
        let next = de_step(p, lambda, d);
        if (next - p).abs() <= tol * p {
            return Ok(next);
        }
        p = next;
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
        last: p,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeDesign {
    pub variant: Variant,
    pub eps: f64,
    pub d_star: usize,
    pub lambda_star: f64,
    /// Right nodes per defective item, `d_star / lambda_star`.
    #[serde(rename = "C")]
    pub c: f64,
    /// Closed-form unidentified fraction at the optimum.
    pub closed_form: f64,
    /// Iterated density-evolution limit at the optimum.
    pub iterated: f64,
}

/// Solves `(d-1) ln(1 - e^-l - l e^-l) = ln eps` for `l` by bisection.
/// The left side increases in `l`, so the bracket always straddles the root.
pub fn solve_lambda(eps: f64, d: usize) -> f64 {
    let target = eps.ln();
    let g = |lambda: f64| (d as f64 - 1.0) * (1.0 - resolvable_mass(0.0, lambda)).ln() - target;
    let (mut lo, mut hi) = LAMBDA_BRACKET;
    while hi - lo > LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // lower end keeps (d-1) ln(...) <= ln eps
    lo
}

/// Minimizes `d / lambda` over integer `d` in `[2, 64]`; ties go to smaller `d`.
pub fn optimize_design(eps: f64) -> Result<DeDesign> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidProbability {
            name: "eps",
            value: eps,
            range: "(0, 1)",
        });
    }
    let mut best: Option<(usize, f64, f64)> = None;
    for d in MIN_LEFT_DEGREE..=MAX_LEFT_DEGREE {
        let lambda = solve_lambda(eps, d);
        let c = d as f64 / lambda;
        if best.is_none_or(|(_, _, bc)| c < bc) {
            best = Some((d, lambda, c));
        }
    }
    let (d_star, lambda_star, c) = best.expect("degree range is nonempty");
    let iterated = de_fixed_point(lambda_star, d_star, 1e-12, 1_000_000)?;
    Ok(DeDesign {
        variant: Variant::Saffron,
        eps,
        d_star,
        lambda_star,
        c,
        closed_form: closed_form_eps(lambda_star, d_star),
        iterated,
    })
}

/// Inputs to [`test_count`]. Unused fields for a variant are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountParams {
    pub variant: Variant,
    #[serde(rename = "K")]
    pub k: u64,
    pub n: u64,
    pub eps: Option<f64>,
    pub alpha: Option<f64>,
    pub ecc: Option<EccSpec>,
    /// Section count for noiseless SAFFRON; Singleton-Only always uses two.
    pub sections: Sections,
    /// Robust right-node inflation factor, 1 unless overridden.
    pub inflation: f64,
}

impl CountParams {
    pub fn new(variant: Variant, k: u64, n: u64) -> Self {
        CountParams {
            variant,
            k,
            n,
            eps: None,
            alpha: None,
            ecc: None,
            sections: Sections::Six,
            inflation: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCount {
    #[serde(rename = "M")]
    pub right_nodes: usize,
    #[serde(rename = "m")]
    pub tests: u64,
}

/// `ceil(e (1 + alpha) K ln K)`, the Singleton-Only right-node count.
pub fn singleton_only_nodes(k: u64, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    let raw = E * (1.0 + alpha) * k as f64 * (k as f64).ln();
    if !(raw >= 1.0) {
        return Err(invalid(format!("Singleton-Only needs K >= 2, got K={k}")));
    }
    Ok(raw.ceil() as usize)
}

/// Right-node count `M` and total test count `m` for a variant.
pub fn test_count(params: &CountParams) -> Result<TestCount> {
    let bits = log2_exact(params.n)? as usize;
    if params.k == 0 {
        return Err(invalid("K must be at least 1"));
    }
    if !(params.inflation >= 1.0) {
        return Err(invalid(format!("inflation must be >= 1, got {}", params.inflation)));
    }
    let base = match params.variant {
        Variant::Saffron | Variant::RobustSaffron => {
            let eps = params.eps.ok_or_else(|| invalid("eps is required for SAFFRON designs"))?;
            (optimize_design(eps)?.c * params.k as f64).ceil() as usize
        }
        Variant::SingletonOnly | Variant::RobustSingletonOnly => {
            let alpha = params
                .alpha
                .ok_or_else(|| invalid("alpha is required for Singleton-Only designs"))?;
            singleton_only_nodes(params.k, alpha)?
        }
    };
    let right_nodes = if params.variant.is_robust() {
        (base as f64 * params.inflation).ceil() as usize
    } else {
        base
    };
    let per_node = match params.variant {
        Variant::Saffron => params.sections.count() * bits,
        Variant::SingletonOnly => Sections::Two.count() * bits,
        Variant::RobustSaffron | Variant::RobustSingletonOnly => {
            let ecc = params.ecc.ok_or_else(|| invalid("ecc is required for robust designs"))?;
            ecc.validate()?;
            if ecc.ck * 8 < bits {
                return Err(invalid(format!("c_k*8 = {} bits cannot hold L = {bits}", ecc.ck * 8)));
            }
            let blocks = if params.variant == Variant::RobustSaffron { 6 } else { 3 };
            blocks * ecc.cn * 8
        }
    };
    Ok(TestCount {
        right_nodes,
        tests: right_nodes as u64 * per_node as u64,
    })
}

pub fn binary_entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
}

/// `1 - H2(q) - delta`, the largest code rate usable on BSC(q).
pub fn capacity_rate_bound(q: f64, delta: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&q) {
        return Err(Error::InvalidProbability {
            name: "q",
            value: q,
            range: "[0, 0.5)",
        });
    }
    if !(delta >= 0.0) {
        return Err(invalid(format!("delta must be nonnegative, got {delta}")));
    }
    Ok(1.0 - binary_entropy(q) - delta)
}
