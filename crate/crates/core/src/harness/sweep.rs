use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::config::ExperimentConfig;
use super::trial::{simulate, Summary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[serde(rename = "M")]
    M,
    MOverK,
    D,
    #[serde(rename = "K")]
    K,
    Log2N,
    Q,
    Cn,
    Eps,
    Alpha,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::M => "M",
            Axis::MOverK => "m_over_k",
            Axis::D => "d",
            Axis::K => "K",
            Axis::Log2N => "log2_n",
            Axis::Q => "q",
            Axis::Cn => "cn",
            Axis::Eps => "eps",
            Axis::Alpha => "alpha",
        }
    }

    fn is_integral(self) -> bool {
        matches!(self, Axis::M | Axis::D | Axis::K | Axis::Log2N | Axis::Cn)
    }

    /// Writes `value` into the matching field of `cfg`.
    pub fn apply(self, cfg: &mut ExperimentConfig, value: f64) -> Result<()> {
        if !value.is_finite() || (self.is_integral() && (value < 0.0 || value.fract() != 0.0)) {
            return Err(invalid(format!("axis {} cannot take value {value}", self.name())));
        }
        let int = value as usize;
        match self {
            Axis::M => cfg.m = Some(int),
            Axis::MOverK => cfg.m = Some((value * cfg.k as f64).ceil() as usize),
            Axis::D => cfg.d = Some(int),
            Axis::K => cfg.k = int,
            Axis::Log2N => {
                if int > 63 {
                    return Err(invalid(format!("log2_n = {int} is too large")));
                }
                cfg.n = 1u64 << int;
            }
            Axis::Q => cfg.q = value,
            Axis::Cn => {
                let ecc = cfg
                    .ecc
                    .as_mut()
                    .ok_or_else(|| invalid("the cn axis needs an ecc block"))?;
                ecc.cn = int;
            }
            Axis::Eps => cfg.eps = Some(value),
            Axis::Alpha => cfg.alpha = Some(value),
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub point: Vec<(Axis, f64)>,
    pub config: ExperimentConfig,
    #[serde(rename = "M")]
    pub right_nodes: usize,
    pub d: Option<usize>,
    pub p: Option<f64>,
    #[serde(rename = "m")]
    pub tests: u64,
    pub summary: Summary,
}

/// Every point of the cartesian product of `axes`, first axis slowest.
fn grid(axes: &[AxisSpec]) -> Vec<Vec<(Axis, f64)>> {
    axes.iter().fold(vec![Vec::new()], |acc, spec| {
        acc.iter()
            .flat_map(|prefix| {
                spec.values.iter().map(move |&v| {
                    let mut point = prefix.clone();
                    point.push((spec.axis, v));
                    point
                })
            })
            .collect()
    })
}

/// Simulates the config at every sweep point; rows come back in grid order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    if cfg.sweep.is_empty() {
        return Err(invalid("sweep needs at least one axis"));
    }
    if let Some(empty) = cfg.sweep.iter().find(|a| a.values.is_empty()) {
        return Err(invalid(format!("axis {} has no values", empty.axis.name())));
    }
    grid(&cfg.sweep)
        .into_iter()
        .map(|point| {
            let mut local = cfg.clone();
            local.sweep.clear();
            for &(axis, value) in &point {
                axis.apply(&mut local, value)?;
            }
            let resolved = local.resolve()?;
            let sim = simulate(&resolved)?;
            Ok(SweepRow {
                point,
                right_nodes: resolved.right_nodes,
                d: resolved.left_degree(),
                p: resolved.edge_probability(),
                tests: sim.tests,
                summary: sim.summary,
                config: local,
            })
        })
        .collect()
}

/// Floats with 17 significant digits, the shortest width that round-trips.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_axis(axis: Axis, value: f64) -> String {
    if axis.is_integral() {
        format!("{}", value as u64)
    } else {
        fmt_f64(value)
    }
}

const FIXED_COLUMNS: [&str; 18] = [
    "variant",
    "n",
    "K",
    "M",
    "d",
    "p",
    "q",
    "ck",
    "cn",
    "m",
    "trials",
    "exact_trials",
    "mean_unidentified",
    "std_unidentified",
    "false_positive_rate",
    "trials_with_false_positives",
    "max_attempt_ratio",
    "k_zero",
];

/// Writes rows as CSV. Without `timing` the output is a pure function of the
/// config, byte-identical across runs.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], timing: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = rows
        .first()
        .map(|r| r.point.iter().map(|(a, _)| a.name().to_string()).collect())
        .unwrap_or_default();
    header.extend(FIXED_COLUMNS.iter().map(|s| s.to_string()));
    if timing {
        header.push("mean_decode_ns".into());
    }
    w.write_record(&header)?;
    for row in rows {
        let c = &row.config;
        let s = &row.summary;
        let mut rec: Vec<String> = row.point.iter().map(|&(a, v)| fmt_axis(a, v)).collect();
        rec.extend([
            c.variant.to_string(),
            c.n.to_string(),
            c.k.to_string(),
            row.right_nodes.to_string(),
            row.d.map(|d| d.to_string()).unwrap_or_default(),
            row.p.map(fmt_f64).unwrap_or_default(),
            fmt_f64(c.q),
            c.ecc.map(|e| e.ck.to_string()).unwrap_or_default(),
            c.ecc.map(|e| e.cn.to_string()).unwrap_or_default(),
            row.tests.to_string(),
            s.trials.to_string(),
            s.exact_trials.to_string(),
            fmt_f64(s.mean_unidentified),
            fmt_f64(s.std_unidentified),
            fmt_f64(s.false_positive_rate),
            s.trials_with_false_positives.to_string(),
            fmt_f64(s.max_attempt_ratio),
            s.k_zero.to_string(),
        ]);
        if timing {
            rec.push(fmt_f64(s.mean_decode_ns));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Variant;

    fn base() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Variant::Saffron, 1 << 10, 20);
        cfg.trials = 8;
        cfg.master_seed = 5;
        cfg.sweep = vec![
            AxisSpec {
                axis: Axis::D,
                values: vec![3.0, 9.0],
            },
            AxisSpec {
                axis: Axis::MOverK,
                values: vec![1.5, 7.0],
            },
        ];
        cfg
    }

    fn csv_of(rows: &[SweepRow], timing: bool) -> String {
        let mut buf = Vec::new();
        write_sweep_csv(rows, timing, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn grid_order() {
        let rows = run_sweep(&base()).unwrap();
        let points: Vec<(usize, usize)> = rows.iter().map(|r| (r.d.unwrap(), r.right_nodes)).collect();
        assert_eq!(points, vec![(3, 30), (3, 140), (9, 30), (9, 140)]);
    }

    #[test]
    fn csv_is_reproducible_without_timing() {
        let a = csv_of(&run_sweep(&base()).unwrap(), false);
        let b = csv_of(&run_sweep(&base()).unwrap(), false);
        assert_eq!(a, b);
        let header = a.lines().next().unwrap();
        assert!(header.starts_with("d,m_over_k,variant,n,K,M,"));
        assert!(!header.contains("mean_decode_ns"));
        assert_eq!(a.lines().count(), 5);
    }

    #[test]
    fn timing_column_is_optional() {
        let rows = run_sweep(&base()).unwrap();
        assert!(csv_of(&rows, true).lines().next().unwrap().ends_with(",mean_decode_ns"));
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn invalid_axes() {
        let mut cfg = base();
        cfg.sweep[0].values = vec![2.5];
        assert!(run_sweep(&cfg).is_err());
        let mut cfg = base();
        cfg.sweep = vec![AxisSpec {
            axis: Axis::Cn,
            values: vec![8.0],
        }];
        assert!(run_sweep(&cfg).is_err());
        let mut cfg = base();
        cfg.sweep.clear();
        assert!(run_sweep(&cfg).is_err());
        assert!(serde_json::from_str::<AxisSpec>(r#"{"axis": "volume", "values": [1]}"#).is_err());
    }

    #[test]
    fn k_zero_row() {
        let mut cfg = ExperimentConfig::new(Variant::Saffron, 1 << 10, 0);
        cfg.d = Some(3);
        cfg.m = Some(10);
        cfg.sweep = vec![AxisSpec {
            axis: Axis::K,
            values: vec![0.0],
        }];
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].summary.k_zero);
        assert_eq!(rows[0].summary.mean_unidentified, 0.0);
    }
}
