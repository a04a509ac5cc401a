//! Monte-Carlo experiment engine: seeded trials, parameter sweeps and timing.

mod bench;
mod config;
mod sweep;
mod trial;

pub use bench::{linear_fit, run_benchmark, BenchRow, LinearFit};
pub use config::{ExperimentConfig, ResolvedConfig, TrialSeeds};
pub use sweep::{fmt_f64, run_sweep, write_sweep_csv, Axis, AxisSpec, SweepRow};
pub use trial::{decode, run_trial, simulate, Simulation, Summary, TrialRecord};
