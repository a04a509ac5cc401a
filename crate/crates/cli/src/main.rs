use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use saffron_core::channel::{apply_noise, measure, read_dump, write_dump, SupportVector};
use saffron_core::harness::{
    decode, fmt_f64, linear_fit, run_benchmark, run_sweep, simulate, write_sweep_csv, Axis, BenchRow,
    ExperimentConfig,
};
use saffron_core::{optimize_design, DeDesign, PoolDesign, Variant};
use serde::Serialize;

const EXIT_CONFIG: u8 = 2;
const EXIT_STRICT: u8 = 3;

#[derive(Parser)]
#[command(name = "saffron", version, about = "Sparse-graph-code group testing: design, encode, decode, simulate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal (d, lambda, C) for target unidentified fractions; optionally a design file.
    Design(DesignArgs),
    /// Measure a support vector under a design, writing a measurement dump.
    Encode(EncodeArgs),
    /// Decode a measurement dump.
    Decode(DecodeArgs),
    /// End-to-end Monte-Carlo trials.
    Simulate(SimulateArgs),
    /// Trials over a grid of parameter values.
    Sweep(SweepArgs),
    /// Decode-time scaling along one axis.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DesignArgs {
    /// Target unidentified fraction; repeat for several rows.
    #[arg(long, required_unless_present = "config")]
    eps: Vec<f64>,
    /// Build a concrete design from an experiment config instead.
    #[arg(long, conflicts_with = "eps")]
    config: Option<PathBuf>,
    /// Graph and signature seeds for `--config` designs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct EncodeArgs {
    /// Design JSON file (from `design --config`).
    #[arg(long)]
    design: PathBuf,
    /// Comma-separated 1-based defective items.
    #[arg(long, value_delimiter = ',', required_unless_present = "random")]
    support: Vec<u64>,
    /// Draw this many defective items uniformly instead.
    #[arg(long, conflicts_with = "support")]
    random: Option<usize>,
    /// Bit-flip probability of the test channel.
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    /// Seed for `--random` support sampling and channel noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Measurement dump path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Design JSON file the dump was measured under.
    #[arg(long)]
    design: PathBuf,
    /// Measurement dump to decode.
    #[arg(long)]
    dump: PathBuf,
    /// Use the single-pass Singleton-Only decoder.
    #[arg(long)]
    singleton_only: bool,
    /// Write the decode report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Exit with status 3 when more than `max_failures` trials fail.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config (JSON) with a `sweep` list.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Drop the timing column so the CSV is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config (JSON) for the fixed parameters.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Axis to vary, e.g. `K` or `log2_n`.
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values, one timed point each.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Timed decodes per instance.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[command(flatten)]
    output: Output,
}

enum Failure {
    Config(anyhow::Error),
    Strict(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

impl From<saffron_core::Error> for Failure {
    fn from(e: saffron_core::Error) -> Self {
        Failure::Config(e.into())
    }
}

type CliResult = Result<(), Failure>;

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config(path: &Path, seed: Option<u64>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg =
        ExperimentConfig::from_json(&read_text(path)?).with_context(|| format!("parsing config {}", path.display()))?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn load_design(path: &Path) -> anyhow::Result<PoolDesign> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing design {}", path.display()))
}

fn design_table(rows: &[DeDesign]) -> String {
    let mut s = format!("{:>10} {:>8} {:>4} {:>10} {:>12} {:>12}\n", "eps", "C", "d*", "lambda*", "closed", "iterated");
    for r in rows {
        s += &format!(
            "{:>10.0e} {:>8.2} {:>4} {:>10.4} {:>12.4e} {:>12.4e}\n",
            r.eps, r.c, r.d_star, r.lambda_star, r.closed_form, r.iterated
        );
    }
    s
}

fn cmd_design(args: DesignArgs) -> CliResult {
    if let Some(path) = &args.config {
        let cfg = load_config(path, None)?;
        let resolved = cfg.resolve()?;
        let design = resolved.design_with(args.seed, args.seed.wrapping_add(1))?;
        eprintln!("M = {}, m = {}", design.right_nodes(), design.total_tests());
        emit(args.output.out.as_deref(), &to_json(&design)?)?;
        return Ok(());
    }
    let rows = args
        .eps
        .iter()
        .map(|&eps| optimize_design(eps))
        .collect::<saffron_core::Result<Vec<_>>>()?;
    eprint!("{}", design_table(&rows));
    let text = match args.output.format {
        Format::Json if rows.len() == 1 => to_json(&rows[0])?,
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut s = String::from("eps,C,d_star,lambda_star,closed_form,iterated\n");
            for r in &rows {
                s += &format!(
                    "{},{},{},{},{},{}\n",
                    fmt_f64(r.eps),
                    fmt_f64(r.c),
                    r.d_star,
                    fmt_f64(r.lambda_star),
                    fmt_f64(r.closed_form),
                    fmt_f64(r.iterated)
                );
            }
            s
        }
    };
    emit(args.output.out.as_deref(), &text)?;
    Ok(())
}

fn cmd_encode(args: EncodeArgs) -> CliResult {
    let design = load_design(&args.design)?;
    let support = match args.random {
        Some(k) => SupportVector::sample(design.n(), k, args.seed)?,
        None => SupportVector::new(design.n(), args.support.iter().copied())?,
    };
    let mut ms = measure(&design, &support)?;
    if args.q > 0.0 {
        if !design.is_robust() {
            return Err(Failure::Config(anyhow::anyhow!("noisy encoding needs a design with an ecc block")));
        }
        ms = apply_noise(&ms, args.q, args.seed)?;
    }
    eprintln!("support: {:?}", support.items());
    emit(args.out.as_deref(), &write_dump(&ms))?;
    Ok(())
}

#[derive(Serialize)]
struct DecodeReport {
    identified: Vec<u64>,
    iterations: usize,
    resolved_singletons: usize,
    resolved_doubletons: usize,
    unresolved_right_nodes: usize,
    attempts: usize,
}

fn cmd_decode(args: DecodeArgs) -> CliResult {
    let design = load_design(&args.design)?;
    let text = read_text(&args.dump)?;
    let ms = read_dump(&text).with_context(|| format!("parsing dump {}", args.dump.display()))?;
    if ms.n != design.n() {
        return Err(Failure::Config(anyhow::anyhow!("dump has n = {} but design has n = {}", ms.n, design.n())));
    }
    let variant = if args.singleton_only {
        Variant::SingletonOnly
    } else {
        Variant::Saffron
    };
    let r = decode(variant, &ms, &design)?;
    let report = DecodeReport {
        identified: r.identified.iter().copied().collect(),
        iterations: r.iterations,
        resolved_singletons: r.resolved_singletons,
        resolved_doubletons: r.resolved_doubletons,
        unresolved_right_nodes: r.unresolved_right_nodes,
        attempts: r.attempts,
    };
    emit(args.out.as_deref(), &to_json(&report)?)?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CliResult {
    let mut cfg = load_config(&args.config, args.seed)?;
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    let resolved = cfg.resolve()?;
    let sim = simulate(&resolved)?;
    let s = &sim.summary;
    eprintln!(
        "M = {}, m = {}, exact {}/{}, mean unidentified {:.3e}, false-positive trials {}, mean decode {:.3} ms",
        sim.right_nodes,
        sim.tests,
        s.exact_trials,
        s.trials,
        s.mean_unidentified,
        s.trials_with_false_positives,
        s.mean_decode_ns / 1e6
    );
    let text = match args.output.format {
        Format::Json => to_json(&sim)?,
        Format::Csv => {
            let mut s = String::from("trial,seed,K,identified,missed,false_positives,attempts,iterations,m,decode_ns\n");
            for r in &sim.records {
                s += &format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.trial,
                    r.seed,
                    r.k,
                    r.identified,
                    r.missed,
                    r.false_positives,
                    r.attempts,
                    r.iterations,
                    r.tests,
                    r.decode_ns
                );
            }
            s
        }
    };
    emit(args.output.out.as_deref(), &text)?;
    if args.strict && s.failures() > cfg.max_failures {
        return Err(Failure::Strict(format!(
            "{} of {} trials failed, threshold is {}",
            s.failures(),
            s.trials,
            cfg.max_failures
        )));
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult {
    let cfg = load_config(&args.config, args.seed)?;
    let rows = run_sweep(&cfg)?;
    let text = match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, !args.no_timing, &mut buf)?;
            String::from_utf8(buf).context("CSV output is not UTF-8")?
        }
        Format::Json => to_json(&rows)?,
    };
    emit(args.out.as_deref(), &text)?;
    Ok(())
}

fn parse_axis(name: &str) -> anyhow::Result<Axis> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| anyhow::anyhow!("unknown axis {name:?}"))
}

#[derive(Serialize)]
struct BenchReport {
    axis: Axis,
    rows: Vec<BenchRow>,
    slope_ns: f64,
    intercept_ns: f64,
    r_squared: f64,
}

fn cmd_bench(args: BenchArgs) -> CliResult {
    let cfg = load_config(&args.config, args.seed)?;
    let axis = parse_axis(&args.axis)?;
    let rows = run_benchmark(&cfg, axis, &args.values, args.repeats)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_ns).collect();
    let fit = if rows.len() >= 2 {
        Some(linear_fit(&xs, &ys)?)
    } else {
        None
    };
    if let Some(f) = fit {
        eprintln!("median decode time ~ {:.1} + {:.1} * {} ns, R^2 = {:.4}", f.intercept, f.slope, axis.name(), f.r_squared);
    }
    let text = match args.output.format {
        Format::Json => to_json(&BenchReport {
            axis,
            slope_ns: fit.map_or(f64::NAN, |f| f.slope),
            intercept_ns: fit.map_or(f64::NAN, |f| f.intercept),
            r_squared: fit.map_or(f64::NAN, |f| f.r_squared),
            rows,
        })?,
        Format::Csv => {
            let mut s = format!("{},n,K,M,samples,median_ns,mean_ns,min_ns\n", axis.name());
            for r in &rows {
                s += &format!(
                    "{},{},{},{},{},{},{},{}\n",
                    fmt_f64(r.value),
                    r.n,
                    r.k,
                    r.right_nodes,
                    r.samples,
                    fmt_f64(r.median_ns),
                    fmt_f64(r.mean_ns),
                    fmt_f64(r.min_ns)
                );
            }
            s
        }
    };
    emit(args.output.out.as_deref(), &text)?;
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Design(a) => cmd_design(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Strict(msg)) => {
            eprintln!("strict: {msg}");
            ExitCode::from(EXIT_STRICT)
        }
    }
}
