//! `confset`: compute confidence regions for risk-optimal approximating
//! models, build critical-value tables, and run validation experiments.
//!
//! Exit codes: 0 success, 2 usage/input error, 3 numeric failure,
//! 4 resource cap exceeded.

use clap::{Args, Parser, Subcommand};
use confset_core::error::Error;
use confset_core::files::{read_family, read_signal};
use confset_core::general::{general_region, general_region_unknown_sigma};
use confset_core::harness::{coupling_order_experiment, coverage_csv, coverage_nested};
use confset_core::multiscale::{critical_values, nested_region, CriticalValueTable};
use confset_core::seqmodel::{SignalSpec, VarianceModel};
use confset_core::toy::{rate_experiment, rate_rows_csv};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "confset", version, about)]
struct Cli {
    /// Worker threads for replicate parallelism (0 = all cores). Output is
    /// identical for any thread count.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate least-favorable critical values and write a table file.
    CriticalValues(CriticalValuesArgs),
    /// Confidence region for the nested candidate family.
    ConfsetNested(ConfsetNestedArgs),
    /// Confidence region for an explicit candidate family.
    ConfsetGeneral(ConfsetGeneralArgs),
    /// Run a named validation experiment and emit CSV.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct CriticalValuesArgs {
    /// Signal length.
    #[arg(long)]
    n: usize,
    /// Variance-estimator degrees of freedom, or "inf" for known variance.
    #[arg(long, default_value = "inf")]
    m: String,
    /// Levels to tabulate (repeatable).
    #[arg(long, required = true)]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 5000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Second-order constant of the sup statistic.
    #[arg(long, default_value_t = 3.0)]
    c_const: f64,
    /// Output table path. If the file already holds a table with the same
    /// key (n, m, c-const, reps, seed) and levels, it is left untouched.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfsetNestedArgs {
    /// Observation file: one decimal float per line.
    #[arg(long = "in")]
    input: PathBuf,
    /// Critical-value table produced by `critical-values`.
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    alpha: f64,
    /// Variance estimate for the observation.
    #[arg(long, default_value_t = 1.0)]
    sigma_hat2: f64,
    /// Output path for the region JSON (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfsetGeneralArgs {
    /// Observation file: one decimal float per line.
    #[arg(long = "in")]
    input: PathBuf,
    /// Candidate family file: {"n": int, "sets": [[int,...],...]}.
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    alpha: f64,
    /// Degrees of freedom of the variance estimate, or "inf" if the
    /// variance is known.
    #[arg(long, default_value = "inf")]
    m: String,
    /// Known variance, or its estimate when --m is finite.
    #[arg(long, default_value_t = 1.0)]
    sigma_hat2: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// One of: coverage-nested, coupling-order, toy-rates.
    #[arg(long)]
    experiment: String,
    /// Problem size (signal length or toy grid size).
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value = "inf")]
    m: String,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 2000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    c_const: f64,
    /// Signal file; defaults to the zero signal of length n.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_m(text: &str) -> Result<Option<u32>, Error> {
    if text == "inf" {
        Ok(None)
    } else {
        let m: u32 = text
            .parse()
            .map_err(|_| Error::invalid(format!("--m must be \"inf\" or a positive integer, got {text:?}")))?;
        if m == 0 {
            return Err(Error::invalid("--m must be >= 1"));
        }
        Ok(Some(m))
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_critical_values(args: &CriticalValuesArgs) -> Result<(), Error> {
    let m = parse_m(&args.m)?;
    let var = VarianceModel::from_m(m)?;
    if args.out.exists() {
        if let Ok(existing) = CriticalValueTable::load(&args.out) {
            let has_all = args
                .alpha
                .iter()
                .all(|&a| existing.kappa(a).is_some());
            if existing.matches(args.n, m, args.c_const, args.reps, args.seed) && has_all {
                eprintln!("table up to date: {}", args.out.display());
                return Ok(());
            }
        }
    }
    let table = critical_values(args.n, &var, &args.alpha, args.reps, args.seed, args.c_const)?;
    table.save(&args.out)?;
    Ok(())
}

fn cmd_confset_nested(args: &ConfsetNestedArgs) -> Result<(), Error> {
    let x = read_signal(&args.input)?;
    let table = CriticalValueTable::load(&args.table)?;
    let region = nested_region(&x, args.sigma_hat2, &table, args.alpha)?;
    let mut text = serde_json::to_string_pretty(&region)?;
    text.push('\n');
    emit(&args.out, &text)
}

fn cmd_confset_general(args: &ConfsetGeneralArgs) -> Result<(), Error> {
    let x = read_signal(&args.input)?;
    let family = read_family(&args.family)?;
    let region = match parse_m(&args.m)? {
        None => general_region(&x, args.sigma_hat2, &family, args.alpha)?,
        Some(m) => general_region_unknown_sigma(&x, args.sigma_hat2, m, &family, args.alpha)?,
    };
    let mut text = serde_json::to_string_pretty(&region)?;
    text.push('\n');
    emit(&args.out, &text)
}

fn load_spec(input: &Option<PathBuf>, n: usize) -> Result<SignalSpec, Error> {
    match input {
        Some(path) => SignalSpec::new(read_signal(Path::new(path))?, 1.0),
        None => SignalSpec::zero(n, 1.0),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let m = parse_m(&args.m)?;
    match args.experiment.as_str() {
        "coverage-nested" => {
            let spec = load_spec(&args.input, args.n)?;
            let var = VarianceModel::from_m(m)?;
            let table = critical_values(
                spec.n(),
                &var,
                &[args.alpha],
                args.reps.max(1000),
                args.seed ^ 0xc5,
                args.c_const,
            )?;
            let rows = coverage_nested(&spec, &var, &table, args.alpha, args.reps, args.seed)?;
            emit(&args.out, &coverage_csv(&rows))
        }
        "coupling-order" => {
            let spec = load_spec(&args.input, args.n)?;
            let violations = coupling_order_experiment(&spec, m, args.reps, args.seed)?;
            if !violations.is_empty() {
                return Err(Error::numeric(format!(
                    "pathwise ordering violated at replicates {violations:?}"
                )));
            }
            emit(&args.out, &format!("replicates,violations\n{},0\n", args.reps))
        }
        "toy-rates" => {
            let scales = [8.0, 16.0, 32.0, 64.0, 128.0];
            let rows = rate_experiment(
                args.n.max(2),
                1.0,
                &scales,
                args.alpha,
                args.reps.max(1000),
                args.reps,
                args.seed,
            )?;
            emit(&args.out, &rate_rows_csv(&rows))
        }
        other => Err(Error::invalid(format!(
            "unknown experiment {other:?}; expected coverage-nested, coupling-order, or toy-rates"
        ))),
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NumericFailure(_) => 3,
        Error::ResourceLimit(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // ignore failure if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result = match &cli.command {
        Command::CriticalValues(args) => cmd_critical_values(args),
        Command::ConfsetNested(args) => cmd_confset_nested(args),
        Command::ConfsetGeneral(args) => cmd_confset_general(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
