use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridrisk::caseio::{apply_dynamics, load_dynamics, load_reliability, read_case, read_text, ReliabilityTable};
use gridrisk::engine::{read_results, run_all, EngineConfig};
use gridrisk::powerflow::PowerFlowOptions;
use gridrisk::risk::{compute_risk, emit_reports, PairAccounting};
use gridrisk::smallsignal::DEFAULT_EPS_STAB;
use gridrisk::{Error, GridCase, Result};

#[derive(Parser)]
#[command(name = "gridrisk", version, about = "N-1/N-2 contingency screening and risk ranking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a case file and print its component counts.
    Validate {
        /// Native JSON case or MATPOWER `.m` file.
        case: PathBuf,
    },
    /// Evaluate every contingency scenario and write results and manifest.
    Run(RunArgs),
    /// Rank components by risk from the results of a finished run.
    Rank(RankArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    case: PathBuf,
    /// Output directory for results.jsonl, checkpoint.json and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Failure-rate table (CSV); only used to check it against the case.
    #[arg(long)]
    reliability: Option<PathBuf>,
    /// Per-machine dynamic parameters (CSV).
    #[arg(long)]
    dynamics: Option<PathBuf>,
    /// 1 for single outages, 2 to add ordered pairs.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    order: u8,
    /// Leave out the no-outage base case.
    #[arg(long)]
    no_base: bool,
    /// Worker threads (default: available parallelism).
    #[arg(long, env = "GRIDRISK_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Power-flow mismatch tolerance, pu.
    #[arg(long, default_value_t = PowerFlowOptions::default().tol)]
    tol_pf: f64,
    /// Newton iterations per power flow.
    #[arg(long, default_value_t = PowerFlowOptions::default().max_iter)]
    max_iter: usize,
    /// Stability guard band: unstable when the spectral abscissa >= -eps.
    #[arg(long, default_value_t = DEFAULT_EPS_STAB)]
    eps_stab: f64,
    /// Evaluate both orders of every pair, redispatching after each outage.
    #[arg(long)]
    sequential_redispatch: bool,
    /// Evaluate an evenly strided sample of N scenarios.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    limit: Option<u64>,
    /// Start every power flow from the base-case solution.
    #[arg(long)]
    warm_start: bool,
    /// Write runtime_ms = 0 so results files are reproducible byte for byte.
    #[arg(long)]
    no_runtime: bool,
}

#[derive(Args)]
struct RankArgs {
    /// Directory of a finished run.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    case: PathBuf,
    #[arg(long)]
    reliability: Option<PathBuf>,
    /// Dynamics file used by the run, if any.
    #[arg(long)]
    dynamics: Option<PathBuf>,
    /// Rows in the printed table and in ranking.csv.
    #[arg(long, default_value_t = 20)]
    top: usize,
    /// Count each severe pair once instead of once per order.
    #[arg(long)]
    unordered_pairs: bool,
    /// Report directory (default: the results directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate { case } => validate(&case),
        Command::Run(args) => run(args),
        Command::Rank(args) => rank(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn validate(path: &Path) -> Result<()> {
    let doc = read_case(path)?;
    let g = &doc.grid;
    println!(
        "buses={} lines={} transformers={} generators={}",
        g.n_bus(),
        g.n_lines(),
        g.n_transformers(),
        g.n_generators()
    );
    for w in &doc.metadata.warnings {
        println!("warning: {w}");
    }
    println!("checksum={}", doc.metadata.checksum);
    println!("valid");
    Ok(())
}

fn load_case(path: &Path, dynamics: Option<&Path>) -> Result<GridCase> {
    let doc = read_case(path)?;
    match dynamics {
        Some(p) => apply_dynamics(&doc.grid, &load_dynamics(&read_text(p)?)?),
        None => Ok(doc.grid),
    }
}

fn load_table(path: Option<&Path>, case: &GridCase) -> Result<ReliabilityTable> {
    match path {
        Some(p) => load_reliability(&read_text(p)?, case),
        None => Ok(ReliabilityTable::default()),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let case = load_case(&args.case, args.dynamics.as_deref())?;
    load_table(args.reliability.as_deref(), &case)?;
    let workers = match args.workers {
        Some(w) => w as usize,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let config = EngineConfig {
        max_order: args.order as usize,
        include_base: !args.no_base,
        pf: PowerFlowOptions {
            tol: args.tol_pf,
            max_iter: args.max_iter,
            ..PowerFlowOptions::default()
        },
        eps_stab: args.eps_stab,
        sequential_redispatch: args.sequential_redispatch,
        warm_start: args.warm_start,
        workers,
        limit: args.limit.map(|n| n as usize),
        record_runtime: !args.no_runtime,
        reorder_window: 0,
    };
    let out = run_all(&case, &config, &args.out)?;
    let m = &out.manifest;
    let stable_fraction = if m.evaluated.total > 0 {
        m.outcomes.stable as f64 / m.evaluated.total as f64
    } else {
        0.0
    };
    println!(
        "scenarios={} base={} n1={} n2={} evaluated={} skipped={} stable={} severe={} stable_fraction={:.6} wall_time_s={:.3}",
        m.totals.total,
        m.totals.base,
        m.totals.n1,
        m.totals.n2,
        m.evaluated.total,
        out.skipped,
        m.outcomes.stable,
        m.outcomes.severe,
        stable_fraction,
        m.wall_time_s
    );
    Ok(())
}

fn rank(args: RankArgs) -> Result<()> {
    let case = load_case(&args.case, args.dynamics.as_deref())?;
    let table = load_table(args.reliability.as_deref(), &case)?;
    let (manifest, results) = read_results(&args.results)?;
    let checksum = gridrisk::caseio::grid_checksum(&case)?;
    if manifest.case_checksum != checksum {
        return Err(Error::Consistency(format!(
            "results were produced from case {} but {} is {checksum}; pass the case (and dynamics file) used for the run",
            manifest.case_checksum,
            args.case.display()
        )));
    }
    let accounting = if args.unordered_pairs {
        PairAccounting::Unordered
    } else {
        PairAccounting::Ordered
    };
    let ranking = compute_risk(&results, &table, &case, accounting)?;
    let out_dir = args.out.as_deref().unwrap_or(&args.results);
    emit_reports(&ranking, out_dir, Some(args.top))?;
    println!(
        "{:>4}  {:<16} {:<11} {:>10} {:>10} {:>10} {:>10}",
        "rank", "component", "class", "lambda", "n1_risk", "n2_risk", "total"
    );
    for (k, e) in ranking.top(args.top).iter().enumerate() {
        println!(
            "{:>4}  {:<16} {:<11} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            k + 1,
            e.component.to_string(),
            e.class.name(),
            e.lambda,
            e.n1_contribution,
            e.n2_contribution,
            e.r_total
        );
    }
    Ok(())
}
