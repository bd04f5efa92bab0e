use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use evsp::generate::{generate, Profile};
use evsp::io::{load_instance, load_schedule, save_instance, write_text, FileError, ScheduleFile};
use evsp::parallel::{Parallel, StdClock};
use evsp::report;
use evsp::run::{self, BoundRecord, Discretization, RunRow};
use evsp_core::bounds::{oracle_solve, OracleLimits, OracleMode};
use evsp_core::colgen::{ColgenParams, ColumnsPerIter};
use evsp_core::discretization::RoundingMode;
use evsp_core::heuristics::{HeuristicConfig, HeuristicKind};
use evsp_core::instance::Instance;
use evsp_core::schedule::{occupancy, simulate, summarize};

#[derive(Parser)]
#[command(
    name = "evsp",
    version,
    about = "Electric vehicle scheduling with capacitated chargers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance.
    Generate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        trips: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a heuristic and write the schedule.
    Solve(SolveArgs),
    /// Compute a lower bound valid for every discretization.
    Lowerbound(LowerboundArgs),
    /// Re-simulate a schedule file; exit 1 when it is infeasible.
    Validate {
        instance: PathBuf,
        schedule: PathBuf,
    },
    /// Charger occupancy CSV and schedule statistics.
    Report {
        instance: PathBuf,
        schedule: PathBuf,
        /// Occupancy CSV destination (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve small instances exactly by enumerating all duties.
    Oracle(OracleArgs),
}

#[derive(Args, Clone, Copy)]
struct DiscArgs {
    /// SoC grid step in percent.
    #[arg(long, default_value_t = 3.0)]
    soc_step: f64,
    /// Minimum SoC in percent.
    #[arg(long, default_value_t = 22.0)]
    soc_min: f64,
    /// Time block length in minutes.
    #[arg(long, default_value_t = 5)]
    block_len: i32,
}

impl DiscArgs {
    fn disc(&self) -> Discretization {
        Discretization {
            soc_step_percent: self.soc_step,
            soc_min_percent: self.soc_min,
            block_len: self.block_len,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ColumnsArg {
    GlobalBest,
    PerNetwork,
}

#[derive(Args, Clone, Copy)]
struct ColgenArgs {
    /// Minimum relative improvement over the window, in percent.
    #[arg(long, default_value_t = 0.01)]
    zmin: f64,
    /// Improvement window in iterations.
    #[arg(long, default_value_t = 30)]
    iters_window: usize,
    #[arg(long, value_enum, default_value_t = ColumnsArg::PerNetwork)]
    columns_per_iter: ColumnsArg,
    /// Pricing threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl ColgenArgs {
    fn params(&self) -> ColgenParams {
        ColgenParams {
            z_min: self.zmin / 100.0,
            window: self.iters_window,
            columns: match self.columns_per_iter {
                ColumnsArg::GlobalBest => ColumnsPerIter::GlobalBest,
                ColumnsArg::PerNetwork => ColumnsPerIter::PerNetwork,
            },
            ..ColgenParams::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum HeuristicArg {
    /// Price-and-branch.
    Pnb,
    /// Truncated price-and-branch.
    Tpnb,
    /// Truncated column generation (diving).
    Tcg,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[command(flatten)]
    disc: DiscArgs,
    #[command(flatten)]
    colgen: ColgenArgs,
    #[arg(long, value_enum, default_value_t = HeuristicArg::Tcg)]
    heuristic: HeuristicArg,
    /// Fixing threshold of the diving heuristic.
    #[arg(long, default_value_t = 0.70)]
    theta: f64,
    /// Remove fixed trips and saturated charger blocks between dives.
    #[arg(long)]
    node_removal: bool,
    /// Branch-and-bound time limit in seconds.
    #[arg(long, default_value_t = 3600.0)]
    bip_time_limit: f64,
    /// Lower bound file from `lowerbound`; enables the gap.
    #[arg(long)]
    lb_file: Option<PathBuf>,
    /// Per-iteration CSV log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Print node and arc counts per network.
    #[arg(long)]
    dump_network_stats: bool,
    /// Accepted for interface symmetry; the solver is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Schedule destination.
    #[arg(short, long, default_value = "schedule.json")]
    output: PathBuf,
}

#[derive(Args)]
struct LowerboundArgs {
    instance: PathBuf,
    #[command(flatten)]
    disc: DiscArgs,
    #[command(flatten)]
    colgen: ColgenArgs,
    /// Stop column generation after this many seconds and report the best
    /// Lagrangian bound.
    #[arg(long)]
    lb_time_cap: Option<f64>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    dump_network_stats: bool,
    #[arg(short, long, default_value = "lowerbound.json")]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleModeArg {
    NetworkPaths,
    ContinuousDuties,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[command(flatten)]
    disc: DiscArgs,
    #[arg(long, value_enum, default_value_t = OracleModeArg::NetworkPaths)]
    mode: OracleModeArg,
    #[arg(long, default_value_t = 8)]
    max_trips: usize,
    #[arg(long, default_value_t = 300_000)]
    max_duties: usize,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn infeasible(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

/// Infeasibility maps to 1, everything else to 2.
fn classify(e: evsp_core::Error) -> Failure {
    match e {
        evsp_core::Error::Uncoverable { .. } | evsp_core::Error::NoIntegralSolution { .. } => {
            infeasible(e)
        }
        e => usage(e),
    }
}

fn file(e: FileError) -> Failure {
    usage(e)
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let (inst, warnings) = load_instance(path).map_err(file)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(inst)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    write_text(path, text).map_err(file)
}

fn backend(threads: usize) -> Result<Parallel, Failure> {
    Parallel::new(threads)
        .context("cannot start pricing threads")
        .map_err(usage)
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let inst = load(&a.instance)?;
    let disc = a.disc.disc();
    let cfg = HeuristicConfig {
        kind: match a.heuristic {
            HeuristicArg::Pnb => HeuristicKind::PriceAndBranch,
            HeuristicArg::Tpnb => HeuristicKind::TruncatedPriceAndBranch,
            HeuristicArg::Tcg => HeuristicKind::TruncatedCg,
        },
        theta: a.theta,
        node_removal: a.node_removal,
        colgen: a.colgen.params(),
        bip_time_limit: a.bip_time_limit,
    };
    cfg.validate().map_err(usage)?;
    let lb = match &a.lb_file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read `{}`", p.display()))
                .map_err(usage)?;
            let rec: BoundRecord = serde_json::from_str(&text)
                .with_context(|| format!("`{}` is not a lower bound file", p.display()))
                .map_err(usage)?;
            Some(rec.value)
        }
        None => None,
    };
    if a.dump_network_stats {
        let nets = run::networks(&inst, &disc, RoundingMode::Conservative).map_err(classify)?;
        print!(
            "{}",
            report::network_stats_csv(&inst, &run::network_stats(&nets))
        );
    }
    let pricing = backend(a.colgen.threads)?;
    let clock = StdClock::new();
    let solved = run::solve(&inst, &disc, &cfg, &pricing, &clock).map_err(classify)?;
    if let Some(p) = &a.log {
        write(p, &report::log_csv(&solved.outcome.log))?;
    }
    let file = ScheduleFile::from_schedule(
        &inst,
        &solved.blocks,
        disc.soc_min_percent,
        &solved.schedule,
        Some(&solved.traces),
    );
    write(&a.output, &file.to_json())?;
    print!("{}", report::run_csv(&RunRow::new(&solved, lb)));
    if !solved.verdict.feasible {
        return Err(infeasible(anyhow::anyhow!(
            "schedule failed validation:\n{}",
            report::verdict_text(&inst, &solved.verdict)
        )));
    }
    Ok(())
}

fn lowerbound(a: LowerboundArgs) -> Result<(), Failure> {
    let inst = load(&a.instance)?;
    let disc = a.disc.disc();
    let mut params = a.colgen.params();
    if let Some(cap) = a.lb_time_cap {
        if !(cap > 0.0) {
            return Err(usage(anyhow::anyhow!("--lb-time-cap must be > 0")));
        }
        params.time_limit = cap;
    }
    if a.dump_network_stats {
        let nets = run::networks(&inst, &disc, RoundingMode::Optimistic).map_err(classify)?;
        print!(
            "{}",
            report::network_stats_csv(&inst, &run::network_stats(&nets))
        );
    }
    let pricing = backend(a.colgen.threads)?;
    let lb =
        run::lower_bound(&inst, &disc, &params, &pricing, &StdClock::new()).map_err(classify)?;
    if let Some(p) = &a.log {
        write(p, &report::log_csv(&lb.log))?;
    }
    let rec = BoundRecord::new(&lb, &disc);
    write(
        &a.output,
        &(serde_json::to_string_pretty(&rec).unwrap() + "\n"),
    )?;
    println!(
        "lower bound {:.2} ({}, {} iterations)",
        rec.value,
        if rec.exact { "exact" } else { "Lagrangian" },
        rec.iterations
    );
    if lb.dummy_active {
        return Err(infeasible(anyhow::anyhow!(
            "some trips cannot be covered even under optimistic rounding"
        )));
    }
    Ok(())
}

/// Loads a schedule with the discretization recorded in it.
fn load_with_schedule(
    instance: &Path,
    schedule: &Path,
) -> Result<(Instance, evsp_core::schedule::Schedule, Discretization), Failure> {
    let inst = load(instance)?;
    let sf = load_schedule(schedule).map_err(file)?;
    let s = sf
        .into_schedule(&inst, &schedule.display().to_string())
        .map_err(file)?;
    let disc = Discretization {
        block_len: sf.block_len,
        soc_min_percent: sf.soc_min_percent,
        ..Discretization::default()
    };
    Ok((inst, s, disc))
}

fn validate(instance: &Path, schedule: &Path) -> Result<(), Failure> {
    let (inst, s, disc) = load_with_schedule(instance, schedule)?;
    let blocks = disc.blocks(&inst).map_err(usage)?;
    let (_, verdict) =
        simulate(&inst, &blocks, disc.soc_min_percent * 10.0, None, &s).map_err(classify)?;
    print!("{}", report::verdict_text(&inst, &verdict));
    if verdict.feasible {
        Ok(())
    } else {
        Err(infeasible(anyhow::anyhow!("schedule is infeasible")))
    }
}

fn report_cmd(instance: &Path, schedule: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let (inst, s, disc) = load_with_schedule(instance, schedule)?;
    let blocks = disc.blocks(&inst).map_err(usage)?;
    let (traces, _) =
        simulate(&inst, &blocks, disc.soc_min_percent * 10.0, None, &s).map_err(classify)?;
    let csv = report::occupancy_csv(&inst, &occupancy(&inst, &blocks, &s));
    match output {
        Some(p) => {
            write(p, &csv)?;
            print!("{}", report::summary_text(&summarize(&s, &traces)));
        }
        None => {
            print!("{csv}");
            eprint!("{}", report::summary_text(&summarize(&s, &traces)));
        }
    }
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<(), Failure> {
    let inst = load(&a.instance)?;
    let disc = a.disc.disc();
    let grid = disc.grid().map_err(usage)?;
    let blocks = disc.blocks(&inst).map_err(usage)?;
    let mode = match a.mode {
        OracleModeArg::NetworkPaths => OracleMode::NetworkPaths,
        OracleModeArg::ContinuousDuties => OracleMode::ContinuousDuties,
    };
    let limits = OracleLimits {
        max_trips: a.max_trips,
        max_duties: a.max_duties,
    };
    let r = oracle_solve(&inst, &grid, &blocks, mode, &limits).map_err(classify)?;
    println!("duties,lp,ip\n{},{},{}", r.columns, r.lp, r.ip);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            seed,
            trips,
            output,
        } => {
            let inst = generate(seed, trips, &Profile::default()).map_err(usage)?;
            save_instance(&inst, &output).map_err(file)
        }
        Command::Solve(a) => solve(a),
        Command::Lowerbound(a) => lowerbound(a),
        Command::Validate { instance, schedule } => validate(&instance, &schedule),
        Command::Report {
            instance,
            schedule,
            output,
        } => report_cmd(&instance, &schedule, output.as_deref()),
        Command::Oracle(a) => oracle(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
