use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use demsim_core::analytic::{hol_blocking_monte_carlo, hol_curve, HolParams};
use demsim_core::engine::{run_replications, Scheduler};
use demsim_core::sweep::{
    emit_csv, emit_json, run_sweep_with_workers, Scenario, SweepParams, TableId, WORKERS_ENV,
};
use demsim_core::trace::{parse_workload, render, replay, timeline_stats};
use demsim_core::{AccessCategory, ScenarioConfig};

#[derive(Parser)]
#[command(name = "demsim", version, about = "DL-MU-MIMO scheduling simulator: 802.11ac FIFO vs DEMS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Head-of-line blocking probability curve as CSV.
    Hol(HolArgs),
    /// Replicated runs at a single (alpha, beta) point.
    Run(RunArgs),
    /// Full (alpha, beta) campaign; writes six tables per scenario.
    Sweep(SweepArgs),
    /// Deterministic replay of a workload file.
    Trace(TraceArgs),
}

#[derive(Args)]
struct HolArgs {
    /// Spatial streams n_s.
    #[arg(long)]
    ns: u32,
    /// Largest user count n_u in the curve.
    #[arg(long)]
    nu_max: u32,
    /// Add a Monte Carlo column with this many samples per point.
    #[arg(long)]
    mc_samples: Option<u64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// 1u, 2u or 3u.
    #[arg(long)]
    scenario: Scenario,
    /// fifo (802.11ac) or dems.
    #[arg(long)]
    scheduler: Scheduler,
    /// Probability that VO wins EDCA contention.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Share of frames addressed to user 1 (default: uniform split).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 500)]
    periods: u32,
    #[arg(long, default_value_t = 15)]
    runs: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: Scenario,
    /// Grid points as <n_alpha>x<n_beta>.
    #[arg(long, default_value = "25x25", value_parser = parse_grid)]
    grid: (usize, usize),
    #[arg(long, default_value_t = 500)]
    periods: u32,
    #[arg(long, default_value_t = 15)]
    runs: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Also write a JSON mirror of every table.
    #[arg(long)]
    json: bool,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    workload: PathBuf,
    #[arg(long)]
    scheduler: Scheduler,
    /// Text layout plus summary, or JSON with timeline and stats.
    #[arg(long, value_enum, default_value_t = TraceFormat::Text)]
    format: TraceFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Text,
    Json,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected <n_alpha>x<n_beta>, got `{s}`"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad grid size `{t}`"));
    Ok((n(a)?, n(b)?))
}

/// Failure with its exit status: 2 for bad input, 1 otherwise.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

fn hol(args: HolArgs) -> Result<String, Failure> {
    if args.ns < 1 || args.nu_max < args.ns {
        return Err(usage(anyhow::anyhow!("need ns >= 1 and nu-max >= ns (got ns={}, nu-max={})", args.ns, args.nu_max)));
    }
    if args.mc_samples == Some(0) {
        return Err(usage(anyhow::anyhow!("mc-samples must be >= 1")));
    }
    let curve = hol_curve(args.ns, args.nu_max).map_err(usage)?;
    let mut out = String::from("n_u,n_s,p_blk");
    if args.mc_samples.is_some() {
        out.push_str(",p_mc,se_mc");
    }
    out.push('\n');
    for (n_u, p) in curve {
        let _ = write!(out, "{n_u},{},{p:.6}", args.ns);
        if let Some(samples) = args.mc_samples {
            let params = HolParams::new(n_u, args.ns).map_err(usage)?;
            let mc = hol_blocking_monte_carlo(params, samples, args.seed.wrapping_add(n_u as u64))
                .map_err(anyhow::Error::from)?;
            let _ = write!(out, ",{:.6},{:.6}", mc.estimate, mc.std_error);
        }
        out.push('\n');
    }
    Ok(out)
}

fn run(args: RunArgs) -> Result<String, Failure> {
    let mut cfg = ScenarioConfig::new(args.scenario.n_users())
        .with_alpha(args.alpha)
        .with_periods(args.periods)
        .with_runs(args.runs)
        .with_seed(args.seed);
    if let Some(beta) = args.beta {
        cfg = cfg.with_beta(beta);
    }
    let cfg = demsim_core::validate_config(cfg).map_err(usage)?;
    let stats = run_replications(&cfg, args.scheduler).map_err(anyhow::Error::from)?;
    Ok(match args.format {
        Format::Csv => {
            let mut out = String::from("scenario,scheduler,alpha,beta,ac,mean,stddev,ci95\n");
            for ac in AccessCategory::SWEEP {
                let _ = writeln!(
                    out,
                    "{},{},{:.4},{:.4},{ac},{:.4},{:.4},{:.4}",
                    args.scenario,
                    args.scheduler,
                    cfg.alpha,
                    cfg.beta,
                    stats.mean_c[ac],
                    stats.stddev_c[ac],
                    stats.ci95_c[ac]
                );
            }
            out
        }
        Format::Json => {
            let doc = serde_json::json!({
                "scenario": args.scenario,
                "scheduler": args.scheduler,
                "alpha": cfg.alpha,
                "beta": cfg.beta,
                "master_seed": cfg.master_seed,
                "stats": stats,
            });
            serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)? + "\n"
        }
    })
}

fn sweep(args: SweepArgs) -> Result<String, Failure> {
    let params = SweepParams {
        n_alpha: args.grid.0,
        n_beta: args.grid.1,
        periods: args.periods,
        runs: args.runs,
        ..SweepParams::new(args.scenario, args.seed)
    };
    if args.workers == Some(0) {
        return Err(usage(anyhow::anyhow!("workers must be >= 1")));
    }
    let precheck = demsim_core::sweep::build_grid(params.scenario, params.n_alpha, params.n_beta);
    precheck.map_err(usage)?;
    if params.periods < 1 || params.runs < 1 {
        return Err(usage(anyhow::anyhow!("periods and runs must be >= 1")));
    }
    let result = run_sweep_with_workers(params, args.workers).map_err(anyhow::Error::from)?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut written = String::new();
    for id in TableId::ALL {
        let table = result.table(id);
        let stem = format!("{}_{}", args.scenario, id);
        let mut files = vec![(args.out_dir.join(format!("{stem}.csv")), emit_csv(&table))];
        if args.json {
            files.push((args.out_dir.join(format!("{stem}.json")), emit_json(&table)));
        }
        for (path, body) in files {
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            let _ = writeln!(written, "{}", path.display());
        }
    }
    log::info!("sweep {} done: {}", args.scenario, result.provenance);
    Ok(written)
}

fn trace(args: TraceArgs) -> Result<String, Failure> {
    let text = fs::read_to_string(&args.workload)
        .with_context(|| format!("reading {}", args.workload.display()))
        .map_err(usage)?;
    let workload = parse_workload(&text)
        .with_context(|| args.workload.display().to_string())
        .map_err(usage)?;
    let timeline = replay(&workload, args.scheduler);
    timeline.check().map_err(anyhow::Error::from)?;
    let stats = timeline_stats(&timeline);
    Ok(match args.format {
        TraceFormat::Text => format!("{}{stats}\n", render(&timeline)),
        TraceFormat::Json => {
            let doc = serde_json::json!({ "stats": stats, "timeline": timeline });
            serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)? + "\n"
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Hol(a) => hol(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Trace(a) => trace(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
