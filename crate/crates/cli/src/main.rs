use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use ots_core::bigm::{compare_lambda, Strategy};
use ots_core::harness::{
    compute_bigms, default_spanning_tree, run_benchmark, run_method_with, run_spanning_tree_baseline, HarnessConfig,
    MethodId, RunRow,
};
use ots_core::iterative::IterConfig;
use ots_core::network::{parse_case, sample_scenarios, DemandScenario, PowerNetwork};
use ots_core::solver::{engine_from_env, enumerate_topologies_oracle, Engine};

/// DC optimal transmission switching with tightened big-Ms.
#[derive(Parser)]
#[command(name = "ots", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a big-M set, optionally with ratios against another one.
    Bigm(BigmArgs),
    /// Solve one sampled scenario with one method.
    Solve(SolveArgs),
    /// Run methods over a batch of sampled scenarios.
    Bench(BenchArgs),
    /// Enumerate every connected topology of a small case.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct CaseArgs {
    /// Case file, or the name of a case under `data/`.
    #[arg(long)]
    case: String,
}

#[derive(Args)]
struct SolveOpts {
    /// Solve budget in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1e-4)]
    mip_gap: f64,
    #[arg(long, default_value_t = 10)]
    pool_size: usize,
    /// Outer budgets of the iterative procedure, comma separated.
    #[arg(long, default_value = "30,60,120,300,600")]
    outer_times: String,
    #[arg(long, default_value_t = 30.0)]
    heur_time: f64,
    /// Per-line budget of the exact longest-path big-Ms.
    #[arg(long, default_value_t = 60.0)]
    bigm_time_limit: f64,
}

#[derive(Args)]
struct BigmArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long, default_value = "sr")]
    strategy: Strategy,
    /// Reference strategy for the ratio report.
    #[arg(long)]
    compare: Option<Strategy>,
    #[arg(long)]
    scale_pct: Option<f64>,
    /// Per-line time limit (s).
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    /// Output directory; CSV goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long, default_value = "sr-it")]
    method: MethodId,
    #[arg(long, default_value_t = 0)]
    scenario_seed: u64,
    #[command(flatten)]
    opts: SolveOpts,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long, default_value_t = 100)]
    scenarios: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "bn-ss,sr-ss,lp-ss,bn-it,sr-it,lp-it")]
    methods: String,
    /// Adds this percentage to every LP big-M of the LP methods.
    #[arg(long)]
    scale_pct: Option<f64>,
    #[command(flatten)]
    opts: SolveOpts,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also run the spanning-tree baseline on every scenario.
    #[arg(long)]
    baseline: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long, default_value_t = 0)]
    scenario_seed: u64,
}

fn load_case(arg: &CaseArgs) -> Result<PowerNetwork> {
    let direct = PathBuf::from(&arg.case);
    let path = if direct.exists() {
        direct
    } else {
        let named = Path::new("data").join(format!("{}.m", arg.case));
        if !named.exists() {
            bail!("case '{}' not found", arg.case);
        }
        named
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let net = parse_case(&text).with_context(|| format!("parsing {}", path.display()))?;
    info!("{}: {} buses, {} lines", path.display(), net.bus_count(), net.line_count());
    Ok(net)
}

fn harness_config(opts: &SolveOpts, workers: usize) -> Result<HarnessConfig> {
    let outer_times = opts
        .outer_times
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .context("--outer-times must be a comma-separated list of seconds")?;
    Ok(HarnessConfig {
        time_limit: opts.time_limit,
        rel_gap: opts.mip_gap,
        iter: IterConfig {
            outer_times,
            heuristic_time: opts.heur_time,
            pool_size: opts.pool_size,
            ..IterConfig::default()
        },
        bigm_time_limit: opts.bigm_time_limit,
        workers,
    })
}

fn one_scenario(net: &PowerNetwork, seed: u64) -> DemandScenario {
    sample_scenarios(net, 1, seed).remove(0)
}

fn bigm(args: BigmArgs, engine: &dyn Engine) -> Result<()> {
    let net = load_case(&args.case)?;
    let cfg = HarnessConfig {
        bigm_time_limit: args.time_limit,
        ..HarnessConfig::default()
    };
    let set = compute_bigms(&net, args.strategy, args.scale_pct, &cfg, engine)?;
    let n = set.len().max(1) as f64;
    eprintln!(
        "{}: {} lines, mean value {:.4}, mean time {:.4} s per line, all proven: {}",
        set.label(),
        set.len(),
        set.values().values().sum::<f64>() / n,
        set.total_compute_time() / n,
        set.all_proven()
    );
    if let Some(reference) = args.compare {
        let r = compute_bigms(&net, reference, None, &cfg, engine)?;
        let lambda = compare_lambda(&set, &r)?;
        eprintln!(
            "ratio {} / {}: min {:.4} avg {:.4} max {:.4} over {} lines ({} skipped)",
            set.label(),
            r.label(),
            lambda.min,
            lambda.avg,
            lambda.max,
            lambda.ratios.len(),
            lambda.skipped.len()
        );
    }
    match args.out {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            let name = format!("bigm_{}.csv", set.label().to_ascii_lowercase().trim_end_matches('%'));
            set.write_csv(std::fs::File::create(dir.join(name))?)?;
        }
        None => set.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

fn solve(args: SolveArgs, engine: &dyn Engine) -> Result<()> {
    let net = load_case(&args.case)?;
    let cfg = harness_config(&args.opts, 1)?;
    cfg.validate(&[args.method])?;
    let scenario = one_scenario(&net, args.scenario_seed);
    let bigms = compute_bigms(&net, args.method.strategy, args.method.scale_pct, &cfg, engine)?;
    let report = run_method_with(&net, &scenario, args.method, &bigms, &cfg, engine, None)?;
    std::fs::create_dir_all(&args.out)?;
    let mut w = csv::Writer::from_path(args.out.join("runs.csv"))?;
    w.serialize(RunRow::from(&report))?;
    w.flush()?;
    if let Some(trace) = &report.trace {
        let name = format!("trace_{}_{}.csv", report.scenario_id, args.method.slug());
        trace.write_csv(std::fs::File::create(args.out.join(name))?)?;
    }
    if let Some(sol) = &report.solution {
        let open: Vec<String> = sol.open_lines().iter().map(|l| l.to_string()).collect();
        println!("open lines: {}", if open.is_empty() { "none".into() } else { open.join(",") });
    }
    println!(
        "{} {:?} objective {} gap {} time {:.2} s",
        report.method,
        report.status,
        report.objective.map_or("-".into(), |o| format!("{o:.4}")),
        report.final_gap.map_or("-".into(), |g| format!("{:.4}%", 100.0 * g)),
        report.wall_time_s
    );
    Ok(())
}

fn bench(args: BenchArgs, engine: &dyn Engine) -> Result<()> {
    let net = load_case(&args.case)?;
    let cfg = harness_config(&args.opts, args.workers)?;
    let mut methods = MethodId::parse_list(&args.methods)?;
    if let Some(p) = args.scale_pct {
        for m in methods.iter_mut().filter(|m| m.strategy == Strategy::LP) {
            *m = m.scaled(p);
        }
    }
    let scenarios = sample_scenarios(&net, args.scenarios, args.seed);
    let mut bundle = run_benchmark(&net, &scenarios, &methods, &cfg, engine)?;
    let tree: BTreeSet<_> = default_spanning_tree(&net);
    if args.baseline {
        for s in &scenarios {
            bundle.reports.push(run_spanning_tree_baseline(&net, s, &tree, &cfg, engine)?);
        }
        bundle.finalize();
    }
    bundle.write(
        &args.out,
        serde_json::json!({
            "case": args.case.case,
            "seed": args.seed,
            "scenarios": args.scenarios,
            "config": cfg,
            "spanning_tree": if args.baseline { Some(tree) } else { None },
            "spanning_tree_rule": "minimum weight under capacity / susceptance",
        }),
    )?;
    for row in &bundle.summary {
        println!(
            "{:<12} avg {:>9.2} s  max gap {:>8}  avg gap {:>8}  unsolved {}",
            row.method,
            row.avg_time_s,
            row.max_gap.map_or("-".into(), |g| format!("{:.2}%", 100.0 * g)),
            row.avg_gap.map_or("-".into(), |g| format!("{:.2}%", 100.0 * g)),
            row.unsolved
        );
    }
    Ok(())
}

fn oracle(args: OracleArgs, engine: &dyn Engine) -> Result<()> {
    let net = load_case(&args.case)?;
    let scenario = one_scenario(&net, args.scenario_seed);
    let sol = enumerate_topologies_oracle(&net, &scenario, engine)?;
    let open: Vec<String> = sol.open_lines().iter().map(|l| l.to_string()).collect();
    println!(
        "optimum {:.6}, open lines: {}",
        sol.objective_cost,
        if open.is_empty() { "none".into() } else { open.join(",") }
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = engine_from_env().map_err(anyhow::Error::from).and_then(|engine| match cli.command {
        Command::Bigm(a) => bigm(a, engine.as_ref()),
        Command::Solve(a) => solve(a, engine.as_ref()),
        Command::Bench(a) => bench(a, engine.as_ref()),
        Command::Oracle(a) => oracle(a, engine.as_ref()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
