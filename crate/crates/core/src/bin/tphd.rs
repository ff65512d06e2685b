use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tphd::campaign::{emit_csv, parse_lscan_list, run_monte_carlo};
use tphd::models::{benchmark_scenario, validate, ScenarioConfig, TruthMode};

/// Monte Carlo benchmark of the trajectory PHD filter over several L-scan windows.
#[derive(Debug, Parser)]
#[command(name = "tphd", version)]
struct Args {
    /// Scenario JSON; the built-in benchmark scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,

    /// Number of Monte Carlo runs (defaults to the scenario's value).
    #[arg(long)]
    runs: Option<usize>,

    /// Base seed (defaults to the scenario's value).
    #[arg(long)]
    seed: Option<u64>,

    /// Comma-separated L values, e.g. `1,2,5,10` or `full`.
    #[arg(long, default_value = "1,2,5,10")]
    lscan: String,

    /// Output directory for the CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// `fixed` (birth-component means) or `sampled`.
    #[arg(long)]
    truth_mode: Option<TruthMode>,

    /// Parameter override `name=value` with name in sigma2, lambda_c, p_D, p_S. Repeatable.
    #[arg(long = "vary", value_name = "PARAM=VALUE")]
    vary: Vec<String>,

    /// Print the resolved scenario as JSON and exit.
    #[arg(long)]
    print_scenario: bool,
}

fn run(args: Args) -> tphd::Result<()> {
    let mut config = match &args.scenario {
        Some(path) => ScenarioConfig::from_json_file(path)?,
        None => benchmark_scenario(),
    };
    for o in &args.vary {
        config = config.with_override(o)?;
    }
    if let Some(mode) = args.truth_mode {
        config.truth_mode = mode;
    }
    if let Some(runs) = args.runs {
        config.runs = runs;
    }
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    let config = validate(config)?;
    if args.print_scenario {
        println!("{}", config.to_json_pretty()?);
        return Ok(());
    }

    let lscans = parse_lscan_list(&args.lscan)?;
    log::info!("{} runs, L = {}, {} workers", config.runs, args.lscan, args.workers);
    let summary = run_monte_carlo(&config, &lscans, config.runs, config.base_seed, args.workers)?;
    emit_csv(&summary, &args.out)?;

    println!("{:>6}  {:>12}  {:>12}", "L", "avg cost", "runtime [s]");
    for (l, lscan) in summary.lscans.iter().enumerate() {
        println!(
            "{:>6}  {:>12.4}  {:>12.4}",
            lscan.to_string(),
            summary.time_averaged_cost[l],
            summary.mean_runtime[l]
        );
    }
    if !summary.cardinality_consistent {
        log::warn!("estimated cardinality differs across L values");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
