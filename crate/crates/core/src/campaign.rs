//! Benchmark driver: single runs, Monte Carlo campaigns over several L values,
//! and CSV output.
//!
//! # Seeds
//!
//! Every random stream is a `ChaCha8Rng` seeded from a counter-based derivation:
//!
//! ```text
//! run_seed(base, r)     = mix(mix(base) ^ r)
//! stream_seed(s, tag)   = mix(s ^ tag)         tag: 1 = truth, 2 = measurements
//! mix                   = SplitMix64 finaliser
//! ```
//!
//! A run's truth and measurements therefore depend only on `(base_seed, r)`:
//! they are shared by every L value (paired comparison) and do not depend on
//! the worker count or scheduling order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, TphdError};
use crate::gm_tphd::{step, TphdState};
use crate::metrics::{trajectory_cost, OspaParams};
use crate::models::{validate, Lscan, ScenarioConfig};
use crate::simulator::{alive_set, generate_scans, generate_truth, true_cardinality, GroundTruthTrajectory, ScanMeasurements};

/// Random stream purposes within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Truth = 1,
    Measurements = 2,
}

fn mix(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_seed(base_seed: u64, run: usize) -> u64 {
    mix(mix(base_seed) ^ run as u64)
}

pub fn stream_rng(seed: u64, tag: StreamTag) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ tag as u64))
}

/// Truth and measurements of one run.
#[derive(Debug, Clone)]
pub struct SimulatedRun {
    pub truth: Vec<GroundTruthTrajectory>,
    pub scans: Vec<ScanMeasurements>,
}

pub fn simulate(config: &ScenarioConfig, seed: u64) -> Result<SimulatedRun> {
    let truth = generate_truth(config, &mut stream_rng(seed, StreamTag::Truth), config.truth_mode)?;
    let scans = generate_scans(&truth, config, &mut stream_rng(seed, StreamTag::Measurements));
    Ok(SimulatedRun { truth, scans })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: usize,
    pub lscan: Lscan,
    /// Trajectory cost at each scan `1..=horizon`.
    pub costs: Vec<f64>,
    /// Estimated number of alive trajectories at each scan.
    pub cardinality: Vec<usize>,
    pub true_cardinality: Vec<usize>,
    pub seconds: f64,
}

impl RunResult {
    pub fn time_averaged_cost(&self) -> f64 {
        self.costs.iter().sum::<f64>() / self.costs.len() as f64
    }
}

/// Run the filter with window `lscan` over a simulated run and score every scan.
pub fn filter_run(config: &ScenarioConfig, lscan: Lscan, sim: &SimulatedRun, run: usize) -> Result<RunResult> {
    let params = OspaParams::default();
    let projection = &config.measurement.observation_matrix;
    let started = Instant::now();

    let mut state = TphdState::new(lscan);
    let mut costs = Vec::with_capacity(config.horizon);
    let mut cardinality = Vec::with_capacity(config.horizon);
    let mut true_card = Vec::with_capacity(config.horizon);
    for scan in &sim.scans {
        let points: &[DVector<f64>] = &scan.points;
        let (next, estimate) = step(&state, points, config).map_err(|e| e.at_run(run))?;
        state = next;
        let k = scan.scan;
        let truth_alive = alive_set(&sim.truth, k);
        costs.push(trajectory_cost(&truth_alive, &estimate, k, &params, projection));
        cardinality.push(estimate.len());
        true_card.push(true_cardinality(&sim.truth, k));
    }

    Ok(RunResult {
        run,
        lscan,
        costs,
        cardinality,
        true_cardinality: true_card,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Simulate and filter one run from an explicit seed.
pub fn run_single(config: &ScenarioConfig, lscan: Lscan, seed: u64) -> Result<RunResult> {
    let config = validate(config.clone())?;
    let sim = simulate(&config, seed)?;
    filter_run(&config, lscan, &sim, 0)
}

/// Aggregated campaign output.
#[derive(Debug, Clone, Default)]
pub struct MonteCarloSummary {
    pub lscans: Vec<Lscan>,
    pub horizon: usize,
    pub runs: usize,
    /// `mean_cost[l][k]`: mean cost at scan `k + 1` for `lscans[l]`.
    pub mean_cost: Vec<Vec<f64>>,
    pub time_averaged_cost: Vec<f64>,
    pub mean_runtime: Vec<f64>,
    pub mean_cardinality: Vec<f64>,
    pub mean_true_cardinality: Vec<f64>,
    /// True when every run produced the same cardinality sequence for all L.
    pub cardinality_consistent: bool,
    /// `results[r][l]`.
    pub results: Vec<Vec<RunResult>>,
}

/// Run `runs` independent Monte Carlo runs for every L in `lscans`, on a pool of
/// `workers` threads. Results are reduced in run order.
pub fn run_monte_carlo(
    config: &ScenarioConfig,
    lscans: &[Lscan],
    runs: usize,
    base_seed: u64,
    workers: usize,
) -> Result<MonteCarloSummary> {
    if runs == 0 {
        return Err(TphdError::InvalidParameter("runs must be at least 1".into()));
    }
    if lscans.is_empty() {
        return Err(TphdError::InvalidParameter("at least one L value is required".into()));
    }
    let config = validate(config.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| TphdError::InvalidParameter(format!("worker pool: {e}")))?;

    let results: Vec<Vec<RunResult>> = pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|r| {
                let sim = simulate(&config, run_seed(base_seed, r)).map_err(|e| e.at_run(r))?;
                lscans
                    .iter()
                    .map(|&l| filter_run(&config, l, &sim, r))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    Ok(aggregate(lscans, config.horizon, results))
}

pub fn aggregate(lscans: &[Lscan], horizon: usize, results: Vec<Vec<RunResult>>) -> MonteCarloSummary {
    let runs = results.len();
    let n = runs.max(1) as f64;
    let mut mean_cost = vec![vec![0.0; horizon]; lscans.len()];
    let mut mean_runtime = vec![0.0; lscans.len()];
    let mut mean_cardinality = vec![0.0; horizon];
    let mut mean_true_cardinality = vec![0.0; horizon];
    let mut cardinality_consistent = true;

    for per_l in &results {
        for (l, res) in per_l.iter().enumerate() {
            for (acc, c) in mean_cost[l].iter_mut().zip(&res.costs) {
                *acc += c;
            }
            mean_runtime[l] += res.seconds;
            cardinality_consistent &= res.cardinality == per_l[0].cardinality;
        }
        if let Some(first) = per_l.first() {
            for k in 0..horizon {
                mean_cardinality[k] += first.cardinality[k] as f64;
                mean_true_cardinality[k] += first.true_cardinality[k] as f64;
            }
        }
    }
    for row in &mut mean_cost {
        row.iter_mut().for_each(|v| *v /= n);
    }
    mean_runtime.iter_mut().for_each(|v| *v /= n);
    mean_cardinality.iter_mut().for_each(|v| *v /= n);
    mean_true_cardinality.iter_mut().for_each(|v| *v /= n);
    let time_averaged_cost = mean_cost
        .iter()
        .map(|row| if row.is_empty() { 0.0 } else { row.iter().sum::<f64>() / row.len() as f64 })
        .collect();

    MonteCarloSummary {
        lscans: lscans.to_vec(),
        horizon,
        runs,
        mean_cost,
        time_averaged_cost,
        mean_runtime,
        mean_cardinality,
        mean_true_cardinality,
        cardinality_consistent,
        results,
    }
}

/// Write `cost_vs_time.csv`, `cardinality_vs_time.csv` and `summary.csv` into `out_dir`.
pub fn emit_csv(summary: &MonteCarloSummary, out_dir: impl AsRef<Path>) -> Result<()> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;

    let mut cost = BufWriter::new(File::create(out_dir.join("cost_vs_time.csv"))?);
    write!(cost, "scan")?;
    for l in &summary.lscans {
        write!(cost, ",L={l}")?;
    }
    writeln!(cost)?;
    for k in 0..summary.horizon {
        write!(cost, "{}", k + 1)?;
        for row in &summary.mean_cost {
            write!(cost, ",{}", row[k])?;
        }
        writeln!(cost)?;
    }
    cost.flush()?;

    let mut card = BufWriter::new(File::create(out_dir.join("cardinality_vs_time.csv"))?);
    writeln!(card, "scan,mean_estimated,mean_true")?;
    for k in 0..summary.horizon {
        writeln!(
            card,
            "{},{},{}",
            k + 1,
            summary.mean_cardinality[k],
            summary.mean_true_cardinality[k]
        )?;
    }
    card.flush()?;

    let mut sum = BufWriter::new(File::create(out_dir.join("summary.csv"))?);
    writeln!(sum, "L,time_averaged_cost,mean_runtime_seconds")?;
    for (l, lscan) in summary.lscans.iter().enumerate() {
        writeln!(
            sum,
            "{lscan},{},{}",
            summary.time_averaged_cost[l], summary.mean_runtime[l]
        )?;
    }
    sum.flush()?;
    Ok(())
}

/// Parse a comma-separated list of L values (`"1,2,5,10"`, `"full"`, `"5,full"`).
pub fn parse_lscan_list(text: &str) -> Result<Vec<Lscan>> {
    text.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}
