use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;

use max3sat::pyramid::DEFAULT_LONG_CONNECTION_STEPS;
use max3sat::{pyramid, Algorithm, Instance, RunConfig};

use crate::{emit, instance_name, parse_algorithm, read_instance, StopArgs};

pub const BENCH_CSV_HEADER: &str =
    "instance,algorithm,seed,success,best_fitness,flip_updates,full_evaluations,wall_ms";
pub const SUMMARY_CSV_HEADER: &str = "algorithm,runs,successes,solve_rate,median_flip_updates";

#[derive(Args)]
pub struct BenchArgs {
    /// Directory of `.cnf` files.
    #[arg(long)]
    suite: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm,
          default_value = "ipp,mocsm,mocsm-mixed")]
    algos: Vec<Algorithm>,
    /// Runs per (instance, algorithm), with seeds 0..k.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[command(flatten)]
    stop: StopArgs,
    #[arg(long, default_value_t = DEFAULT_LONG_CONNECTION_STEPS)]
    lc_steps: usize,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Row CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary CSV destination; the summary always goes to standard error.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

struct Row {
    instance: String,
    algorithm: Algorithm,
    seed: u64,
    success: bool,
    best_fitness: usize,
    flip_updates: u64,
    full_evaluations: u64,
    wall_ms: u64,
}

fn load_suite(dir: &Path) -> Result<Vec<(String, Instance)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cnf"))
        .collect();
    if paths.is_empty() {
        bail!("suite {} contains no .cnf files", dir.display());
    }
    paths.sort();
    paths
        .iter()
        .map(|p| Ok((instance_name(p), read_instance(p)?)))
        .collect()
}

fn median(sorted: &[u64]) -> Option<f64> {
    let len = sorted.len();
    match len {
        0 => None,
        _ if len % 2 == 1 => Some(sorted[len / 2] as f64),
        _ => Some((sorted[len / 2 - 1] + sorted[len / 2]) as f64 / 2.0),
    }
}

fn summary_csv(rows: &[Row], algos: &[Algorithm]) -> String {
    let mut out = format!("{SUMMARY_CSV_HEADER}\n");
    for &algo in algos {
        let mine: Vec<&Row> = rows.iter().filter(|r| r.algorithm == algo).collect();
        let mut flips: Vec<u64> = mine
            .iter()
            .filter(|r| r.success)
            .map(|r| r.flip_updates)
            .collect();
        flips.sort_unstable();
        let rate = if mine.is_empty() {
            0.0
        } else {
            flips.len() as f64 / mine.len() as f64
        };
        let med = median(&flips).map_or_else(|| "NA".to_string(), |m| m.to_string());
        writeln!(out, "{algo},{},{},{rate:.4},{med}", mine.len(), flips.len()).unwrap();
    }
    out
}

pub fn cmd_bench(args: BenchArgs) -> Result<()> {
    let stop = args.stop.criteria()?;
    let suite = load_suite(&args.suite)?;
    let mut algos: Vec<Algorithm> = Vec::new();
    for &a in &args.algos {
        if !algos.contains(&a) {
            algos.push(a);
        }
    }

    let mut jobs = Vec::new();
    for (idx, _) in suite.iter().enumerate() {
        for &algo in &algos {
            for seed in 0..args.seeds {
                jobs.push((idx, algo, seed));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("starting worker pool")?;
    let lc_steps = args.lc_steps;
    let mut rows = pool.install(|| {
        jobs.par_iter()
            .map(|&(idx, algorithm, seed)| {
                let (name, instance) = &suite[idx];
                let config = RunConfig {
                    long_connection_steps: lc_steps,
                    ..RunConfig::new(algorithm, seed, stop)
                };
                let r = pyramid::run(instance, &config)?;
                Ok(Row {
                    instance: name.clone(),
                    algorithm,
                    seed,
                    success: r.success,
                    best_fitness: r.best_fitness,
                    flip_updates: r.flip_updates,
                    full_evaluations: r.full_evaluations,
                    wall_ms: r.wall.as_millis() as u64,
                })
            })
            .collect::<Result<Vec<Row>>>()
    })?;
    let rank = |a: Algorithm| Algorithm::ALL.iter().position(|&x| x == a);
    rows.sort_by(|a, b| {
        (&a.instance, rank(a.algorithm), a.seed).cmp(&(&b.instance, rank(b.algorithm), b.seed))
    });

    let mut csv = format!("{BENCH_CSV_HEADER}\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.instance,
            r.algorithm,
            r.seed,
            r.success,
            r.best_fitness,
            r.flip_updates,
            r.full_evaluations,
            r.wall_ms
        )
        .unwrap();
    }
    emit(args.out.as_deref(), &csv)?;

    let summary = summary_csv(&rows, &algos);
    eprint!("{summary}");
    if let Some(path) = &args.summary_out {
        fs::write(path, &summary).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
