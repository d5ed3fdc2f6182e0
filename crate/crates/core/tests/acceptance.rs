//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --release --test acceptance -- 3 5`.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use max3sat::analysis::{
    backbone_exhaustive, backbone_from_set, difficulty, exhaustive_scan, spearman, Backbone,
    DEFAULT_DIFFICULTY_FRACTION,
};
use max3sat::instance::{generate_uniform, parse_dimacs};
use max3sat::operators::{directed_fihc, fihc, long_connection};
use max3sat::px::{px_decompose, px_exchange};
use max3sat::pyramid::{self, Algorithm, RunConfig, StopCriteria};
use max3sat::{f_cf, rng_from_seed, Assignment, Instance, Mmst, RunRng, Vig};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

const E1: &str = "p cnf 6 3\n1 -2 3 0\n-2 3 5 0\n-4 5 -6 0\n";

fn bits(s: &str) -> Assignment {
    s.parse().unwrap()
}

fn flipped(x: &Assignment, v: usize) -> Assignment {
    let mut y = x.clone();
    y.flip(v);
    y
}

/// Random instance with `n` drawn from `range` and a clause ratio in [1, 6).
fn random_instance(rng: &mut RunRng, range: std::ops::RangeInclusive<usize>) -> Instance {
    let n = rng.gen_range(range);
    let cr = rng.gen_range(1.0..6.0);
    generate_uniform(n, cr, rng.gen()).unwrap()
}

fn worked_example() -> Outcome {
    let inst = parse_dimacs(E1).unwrap();
    let vig = Vig::build(&inst);
    let table: [&[usize]; 6] = [
        &[2, 3],
        &[1, 3, 5],
        &[1, 2, 5],
        &[5, 6],
        &[2, 3, 4, 6],
        &[4, 5],
    ];
    for (v, want) in table.iter().enumerate() {
        let got: Vec<usize> = vig.neighbors(v).unwrap().iter().map(|u| u + 1).collect();
        ensure!(got == *want, "VIG row {}: {got:?} != {want:?}", v + 1);
    }

    let (a, b) = (bits("110101"), bits("010000"));
    let d = px_decompose(&inst, &vig, &a, &b).unwrap();
    let comps: Vec<Vec<usize>> = d
        .components
        .iter()
        .map(|c| c.variables.iter().map(|v| v + 1).collect())
        .collect();
    ensure!(comps == vec![vec![1], vec![4, 6]], "components {comps:?}");

    let (a2, b2) = px_exchange(&a, &b, &[3, 5]);
    let f = |x: &Assignment| inst.fitness(x).unwrap();
    ensure!(
        (f(&a), f(&b)) == (1, 1),
        "parent fitness ({}, {})",
        f(&a),
        f(&b)
    );
    ensure!(
        (f(&a2), f(&b2)) == (2, 0),
        "offspring fitness ({}, {})",
        f(&a2),
        f(&b2)
    );
    ensure!(f(&a) + f(&b) == f(&a2) + f(&b2), "sum not conserved");
    Ok("VIG, components {1} {4,6}, offspring (2, 0)".into())
}

fn px_conservation() -> Outcome {
    const TRIALS: u64 = 10_000;
    let violations: Vec<String> = (0..TRIALS)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = rng_from_seed(0x0C02_0000 + t);
            let inst = random_instance(&mut rng, 10..=200);
            let n = inst.num_vars();
            let vig = Vig::build(&inst);
            let a = Assignment::random(n, &mut rng);
            // Parents range from near-identical to unrelated.
            let k = rng.gen_range(1..=n);
            let mut b = a.clone();
            for v in sample(&mut rng, n, k) {
                b.flip(v);
            }
            let d = px_decompose(&inst, &vig, &a, &b).unwrap();
            let mask: Vec<usize> = d
                .components
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .flat_map(|c| c.variables.iter().copied())
                .collect();
            let (a2, b2) = px_exchange(&a, &b, &mask);
            let f = |x: &Assignment| inst.fitness(x).unwrap();
            let (before, after) = (f(&a) + f(&b), f(&a2) + f(&b2));
            (before != after).then(|| format!("trial {t}: {before} != {after}"))
        })
        .collect();
    ensure!(
        violations.is_empty(),
        "{} violations, first: {}",
        violations.len(),
        violations[0]
    );
    Ok(format!("{TRIALS} trials, 0 violations"))
}

fn check_deltas(inst: &Instance, m: &Mmst<'_>, v: usize) -> Result<(), String> {
    let before = inst.evaluate(m.assignment()).unwrap();
    let after = inst.evaluate(&flipped(m.assignment(), v)).unwrap();
    let df = after.fitness() as i64 - before.fitness() as i64;
    ensure!(m.fitness_delta(v).unwrap() == df, "fitness_delta({v})");
    ensure!(
        m.fcf_delta(v).unwrap() == f_cf(&before, &after),
        "fcf_delta({v})"
    );
    Ok(())
}

fn mmst_equivalence() -> Outcome {
    const INSTANCES: u64 = 50;
    const FLIPS: usize = 100_000;
    const PROBE_EVERY: usize = 1_000;
    let results: Vec<Result<(), String>> = (0..INSTANCES)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(0x0C03_0000 + i);
            let inst = random_instance(&mut rng, 3..=200);
            let n = inst.num_vars();
            let mut m = Mmst::build(&inst, Assignment::random(n, &mut rng)).unwrap();
            for step in 1..=FLIPS {
                let v = rng.gen_range(0..n);
                let (df, dcf) = (m.fitness_delta(v).unwrap(), m.fcf_delta(v).unwrap());
                let before = m.profile();
                m.flip(v).unwrap();
                let after = m.profile();
                let real = after.fitness() as i64 - before.fitness() as i64;
                ensure!(
                    df == real,
                    "instance {i} step {step}: predicted {df}, got {real}"
                );
                ensure!(
                    dcf == f_cf(&before, &after),
                    "instance {i} step {step}: fcf mismatch"
                );
                if step % PROBE_EVERY == 0 {
                    let scratch = Mmst::build(&inst, m.assignment().clone()).unwrap();
                    ensure!(m == scratch, "instance {i} step {step}: counters drifted");
                    ensure!(
                        m.profile() == inst.evaluate(m.assignment()).unwrap(),
                        "instance {i} step {step}: profile drifted"
                    );
                    for _ in 0..8 {
                        check_deltas(&inst, &m, rng.gen_range(0..n))
                            .map_err(|e| format!("instance {i} step {step}: {e}"))?;
                    }
                }
            }
            Ok(())
        })
        .collect();
    let failures: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    ensure!(
        failures.is_empty(),
        "{} instances failed, first: {}",
        failures.len(),
        failures[0]
    );
    Ok(format!(
        "{INSTANCES} instances x {FLIPS} flips, 0 violations"
    ))
}

/// Brute-force (fitness delta, f_cf) of every single flip of `x`.
fn brute_scores(inst: &Instance, x: &Assignment) -> Vec<(i64, i64)> {
    let before = inst.evaluate(x).unwrap();
    (0..inst.num_vars())
        .map(|v| {
            let after = inst.evaluate(&flipped(x, v)).unwrap();
            (
                after.fitness() as i64 - before.fitness() as i64,
                f_cf(&before, &after),
            )
        })
        .collect()
}

fn directed_fihc_replay() -> Outcome {
    let mut flips = 0;
    for i in 0..100u64 {
        let mut rng = rng_from_seed(0x0C04_0000 + i);
        let inst = random_instance(&mut rng, 3..=30);
        let start = Assignment::random(inst.num_vars(), &mut rng);
        let mut m = Mmst::build(&inst, start.clone()).unwrap();
        let trace = directed_fihc(&mut m, &mut rng);
        let mut x = start;
        for (step, &v) in trace.iter().enumerate() {
            let scores = brute_scores(&inst, &x);
            ensure!(
                scores[v].0 > 0,
                "instance {i} step {step}: flip {v} not improving"
            );
            let best = scores
                .iter()
                .filter(|s| s.0 > 0)
                .map(|s| s.1)
                .max()
                .unwrap();
            ensure!(
                scores[v].1 == best,
                "instance {i} step {step}: flip {v} scores {} < {best}",
                scores[v].1
            );
            x.flip(v);
        }
        ensure!(&x == m.assignment(), "instance {i}: replay diverged");
        ensure!(
            brute_scores(&inst, &x).iter().all(|s| s.0 <= 0),
            "instance {i}: stopped with an improving flip left"
        );
        flips += trace.len();
    }
    Ok(format!("100 instances, {flips} flips replayed"))
}

fn long_connection_contract() -> Outcome {
    let e1 = parse_dimacs(E1).unwrap();
    let mut rng = rng_from_seed(5);
    let mut m = Mmst::build(&e1, bits("110111")).unwrap();
    let scores: Vec<i64> = (0..6).map(|v| m.fcf_delta(v).unwrap()).collect();
    ensure!(scores == [-1, -4, -4, -2, -2, -2], "E1 scores {scores:?}");
    ensure!(
        long_connection(&mut m, 25, &mut rng).is_empty(),
        "E1 at 110111 moved"
    );

    let (mut steps, mut early) = (0, 0);
    for i in 0..100u64 {
        let mut rng = rng_from_seed(0x0C05_0000 + i);
        let inst = random_instance(&mut rng, 3..=60);
        let mut m = Mmst::build(&inst, Assignment::random(inst.num_vars(), &mut rng)).unwrap();
        if i % 2 == 0 {
            fihc(&mut m, &mut rng);
        }
        let limit = if i % 4 == 0 {
            25
        } else {
            rng.gen_range(0..=40)
        };
        let mut x = m.assignment().clone();
        let trace = long_connection(&mut m, limit, &mut rng);
        ensure!(
            trace.len() <= limit,
            "instance {i}: {} steps > {limit}",
            trace.len()
        );
        for (step, &v) in trace.iter().enumerate() {
            let scores = brute_scores(&inst, &x);
            let best = scores.iter().map(|s| s.1).max().unwrap();
            ensure!(best >= 0, "instance {i} step {step}: moved with max {best}");
            ensure!(
                scores[v].1 == best,
                "instance {i} step {step}: flip {v} not argmax"
            );
            x.flip(v);
        }
        ensure!(&x == m.assignment(), "instance {i}: replay diverged");
        let best_left = brute_scores(&inst, &x).iter().map(|s| s.1).max().unwrap();
        if trace.len() < limit {
            ensure!(
                best_left < 0,
                "instance {i}: stopped early with max {best_left}"
            );
            early += 1;
        }
        steps += trace.len();
    }
    Ok(format!(
        "E1 zero-step case, 100 instances, {steps} steps, {early} early stops"
    ))
}

fn naive_optima(inst: &Instance) -> Vec<Assignment> {
    let n = inst.num_vars();
    let all: Vec<(usize, Assignment)> = (0..1u64 << n)
        .map(|mask| {
            let x = Assignment::from_mask(mask, n);
            (inst.fitness(&x).unwrap(), x)
        })
        .collect();
    let best = all.iter().map(|p| p.0).max().unwrap();
    all.into_iter()
        .filter(|p| p.0 == best)
        .map(|p| p.1)
        .collect()
}

fn backbone_oracle() -> Outcome {
    let open = parse_dimacs("p cnf 3 1\n1 2 3 0\n").unwrap();
    let b = backbone_exhaustive(&open, 26).unwrap();
    ensure!(
        b.size() == 0 && naive_optima(&open).len() == 7,
        "size-0 case"
    );
    let forced = parse_dimacs("p cnf 3 4\n1 2 3 0\n1 -2 3 0\n1 2 -3 0\n1 -2 -3 0\n").unwrap();
    let b = backbone_exhaustive(&forced, 26).unwrap();
    ensure!(
        b.fixed() == &BTreeMap::from([(0, true)]) && b.optimum() == Some(4),
        "size-1 case: {:?}",
        b.fixed()
    );

    let failures: Vec<String> = (0..200u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = rng_from_seed(0x0C06_0000 + i);
            let inst = random_instance(&mut rng, 3..=16);
            let from_set = backbone_from_set(&naive_optima(&inst)).unwrap();
            let exhaustive = backbone_exhaustive(&inst, 26).unwrap();
            (from_set.fixed() != exhaustive.fixed()).then(|| format!("instance {i}"))
        })
        .collect();
    ensure!(
        failures.is_empty(),
        "{} mismatches, first {}",
        failures.len(),
        failures[0]
    );
    Ok("hand cases, 200 instances agree".into())
}

struct Rates {
    per_instance: Vec<[usize; 3]>,
    runs: usize,
}

fn solve_rates(instances: &[(Instance, usize)], seeds: u64, flip_limit: u64) -> Rates {
    let jobs: Vec<(usize, usize, u64)> = (0..instances.len())
        .flat_map(|i| (0..3).flat_map(move |a| (0..seeds).map(move |s| (i, a, s))))
        .collect();
    let outcomes: Vec<(usize, usize, bool)> = jobs
        .par_iter()
        .map(|&(i, a, seed)| {
            let (inst, optimum) = &instances[i];
            let stop = StopCriteria::flips(flip_limit).with_target(*optimum);
            let r = pyramid::run(inst, &RunConfig::new(Algorithm::ALL[a], seed, stop)).unwrap();
            (i, a, r.success)
        })
        .collect();
    let mut per_instance = vec![[0; 3]; instances.len()];
    for (i, a, ok) in outcomes {
        per_instance[i][a] += ok as usize;
    }
    Rates {
        per_instance,
        runs: seeds as usize,
    }
}

fn desk_scale_solving() -> Outcome {
    const SEEDS: u64 = 40;
    let instances: Vec<(Instance, usize)> = (0..20u64)
        .map(|i| {
            let inst = generate_uniform(20, 4.27, 0x0C07_0000 + i).unwrap();
            let optimum = exhaustive_scan(&inst, 26, false).unwrap().optimum;
            (inst, optimum)
        })
        .collect();
    let rates = solve_rates(&instances, SEEDS, 1_000_000);
    let [ipp, mocsm, mixed] = [0, 1, 2].map(|a| {
        rates.per_instance.iter().map(|r| r[a]).sum::<usize>() as f64
            / (rates.per_instance.len() * rates.runs) as f64
    });
    let detail = format!("solve rate IPP {ipp:.3}, MOCSM {mocsm:.3}, MOCSM-mixed {mixed:.3}");
    for (i, r) in rates.per_instance.iter().enumerate() {
        let rate = |a: usize| r[a] as f64 / rates.runs as f64;
        ensure!(
            rate(1) >= 0.95,
            "instance {i}: MOCSM {}/{}; {detail}",
            r[1],
            rates.runs
        );
        ensure!(
            rate(0) >= 0.80,
            "instance {i}: IPP {}/{}; {detail}",
            r[0],
            rates.runs
        );
    }
    ensure!(
        mocsm >= mixed && mixed >= ipp,
        "ordering violated; {detail}"
    );
    Ok(detail)
}

fn median(mut xs: Vec<u64>) -> f64 {
    xs.sort_unstable();
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2] as f64
    } else {
        (xs[k / 2 - 1] + xs[k / 2]) as f64 / 2.0
    }
}

fn difficulty_correlation() -> Outcome {
    const SEEDS: u64 = 10;
    const BUDGET: u64 = 200_000;
    let mut points = Vec::new();
    for i in 0..20u64 {
        let inst = generate_uniform(24, 4.27, 0x0C08_0000 + i).unwrap();
        let scan = exhaustive_scan(&inst, 26, false).unwrap();
        let backbone: Backbone = scan.backbone;
        // IPP keeps running past the optimum to collect high-quality
        // solutions; its history gives the flips needed to first reach it.
        let stop = StopCriteria::flips(BUDGET).with_target(inst.num_clauses() + 1);
        let runs: Vec<_> = (0..SEEDS)
            .into_par_iter()
            .map(|seed| pyramid::run(&inst, &RunConfig::new(Algorithm::Ipp, seed, stop)).unwrap())
            .collect();
        let to_optimum: Vec<u64> = runs
            .iter()
            .map(|r| {
                r.history
                    .iter()
                    .find(|h| h.fitness >= scan.optimum)
                    .map_or(BUDGET, |h| h.flip_updates)
            })
            .collect();
        let solutions: Vec<Assignment> = runs
            .iter()
            .flat_map(|r| r.population.iter().cloned())
            .filter(|x| inst.fitness(x).unwrap() < scan.optimum)
            .collect();
        if solutions.is_empty() {
            return Err(format!("instance {i}: no sub-optimal solutions collected"));
        }
        let d = difficulty(&inst, &backbone, &solutions, DEFAULT_DIFFICULTY_FRACTION).unwrap();
        points.push((d, median(to_optimum)));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let rho = spearman(&xs, &ys).map_err(|e| e.to_string())?;
    let detail = format!("rho = {rho:.3} over {} instances", points.len());
    ensure!(rho > 0.0, "{detail}; points {points:?}");
    Ok(detail)
}

fn determinism() -> Outcome {
    let mut runs = 0;
    for i in 0..4u64 {
        let inst = generate_uniform(60 + 20 * i as usize, 4.27, 0x0C09_0000 + i).unwrap();
        for algorithm in Algorithm::ALL {
            let json = || {
                let config = RunConfig::new(algorithm, 17 + i, StopCriteria::flips(30_000));
                let r = pyramid::run(&inst, &config).unwrap();
                let mut v = serde_json::to_value(r.record("det")).unwrap();
                v.as_object_mut().unwrap().remove("wall_ms");
                (v, r.best, r.population)
            };
            ensure!(json() == json(), "instance {i} {algorithm}: runs differ");
            runs += 1;
        }
    }
    Ok(format!("{runs} run pairs identical"))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("worked example", Duration::from_secs(1), worked_example),
        ("PX conservation", Duration::from_secs(30), px_conservation),
        (
            "MMST equivalence",
            Duration::from_secs(60),
            mmst_equivalence,
        ),
        (
            "directed FIHC replay",
            Duration::from_secs(60),
            directed_fihc_replay,
        ),
        (
            "long connection contract",
            Duration::from_secs(30),
            long_connection_contract,
        ),
        ("backbone oracle", Duration::from_secs(120), backbone_oracle),
        (
            "desk-scale solving",
            Duration::from_secs(15 * 60),
            desk_scale_solving,
        ),
        (
            "difficulty correlation",
            Duration::from_secs(30 * 60),
            difficulty_correlation,
        ),
        ("determinism", Duration::from_secs(60), determinism),
    ];
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();

    let mut failed = 0;
    for (idx, (name, budget, check)) in criteria.iter().enumerate() {
        let number = idx + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let started = Instant::now();
        let outcome = check();
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > *budget => Err(format!("{detail}; over the {budget:?} budget")),
            other => other,
        };
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {number} {name}: {status} ({elapsed:.2?}) {detail}");
        failed += outcome.is_err() as usize;
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
