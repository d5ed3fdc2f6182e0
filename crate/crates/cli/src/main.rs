use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use max3sat::analysis::{
    backbone_exhaustive, backbone_from_best, c1c2_by_overlap, c1c2_csv,
    classify_high_quality_with_bar, default_quality_bar, difficulty, overlap_distribution,
    spearman, Backbone, BackboneRecord, DEFAULT_DIFFICULTY_FRACTION, DEFAULT_EXHAUSTIVE_LIMIT,
};
use max3sat::instance::parse_solutions;
use max3sat::pyramid::DEFAULT_LONG_CONNECTION_STEPS;
use max3sat::{
    parse_dimacs, pyramid, write_dimacs, Algorithm, Assignment, GeneratorConfig, Instance,
    RunConfig, StopCriteria, Vig,
};

mod bench;

const EXIT_BUDGET: u8 = 2;

#[derive(Parser)]
#[command(
    name = "max3sat",
    version,
    about = "Gray-box Max3Sat optimization suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random 3-SAT instances as DIMACS files.
    Gen(GenArgs),
    /// Run one optimizer on one instance.
    Solve(SolveArgs),
    /// Backbone and difficulty analysis.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Run every (instance, algorithm, seed) combination of a suite.
    Bench(bench::BenchArgs),
    /// Export the variable interaction graph as an edge list.
    Vig(VigArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Uniform,
    Scalefree,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    cr: f64,
    /// Power-law exponent, scale-free only.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, env = "MAX3SAT_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
pub(crate) struct StopArgs {
    #[arg(long)]
    time_limit_ms: Option<u64>,
    #[arg(long)]
    flip_limit: Option<u64>,
}

impl StopArgs {
    pub(crate) fn criteria(&self) -> Result<StopCriteria> {
        if self.time_limit_ms.is_none() && self.flip_limit.is_none() {
            bail!("no stop criterion: give --flip-limit and/or --time-limit-ms");
        }
        Ok(StopCriteria {
            time_limit: self.time_limit_ms.map(Duration::from_millis),
            flip_limit: self.flip_limit,
            target: None,
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_parser = parse_algorithm)]
    algo: Algorithm,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    stop: StopArgs,
    /// Fitness that counts as success; defaults to the clause count.
    #[arg(long)]
    target: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_LONG_CONNECTION_STEPS)]
    lc_steps: usize,
    /// Write the JSON record here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the best assignment as a 0/1 line.
    #[arg(long)]
    solution_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Backbone as JSON, exhaustive unless a solutions file is given.
    Backbone {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solutions: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_LIMIT)]
        limit: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Backbone-overlap histogram of the high-quality solutions (CSV).
    Overlap {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solutions: PathBuf,
        /// Backbone JSON as written by `analyze backbone`.
        #[arg(long)]
        backbone: PathBuf,
        /// Minimum fitness of the high-quality set; defaults to ceil(0.995 m).
        #[arg(long)]
        bar: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-overlap c1/c2 statistics (CSV).
        #[arg(long)]
        stats_out: Option<PathBuf>,
    },
    /// Mean backbone distance of the best fraction of the solutions.
    Difficulty {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solutions: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIFFICULTY_FRACTION)]
        fraction: f64,
        /// Backbone JSON; computed exhaustively when absent.
        #[arg(long)]
        backbone: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_LIMIT)]
        limit: usize,
    },
    /// Spearman rank correlation of two columns of numbers.
    Spearman {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
}

#[derive(Args)]
struct VigArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub(crate) fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse::<Algorithm>().map_err(|e| e.to_string())
}

pub(crate) fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_dimacs(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_solutions(path: &Path, n: usize) -> Result<Vec<Assignment>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_solutions(&text, n).with_context(|| format!("parsing {}", path.display()))
}

fn read_backbone(path: &Path, n: usize) -> Result<Backbone> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let record: BackboneRecord =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(record.into_backbone(n)?)
}

fn read_column(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .with_context(|| format!("{}:{}: not a number", path.display(), i + 1))
        })
        .collect()
}

pub(crate) fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Writes to `path`, or to standard output when absent.
pub(crate) fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn gen_file_name(config: &GeneratorConfig) -> String {
    match config.kind {
        max3sat::GeneratorKind::Uniform => {
            format!("uniform-n{}-cr{}-s{}.cnf", config.n, config.cr, config.seed)
        }
        max3sat::GeneratorKind::ScaleFree { beta } => format!(
            "scalefree-n{}-cr{}-b{}-s{}.cnf",
            config.n, config.cr, beta, config.seed
        ),
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    match (args.kind, args.beta) {
        (Kind::Uniform, Some(_)) => bail!("--beta only applies to --kind scalefree"),
        (Kind::Scalefree, None) => bail!("--kind scalefree needs --beta"),
        _ => {}
    }
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    for i in 0..args.count {
        let seed = args.seed + i;
        let config = match args.beta {
            Some(beta) => GeneratorConfig::scale_free(args.n, args.cr, beta, seed),
            None => GeneratorConfig::uniform(args.n, args.cr, seed),
        };
        let instance = config.generate()?;
        let path = args.out_dir.join(gen_file_name(&config));
        fs::write(&path, write_dimacs(&instance))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let instance = read_instance(&args.instance)?;
    let mut stop = args.stop.criteria()?;
    stop.target = args.target;
    let config = RunConfig {
        long_connection_steps: args.lc_steps,
        ..RunConfig::new(args.algo, args.seed, stop)
    };
    let result = pyramid::run(&instance, &config)?;
    let record = result.record(instance_name(&args.instance));
    let json = serde_json::to_string_pretty(&record)? + "\n";
    emit(args.out.as_deref(), &json)?;
    if let Some(path) = &args.solution_out {
        fs::write(path, format!("{}\n", result.best))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if result.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_BUDGET)
    })
}

fn cmd_analyze(command: AnalyzeCommand) -> Result<()> {
    match command {
        AnalyzeCommand::Backbone {
            instance,
            solutions,
            limit,
            out,
        } => {
            let inst = read_instance(&instance)?;
            let backbone = match solutions {
                Some(path) => backbone_from_best(&inst, &read_solutions(&path, inst.num_vars())?)?,
                None => backbone_exhaustive(&inst, limit)?,
            };
            let json = serde_json::to_string_pretty(&backbone.to_record())? + "\n";
            emit(out.as_deref(), &json)
        }
        AnalyzeCommand::Overlap {
            instance,
            solutions,
            backbone,
            bar,
            out,
            stats_out,
        } => {
            let inst = read_instance(&instance)?;
            let sols = read_solutions(&solutions, inst.num_vars())?;
            let backbone = read_backbone(&backbone, inst.num_vars())?;
            let bar = bar.unwrap_or_else(|| default_quality_bar(inst.num_clauses()));
            let hq = classify_high_quality_with_bar(&inst, &sols, bar)?;
            emit(
                out.as_deref(),
                &overlap_distribution(&backbone, &hq).to_csv(),
            )?;
            if let Some(path) = stats_out {
                let rows = c1c2_by_overlap(&inst, &backbone, &hq)?;
                fs::write(&path, c1c2_csv(&rows))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        AnalyzeCommand::Difficulty {
            instance,
            solutions,
            fraction,
            backbone,
            limit,
        } => {
            let inst = read_instance(&instance)?;
            let sols = read_solutions(&solutions, inst.num_vars())?;
            let backbone = match backbone {
                Some(path) => read_backbone(&path, inst.num_vars())?,
                None => backbone_exhaustive(&inst, limit)?,
            };
            let d = difficulty(&inst, &backbone, &sols, fraction)?;
            println!("{d}");
            Ok(())
        }
        AnalyzeCommand::Spearman { x, y } => {
            let rho = spearman(&read_column(&x)?, &read_column(&y)?)?;
            println!("{rho}");
            Ok(())
        }
    }
}

fn cmd_vig(args: VigArgs) -> Result<()> {
    let instance = read_instance(&args.instance)?;
    let mut buf = Vec::new();
    Vig::build(&instance).write_edge_list(&mut buf)?;
    emit(args.out.as_deref(), &String::from_utf8(buf)?)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args)?,
        Command::Solve(args) => return cmd_solve(args),
        Command::Analyze(command) => cmd_analyze(command)?,
        Command::Bench(args) => bench::cmd_bench(args)?,
        Command::Vig(args) => cmd_vig(args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
