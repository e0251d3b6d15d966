mod commands;
mod config;
mod error;
mod experiment;
mod manifest;
mod svg;

use std::collections::hash_map::RandomState;
use std::hash::{BuildHasher, Hasher};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{CfArgs, FitArgs, KestenArgs, SumArgs};
use crate::config::{FlatConfig, SeedArg};
use crate::error::{usage, CliError, CliResult};
use crate::experiment::Kind;
use crate::manifest::{stats_hash, write_all, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "rotsum", version, about = "Ergodic sums of circle rotations and their limit laws")]
struct Cli {
    /// Seed for randomized commands: an integer, or 'auto' to draw one and record it
    #[arg(long, global = true)]
    seed: Option<SeedArg>,
    /// Worker threads; never changes results
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Continued fraction coefficients and convergents
    Cf(CfArgs),
    /// Ergodic sum series S_1..S_T of one orbit
    Sum(SumArgs),
    /// Run a Monte Carlo experiment and write its manifest
    Experiment(ExperimentArgs),
    /// Kesten's scale constant from tau and the integral I
    KestenConstant(KestenArgs),
    /// Fit Cauchy, Gaussian and q-Gaussian laws to a CSV sample
    Fit(FitArgs),
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_enum, required_unless_present = "replay")]
    kind: Option<Kind>,
    /// Flat JSON config; flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rerun a manifest and compare statistics instead of writing outputs
    #[arg(long, conflicts_with_all = ["kind", "config"])]
    replay: Option<PathBuf>,
    /// Also write an SVG plot
    #[arg(long)]
    plot: bool,
    #[command(flatten)]
    flags: FlatConfig,
}

fn auto_seed() -> u64 {
    let mut h = RandomState::new().build_hasher();
    h.write_u128(std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0));
    h.finish()
}

fn default_workers() -> usize {
    rotsum::experiments::default_workers()
}

fn resolve_seed(arg: Option<SeedArg>, required: bool) -> CliResult<(Option<u64>, bool)> {
    match arg {
        Some(SeedArg::Value(v)) => Ok((Some(v), false)),
        Some(SeedArg::Auto(_)) => {
            let s = auto_seed();
            eprintln!("seed auto: using {s}");
            Ok((Some(s), true))
        }
        None if required => Err(usage("this command is randomized: pass --seed <n> or --seed auto")),
        None => Ok((None, false)),
    }
}

fn cmd_experiment(cli: &Cli, args: &ExperimentArgs) -> CliResult<()> {
    if let Some(path) = &args.replay {
        return replay(path, cli.workers);
    }
    let kind = args.kind.expect("clap requires kind without --replay");
    let file = match &args.config {
        Some(p) => FlatConfig::load(p)?,
        None => FlatConfig::default(),
    };
    let mut over = args.flags.clone();
    over.seed = cli.seed;
    over.workers = cli.workers;
    let merged = file.overlay(&over);
    let (seed, seed_auto) = resolve_seed(merged.seed, kind.is_random())?;
    let seed = seed.unwrap_or(0);
    let workers = merged.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    let mut resolved = experiment::resolve(kind, merged)?;
    resolved.seed = Some(SeedArg::Value(seed));
    resolved.workers = None;

    let start = Instant::now();
    let outcome = experiment::run(kind, &resolved, seed, workers)?;
    let wall = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&cli.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", cli.out_dir.display())))?;
    let stem = format!("{}_{}_{}", kind.name(), seed, outcome.horizon);
    let manifest_path = cli.out_dir.join(format!("{stem}.json"));
    let mut files: Vec<(PathBuf, String)> = vec![(cli.out_dir.join(format!("{stem}.csv")), outcome.csv)];
    if args.plot {
        if let Some(svg) = outcome.svg {
            files.push((cli.out_dir.join(format!("{stem}.svg")), svg));
        }
    }
    let mut outputs: Vec<String> = files.iter().map(|f| f.0.display().to_string()).collect();
    outputs.insert(0, manifest_path.display().to_string());
    let manifest = RunManifest {
        tool: "rotsum".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "experiment".into(),
        kind: kind.name().into(),
        config: resolved,
        seed,
        seed_auto,
        workers,
        wall_time_s: wall,
        outputs,
        stats_sha256: stats_hash(&outcome.stats),
        stats: outcome.stats,
    };
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    files.insert(0, (manifest_path, body.clone()));
    write_all(&files)?;
    if cli.format == Some(Format::Json) {
        println!("{body}");
    } else {
        print_summary(&manifest);
    }
    Ok(())
}

fn print_summary(m: &RunManifest) {
    println!("{} (seed {}, {} workers, {:.2} s)", m.kind, m.seed, m.workers, m.wall_time_s);
    if let serde_json::Value::Object(stats) = &m.stats {
        for (k, v) in stats {
            let text = v.to_string();
            if text.len() <= 120 {
                println!("  {k}: {text}");
            }
        }
    }
    println!("  stats_sha256: {}", m.stats_sha256);
    for p in &m.outputs {
        println!("wrote {p}");
    }
}

fn replay(path: &Path, workers: Option<usize>) -> CliResult<()> {
    let m = RunManifest::load(path)?;
    let kind = Kind::from_name(&m.kind).ok_or_else(|| usage(format!("unknown experiment kind '{}'", m.kind)))?;
    let workers = workers.unwrap_or_else(default_workers);
    let outcome = experiment::run(kind, &m.config, m.seed, workers)?;
    let hash = stats_hash(&outcome.stats);
    if hash != m.stats_sha256 {
        return Err(CliError::Mismatch(format!("{} recorded {}, replay gave {hash}", path.display(), m.stats_sha256)));
    }
    println!("replay identical: {} ({} workers) stats_sha256 {hash}", m.kind, workers);
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Cf(a) => commands::cmd_cf(a, cli.format),
        Command::Sum(a) => {
            std::fs::create_dir_all(&cli.out_dir)?;
            commands::cmd_sum(a, &cli.out_dir, cli.format)
        }
        Command::Experiment(a) => cmd_experiment(cli, a),
        Command::KestenConstant(a) => {
            let needs_seed = a.tau != commands::TauChoice::Analytic;
            let (seed, _) = resolve_seed(cli.seed, needs_seed)?;
            commands::cmd_kesten(a, seed, cli.format)
        }
        Command::Fit(a) => commands::cmd_fit(a, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
