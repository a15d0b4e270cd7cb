use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mce::bench::{default_epsilon, estimate_rate, synthetic_base, NoiseKind, SyntheticMeasure};
use mce::pipeline::table::{format_float, load_embedding_file};
use mce::pipeline::{run_consensus, run_mds_stability, run_metrics, to_json, EnsembleManifest};
use mce::{embedding_distance, Error, MdsConfig, MdsMethod, Smoothing, WeiszfeldConfig};

#[derive(Parser)]
#[command(name = "mce", version, about = "Median consensus of low-dimensional embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Geometric-median consensus of an ensemble of embedding files.
    Consensus(ConsensusArgs),
    /// Distance between two embedding files.
    Distance { a: PathBuf, b: PathBuf },
    /// Mean pairwise distance, and mean distance to a reference when given.
    Metrics {
        #[command(flatten)]
        input: EnsembleInput,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Spread of repeated SMACOF projections of one distance matrix.
    MdsStability {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte-Carlo deviation-probability bench on a synthetic measure.
    BenchRate(BenchArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct EnsembleInput {
    /// TOML manifest listing embedding files and tags.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Glob pattern used instead of a manifest; files are tagged by stem.
    #[arg(long)]
    glob: Option<String>,
}

impl EnsembleInput {
    fn load(&self) -> mce::Result<EnsembleManifest> {
        match (&self.manifest, &self.glob) {
            (Some(path), _) => EnsembleManifest::load(path),
            (None, Some(pattern)) => EnsembleManifest::from_glob(pattern),
            (None, None) => unreachable!("clap enforces one input"),
        }
    }
}

#[derive(Args)]
struct ConsensusArgs {
    #[command(flatten)]
    input: EnsembleInput,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value = "classical")]
    mds: MdsMethod,
    /// Absolute smoothing constant; defaults to 1e-8 times the mean input norm.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "consensus")]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,5,10,20,50")]
    m_grid: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    repeats: usize,
    /// Deviation threshold; defaults to sigma * n / 2.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value = "gaussian")]
    noise: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn consensus(args: &ConsensusArgs) -> mce::Result<String> {
    let manifest = args.input.load()?;
    let weiszfeld = WeiszfeldConfig {
        epsilon: args.eps.map_or(WeiszfeldConfig::default().epsilon, Smoothing::Absolute),
        tol: args.tol,
        max_iters: args.max_iters,
    };
    let mds = MdsConfig {
        dim: args.dim,
        method: args.mds,
        seed: args.seed,
        ..MdsConfig::default()
    };
    let run = run_consensus(&manifest, &weiszfeld, &mds)?;
    let paths = run.write(&args.out_prefix)?;
    Ok(paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join("\n")
        + "\n")
}

fn bench(args: &BenchArgs) -> mce::Result<String> {
    let noise = match args.noise.as_str() {
        "gaussian" => NoiseKind::Gaussian,
        "uniform" => NoiseKind::Uniform,
        other => return Err(Error::InvalidConfig(format!("unknown noise kind {other:?}"))),
    };
    let base = synthetic_base(args.n, args.p, args.seed)?;
    let measure = SyntheticMeasure::new(base, args.sigma, noise, args.seed)?;
    let epsilon = args.epsilon.unwrap_or_else(|| default_epsilon(args.sigma, args.n));
    let report = estimate_rate(&measure, &args.m_grid, args.repeats, epsilon)?;
    Ok(to_json(&report))
}

fn run(cli: Cli) -> mce::Result<String> {
    match cli.command {
        Command::Consensus(args) => consensus(&args),
        Command::Distance { a, b } => {
            let d = embedding_distance(&load_embedding_file(&a)?, &load_embedding_file(&b)?)?;
            Ok(format!("{}\n", format_float(d)))
        }
        Command::Metrics { input, reference } => {
            let report = run_metrics(&input.load()?, reference.as_deref())?;
            Ok(to_json(&report))
        }
        Command::MdsStability { matrix, runs, dim, trials, seed } => {
            let mds = MdsConfig {
                dim,
                method: MdsMethod::Smacof,
                smacof_trials: trials,
                seed,
                ..MdsConfig::default()
            };
            Ok(to_json(&run_mds_stability(&matrix, runs, &mds)?))
        }
        Command::BenchRate(args) => bench(&args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error[{}]: {err}", err.category());
            ExitCode::FAILURE
        }
    }
}
