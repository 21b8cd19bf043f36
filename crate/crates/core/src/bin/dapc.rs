use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dapc::experiment::{self, ExperimentConfig};
use dapc::oracle::{self, BatterySizes, Fault};
use dapc::{Error, Result};

#[derive(Parser)]
#[command(name = "dapc", version, about = "Identification coding over discrete affine Poisson channels")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a T sweep: build codebooks and estimate type I/II errors.
    Simulate(SimulateArgs),
    /// Evaluate the capacity bounds on a (kappa, l) grid.
    Bounds(BoundsArgs),
    /// Run the oracle battery.
    Verify(VerifyArgs),
    /// Report rank, conditions and zonotope volume of a matrix file.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config, or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root seed (overrides the config's root_seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Comma-separated kappa values.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    kappa: Vec<f64>,
    /// Comma-separated l values.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    l: Vec<f64>,
    /// Directory for bounds.csv; printed to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for verify.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Corrupt one closed form to check that the battery notices.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Matrix JSON file.
    matrix: PathBuf,
    /// Analyze at this T instead of the numerical rank.
    #[arg(long)]
    t: Option<usize>,
    /// Directory for analyze.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new("."))).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn simulate(args: SimulateArgs) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.root_seed = seed;
    }
    let out_dir = args.out.unwrap_or_else(|| cfg.output_dir.clone());
    let out = experiment::run_simulate(&cfg, &out_dir)?;
    print!("{}", out.csv);
    eprintln!("wrote {}", out_dir.display());
    Ok(true)
}

fn bounds(args: BoundsArgs) -> Result<bool> {
    let path = args.out.map(|d| d.join("bounds.csv"));
    let csv = experiment::run_bounds(&args.kappa, &args.l, path.as_deref())?;
    print!("{csv}");
    Ok(true)
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let fault = if args.inject_fault { Fault::CorruptClosedForm } else { Fault::None };
    let reports = experiment::run_verify(args.seed, args.out.as_deref(), BatterySizes::default(), fault)?;
    print!("{}", oracle::render_table(&reports));
    Ok(reports.iter().all(|r| r.pass))
}

fn analyze(args: AnalyzeArgs) -> Result<bool> {
    let report = experiment::run_analyze(&args.matrix, args.t)?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    if let Some(dir) = args.out {
        write_file(&dir.join("analyze.json"), &json)?;
    }
    print!("{json}");
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be ≥ 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("global thread pool is configured once");
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Bounds(a) => bounds(a),
        Command::Verify(a) => verify(a),
        Command::Analyze(a) => analyze(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
