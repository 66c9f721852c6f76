//! `pass-assign`: anchor labeling over KITTI-layout scenes, assignment
//! statistics, ground removal and timing.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pass_core::assignment::LabelKind;

#[derive(Debug, Parser)]
#[command(
    name = "pass-assign",
    version,
    about = "Point assisted anchor sample selection"
)]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "PASS_ASSIGN_JOBS", default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Label every anchor of every frame and write one CSV row per anchor.
    Assign(AssignArgs),
    /// Derive scatter, histogram or crossing tables from an assignment CSV.
    Stats(StatsArgs),
    /// Remove the ground plane from one velodyne scan.
    Ground(GroundArgs),
    /// Time threshold-rule against point-assisted assignment on synthetic scenes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Legacy,
    Pass,
    Both,
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    /// Dataset roots (holding velodyne/, label_2/, calib/) or single .bin scans.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    pub mode: Mode,
    /// Skip ground removal.
    #[arg(long)]
    pub no_ground: bool,
    /// Band-width hyperparameter.
    #[arg(long)]
    pub k: Option<f64>,
    /// Weight of the box score; the point term gets 1 - alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Seed for ground fitting.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Process at most this many frames, in frame-id order.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsKind {
    Scatter,
    Hist,
    Crossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelArg {
    Positive,
    Negative,
    Ignored,
}

impl From<LabelArg> for LabelKind {
    fn from(l: LabelArg) -> Self {
        match l {
            LabelArg::Positive => LabelKind::Positive,
            LabelArg::Negative => LabelKind::Negative,
            LabelArg::Ignored => LabelKind::Ignored,
        }
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Assignment CSV written by `assign`.
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: StatsKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep only anchors overlapping some ground truth.
    #[arg(long)]
    pub near_gt_only: bool,
    /// Histogram bins over [0, 1].
    #[arg(long, default_value_t = pass_core::stats::DEFAULT_BINS)]
    pub bins: usize,
    /// Threshold-rule label selected for the histogram.
    #[arg(long, value_enum, default_value_t = LabelArg::Negative)]
    pub label: LabelArg,
    /// JSON run configuration supplying subsample defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Keep a seeded random subset of at most this many records.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Subsample seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GroundArgs {
    /// Input velodyne scan.
    pub input: PathBuf,
    /// Output scan without ground points.
    #[arg(long)]
    pub out: PathBuf,
    /// Inlier band half-width, meters.
    #[arg(long)]
    pub dist_thresh: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Largest accepted plane tilt, degrees.
    #[arg(long)]
    pub max_tilt_deg: Option<f64>,
    #[arg(long)]
    pub min_inlier_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub scenes: usize,
    #[arg(long, default_value_t = 20)]
    pub gts: usize,
    #[arg(long, default_value_t = 120_000)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.jobs);
            return ExitCode::from(1);
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Assign(args) => commands::assign(args),
        Command::Stats(args) => commands::stats(args),
        Command::Ground(args) => commands::ground(args),
        Command::Bench(args) => commands::bench(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
