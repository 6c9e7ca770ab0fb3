mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sbsim_core::SimError;

/// Building thermal simulator: floorplan ingest, rollouts, replay,
/// calibration and rendering.
#[derive(Debug, Parser)]
#[command(name = "sbsim", version)]
pub struct Cli {
    /// Manifest path; defaults to a file next to the command's output.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert floorplan images into building configs.
    Ingest(IngestArgs),
    /// Write a synthetic rectangular building config.
    Synth(SynthArgs),
    /// Roll out a policy and write an episode archive.
    Run(RunArgs),
    /// Replay an episode's actions and weather, report TS-MAE.
    Replay(ReplayArgs),
    /// Search material parameters that minimise replay error.
    Calibrate(CalibrateArgs),
    /// Print uncalibrated vs calibrated train/val error.
    Eval(EvalArgs),
    /// Render a temperature heatmap from an episode.
    Render(RenderArgs),
    /// Split an episode archive into two consecutive parts.
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// PNG or PGM floorplan; repeat for batch ingest.
    #[arg(long, required = true)]
    pub image: Vec<PathBuf>,
    /// Meters per pixel.
    #[arg(long)]
    pub scale: f64,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f32,
    /// Control-volume edge, m.
    #[arg(long, default_value_t = 0.5)]
    pub cv_size: f64,
    #[arg(long, default_value_t = 2)]
    pub denoise_iters: usize,
    #[arg(long, default_value_t = 3.0)]
    pub floor_height: f64,
    /// Device placement JSON.
    #[arg(long)]
    pub devices: Option<PathBuf>,
    /// JSON list of pixel rectangles to erase.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Output config, or a directory when several images are given.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    pub floors: usize,
    #[arg(long, default_value_t = 3)]
    pub rooms_x: usize,
    #[arg(long, default_value_t = 2)]
    pub rooms_y: usize,
    #[arg(long, default_value_t = 8)]
    pub room_width: usize,
    #[arg(long, default_value_t = 6)]
    pub room_height: usize,
    #[arg(long, default_value_t = 0.5)]
    pub cv_size: f64,
    #[arg(long, default_value_t = 3.0)]
    pub floor_height: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnvArgs {
    /// Seconds per step.
    #[arg(long, default_value_t = 300.0)]
    pub timestep: f64,
    /// RFC 3339 start time.
    #[arg(long, default_value = "2024-01-08T00:00:00Z")]
    pub start: String,
    /// Initial zone temperature, °C.
    #[arg(long, default_value_t = 21.0)]
    pub initial_temp: f64,
    /// Solver convergence threshold, °C.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_sweeps: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub building: PathBuf,
    /// Policy JSON (constant or schedule).
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long, default_value_t = 288)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Material parameters JSON overriding the building's.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// CSV of timestamp,electricity_price,gas_price,electricity_emission,gas_emission.
    #[arg(long)]
    pub tariff: Option<PathBuf>,
    /// Write full temperature fields every N steps.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub building: PathBuf,
    #[arg(long)]
    pub episode: PathBuf,
    /// Steps to replay; the whole episode by default.
    #[arg(long)]
    pub nsteps: Option<usize>,
    /// Generator seed; the episode's own seed by default.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerKind {
    Random,
    Golden,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub building: PathBuf,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t = OptimizerKind::Random)]
    pub optimizer: OptimizerKind,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replay length per trial; whole episodes by default.
    #[arg(long)]
    pub steps: Option<usize>,
    /// JSON parameter bounds; the default search box otherwise.
    #[arg(long)]
    pub bounds: Option<PathBuf>,
    /// Trials CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the best parameters as JSON.
    #[arg(long)]
    pub best: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub building: PathBuf,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: PathBuf,
    /// Trials CSV; the lowest train error row is the calibrated point.
    #[arg(long, conflicts_with = "params")]
    pub trials: Option<PathBuf>,
    /// Calibrated parameters JSON.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub episode: PathBuf,
    /// Step index.
    #[arg(long)]
    pub t: usize,
    #[arg(long, default_value_t = 0)]
    pub floor: usize,
    /// Render the difference against this episode.
    #[arg(long)]
    pub diff_against: Option<PathBuf>,
    /// Pixels per cell.
    #[arg(long, default_value_t = 8)]
    pub pixels: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub episode: PathBuf,
    /// First step of the second part.
    #[arg(long)]
    pub at: usize,
    #[arg(long)]
    pub first: PathBuf,
    #[arg(long)]
    pub second: PathBuf,
}

/// Bad flag combinations found after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|c| c.downcast_ref::<UsageError>().is_some()) {
        return 2;
    }
    match err.chain().find_map(|c| c.downcast_ref::<SimError>()) {
        Some(e) if e.is_solver_failure() => 4,
        _ => 3,
    }
}

/// Error chain joined by ": ", skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SBSIM_LOG", "info"))
        .format_timestamp_millis()
        .init();
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
