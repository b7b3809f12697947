//! `sonoscene`: simulate microphone-array scenes and run the acoustic event
//! localization pipeline over them, one stage per subcommand.

mod config;
mod default_scene;
mod error;
mod layout;
mod stages;

use clap::{Args, Parser, Subcommand};
use config::{
    BeamformConfig, DetectConfig, EvaluateConfig, FuseConfig, LocalizeConfig, PipelineConfig,
    SimulateConfig, DEFAULT_IOU_BIN_WIDTH, DEFAULT_IOU_THRESHOLDS, DEFAULT_SEED, DEFAULT_WINDOW_S,
};
use error::{input_err, stage_err, CliResult};
use serde::Serialize;
use sonoscene_core::beamform::{ScanGrid, DEFAULT_INTERP_TAPS};
use sonoscene_core::detect::TrainConfig;
use sonoscene_core::ClusterParams;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "sonoscene", version, about = "Acoustic event localization pipeline")]
struct Cli {
    /// Worker threads for parallel stages; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Print the effective configuration as JSON instead of running.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Output root directory shared by all stages.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ProfileArg {
    /// Action profile: chiseling, sawing, or drilling.
    #[arg(long, default_value = "chiseling")]
    profile: String,
}

#[derive(Args)]
struct SeedArg {
    /// Root random seed; every derived stream is keyed off it.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct SceneArg {
    /// Scene description JSON; defaults to the profile's built-in scene.
    #[arg(long)]
    scene: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Cross-validation folds over the clips.
    #[arg(long, default_value_t = 3)]
    folds: usize,

    /// Classifier training epochs.
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,

    /// Score these per-frame predictions (JSONL) instead of training.
    #[arg(long)]
    predictions_in: Option<PathBuf>,
}

#[derive(Args)]
struct BeamformArgs {
    /// Scan plane distance from the array, meters.
    #[arg(long, default_value_t = ScanGrid::default().distance_m)]
    grid_distance_m: f64,

    /// Scan plane width, meters.
    #[arg(long, default_value_t = ScanGrid::default().width_m)]
    grid_width_m: f64,

    /// Scan plane height, meters.
    #[arg(long, default_value_t = ScanGrid::default().height_m)]
    grid_height_m: f64,

    /// Grid columns.
    #[arg(long, default_value_t = ScanGrid::default().nx)]
    grid_nx: usize,

    /// Grid rows.
    #[arg(long, default_value_t = ScanGrid::default().ny)]
    grid_ny: usize,

    /// Analysis window length per trigger, seconds.
    #[arg(long, default_value_t = DEFAULT_WINDOW_S)]
    window_s: f64,

    /// Extra half-width around each trigger, seconds; defaults per profile.
    #[arg(long)]
    guard_s: Option<f64>,

    /// Fractional-delay interpolation taps per side.
    #[arg(long, default_value_t = DEFAULT_INTERP_TAPS)]
    taps: usize,

    /// Import externally produced heatmaps (a triggers.jsonl directory)
    /// instead of beamforming.
    #[arg(long)]
    heatmaps_in: Option<PathBuf>,
}

#[derive(Args)]
struct LocalizeArgs {
    /// Clustering neighborhood radius, meters.
    #[arg(long, default_value_t = ClusterParams::default().radius_m)]
    radius_m: f64,

    /// Minimum neighborhood weight for a core point.
    #[arg(long, default_value_t = ClusterParams::default().min_weight)]
    min_weight: f64,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Recall thresholds over IoU, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_IOU_THRESHOLDS)]
    iou_thresholds: Vec<f64>,

    /// IoU histogram bin width.
    #[arg(long, default_value_t = DEFAULT_IOU_BIN_WIDTH)]
    bin_width: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene into per-clip recordings, point clouds, and ground truth.
    Simulate {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        scene: SceneArg,
    },
    /// Classify per-frame activity and extract event onsets.
    Detect {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        detect: DetectArgs,
    },
    /// Beamform a heatmap for every triggered analysis window.
    Beamform {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        beamform: BeamformArgs,
    },
    /// Weight each clip's point cloud by its trigger heatmaps.
    Fuse {
        #[command(flatten)]
        out: OutArg,
    },
    /// Cluster fused clouds into predicted boxes and score them.
    Localize {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        localize: LocalizeArgs,
    },
    /// Summarize localization results into a recall report.
    Evaluate {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        evaluate: EvaluateArgs,
    },
    /// Run every stage in order on one output root.
    Pipeline {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        scene: SceneArg,
        #[command(flatten)]
        detect: DetectArgs,
        #[command(flatten)]
        beamform: BeamformArgs,
        #[command(flatten)]
        localize: LocalizeArgs,
        #[command(flatten)]
        evaluate: EvaluateArgs,
    },
}

impl BeamformArgs {
    fn grid(&self) -> ScanGrid {
        ScanGrid {
            distance_m: self.grid_distance_m,
            width_m: self.grid_width_m,
            height_m: self.grid_height_m,
            nx: self.grid_nx,
            ny: self.grid_ny,
        }
    }

    fn build(self, out: PathBuf, profile: String) -> CliResult<BeamformConfig> {
        let grid = self.grid();
        BeamformConfig::build(
            out,
            profile,
            grid,
            self.window_s,
            self.guard_s,
            self.taps,
            self.heatmaps_in,
        )
    }
}

impl LocalizeArgs {
    fn build(self, out: PathBuf, profile: String) -> CliResult<LocalizeConfig> {
        let cluster = ClusterParams { radius_m: self.radius_m, min_weight: self.min_weight };
        LocalizeConfig::build(out, profile, cluster)
    }
}

fn print_config<T: Serialize>(cfg: &T) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(cfg).map_err(stage_err)?);
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| input_err(format!("thread pool: {e}")))?;
    }
    let show = cli.print_config;
    match cli.command {
        Command::Simulate { out, profile, seed, scene } => {
            let cfg = SimulateConfig::build(out.out, profile.profile, seed.seed, scene.scene)?;
            if show {
                return print_config(&cfg);
            }
            stages::simulate::run(&cfg)
        }
        Command::Detect { out, profile, seed, detect } => {
            let cfg = DetectConfig::build(
                out.out,
                profile.profile,
                seed.seed,
                detect.folds,
                detect.epochs,
                detect.predictions_in,
            )?;
            if show {
                return print_config(&cfg);
            }
            stages::detect::run(&cfg)
        }
        Command::Beamform { out, profile, beamform } => {
            let cfg = beamform.build(out.out, profile.profile)?;
            if show {
                return print_config(&cfg);
            }
            stages::beamform::run(&cfg)
        }
        Command::Fuse { out } => {
            let cfg = FuseConfig { out: out.out };
            if show {
                return print_config(&cfg);
            }
            stages::fuse::run(&cfg)
        }
        Command::Localize { out, profile, localize } => {
            let cfg = localize.build(out.out, profile.profile)?;
            if show {
                return print_config(&cfg);
            }
            stages::localize::run(&cfg)
        }
        Command::Evaluate { out, evaluate } => {
            let cfg = EvaluateConfig::build(out.out, evaluate.iou_thresholds, evaluate.bin_width)?;
            if show {
                return print_config(&cfg);
            }
            stages::evaluate::run(&cfg)
        }
        Command::Pipeline { out, profile, seed, scene, detect, beamform, localize, evaluate } => {
            let cfg = PipelineConfig {
                simulate: SimulateConfig::build(
                    out.out.clone(),
                    profile.profile.clone(),
                    seed.seed,
                    scene.scene,
                )?,
                detect: DetectConfig::build(
                    out.out.clone(),
                    profile.profile.clone(),
                    seed.seed,
                    detect.folds,
                    detect.epochs,
                    detect.predictions_in,
                )?,
                beamform: beamform.build(out.out.clone(), profile.profile.clone())?,
                fuse: FuseConfig { out: out.out.clone() },
                localize: localize.build(out.out.clone(), profile.profile)?,
                evaluate: EvaluateConfig::build(
                    out.out,
                    evaluate.iou_thresholds,
                    evaluate.bin_width,
                )?,
            };
            if show {
                return print_config(&cfg);
            }
            stages::simulate::run(&cfg.simulate)?;
            stages::detect::run(&cfg.detect)?;
            stages::beamform::run(&cfg.beamform)?;
            stages::fuse::run(&cfg.fuse)?;
            stages::localize::run(&cfg.localize)?;
            stages::evaluate::run(&cfg.evaluate)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests leave through stdout with success;
            // actual command-line mistakes are invalid input.
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().expect("write argument diagnostics");
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
