//! Effective per-stage configuration: every numeric default lives here, every
//! flag lands here, and `--print-config` serializes exactly these structs.

use crate::default_scene::default_scene;
use crate::error::{input_err, CliResult};
use serde::Serialize;
use sonoscene_core::beamform::ScanGrid;
use sonoscene_core::detect::{AugmentationSpec, TrainConfig};
use sonoscene_core::dsp::SpectrogramConfig;
use sonoscene_core::io::scene::{read_scene, SceneFile};
use sonoscene_core::localize::TriggerMode;
use sonoscene_core::profile::profile_by_name;
use sonoscene_core::{ActionProfile, ClusterParams};
use std::path::PathBuf;

pub const DEFAULT_SEED: u64 = 17;
/// One video frame at 25 fps.
pub const DEFAULT_WINDOW_S: f64 = 0.04;
pub const DEFAULT_IOU_THRESHOLDS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
pub const DEFAULT_IOU_BIN_WIDTH: f64 = 0.05;

pub fn resolve_profile(name: &str) -> CliResult<ActionProfile> {
    profile_by_name(name).ok_or_else(|| {
        input_err(format!("unknown profile {name:?}; expected chiseling, sawing, or drilling"))
    })
}

/// Load the scene file, or fall back to the profile's built-in scene.
pub fn resolve_scene(profile: &str, path: &Option<PathBuf>) -> CliResult<SceneFile> {
    match path {
        Some(p) => read_scene(p).map_err(input_err),
        None => default_scene(profile)
            .ok_or_else(|| input_err(format!("no built-in scene for profile {profile:?}"))),
    }
}

/// Detected transition frames mark the first analysis window overlapping an
/// event, so the event instant sits near that window's end. Trigger times
/// shift forward by this much (window length minus half a hop, the center of
/// the instant's possible positions).
pub fn onset_correction_s(spec: &SpectrogramConfig) -> f64 {
    spec.window_len_s - spec.hop_len_s / 2.0
}

/// Extra analysis-window half-width absorbing detection timing error.
/// Impulsive actions widen by the profile's matching tolerance (j hops);
/// continuous actions have energy throughout, so no widening.
pub fn default_guard_s(profile: &ActionProfile, hop_len_s: f64) -> f64 {
    match profile.trigger {
        TriggerMode::Impulsive => profile.j as f64 * hop_len_s,
        TriggerMode::Continuous { .. } => 0.0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateConfig {
    pub out: PathBuf,
    pub profile: String,
    pub seed: u64,
    /// None means the profile's built-in scene.
    pub scene_path: Option<PathBuf>,
    pub scene: SceneFile,
}

impl SimulateConfig {
    pub fn build(
        out: PathBuf,
        profile: String,
        seed: u64,
        scene_path: Option<PathBuf>,
    ) -> CliResult<SimulateConfig> {
        resolve_profile(&profile)?;
        let scene = resolve_scene(&profile, &scene_path)?;
        scene.validate().map_err(input_err)?;
        Ok(SimulateConfig { out, profile, seed, scene_path, scene })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectConfig {
    pub out: PathBuf,
    pub profile: String,
    pub folds: usize,
    pub train: TrainConfig,
    pub augment: AugmentationSpec,
    pub predictions_in: Option<PathBuf>,
}

impl DetectConfig {
    pub fn build(
        out: PathBuf,
        profile: String,
        seed: u64,
        folds: usize,
        epochs: usize,
        predictions_in: Option<PathBuf>,
    ) -> CliResult<DetectConfig> {
        resolve_profile(&profile)?;
        if folds == 0 {
            return Err(input_err("folds must be at least 1"));
        }
        if epochs == 0 {
            return Err(input_err("epochs must be at least 1"));
        }
        let train = TrainConfig { epochs, seed, ..TrainConfig::default() };
        let augment = AugmentationSpec { seed, ..AugmentationSpec::default() };
        Ok(DetectConfig { out, profile, folds, train, augment, predictions_in })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BeamformConfig {
    pub out: PathBuf,
    pub profile: String,
    pub grid: ScanGrid,
    /// Base analysis window length per trigger.
    pub window_s: f64,
    /// Extra half-width around the trigger (see [`default_guard_s`]).
    pub guard_s: f64,
    pub interp_taps: usize,
    pub heatmaps_in: Option<PathBuf>,
}

impl BeamformConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        out: PathBuf,
        profile: String,
        grid: ScanGrid,
        window_s: f64,
        guard_s: Option<f64>,
        interp_taps: usize,
        heatmaps_in: Option<PathBuf>,
    ) -> CliResult<BeamformConfig> {
        let prof = resolve_profile(&profile)?;
        grid.validate().map_err(input_err)?;
        if !(window_s > 0.0 && window_s.is_finite()) {
            return Err(input_err("window-s must be positive"));
        }
        let guard_s = guard_s
            .unwrap_or_else(|| default_guard_s(&prof, SpectrogramConfig::default().hop_len_s));
        if !(guard_s >= 0.0 && guard_s.is_finite()) {
            return Err(input_err("guard-s must be non-negative"));
        }
        Ok(BeamformConfig { out, profile, grid, window_s, guard_s, interp_taps, heatmaps_in })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FuseConfig {
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizeConfig {
    pub out: PathBuf,
    pub profile: String,
    pub cluster: ClusterParams,
}

impl LocalizeConfig {
    pub fn build(out: PathBuf, profile: String, cluster: ClusterParams) -> CliResult<LocalizeConfig> {
        resolve_profile(&profile)?;
        cluster.validate().map_err(input_err)?;
        Ok(LocalizeConfig { out, profile, cluster })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateConfig {
    pub out: PathBuf,
    pub iou_thresholds: Vec<f64>,
    pub iou_bin_width: f64,
}

impl EvaluateConfig {
    pub fn build(
        out: PathBuf,
        iou_thresholds: Vec<f64>,
        iou_bin_width: f64,
    ) -> CliResult<EvaluateConfig> {
        if iou_thresholds.is_empty() {
            return Err(input_err("iou-thresholds must list at least one threshold"));
        }
        if iou_thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(input_err("iou thresholds must lie in [0, 1]"));
        }
        if !(iou_bin_width > 0.0 && iou_bin_width <= 1.0) {
            return Err(input_err("bin-width must lie in (0, 1]"));
        }
        Ok(EvaluateConfig { out, iou_thresholds, iou_bin_width })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub simulate: SimulateConfig,
    pub detect: DetectConfig,
    pub beamform: BeamformConfig,
    pub fuse: FuseConfig,
    pub localize: LocalizeConfig,
    pub evaluate: EvaluateConfig,
}
