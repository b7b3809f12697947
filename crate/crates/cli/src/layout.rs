//! Output directory layout and the record types that link stages together.
//!
//! Everything lives under one output root:
//!
//! ```text
//! out/
//!   dataset/            scene.json, acoustic_camera.json, gt_events.jsonl,
//!                       clips/clip_000/{recording.wav, cloud.ply, meta.json}
//!   detect/             events.jsonl, predictions.jsonl, metrics.json, models.json
//!   beamform/           triggers.jsonl, clip_000/t0000250000.bin (+ .json sidecar)
//!   fuse/               fused.jsonl, clip_000/t0000250000.ply
//!   localize/           localizations.jsonl
//!   evaluate/           report.json
//! ```

use crate::error::{input_err, CliResult};
use serde::{Deserialize, Serialize};
use sonoscene_core::detect::{DetectionMetrics, MatchOutcome};
use sonoscene_core::io::scene::SourceFile;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(out: &Path) -> Layout {
        Layout { root: out.to_path_buf() }
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.root.join("dataset")
    }
    pub fn scene_json(&self) -> PathBuf {
        self.dataset_dir().join("scene.json")
    }
    pub fn acoustic_camera_json(&self) -> PathBuf {
        self.dataset_dir().join("acoustic_camera.json")
    }
    pub fn gt_events_jsonl(&self) -> PathBuf {
        self.dataset_dir().join("gt_events.jsonl")
    }
    pub fn clip_dir(&self, clip_id: &str) -> PathBuf {
        self.dataset_dir().join("clips").join(clip_id)
    }
    pub fn recording_wav(&self, clip_id: &str) -> PathBuf {
        self.clip_dir(clip_id).join("recording.wav")
    }
    pub fn cloud_ply(&self, clip_id: &str) -> PathBuf {
        self.clip_dir(clip_id).join("cloud.ply")
    }
    pub fn clip_meta_json(&self, clip_id: &str) -> PathBuf {
        self.clip_dir(clip_id).join("meta.json")
    }

    pub fn detect_dir(&self) -> PathBuf {
        self.root.join("detect")
    }
    pub fn detect_events_jsonl(&self) -> PathBuf {
        self.detect_dir().join("events.jsonl")
    }
    pub fn detect_predictions_jsonl(&self) -> PathBuf {
        self.detect_dir().join("predictions.jsonl")
    }
    pub fn detect_metrics_json(&self) -> PathBuf {
        self.detect_dir().join("metrics.json")
    }
    pub fn detect_models_json(&self) -> PathBuf {
        self.detect_dir().join("models.json")
    }

    pub fn beamform_dir(&self) -> PathBuf {
        self.root.join("beamform")
    }
    pub fn triggers_jsonl(&self) -> PathBuf {
        self.beamform_dir().join("triggers.jsonl")
    }

    pub fn fuse_dir(&self) -> PathBuf {
        self.root.join("fuse")
    }
    pub fn fused_jsonl(&self) -> PathBuf {
        self.fuse_dir().join("fused.jsonl")
    }

    pub fn localize_dir(&self) -> PathBuf {
        self.root.join("localize")
    }
    pub fn localizations_jsonl(&self) -> PathBuf {
        self.localize_dir().join("localizations.jsonl")
    }

    pub fn evaluate_dir(&self) -> PathBuf {
        self.root.join("evaluate")
    }
    pub fn report_json(&self) -> PathBuf {
        self.evaluate_dir().join("report.json")
    }
}

pub fn clip_label(index: usize) -> String {
    format!("clip_{index:03}")
}

/// Heatmap / fused-cloud filename stem for a trigger, microsecond-resolved.
pub fn trigger_stem(timestamp_s: f64) -> String {
    format!("t{:010}", (timestamp_s * 1e6).round() as u64)
}

/// Per-trigger file paths are stored relative to their stage directory and
/// must stay inside it; clip ids double as directory names.
pub fn check_rel_component(name: &str, what: &str) -> CliResult<()> {
    if name.is_empty()
        || name.contains('/')
        || name.contains('\\')
        || name.contains("..")
        || name.contains('\0')
    {
        return Err(input_err(format!("{what} {name:?} is not a plain file name component")));
    }
    Ok(())
}

/// Same containment rule for multi-component relative paths from index files.
pub fn check_rel_path(rel: &str, what: &str) -> CliResult<()> {
    let sane = !rel.starts_with('/')
        && !rel.contains('\\')
        && !rel.contains('\0')
        && rel.split('/').all(|c| !c.is_empty() && c != "." && c != "..");
    if sane {
        Ok(())
    } else {
        Err(input_err(format!("{what} {rel:?} must stay inside the stage directory")))
    }
}

/// Realized per-clip ground truth, written by the simulate stage and consumed
/// by detect (activity labels) and localize (ground-truth boxes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub clip_id: String,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub speed_of_sound: f64,
    /// Sources at their realized (jittered) pose and schedule.
    pub sources: Vec<SourceFile>,
}

pub fn read_clip_meta(path: &Path) -> CliResult<ClipMeta> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

/// One beamformed analysis window; `heatmap` is relative to the beamform
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerRecord {
    pub clip_id: String,
    pub timestamp_s: f64,
    pub heatmap: String,
}

/// One fused weighted cloud; `cloud` is relative to the fuse directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedRecord {
    pub clip_id: String,
    pub timestamp_s: f64,
    pub cloud: String,
}

/// Detection-stage summary. Cross-validation fills all fields; imported
/// predictions are scored as a single fold with an empty fold table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectReport {
    pub metrics: DetectionMetrics,
    pub fold_outcomes: Vec<MatchOutcome>,
    pub folds: Vec<Vec<usize>>,
}
