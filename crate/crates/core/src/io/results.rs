//! Localization results and the evaluation report.
//!
//! Per-event results are JSON Lines keyed by clip id; the report is a single
//! pretty-printed JSON document combining the recall table, an IoU
//! histogram, and optional detection metrics.

use super::{atomic_write, read_jsonl, write_jsonl};
use crate::detect::DetectionMetrics;
use crate::error::{Error, Result};
use crate::localize::{iou_histogram, recall_table, LocalizationResult, RecallTable};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One localized event within a named clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRecord {
    pub clip_id: String,
    pub result: LocalizationResult,
}

pub fn write_localizations(path: &Path, records: &[LocalizationRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_localizations(path: &Path) -> Result<Vec<LocalizationRecord>> {
    read_jsonl(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Ground-truth events evaluated; failed localizations count as IoU 0.
    pub n_events: usize,
    pub mean_iou: f64,
    pub recall: RecallTable,
    pub iou_bin_width: f64,
    pub iou_histogram: Vec<usize>,
    #[serde(default)]
    pub detection: Option<DetectionMetrics>,
}

pub fn build_report(
    ious: &[f64],
    thresholds: &[f64],
    bin_width: f64,
    detection: Option<DetectionMetrics>,
) -> EvaluationReport {
    let mean_iou =
        if ious.is_empty() { 0.0 } else { ious.iter().sum::<f64>() / ious.len() as f64 };
    EvaluationReport {
        n_events: ious.len(),
        mean_iou,
        recall: recall_table(ious, thresholds),
        iou_bin_width: bin_width,
        iou_histogram: iou_histogram(ious, bin_width),
        detection,
    }
}

pub fn write_report(path: &Path, report: &EvaluationReport) -> Result<()> {
    atomic_write(path, serde_json::to_string_pretty(report)?.as_bytes())
}

pub fn read_report(path: &Path) -> Result<EvaluationReport> {
    serde_json::from_str(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
        .map_err(Into::into)
}
