//! Evaluate stage: recall-over-IoU table and histogram from the localization
//! results, merged with detection metrics when the detect stage ran.

use crate::config::EvaluateConfig;
use crate::error::{input_err, run_stage, stage_err, CliResult};
use crate::layout::{DetectReport, Layout};
use sonoscene_core::detect::DetectionMetrics;
use sonoscene_core::io::results::{build_report, read_localizations, write_report};

/// Detection metrics from a prior detect run, if one exists in the output
/// root. A missing file is fine; a malformed one is an input error.
fn detection_metrics(layout: &Layout) -> CliResult<Option<DetectionMetrics>> {
    let path = layout.detect_metrics_json();
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let report: DetectReport = serde_json::from_str(&text)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    Ok(Some(report.metrics))
}

pub fn run(cfg: &EvaluateConfig) -> CliResult<()> {
    let layout = Layout::new(&cfg.out);
    let records = read_localizations(&layout.localizations_jsonl()).map_err(input_err)?;
    let detection = detection_metrics(&layout)?;

    run_stage(&layout.evaluate_dir(), || {
        if records.is_empty() {
            eprintln!("evaluate: no localized events; recall is reported as zero");
        }
        let ious: Vec<f64> = records.iter().map(|r| r.result.iou).collect();
        let report = build_report(&ious, &cfg.iou_thresholds, cfg.iou_bin_width, detection);
        write_report(&layout.report_json(), &report).map_err(stage_err)?;
        let recall_line = report
            .recall
            .thresholds
            .iter()
            .zip(&report.recall.recall)
            .map(|(t, r)| format!("{t}:{r:.3}"))
            .collect::<Vec<_>>()
            .join(" ");
        println!(
            "evaluate: {} events, mean IoU {:.3}, recall {recall_line} -> {}",
            report.n_events,
            report.mean_iou,
            layout.report_json().display()
        );
        Ok(())
    })
}
