//! Localize stage: cluster each fused weighted cloud and score the predicted
//! box against the ground truth of the source active at the trigger time.

use crate::config::{resolve_profile, LocalizeConfig};
use crate::error::{input_err, run_stage, stage_err, CliResult};
use crate::layout::{check_rel_component, check_rel_path, read_clip_meta, FusedRecord, Layout};
use rayon::prelude::*;
use sonoscene_core::io::ply::read_weighted_ply;
use sonoscene_core::io::read_jsonl;
use sonoscene_core::io::results::{write_localizations, LocalizationRecord};
use sonoscene_core::localize::{localize_event, OrientedBox3};
use sonoscene_core::sim::ground_truth_box;
use std::collections::BTreeMap;

/// Ground truth for one clip: per-source boxes and activity spans.
struct ClipGt {
    boxes: Vec<OrientedBox3>,
    activities: Vec<Vec<(f64, f64)>>,
}

/// Time distance to the nearest activity span: zero inside a span, gap to the
/// closest edge otherwise.
fn span_distance(t: f64, spans: &[(f64, f64)]) -> f64 {
    spans
        .iter()
        .map(|&(a, b)| (a - t).max(t - b).max(0.0))
        .fold(f64::INFINITY, f64::min)
}

/// Index of the source whose activity is closest in time; ties keep the
/// lowest index.
fn nearest_source(t: f64, activities: &[Vec<(f64, f64)>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, spans) in activities.iter().enumerate() {
        let d = span_distance(t, spans);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

pub fn run(cfg: &LocalizeConfig) -> CliResult<()> {
    let layout = Layout::new(&cfg.out);
    let profile = resolve_profile(&cfg.profile)?;
    let fused: Vec<FusedRecord> = read_jsonl(&layout.fused_jsonl()).map_err(input_err)?;

    let mut gt: BTreeMap<&str, ClipGt> = BTreeMap::new();
    for r in &fused {
        check_rel_component(&r.clip_id, "clip id")?;
        check_rel_path(&r.cloud, "cloud path")?;
        if !gt.contains_key(r.clip_id.as_str()) {
            let meta = read_clip_meta(&layout.clip_meta_json(&r.clip_id))?;
            if meta.sources.is_empty() {
                return Err(input_err(format!("{}: clip has no sources", r.clip_id)));
            }
            let specs: Vec<_> = meta.sources.iter().map(|s| s.to_spec()).collect();
            gt.insert(
                &r.clip_id,
                ClipGt {
                    boxes: specs.iter().map(|s| ground_truth_box(s, &profile)).collect(),
                    activities: specs.iter().map(|s| s.activity()).collect(),
                },
            );
        }
    }

    run_stage(&layout.localize_dir(), || {
        let records: Vec<LocalizationRecord> = fused
            .par_iter()
            .map(|r| -> CliResult<LocalizationRecord> {
                let cloud =
                    read_weighted_ply(&layout.fuse_dir().join(&r.cloud)).map_err(input_err)?;
                let clip = &gt[r.clip_id.as_str()];
                let si = nearest_source(r.timestamp_s, &clip.activities);
                let result = localize_event(
                    &cloud,
                    &clip.boxes[si],
                    &profile,
                    &cfg.cluster,
                    r.timestamp_s,
                );
                Ok(LocalizationRecord { clip_id: r.clip_id.clone(), result })
            })
            .collect::<CliResult<_>>()?;
        write_localizations(&layout.localizations_jsonl(), &records).map_err(stage_err)?;
        let mean = records.iter().map(|r| r.result.iou).sum::<f64>()
            / records.len().max(1) as f64;
        println!(
            "localize: {} events, mean IoU {mean:.3} -> {}",
            records.len(),
            layout.localize_dir().display()
        );
        Ok(())
    })
}
