//! Beamform stage: one normalized heatmap per localization trigger, or a
//! validated import of externally produced heatmaps.

use crate::config::{resolve_profile, BeamformConfig};
use crate::error::{input_err, run_stage, stage_err, CliResult};
use crate::layout::{check_rel_path, clip_label, trigger_stem, Layout, TriggerRecord};
use rayon::prelude::*;
use sonoscene_core::beamform::{
    compute_steering_with_taps, delay_and_sum, normalize_heatmap, ScanGrid,
};
use sonoscene_core::detect::trigger_schedule;
use sonoscene_core::dsp::bandpass;
use sonoscene_core::io::events::{events_by_clip, read_event_records};
use sonoscene_core::io::heatmap::{read_heatmap, write_heatmap};
use sonoscene_core::io::scene::read_scene;
use sonoscene_core::io::wav::read_wav;
use sonoscene_core::io::{atomic_write, read_jsonl, write_jsonl};
use sonoscene_core::MultichannelRecording;
use std::path::Path;

/// Analysis window for one trigger: centered on the trigger time plus the
/// array-to-plane travel time, widened by the guard, and shifted (never
/// shrunk) back inside the clip.
fn place_window(t: f64, travel_s: f64, half_s: f64, duration_s: f64) -> (f64, f64) {
    let len = 2.0 * half_s;
    if len >= duration_s {
        return (0.0, duration_s);
    }
    let center = t + travel_s;
    let (mut start, mut end) = (center - half_s, center + half_s);
    if start < 0.0 {
        start = 0.0;
        end = len;
    } else if end > duration_s {
        end = duration_s;
        start = duration_s - len;
    }
    (start, end)
}

pub fn run(cfg: &BeamformConfig) -> CliResult<()> {
    let layout = Layout::new(&cfg.out);
    if let Some(dir) = &cfg.heatmaps_in {
        return import_heatmaps(dir, &layout);
    }

    let profile = resolve_profile(&cfg.profile)?;
    let scene = read_scene(&layout.scene_json()).map_err(input_err)?;
    let base = scene.base_scene().map_err(input_err)?;
    let table =
        compute_steering_with_taps(&base.array, cfg.grid, base.speed_of_sound, cfg.interp_taps)
            .map_err(input_err)?;
    let events = read_event_records(&layout.detect_events_jsonl()).map_err(input_err)?;
    let by_clip = events_by_clip(&events);
    let travel_s = cfg.grid.distance_m / base.speed_of_sound;
    let half_s = cfg.window_s / 2.0 + cfg.guard_s;

    run_stage(&layout.beamform_dir(), || {
        let mut triggers = Vec::new();
        for i in 0..scene.clips.count {
            let label = clip_label(i);
            let Some(clip_events) = by_clip.get(&label) else {
                continue;
            };
            let rec = read_wav(&layout.recording_wav(&label)).map_err(input_err)?;
            if rec.sample_rate != base.array.sample_rate {
                return Err(input_err(format!(
                    "{label}: recording rate {} does not match the scene's {}",
                    rec.sample_rate, base.array.sample_rate
                )));
            }
            let rec = match &profile.band {
                None => rec,
                Some(band) => {
                    let fs = rec.sample_rate as f64;
                    let channels = rec
                        .channels
                        .par_iter()
                        .map(|ch| bandpass(ch, band, fs))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(stage_err)?;
                    MultichannelRecording { channels, sample_rate: rec.sample_rate }
                }
            };
            let duration = rec.duration_s();
            let schedule = trigger_schedule(clip_events, &profile, duration);
            if schedule.is_empty() {
                continue;
            }
            let dir = layout.beamform_dir().join(&label);
            std::fs::create_dir_all(&dir)
                .map_err(|e| stage_err(format!("create {}: {e}", dir.display())))?;
            for t in schedule {
                let window = place_window(t, travel_s, half_s, duration);
                let h = delay_and_sum(&rec, &table, window).map_err(stage_err)?;
                let h = normalize_heatmap(h);
                let rel = format!("{label}/{}.bin", trigger_stem(t));
                write_heatmap(&layout.beamform_dir().join(&rel), &h).map_err(stage_err)?;
                triggers.push(TriggerRecord { clip_id: label.clone(), timestamp_s: t, heatmap: rel });
            }
        }
        write_jsonl(&layout.triggers_jsonl(), &triggers).map_err(stage_err)?;
        println!(
            "beamform: {} heatmaps ({}x{} cells) -> {}",
            triggers.len(),
            cfg.grid.nx,
            cfg.grid.ny,
            layout.beamform_dir().display()
        );
        Ok(())
    })
}

/// Validate and copy externally produced heatmaps instead of beamforming.
/// The source directory must hold a triggers.jsonl whose heatmap paths
/// resolve inside it; every heatmap must be normalized and share one grid.
fn import_heatmaps(dir: &Path, layout: &Layout) -> CliResult<()> {
    let triggers: Vec<TriggerRecord> =
        read_jsonl(&dir.join("triggers.jsonl")).map_err(input_err)?;
    let mut grid: Option<ScanGrid> = None;
    for t in &triggers {
        check_rel_path(&t.heatmap, "heatmap path")?;
        let h = read_heatmap(&dir.join(&t.heatmap)).map_err(input_err)?;
        if !h.normalized {
            return Err(input_err(format!("imported heatmap {} is not normalized", t.heatmap)));
        }
        match grid {
            None => grid = Some(h.grid),
            Some(g) if g == h.grid => {}
            Some(_) => {
                return Err(input_err(format!(
                    "imported heatmap {} uses a different scan grid",
                    t.heatmap
                )))
            }
        }
    }

    run_stage(&layout.beamform_dir(), || {
        let copy = |rel: &str| -> CliResult<()> {
            let to = layout.beamform_dir().join(rel);
            if let Some(parent) = to.parent() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| stage_err(format!("create {}: {e}", parent.display())))?;
            }
            let bytes = std::fs::read(dir.join(rel))
                .map_err(|e| stage_err(format!("read {rel}: {e}")))?;
            atomic_write(&to, &bytes).map_err(stage_err)
        };
        for t in &triggers {
            copy(&t.heatmap)?;
            let sidecar = Path::new(&t.heatmap).with_extension("json");
            copy(sidecar.to_str().expect("utf8 relative path"))?;
        }
        let index = std::fs::read(dir.join("triggers.jsonl"))
            .map_err(|e| stage_err(format!("read triggers.jsonl: {e}")))?;
        atomic_write(&layout.triggers_jsonl(), &index).map_err(stage_err)?;
        println!(
            "beamform: imported {} heatmaps from {} -> {}",
            triggers.len(),
            dir.display(),
            layout.beamform_dir().display()
        );
        Ok(())
    })
}
