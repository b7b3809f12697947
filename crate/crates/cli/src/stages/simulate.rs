//! Simulate stage: realize every clip of the scene, render recordings and
//! point clouds, and write the dataset with its ground truth.

use crate::config::SimulateConfig;
use crate::error::{input_err, run_stage, stage_err, CliResult};
use crate::layout::{clip_label, ClipMeta, Layout};
use rayon::prelude::*;
use sonoscene_core::io::calib::write_camera;
use sonoscene_core::io::events::{write_event_records, EventRecord};
use sonoscene_core::io::ply::write_ply;
use sonoscene_core::io::scene::{write_scene, SourceFile, WaveformFile};
use sonoscene_core::io::wav::write_wav;
use sonoscene_core::io::atomic_write;
use sonoscene_core::sim::{derive_seed, simulate_propagation, synth_point_cloud, SourceSpec, WaveformKind};
use sonoscene_core::SyntheticScene;

/// Hop length assumed when stamping ground-truth events with a hop frame.
const GT_HOP_S: f64 = 0.02;
const VIDEO_FPS: f64 = 25.0;

fn waveform_file(kind: &WaveformKind) -> WaveformFile {
    match *kind {
        WaveformKind::ImpulseTrain { period_s, decay_s } => {
            WaveformFile::ImpulseTrain { period_s, decay_s }
        }
        WaveformKind::BandNoise { lo_hz, hi_hz } => WaveformFile::BandNoise { lo_hz, hi_hz },
        WaveformKind::Tone { freq_hz } => WaveformFile::Tone { freq_hz },
    }
}

fn source_file(spec: &SourceSpec) -> SourceFile {
    let (roll, pitch, yaw) = spec.orientation.euler_angles();
    SourceFile {
        position: [spec.position.x, spec.position.y, spec.position.z],
        waveform: waveform_file(&spec.waveform),
        onsets: spec.onsets.clone(),
        amplitude: spec.amplitude,
        active_intervals: spec.active_intervals.clone(),
        orientation_rpy: [roll, pitch, yaw],
        surface: None,
    }
}

fn clip_meta(clip_id: &str, scene: &SyntheticScene) -> ClipMeta {
    ClipMeta {
        clip_id: clip_id.to_string(),
        duration_s: scene.duration_s,
        sample_rate: scene.array.sample_rate,
        speed_of_sound: scene.speed_of_sound,
        sources: scene.sources.iter().map(source_file).collect(),
    }
}

/// True event instants of every source, merged in time order.
fn gt_events(clip_id: &str, scene: &SyntheticScene) -> Vec<EventRecord> {
    let mut times: Vec<f64> = scene.sources.iter().flat_map(|s| s.event_times()).collect();
    times.sort_by(f64::total_cmp);
    times
        .into_iter()
        .map(|t| EventRecord {
            clip_id: clip_id.to_string(),
            time_s: t,
            hop_frame: (t / GT_HOP_S).floor() as usize,
            video_frame: (t * VIDEO_FPS).floor() as i64,
        })
        .collect()
}

pub fn run(cfg: &SimulateConfig) -> CliResult<()> {
    let layout = Layout::new(&cfg.out);
    let base = cfg.scene.base_scene().map_err(input_err)?;

    run_stage(&layout.dataset_dir(), || {
        write_scene(&layout.scene_json(), &cfg.scene).map_err(stage_err)?;
        write_camera(&layout.acoustic_camera_json(), &base.camera).map_err(stage_err)?;

        let events: Vec<Vec<EventRecord>> = (0..cfg.scene.clips.count)
            .into_par_iter()
            .map(|i| -> CliResult<Vec<EventRecord>> {
                let label = clip_label(i);
                let scene = cfg.scene.clip_scene(i, cfg.seed).map_err(stage_err)?;
                let rec = simulate_propagation(&scene, derive_seed(cfg.seed, "propagate", i as u64))
                    .map_err(stage_err)?;
                let cloud = synth_point_cloud(&scene, derive_seed(cfg.seed, "cloud", i as u64));

                let dir = layout.clip_dir(&label);
                std::fs::create_dir_all(&dir)
                    .map_err(|e| stage_err(format!("create {}: {e}", dir.display())))?;
                write_wav(&layout.recording_wav(&label), &rec).map_err(stage_err)?;
                write_ply(&layout.cloud_ply(&label), &cloud).map_err(stage_err)?;
                let meta = clip_meta(&label, &scene);
                let meta_json =
                    serde_json::to_string_pretty(&meta).map_err(stage_err)?;
                atomic_write(&layout.clip_meta_json(&label), meta_json.as_bytes())
                    .map_err(stage_err)?;
                Ok(gt_events(&label, &scene))
            })
            .collect::<CliResult<_>>()?;

        let all: Vec<EventRecord> = events.into_iter().flatten().collect();
        write_event_records(&layout.gt_events_jsonl(), &all).map_err(stage_err)?;
        println!(
            "simulate: {} clips, {} ground-truth events -> {}",
            cfg.scene.clips.count,
            all.len(),
            layout.dataset_dir().display()
        );
        Ok(())
    })
}
