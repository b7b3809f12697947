//! Detect stage: per-frame activity classification over every clip, either by
//! k-fold cross validation of the built-in classifier or from imported
//! predictions, then transition-based event extraction.
//!
//! Event timestamps are onset estimates: a 0-to-1 transition marks the first
//! analysis window that overlaps the event, so the written time is the frame
//! start plus `window - hop/2`.

use crate::config::{onset_correction_s, resolve_profile, DetectConfig};
use crate::error::{input_err, run_stage, stage_err, CliResult};
use crate::layout::{clip_label, read_clip_meta, ClipMeta, DetectReport, Layout};
use sonoscene_core::detect::{
    aggregate_folds, cross_validate, match_events, transitions_to_events, LabeledClip,
    MatchConfig, MatchOutcome,
};
use sonoscene_core::detect::{extract_features, label_frames, predict_sequence};
use sonoscene_core::dsp::{resample, SpectrogramConfig};
use sonoscene_core::io::atomic_write;
use sonoscene_core::io::events::{
    read_prediction_records, write_event_records, write_prediction_records, EventRecord,
    PredictionRecord,
};
use sonoscene_core::io::scene::read_scene;
use sonoscene_core::io::wav::read_wav;
use sonoscene_core::PredictionSequence;
use std::collections::BTreeMap;
use std::path::Path;

const VIDEO_FPS: f64 = 25.0;

/// Merged activity of every source, as (start, end) label intervals.
fn activity_of(meta: &ClipMeta) -> Vec<(f64, f64)> {
    let mut spans: Vec<(f64, f64)> =
        meta.sources.iter().flat_map(|s| s.to_spec().activity()).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    spans
}

fn frame_count(n_samples: usize, spec: &SpectrogramConfig) -> usize {
    let win = spec.window_samples();
    let hop = spec.hop_samples();
    if n_samples < win {
        0
    } else {
        (n_samples - win) / hop + 1
    }
}

fn corrected_event_records(
    clip_id: &str,
    seq: &PredictionSequence,
    correction_s: f64,
) -> Vec<EventRecord> {
    transitions_to_events(seq)
        .events
        .iter()
        .map(|e| {
            let t = e.time_s + correction_s;
            EventRecord {
                clip_id: clip_id.to_string(),
                time_s: t,
                hop_frame: e.hop_frame,
                video_frame: (t * VIDEO_FPS).floor() as i64,
            }
        })
        .collect()
}

pub fn run(cfg: &DetectConfig) -> CliResult<()> {
    let layout = Layout::new(&cfg.out);
    let profile = resolve_profile(&cfg.profile)?;
    let scene = read_scene(&layout.scene_json()).map_err(input_err)?;
    let n_clips = scene.clips.count;
    if cfg.predictions_in.is_none() && cfg.folds > n_clips {
        return Err(input_err(format!(
            "cannot cross-validate {n_clips} clips in {} folds",
            cfg.folds
        )));
    }

    // Channel 0 of each recording plus its activity annotation.
    let mut raw = Vec::with_capacity(n_clips);
    for i in 0..n_clips {
        let label = clip_label(i);
        let meta = read_clip_meta(&layout.clip_meta_json(&label))?;
        let rec = read_wav(&layout.recording_wav(&label)).map_err(input_err)?;
        let ch0 = rec
            .channels
            .into_iter()
            .next()
            .ok_or_else(|| input_err(format!("{label}: recording has no channels")))?;
        raw.push((label, ch0, rec.sample_rate, activity_of(&meta)));
    }

    run_stage(&layout.detect_dir(), || {
        let spec = &cfg.train.spectrogram;
        let labeled: Vec<LabeledClip> = raw
            .iter()
            .map(|(label, ch0, fs, activity)| -> CliResult<LabeledClip> {
                let samples = resample(ch0, *fs, spec.sample_rate).map_err(stage_err)?;
                Ok(LabeledClip { clip_id: label.clone(), samples, labels: activity.clone() })
            })
            .collect::<CliResult<_>>()?;

        let correction = onset_correction_s(spec);
        let mc = MatchConfig::relaxed(profile.j);

        let (report, predictions, events) = match &cfg.predictions_in {
            Some(path) => score_imported(path, &labeled, spec, &mc, correction)?,
            None => {
                let cv = cross_validate(&labeled, cfg.folds, &cfg.augment, &cfg.train, &mc)
                    .map_err(stage_err)?;
                let mut fold_of = vec![0usize; labeled.len()];
                for (f, fold) in cv.folds.iter().enumerate() {
                    for &c in fold {
                        fold_of[c] = f;
                    }
                }
                let mut predictions = Vec::new();
                let mut events = Vec::new();
                for (ci, clip) in labeled.iter().enumerate() {
                    let feats = extract_features(&clip.samples, spec).map_err(stage_err)?;
                    let seq =
                        predict_sequence(&cv.models[fold_of[ci]], &feats).map_err(stage_err)?;
                    predictions.extend(seq.labels.iter().enumerate().map(|(f, &l)| {
                        PredictionRecord {
                            clip_id: clip.clip_id.clone(),
                            hop_frame: f,
                            prob: l as f64,
                        }
                    }));
                    events.extend(corrected_event_records(&clip.clip_id, &seq, correction));
                }
                let models = serde_json::to_string_pretty(&cv.models).map_err(stage_err)?;
                atomic_write(&layout.detect_models_json(), models.as_bytes())
                    .map_err(stage_err)?;
                let report = DetectReport {
                    metrics: cv.metrics,
                    fold_outcomes: cv.fold_outcomes,
                    folds: cv.folds,
                };
                (report, predictions, events)
            }
        };

        write_prediction_records(&layout.detect_predictions_jsonl(), &predictions)
            .map_err(stage_err)?;
        write_event_records(&layout.detect_events_jsonl(), &events).map_err(stage_err)?;
        let metrics = serde_json::to_string_pretty(&report).map_err(stage_err)?;
        atomic_write(&layout.detect_metrics_json(), metrics.as_bytes()).map_err(stage_err)?;
        println!(
            "detect: {} events over {n_clips} clips, relaxed F1 {:.3} -> {}",
            events.len(),
            report.metrics.f1.mean,
            layout.detect_dir().display()
        );
        Ok(())
    })
}

/// Score imported per-frame predictions against the dataset annotations as a
/// single fold, bypassing training entirely.
fn score_imported(
    path: &Path,
    labeled: &[LabeledClip],
    spec: &SpectrogramConfig,
    mc: &MatchConfig,
    correction_s: f64,
) -> CliResult<(DetectReport, Vec<PredictionRecord>, Vec<EventRecord>)> {
    let records = read_prediction_records(path).map_err(input_err)?;
    let known: BTreeMap<&str, usize> =
        labeled.iter().enumerate().map(|(i, c)| (c.clip_id.as_str(), i)).collect();
    let mut by_clip: BTreeMap<usize, Vec<&PredictionRecord>> = BTreeMap::new();
    for r in &records {
        let Some(&ci) = known.get(r.clip_id.as_str()) else {
            return Err(input_err(format!("prediction for unknown clip {:?}", r.clip_id)));
        };
        by_clip.entry(ci).or_default().push(r);
    }

    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    let mut predictions = Vec::new();
    let mut events = Vec::new();
    for (ci, clip) in labeled.iter().enumerate() {
        let n_frames = frame_count(clip.samples.len(), spec);
        let mut labels = vec![0u8; n_frames];
        for r in by_clip.get(&ci).map(Vec::as_slice).unwrap_or(&[]) {
            if r.hop_frame >= n_frames {
                return Err(input_err(format!(
                    "{}: hop frame {} beyond the clip's {n_frames} frames",
                    clip.clip_id, r.hop_frame
                )));
            }
            labels[r.hop_frame] = (r.prob > 0.5) as u8;
        }
        let seq = PredictionSequence {
            labels,
            hop_len_s: spec.hop_len_s,
            origin_time_s: 0.0,
        };
        let gt = PredictionSequence {
            labels: label_frames(&clip.labels, clip.samples.len(), spec),
            hop_len_s: spec.hop_len_s,
            origin_time_s: 0.0,
        };
        let m = match_events(&transitions_to_events(&seq), &transitions_to_events(&gt), mc);
        tp += m.true_pos;
        fp += m.false_pos;
        fneg += m.false_neg;
        predictions.extend(seq.labels.iter().enumerate().map(|(f, &l)| PredictionRecord {
            clip_id: clip.clip_id.clone(),
            hop_frame: f,
            prob: l as f64,
        }));
        events.extend(corrected_event_records(&clip.clip_id, &seq, correction_s));
    }
    let outcome = MatchOutcome::from_counts(tp, fp, fneg);
    let report = DetectReport {
        metrics: aggregate_folds(&[outcome]),
        fold_outcomes: vec![outcome],
        folds: vec![],
    };
    Ok((report, predictions, events))
}
