//! Event extraction from predictions, greedy matching, and fold aggregation.

use super::{DetectionMetrics, MeanStd, PredictionSequence};
use crate::error::{Error, Result};
use crate::localize::{ActionProfile, TriggerMode};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A detected or ground-truth event onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub hop_frame: usize,
    pub time_s: f64,
    /// Index of the covering video frame at 25 fps: floor(time * 25).
    pub video_frame: i64,
}

/// Events in strictly increasing time order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventList {
    pub events: Vec<Event>,
}

impl EventList {
    pub fn validate(&self) -> Result<()> {
        if self.events.windows(2).any(|w| w[1].time_s <= w[0].time_s) {
            return Err(Error::shape("event times must be strictly increasing"));
        }
        Ok(())
    }
}

/// One event per 0-to-1 transition, at the index of the first 1; a leading 1
/// counts as an event.
pub fn transitions_to_events(pred: &PredictionSequence) -> EventList {
    let mut events = Vec::new();
    let mut prev = 0u8;
    for (k, &l) in pred.labels.iter().enumerate() {
        let l = (l != 0) as u8;
        if l == 1 && prev == 0 {
            let time_s = pred.origin_time_s + k as f64 * pred.hop_len_s;
            events.push(Event { hop_frame: k, time_s, video_frame: (time_s * 25.0).floor() as i64 });
        }
        prev = l;
    }
    EventList { events }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    Hard,
    Relaxed,
}

/// Matching condition: hard requires the exact hop frame, relaxed accepts a
/// symmetric window of `j` hop frames around the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub mode: MatchMode,
    pub j: usize,
}

impl MatchConfig {
    pub fn hard() -> Self {
        MatchConfig { mode: MatchMode::Hard, j: 0 }
    }

    pub fn relaxed(j: usize) -> Self {
        MatchConfig { mode: MatchMode::Relaxed, j }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == MatchMode::Hard && self.j != 0 {
            return Err(Error::config("hard matching implies j = 0"));
        }
        Ok(())
    }

    fn tolerance(&self) -> i64 {
        match self.mode {
            MatchMode::Hard => 0,
            MatchMode::Relaxed => self.j as i64,
        }
    }
}

/// Counts and derived metrics of one matched prediction/ground-truth pair of
/// event lists (or one fold's accumulated counts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MatchOutcome {
    /// Apply the empty-denominator conventions: all-empty counts score 1,
    /// zero true positives with any error scores 0.
    pub fn from_counts(true_pos: usize, false_pos: usize, false_neg: usize) -> Self {
        let (precision, recall, f1) = if true_pos + false_pos + false_neg == 0 {
            (1.0, 1.0, 1.0)
        } else {
            let p = if true_pos + false_pos > 0 {
                true_pos as f64 / (true_pos + false_pos) as f64
            } else {
                0.0
            };
            let r = if true_pos + false_neg > 0 {
                true_pos as f64 / (true_pos + false_neg) as f64
            } else {
                0.0
            };
            let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            (p, r, f1)
        };
        MatchOutcome { true_pos, false_pos, false_neg, precision, recall, f1 }
    }
}

/// Greedy one-to-one matching in time order: each ground-truth event (earliest
/// first) takes the earliest unmatched prediction within `j` hop frames.
pub fn match_events(pred: &EventList, gt: &EventList, cfg: &MatchConfig) -> MatchOutcome {
    let j = cfg.tolerance();
    let mut used = vec![false; pred.events.len()];
    let mut true_pos = 0usize;
    let mut start = 0usize;
    for g in &gt.events {
        let gf = g.hop_frame as i64;
        while start < pred.events.len() && (pred.events[start].hop_frame as i64) < gf - j {
            start += 1;
        }
        let mut q = start;
        while q < pred.events.len() && pred.events[q].hop_frame as i64 <= gf + j {
            if !used[q] {
                used[q] = true;
                true_pos += 1;
                break;
            }
            q += 1;
        }
    }
    MatchOutcome::from_counts(
        true_pos,
        pred.events.len() - true_pos,
        gt.events.len() - true_pos,
    )
}

/// Mean and population std of precision/recall/F1 across folds.
pub fn aggregate_folds(folds: &[MatchOutcome]) -> DetectionMetrics {
    let collect = |f: fn(&MatchOutcome) -> f64| -> MeanStd {
        MeanStd::over(&folds.iter().map(f).collect::<Vec<_>>())
    };
    DetectionMetrics {
        precision: collect(|m| m.precision),
        recall: collect(|m| m.recall),
        f1: collect(|m| m.f1),
    }
}

/// Clip-level fold assignment: shuffled deterministically by seed, fold sizes
/// differ by at most one.
pub fn kfold_split(n_clips: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n_clips {
        return Err(Error::config(format!("cannot split {n_clips} clips into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n_clips).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n_clips / k;
    let rem = n_clips % k;
    let mut folds = Vec::with_capacity(k);
    let mut at = 0usize;
    for f in 0..k {
        let take = base + (f < rem) as usize;
        let mut fold: Vec<usize> = order[at..at + take].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        at += take;
    }
    Ok(folds)
}

const TRIGGER_EPS: f64 = 1e-9;

/// Localization timestamps for a clip's events.
///
/// Impulsive actions trigger once per event; continuous actions trigger on a
/// regular grid from each event until the next event (exclusive) or the clip
/// end (inclusive).
pub fn trigger_schedule(events: &EventList, profile: &ActionProfile, clip_end_s: f64) -> Vec<f64> {
    match profile.trigger {
        TriggerMode::Impulsive => events.events.iter().map(|e| e.time_s).collect(),
        TriggerMode::Continuous { interval_s } => {
            let mut out = Vec::new();
            for (i, e) in events.events.iter().enumerate() {
                let next = events.events.get(i + 1).map(|n| n.time_s);
                let mut m = 0u64;
                loop {
                    let t = e.time_s + m as f64 * interval_s;
                    let in_range = match next {
                        Some(limit) => t < limit - TRIGGER_EPS,
                        None => t <= clip_end_s + TRIGGER_EPS,
                    };
                    if !in_range {
                        break;
                    }
                    out.push(t);
                    m += 1;
                }
            }
            out
        }
    }
}
