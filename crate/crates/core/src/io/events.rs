//! Event and per-frame prediction records as JSON Lines.
//!
//! One record per line keeps multi-clip files mergeable with plain text
//! tools; records carry the clip id so files can be split or concatenated
//! freely.

use super::{read_jsonl, write_jsonl};
use crate::detect::{Event, EventList};
use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// One detected (or ground-truth) event instant in a named clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub clip_id: String,
    pub time_s: f64,
    pub hop_frame: usize,
    pub video_frame: i64,
}

/// One classifier decision for a single analysis frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub clip_id: String,
    pub hop_frame: usize,
    pub prob: f64,
}

pub fn records_from_events(clip_id: &str, list: &EventList) -> Vec<EventRecord> {
    list.events
        .iter()
        .map(|e| EventRecord {
            clip_id: clip_id.to_string(),
            time_s: e.time_s,
            hop_frame: e.hop_frame,
            video_frame: e.video_frame,
        })
        .collect()
}

/// Group records by clip, ordered by hop frame within each clip.
pub fn events_by_clip(records: &[EventRecord]) -> BTreeMap<String, EventList> {
    let mut by_clip: BTreeMap<String, Vec<Event>> = BTreeMap::new();
    for r in records {
        by_clip.entry(r.clip_id.clone()).or_default().push(Event {
            hop_frame: r.hop_frame,
            time_s: r.time_s,
            video_frame: r.video_frame,
        });
    }
    by_clip
        .into_iter()
        .map(|(clip, mut events)| {
            events.sort_by_key(|e| e.hop_frame);
            (clip, EventList { events })
        })
        .collect()
}

pub fn write_event_records(path: &Path, records: &[EventRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_event_records(path: &Path) -> Result<Vec<EventRecord>> {
    read_jsonl(path)
}

pub fn write_prediction_records(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_prediction_records(path: &Path) -> Result<Vec<PredictionRecord>> {
    read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_regroups() {
        let records = vec![
            EventRecord { clip_id: "clip_001".into(), time_s: 0.4, hop_frame: 20, video_frame: 10 },
            EventRecord { clip_id: "clip_000".into(), time_s: 1.0, hop_frame: 50, video_frame: 25 },
            EventRecord { clip_id: "clip_000".into(), time_s: 0.2, hop_frame: 10, video_frame: 5 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        write_event_records(&path, &records).unwrap();
        let back = read_event_records(&path).unwrap();
        assert_eq!(back, records);

        let grouped = events_by_clip(&back);
        assert_eq!(grouped.len(), 2);
        let clip0 = &grouped["clip_000"];
        assert_eq!(
            clip0.events.iter().map(|e| e.hop_frame).collect::<Vec<_>>(),
            vec![10, 50]
        );
        clip0.validate().unwrap();
    }

    #[test]
    fn prediction_records_round_trip() {
        let records = vec![
            PredictionRecord { clip_id: "c".into(), hop_frame: 0, prob: 0.25 },
            PredictionRecord { clip_id: "c".into(), hop_frame: 1, prob: 0.875 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pred.jsonl");
        write_prediction_records(&path, &records).unwrap();
        assert_eq!(read_prediction_records(&path).unwrap(), records);
    }

    #[test]
    fn bad_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        std::fs::write(&path, "{\"clip_id\":\"c\",\"time_s\":0.0,\"hop_frame\":0,\"video_frame\":0}\nnot json\n").unwrap();
        let err = read_event_records(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }
}
