//! Mel-spectrogram export: raw little-endian f32 frames plus a JSON sidecar
//! with the shape and frame timing.
//!
//! The on-disk format is single precision, so a write/read cycle rounds the
//! f64 features to f32.

use super::atomic_write;
use crate::dsp::MelSpectrogram;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize, Deserialize)]
struct MelMeta {
    n_mels: usize,
    n_frames: usize,
    hop_len_s: f64,
    origin_time_s: f64,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_mel(path: &Path, mel: &MelSpectrogram) -> Result<()> {
    if mel.n_mels == 0 || !mel.data.len().is_multiple_of(mel.n_mels) {
        return Err(Error::shape(format!(
            "{} mel values do not divide into {}-band frames",
            mel.data.len(),
            mel.n_mels
        )));
    }
    let mut bytes = Vec::with_capacity(mel.data.len() * 4);
    for v in &mel.data {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    atomic_write(path, &bytes)?;
    let meta = MelMeta {
        n_mels: mel.n_mels,
        n_frames: mel.data.len() / mel.n_mels,
        hop_len_s: mel.hop_len_s,
        origin_time_s: mel.origin_time_s,
    };
    atomic_write(&sidecar(path), serde_json::to_string_pretty(&meta)?.as_bytes())
}

pub fn read_mel(path: &Path) -> Result<MelSpectrogram> {
    let meta_path = sidecar(path);
    let meta: MelMeta =
        serde_json::from_str(&std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = meta.n_frames * meta.n_mels * 4;
    if bytes.len() != expected {
        return Err(Error::parse(
            "mel",
            path,
            format!(
                "expected {expected} bytes for {} frames x {} bands, got {}",
                meta.n_frames,
                meta.n_mels,
                bytes.len()
            ),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(MelSpectrogram {
        data,
        n_mels: meta.n_mels,
        hop_len_s: meta.hop_len_s,
        origin_time_s: meta.origin_time_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_at_single_precision() {
        let mel = MelSpectrogram {
            data: vec![-3.0, -2.5, 0.0, 1.25, 7.0, -80.0, 0.1, 2.0 / 3.0, -1e-7],
            n_mels: 3,
            hop_len_s: 0.02,
            origin_time_s: 0.075,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mel.bin");
        write_mel(&path, &mel).unwrap();
        let back = read_mel(&path).unwrap();
        assert_eq!(back.n_mels, 3);
        assert_eq!(back.hop_len_s, mel.hop_len_s);
        assert_eq!(back.origin_time_s, mel.origin_time_s);
        for (a, b) in back.data.iter().zip(&mel.data) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn exact_f32_values_survive_unchanged() {
        let mel = MelSpectrogram {
            data: vec![0.5, -0.25, 1024.0, 0.0],
            n_mels: 2,
            hop_len_s: 0.02,
            origin_time_s: 0.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mel.bin");
        write_mel(&path, &mel).unwrap();
        assert_eq!(read_mel(&path).unwrap().data, mel.data);
    }

    #[test]
    fn rejects_ragged_data() {
        let mel = MelSpectrogram { data: vec![0.0; 5], n_mels: 3, hop_len_s: 0.02, origin_time_s: 0.0 };
        let dir = tempfile::tempdir().unwrap();
        assert!(write_mel(&dir.path().join("m.bin"), &mel).is_err());
    }
}
