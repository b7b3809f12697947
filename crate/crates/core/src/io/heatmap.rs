//! Heatmap persistence: raw little-endian f32 cells plus a JSON sidecar.
//!
//! The `.bin` file holds the row-major ny x nx values; the sidecar (same
//! path with a `.json` extension) carries grid geometry, the analysis
//! window, and the matched video frame.

use super::atomic_write;
use crate::beamform::{AcousticHeatmap, ScanGrid};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize, Deserialize)]
struct HeatmapMeta {
    grid: ScanGrid,
    time_window: (f64, f64),
    video_frame: i64,
    normalized: bool,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_heatmap(path: &Path, map: &AcousticHeatmap) -> Result<()> {
    if map.values.len() != map.grid.n_cells() {
        return Err(Error::shape(format!(
            "{} values for a {}x{} grid",
            map.values.len(),
            map.grid.nx,
            map.grid.ny
        )));
    }
    let mut bytes = Vec::with_capacity(map.values.len() * 4);
    for v in &map.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    atomic_write(path, &bytes)?;
    let meta = HeatmapMeta {
        grid: map.grid,
        time_window: map.time_window,
        video_frame: map.video_frame,
        normalized: map.normalized,
    };
    atomic_write(&sidecar(path), serde_json::to_string_pretty(&meta)?.as_bytes())
}

pub fn read_heatmap(path: &Path) -> Result<AcousticHeatmap> {
    let meta_path = sidecar(path);
    let meta: HeatmapMeta =
        serde_json::from_str(&std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = meta.grid.n_cells() * 4;
    if bytes.len() != expected {
        return Err(Error::parse(
            "heatmap",
            path,
            format!("expected {expected} bytes for {}x{} cells, got {}", meta.grid.nx, meta.grid.ny, bytes.len()),
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(AcousticHeatmap {
        values,
        normalized: meta.normalized,
        grid: meta.grid,
        time_window: meta.time_window,
        video_frame: meta.video_frame,
    })
}
