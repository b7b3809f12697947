//! On-disk formats for datasets and stage outputs.
//!
//! Every writer goes through [`atomic_write`]: content lands in a temporary
//! sibling file and is renamed into place, so readers never observe a partial
//! file and a failed run leaves no truncated output behind.

pub mod calib;
pub mod events;
pub mod heatmap;
pub mod mel_bin;
pub mod ply;
pub mod results;
pub mod scene;
pub mod wav;

use crate::error::{Error, Result};
use std::fs;
use std::path::Path;

/// Write `content` to `path` atomically: write a temporary sibling, then
/// rename over the destination.
pub fn atomic_write(path: &Path, content: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    use std::io::Write;
    tmp.write_all(content).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Write records as JSON Lines, one compact object per line.
pub fn write_jsonl<T: serde::Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Read JSON Lines records; blank lines are skipped.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(line)
            .map_err(|e| Error::parse("jsonl", path, format!("line {}: {e}", i + 1)))?;
        records.push(r);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_existing_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.txt");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"second");
    }
}
