//! ASCII PLY point clouds, plain or with per-point acoustic weights.
//!
//! Coordinates are written with shortest round-trip formatting, so values
//! survive a write/read cycle bit-exactly. Colors are 8-bit RGB. Weighted
//! clouds carry the source video frame as a header comment.

use super::atomic_write;
use crate::error::{Error, Result};
use crate::fusion::{PointCloud, WeightedPointCloud};
use nalgebra::Point3;
use std::fmt::Write as _;
use std::path::Path;

fn ply_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::parse("ply", path, detail)
}

pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    if let Some(colors) = &cloud.colors {
        if colors.len() != cloud.points.len() {
            return Err(Error::shape(format!(
                "{} colors for {} points",
                colors.len(),
                cloud.points.len()
            )));
        }
    }
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", cloud.points.len());
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    if cloud.colors.is_some() {
        out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        let _ = write!(out, "{} {} {}", p.x, p.y, p.z);
        if let Some(colors) = &cloud.colors {
            for c in colors[i] {
                let _ = write!(out, " {}", (c.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_weighted_ply(path: &Path, cloud: &WeightedPointCloud) -> Result<()> {
    if cloud.weights.len() != cloud.points.len() {
        return Err(Error::shape(format!(
            "{} weights for {} points",
            cloud.weights.len(),
            cloud.points.len()
        )));
    }
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "comment source_frame {}", cloud.source_frame);
    let _ = writeln!(out, "element vertex {}", cloud.points.len());
    out.push_str(
        "property double x\nproperty double y\nproperty double z\nproperty double weight\n",
    );
    out.push_str("end_header\n");
    for (p, w) in cloud.points.iter().zip(&cloud.weights) {
        let _ = writeln!(out, "{} {} {} {}", p.x, p.y, p.z, w);
    }
    atomic_write(path, out.as_bytes())
}

struct PlyHeader {
    n_vertices: usize,
    properties: Vec<String>,
    source_frame: Option<i64>,
    body_start: usize,
}

fn parse_header(path: &Path, lines: &[&str]) -> Result<PlyHeader> {
    let mut it = lines.iter().enumerate();
    match it.next() {
        Some((_, &"ply")) => {}
        _ => return Err(ply_err(path, "missing ply magic")),
    }
    let mut n_vertices = None;
    let mut properties = Vec::new();
    let mut source_frame = None;
    let mut in_vertex = false;
    for (idx, line) in it {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("format") => {
                if line.trim() != "format ascii 1.0" {
                    return Err(ply_err(path, format!("unsupported format: {line}")));
                }
            }
            Some("comment") => {
                let rest: Vec<&str> = words.collect();
                if rest.len() == 2 && rest[0] == "source_frame" {
                    source_frame =
                        Some(rest[1].parse().map_err(|_| ply_err(path, "bad source_frame"))?);
                }
            }
            Some("element") => {
                let kind = words.next().unwrap_or("");
                in_vertex = kind == "vertex";
                if in_vertex {
                    let n = words.next().ok_or_else(|| ply_err(path, "element vertex missing count"))?;
                    n_vertices = Some(n.parse().map_err(|_| ply_err(path, "bad vertex count"))?);
                }
            }
            Some("property") if in_vertex => {
                let _ty = words.next();
                if let Some(name) = words.next() {
                    properties.push(name.to_string());
                }
            }
            Some("property") => {}
            Some("end_header") => {
                let n_vertices =
                    n_vertices.ok_or_else(|| ply_err(path, "no vertex element"))?;
                return Ok(PlyHeader { n_vertices, properties, source_frame, body_start: idx + 1 });
            }
            _ => return Err(ply_err(path, format!("unexpected header line: {line}"))),
        }
    }
    Err(ply_err(path, "missing end_header"))
}

fn parse_rows(path: &Path, lines: &[&str], header: &PlyHeader) -> Result<Vec<Vec<f64>>> {
    let n_props = header.properties.len();
    let mut rows = Vec::with_capacity(header.n_vertices);
    for line in lines[header.body_start..]
        .iter()
        .filter(|l| !l.trim().is_empty())
        .take(header.n_vertices)
    {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|w| w.parse().map_err(|_| ply_err(path, format!("bad number: {w}"))))
            .collect::<Result<_>>()?;
        if row.len() != n_props {
            return Err(ply_err(path, format!("expected {n_props} values, got {}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != header.n_vertices {
        return Err(ply_err(
            path,
            format!("expected {} vertices, got {}", header.n_vertices, rows.len()),
        ));
    }
    Ok(rows)
}

pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    let header = parse_header(path, &lines)?;
    let has_color = if header.properties == ["x", "y", "z"] {
        false
    } else if header.properties == ["x", "y", "z", "red", "green", "blue"] {
        true
    } else {
        return Err(ply_err(
            path,
            format!("unsupported vertex layout: {:?}", header.properties),
        ));
    };
    let rows = parse_rows(path, &lines, &header)?;
    let points = rows.iter().map(|r| Point3::new(r[0], r[1], r[2])).collect();
    let colors = has_color.then(|| {
        rows.iter()
            .map(|r| [r[3] as f32 / 255.0, r[4] as f32 / 255.0, r[5] as f32 / 255.0])
            .collect()
    });
    Ok(PointCloud { points, colors })
}

pub fn read_weighted_ply(path: &Path) -> Result<WeightedPointCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    let header = parse_header(path, &lines)?;
    if header.properties != ["x", "y", "z", "weight"] {
        return Err(ply_err(
            path,
            format!("unsupported weighted layout: {:?}", header.properties),
        ));
    }
    let rows = parse_rows(path, &lines, &header)?;
    Ok(WeightedPointCloud {
        points: rows.iter().map(|r| Point3::new(r[0], r[1], r[2])).collect(),
        weights: rows.iter().map(|r| r[3]).collect(),
        source_frame: header.source_frame.unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_cloud_round_trips_exactly() {
        let cloud = PointCloud {
            points: vec![
                Point3::new(0.1, -2.5, 3.75),
                Point3::new(1e-17, 123456.789012345, -0.0),
            ],
            colors: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        write_ply(&path, &cloud).unwrap();
        assert_eq!(read_ply(&path).unwrap(), cloud);
    }

    #[test]
    fn colored_cloud_round_trips_to_8bit() {
        let cloud = PointCloud {
            points: vec![Point3::new(1.0, 2.0, 3.0)],
            colors: Some(vec![[0.0, 127.0 / 255.0, 1.0]]),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        write_ply(&path, &cloud).unwrap();
        assert_eq!(read_ply(&path).unwrap(), cloud);
    }

    #[test]
    fn weighted_cloud_keeps_frame_and_weights() {
        let cloud = WeightedPointCloud {
            points: vec![Point3::new(0.5, 0.25, 2.0), Point3::new(-1.0, 0.0, 4.0)],
            weights: vec![0.125, 0.875],
            source_frame: 42,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.ply");
        write_weighted_ply(&path, &cloud).unwrap();
        assert_eq!(read_weighted_ply(&path).unwrap(), cloud);
    }

    #[test]
    fn rejects_truncated_body() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\nend_header\n0 0 0\n",
        )
        .unwrap();
        assert!(read_ply(&path).is_err());
    }
}
