//! Camera intrinsics and extrinsics as JSON.
//!
//! The pose is stored as a row-major 4x4 homogeneous world-to-camera matrix
//! so calibration files are easy to produce from other tools. Reading
//! validates the bottom row and the rotation block before rebuilding the
//! rigid transform.

use super::atomic_write;
use crate::error::{Error, Result};
use crate::fusion::CameraModel;
use nalgebra::{Isometry3, Matrix3, Matrix4, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFile {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub resolution: (u32, u32),
    /// Row-major 4x4 homogeneous world-to-camera transform.
    pub pose: [f64; 16],
}

pub fn pose_to_rows(pose: &Isometry3<f64>) -> [f64; 16] {
    let m = pose.to_homogeneous();
    let mut rows = [0.0; 16];
    for r in 0..4 {
        for c in 0..4 {
            rows[r * 4 + c] = m[(r, c)];
        }
    }
    rows
}

/// Rebuild a rigid transform from row-major homogeneous entries.
///
/// The bottom row must be (0, 0, 0, 1) and the 3x3 block a proper rotation,
/// both within 1e-6.
pub fn pose_from_rows(rows: &[f64; 16]) -> Result<Isometry3<f64>> {
    let m = Matrix4::from_row_slice(rows);
    let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
    let expected = [0.0, 0.0, 0.0, 1.0];
    if bottom.iter().zip(&expected).any(|(a, b)| (a - b).abs() > 1e-6) {
        return Err(Error::config(format!("pose bottom row {bottom:?} is not (0, 0, 0, 1)")));
    }
    let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
    let deviation = (r * r.transpose() - Matrix3::identity()).abs().max();
    if deviation > 1e-6 {
        return Err(Error::config(format!(
            "pose rotation block is not orthonormal (deviation {deviation:.2e})"
        )));
    }
    if r.determinant() < 0.0 {
        return Err(Error::config("pose rotation block is a reflection"));
    }
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix(&r));
    let translation = Translation3::from(Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]));
    Ok(Isometry3::from_parts(translation, rotation))
}

impl CameraFile {
    pub fn from_model(model: &CameraModel) -> CameraFile {
        CameraFile {
            fx: model.fx,
            fy: model.fy,
            cx: model.cx,
            cy: model.cy,
            resolution: model.resolution,
            pose: pose_to_rows(&model.pose),
        }
    }

    pub fn to_model(&self) -> Result<CameraModel> {
        let model = CameraModel {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            resolution: self.resolution,
            pose: pose_from_rows(&self.pose)?,
        };
        model.validate()?;
        Ok(model)
    }
}

pub fn write_camera(path: &Path, model: &CameraModel) -> Result<()> {
    model.validate()?;
    let file = CameraFile::from_model(model);
    atomic_write(path, serde_json::to_string_pretty(&file)?.as_bytes())
}

pub fn read_camera(path: &Path) -> Result<CameraModel> {
    let file: CameraFile =
        serde_json::from_str(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?;
    file.to_model()
}
