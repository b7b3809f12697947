//! 3D localization of detected events: weighted density clustering over the
//! fused point cloud, extent-clamped bounding boxes, and IoU-based scoring.

mod dbscan;
mod iou;

pub use dbscan::{select_cluster, weighted_dbscan, Cluster};
pub use iou::{iou3d, iou3d_sampled, iou_histogram, recall_table, RecallTable};

use crate::dsp::BandpassSpec;
use crate::error::{Error, Result};
use crate::fusion::WeightedPointCloud;
use nalgebra::{Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

/// How predicted boxes are shaped for an action class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxRule {
    /// Replace the cluster box by a fixed cube at the weighted centroid.
    FixedCube { edge_m: f64 },
    /// Clamp each axis extent to the instrument's size, keeping the center.
    InstrumentExtents { extents: [f64; 3] },
}

/// When localization is evaluated for a detected event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerMode {
    /// Once per detected event onset.
    Impulsive,
    /// On a fixed grid from each onset until the next event or clip end.
    Continuous { interval_s: f64 },
}

/// Per-action configuration tying the pipeline stages together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionProfile {
    pub name: String,
    /// Band-pass applied to recordings before beamforming; `None` keeps the
    /// full band.
    pub band: Option<BandpassSpec>,
    pub box_rule: BoxRule,
    /// Detection match tolerance in feature hops.
    pub j: usize,
    pub trigger: TriggerMode,
}

impl ActionProfile {
    pub fn validate(&self) -> Result<()> {
        match self.box_rule {
            BoxRule::FixedCube { edge_m } => {
                if !(edge_m > 0.0) {
                    return Err(Error::config("cube edge must be positive"));
                }
            }
            BoxRule::InstrumentExtents { extents } => {
                if extents.iter().any(|e| !(*e > 0.0)) {
                    return Err(Error::config("instrument extents must be positive"));
                }
            }
        }
        if let TriggerMode::Continuous { interval_s } = self.trigger {
            if !(interval_s > 0.0) {
                return Err(Error::config("trigger interval must be positive"));
            }
        }
        Ok(())
    }
}

/// Weighted clustering parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub radius_m: f64,
    pub min_weight: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self { radius_m: 0.030, min_weight: 200.0 }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0 && self.min_weight > 0.0) {
            return Err(Error::config("cluster radius and min weight must be positive"));
        }
        Ok(())
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb3 {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb3 {
    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.min[i] <= self.max[i]) {
                return Err(Error::config("box min must not exceed max"));
            }
        }
        Ok(())
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extents(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        let e = self.extents();
        e.x * e.y * e.z
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }
}

/// Box with an orientation, used for ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox3 {
    pub center: Point3<f64>,
    pub half_extents: Vector3<f64>,
    pub rotation: Rotation3<f64>,
}

impl OrientedBox3 {
    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        let d = self.rotation.inverse() * (p - self.center);
        d.x.abs() <= self.half_extents.x
            && d.y.abs() <= self.half_extents.y
            && d.z.abs() <= self.half_extents.z
    }

    /// Tightest axis-aligned box containing this one.
    pub fn aabb(&self) -> Aabb3 {
        let e = self.rotation.matrix().abs() * self.half_extents;
        Aabb3 { min: self.center - e, max: self.center + e }
    }
}

/// Outcome of localizing one triggered event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub predicted: Option<Aabb3>,
    pub ground_truth: OrientedBox3,
    pub iou: f64,
    pub cluster_weight: f64,
    pub timestamp_s: f64,
}

/// Component-wise bounding box of the given points.
pub fn tight_box(points: &[Point3<f64>]) -> Result<Aabb3> {
    let first = points.first().ok_or_else(|| Error::shape("empty cluster has no bounding box"))?;
    let mut min = *first;
    let mut max = *first;
    for p in &points[1..] {
        for i in 0..3 {
            min[i] = min[i].min(p[i]);
            max[i] = max[i].max(p[i]);
        }
    }
    Ok(Aabb3 { min, max })
}

/// Weight-weighted centroid over the given member indices.
pub fn weighted_centroid(
    points: &[Point3<f64>],
    weights: &[f64],
    members: &[usize],
) -> Point3<f64> {
    let mut acc = Vector3::zeros();
    let mut wsum = 0.0;
    for &i in members {
        acc += weights[i] * points[i].coords;
        wsum += weights[i];
    }
    if wsum > 0.0 {
        Point3::from(acc / wsum)
    } else {
        // Unweighted fallback for degenerate all-zero weights.
        let n = members.len().max(1) as f64;
        Point3::from(members.iter().map(|&i| points[i].coords).sum::<Vector3<f64>>() / n)
    }
}

/// Apply a profile's box rule.
///
/// Instrument extents shrink oversized axes about the box center; the fixed
/// cube replaces the box entirely, centered at the cluster's weighted
/// centroid.
pub fn clamp_extents(bbox: Aabb3, profile: &ActionProfile, centroid: Point3<f64>) -> Aabb3 {
    match profile.box_rule {
        BoxRule::FixedCube { edge_m } => {
            let h = Vector3::repeat(edge_m / 2.0);
            Aabb3 { min: centroid - h, max: centroid + h }
        }
        BoxRule::InstrumentExtents { extents } => {
            let c = bbox.center();
            let mut min = bbox.min;
            let mut max = bbox.max;
            for i in 0..3 {
                if max[i] - min[i] > extents[i] {
                    min[i] = c[i] - extents[i] / 2.0;
                    max[i] = c[i] + extents[i] / 2.0;
                }
            }
            Aabb3 { min, max }
        }
    }
}

/// Cluster the weighted cloud and score the best cluster's box against the
/// ground truth. No qualifying cluster yields an empty prediction with IoU 0.
pub fn localize_event(
    cloud: &WeightedPointCloud,
    ground_truth: &OrientedBox3,
    profile: &ActionProfile,
    params: &ClusterParams,
    timestamp_s: f64,
) -> LocalizationResult {
    let clusters = weighted_dbscan(&cloud.points, &cloud.weights, params);
    match select_cluster(&clusters) {
        None => LocalizationResult {
            predicted: None,
            ground_truth: *ground_truth,
            iou: 0.0,
            cluster_weight: 0.0,
            timestamp_s,
        },
        Some(best) => {
            let members: Vec<Point3<f64>> =
                best.indices.iter().map(|&i| cloud.points[i]).collect();
            let bbox = tight_box(&members).expect("selected cluster is nonempty");
            let centroid = weighted_centroid(&cloud.points, &cloud.weights, &best.indices);
            let predicted = clamp_extents(bbox, profile, centroid);
            LocalizationResult {
                predicted: Some(predicted),
                ground_truth: *ground_truth,
                iou: iou3d(&predicted, ground_truth),
                cluster_weight: best.total_weight,
                timestamp_s,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_profile() -> ActionProfile {
        ActionProfile {
            name: "chiseling".into(),
            band: None,
            box_rule: BoxRule::FixedCube { edge_m: 0.05 },
            j: 1,
            trigger: TriggerMode::Impulsive,
        }
    }

    fn extents_profile(extents: [f64; 3]) -> ActionProfile {
        ActionProfile {
            name: "sawing".into(),
            band: None,
            box_rule: BoxRule::InstrumentExtents { extents },
            j: 3,
            trigger: TriggerMode::Continuous { interval_s: 0.04 },
        }
    }

    #[test]
    fn tight_box_examples() {
        let b = tight_box(&[Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 2.0, 3.0)]).unwrap();
        assert_eq!(b.min, Point3::new(0.0, 0.0, 0.0));
        assert_eq!(b.max, Point3::new(1.0, 2.0, 3.0));

        let single = tight_box(&[Point3::new(0.5, -0.5, 2.0)]).unwrap();
        assert_eq!(single.min, single.max);
        assert_eq!(single.volume(), 0.0);

        assert!(tight_box(&[]).is_err());
    }

    #[test]
    fn tight_box_contains_all_members() {
        let pts: Vec<Point3<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.37;
                Point3::new(t.sin(), (2.0 * t).cos(), t.sin() * t.cos())
            })
            .collect();
        let b = tight_box(&pts).unwrap();
        assert!(pts.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn oversized_axes_shrink_about_center() {
        let b = Aabb3 { min: Point3::new(-0.1, 0.0, 1.0), max: Point3::new(0.1, 0.05, 1.3) };
        let clamped = clamp_extents(b, &extents_profile([0.12, 0.12, 0.12]), b.center());
        // x: 0.200 m over the 0.120 m limit shrinks, center preserved.
        assert!((clamped.extents().x - 0.12).abs() < 1e-12);
        assert_eq!(clamped.center(), b.center());
        // y: 0.05 under the limit stays untouched.
        assert_eq!(clamped.min.y, 0.0);
        assert_eq!(clamped.max.y, 0.05);
        // z: 0.3 over the limit shrinks.
        assert!((clamped.extents().z - 0.12).abs() < 1e-12);
    }

    #[test]
    fn fixed_cube_recenters_on_centroid() {
        let b = Aabb3 { min: Point3::new(-1.0, -1.0, 0.0), max: Point3::new(1.0, 1.0, 4.0) };
        let clamped = clamp_extents(b, &cube_profile(), Point3::new(0.0, 0.0, 2.0));
        assert_eq!(clamped.min, Point3::new(-0.025, -0.025, 1.975));
        assert_eq!(clamped.max, Point3::new(0.025, 0.025, 2.025));
    }

    #[test]
    fn weighted_centroid_follows_weights() {
        let points = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)];
        let c = weighted_centroid(&points, &[1.0, 3.0], &[0, 1]);
        assert!((c.x - 0.75).abs() < 1e-15);
        let c0 = weighted_centroid(&points, &[0.0, 0.0], &[0, 1]);
        assert!((c0.x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn localize_event_finds_dense_cluster() {
        let gt = OrientedBox3 {
            center: Point3::new(0.1, 0.0, 1.5),
            half_extents: Vector3::repeat(0.025),
            rotation: Rotation3::identity(),
        };
        let mut points = Vec::new();
        let mut weights = Vec::new();
        // Dense high-weight blob around the ground truth center.
        for i in 0..30 {
            for j in 0..30 {
                points.push(Point3::new(
                    0.1 + (i as f64 - 14.5) * 0.001,
                    (j as f64 - 14.5) * 0.001,
                    1.5,
                ));
                weights.push(0.9);
            }
        }
        // Scattered faint points elsewhere.
        for i in 0..50 {
            points.push(Point3::new(-0.8 + i as f64 * 0.03, 0.5, 2.0));
            weights.push(0.05);
        }
        let cloud = WeightedPointCloud { points, weights, source_frame: 3 };
        let r = localize_event(&cloud, &gt, &cube_profile(), &ClusterParams::default(), 0.12);
        let pred = r.predicted.expect("dense blob must cluster");
        assert!(r.cluster_weight >= 200.0);
        assert!(r.iou > 0.3, "iou {}", r.iou);
        assert!((pred.center().x - 0.1).abs() < 0.01);
        assert_eq!(r.timestamp_s, 0.12);
    }

    #[test]
    fn localize_event_with_no_cluster_reports_miss() {
        let gt = OrientedBox3 {
            center: Point3::origin(),
            half_extents: Vector3::repeat(0.025),
            rotation: Rotation3::identity(),
        };
        let cloud = WeightedPointCloud {
            points: vec![Point3::new(0.0, 0.0, 1.0), Point3::new(0.5, 0.0, 1.0)],
            weights: vec![0.1, 0.2],
            source_frame: 0,
        };
        let r = localize_event(&cloud, &gt, &cube_profile(), &ClusterParams::default(), 1.0);
        assert!(r.predicted.is_none());
        assert_eq!(r.iou, 0.0);
        assert_eq!(r.cluster_weight, 0.0);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(ClusterParams { radius_m: 0.0, min_weight: 1.0 }.validate().is_err());
        assert!(ClusterParams { radius_m: 0.01, min_weight: 0.0 }.validate().is_err());
        assert!(ClusterParams::default().validate().is_ok());

        let mut p = cube_profile();
        p.box_rule = BoxRule::FixedCube { edge_m: 0.0 };
        assert!(p.validate().is_err());
        let mut p = extents_profile([0.1, 0.0, 0.1]);
        assert!(p.validate().is_err());
        p = extents_profile([0.1, 0.1, 0.1]);
        p.trigger = TriggerMode::Continuous { interval_s: 0.0 };
        assert!(p.validate().is_err());

        let b = Aabb3 { min: Point3::new(1.0, 0.0, 0.0), max: Point3::new(0.0, 1.0, 1.0) };
        assert!(b.validate().is_err());
    }
}
