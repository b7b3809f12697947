//! 3D intersection-over-union between predicted axis-aligned boxes and
//! (possibly rotated) ground-truth boxes, plus recall aggregation.

use super::{Aabb3, OrientedBox3};
use nalgebra::{Point3, Rotation3};
use serde::{Deserialize, Serialize};

/// IoU of an axis-aligned prediction against an oriented ground truth.
///
/// Identity-rotation ground truth is evaluated analytically; anything else
/// falls back to deterministic stratified sampling ([`iou3d_sampled`]).
pub fn iou3d(pred: &Aabb3, gt: &OrientedBox3) -> f64 {
    if gt.rotation == Rotation3::identity() {
        let gt_box = Aabb3 { min: gt.center - gt.half_extents, max: gt.center + gt.half_extents };
        aabb_iou(pred, &gt_box)
    } else {
        iou3d_sampled(pred, gt)
    }
}

fn aabb_iou(a: &Aabb3, b: &Aabb3) -> f64 {
    let mut inter = 1.0f64;
    for i in 0..3 {
        let lo = a.min[i].max(b.min[i]);
        let hi = a.max[i].min(b.max[i]);
        if hi <= lo {
            return 0.0;
        }
        inter *= hi - lo;
    }
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Stratified sample count per axis; 100^3 = 1e6 samples total.
const SAMPLES_PER_AXIS: usize = 100;

/// Low-discrepancy jitter offsets: powers of the inverse of the real root of
/// x^4 = x + 1, the 3D generalization of the golden ratio.
const JITTER_ALPHA: [f64; 3] =
    [0.8191725133961645, 0.6710436067037893, 0.5497004779019703];

/// Sampling-based IoU for rotated ground truth.
///
/// The intersection volume is estimated over the overlap of the two boxes'
/// axis-aligned bounds with one jittered sample per cell of a 100^3 grid;
/// the prediction and ground-truth volumes are exact.
pub fn iou3d_sampled(pred: &Aabb3, gt: &OrientedBox3) -> f64 {
    let ga = gt.aabb();
    let mut lo = Point3::origin();
    let mut hi = Point3::origin();
    for i in 0..3 {
        lo[i] = pred.min[i].max(ga.min[i]);
        hi[i] = pred.max[i].min(ga.max[i]);
        if hi[i] <= lo[i] {
            return 0.0;
        }
    }
    let k = SAMPLES_PER_AXIS;
    let step = [(hi.x - lo.x) / k as f64, (hi.y - lo.y) / k as f64, (hi.z - lo.z) / k as f64];
    let mut inside = 0u64;
    let mut cell = 0u64;
    for iz in 0..k {
        for iy in 0..k {
            for ix in 0..k {
                cell += 1;
                let t = cell as f64;
                let p = Point3::new(
                    lo.x + (ix as f64 + (t * JITTER_ALPHA[0]).fract()) * step[0],
                    lo.y + (iy as f64 + (t * JITTER_ALPHA[1]).fract()) * step[1],
                    lo.z + (iz as f64 + (t * JITTER_ALPHA[2]).fract()) * step[2],
                );
                if pred.contains(&p) && gt.contains(&p) {
                    inside += 1;
                }
            }
        }
    }
    let region = step[0] * step[1] * step[2] * (k * k * k) as f64;
    let va = pred.volume();
    let vb = gt.volume();
    let inter = (inside as f64 / (k * k * k) as f64 * region).min(va.min(vb));
    let union = va + vb - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Recall at each IoU threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallTable {
    pub thresholds: Vec<f64>,
    pub recall: Vec<f64>,
    /// Set when there were no events to evaluate; recalls are reported as 0.
    pub empty: bool,
}

/// Fraction of IoUs reaching each threshold. Failed localizations must be
/// passed in as IoU 0 so they count against recall.
pub fn recall_table(ious: &[f64], thresholds: &[f64]) -> RecallTable {
    let empty = ious.is_empty();
    let recall = thresholds
        .iter()
        .map(|t| {
            if empty {
                0.0
            } else {
                ious.iter().filter(|iou| **iou >= *t).count() as f64 / ious.len() as f64
            }
        })
        .collect();
    RecallTable { thresholds: thresholds.to_vec(), recall, empty }
}

/// Histogram of IoUs over [0, 1] with the given bin width; the top bin is
/// closed so 1.0 is counted.
pub fn iou_histogram(ious: &[f64], bin_width: f64) -> Vec<usize> {
    let nbins = (1.0 / bin_width).round().max(1.0) as usize;
    let mut bins = vec![0usize; nbins];
    for &iou in ious {
        let b = ((iou / bin_width).floor() as usize).min(nbins - 1);
        bins[b] += 1;
    }
    bins
}
