//! Projection of acoustic heatmaps onto 3D point clouds through a
//! calibrated pinhole camera.

use crate::beamform::AcousticHeatmap;
use crate::error::{Error, Result};
use crate::sim::fnv1a;
use nalgebra::{Isometry3, Point3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Pinhole camera with a world-to-camera pose.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub resolution: (u32, u32),
    pub pose: Isometry3<f64>,
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::config("focal lengths must be positive"));
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return Err(Error::config("resolution must be positive"));
        }
        Ok(())
    }

    /// Camera origin in world coordinates.
    pub fn position(&self) -> Point3<f64> {
        self.pose.inverse() * Point3::origin()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    pub colors: Option<Vec<[f32; 3]>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointCloud {
    pub points: Vec<Point3<f64>>,
    /// Per-point acoustic weight in [0, 1].
    pub weights: Vec<f64>,
    pub source_frame: i64,
}

/// Project a world point; `None` when at or behind the camera plane.
pub fn project_point(p: &Point3<f64>, cam: &CameraModel) -> Option<(f64, f64, f64)> {
    let q = cam.pose * p;
    if q.z <= 0.0 {
        return None;
    }
    Some((cam.fx * q.x / q.z + cam.cx, cam.fy * q.y / q.z + cam.cy, q.z))
}

/// Heatmap cell centers projected into a camera's pixel plane.
#[derive(Debug, Clone)]
pub struct CellPixelMap {
    /// Row-major ny x nx pixel coordinates; `None` for cells behind the camera.
    pub pixels: Vec<Option<(f64, f64)>>,
    pub nx: usize,
    pub ny: usize,
}

impl CellPixelMap {
    /// Nearest cell to a pixel coordinate, if any cell projects.
    pub fn nearest_cell(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if let Some((pu, pv)) = self.pixels[iy * self.nx + ix] {
                    let d2 = (pu - u).powi(2) + (pv - v).powi(2);
                    if best.is_none_or(|(_, bd)| d2 < bd) {
                        best = Some(((ix, iy), d2));
                    }
                }
            }
        }
        best.map(|(c, _)| c)
    }
}

/// Project every heatmap cell center through the acoustic camera.
///
/// Cell centers live on the scan plane in the acoustic camera's own frame
/// (the array frame), at depth `grid.distance_m`.
pub fn heatmap_pixel_map(h: &AcousticHeatmap, acoustic_cam: &CameraModel) -> CellPixelMap {
    let g = &h.grid;
    let world_of_cam = acoustic_cam.pose.inverse();
    let mut pixels = Vec::with_capacity(g.nx * g.ny);
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let local = g.cell_center(ix, iy);
            let world = world_of_cam * local;
            pixels.push(project_point(&world, acoustic_cam).map(|(u, v, _)| (u, v)));
        }
    }
    CellPixelMap { pixels, nx: g.nx, ny: g.ny }
}

/// Reprojection-noise model: pixel-domain Gaussian displacement with the
/// given magnitude statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelNoise {
    pub mean_px: f64,
    pub std_px: f64,
}

/// Reprojection statistics of a calibrated acoustic camera rig.
pub const RING_REPROJECTION: PixelNoise = PixelNoise { mean_px: 2.30, std_px: 2.12 };
/// Reprojection statistics of a calibrated depth camera rig.
pub const DEPTH_CAM_REPROJECTION: PixelNoise = PixelNoise { mean_px: 1.52, std_px: 0.84 };

fn bilinear(h: &AcousticHeatmap, u: f64, v: f64) -> f64 {
    let (nx, ny) = (h.grid.nx, h.grid.ny);
    if !(0.0..=(nx - 1) as f64).contains(&u) || !(0.0..=(ny - 1) as f64).contains(&v) {
        return 0.0;
    }
    let ix0 = (u.floor() as usize).min(nx - 1);
    let iy0 = (v.floor() as usize).min(ny - 1);
    let ix1 = (ix0 + 1).min(nx - 1);
    let iy1 = (iy0 + 1).min(ny - 1);
    let fx = u - ix0 as f64;
    let fy = v - iy0 as f64;
    let at = |ix: usize, iy: usize| h.values[iy * nx + ix] as f64;
    (1.0 - fy) * ((1.0 - fx) * at(ix0, iy0) + fx * at(ix1, iy0))
        + fy * ((1.0 - fx) * at(ix0, iy1) + fx * at(ix1, iy1))
}

fn fuse_impl(
    cloud: &PointCloud,
    h: &AcousticHeatmap,
    acoustic_cam: &CameraModel,
    mut perturb: impl FnMut(f64, f64) -> (f64, f64),
) -> Result<WeightedPointCloud> {
    if !h.normalized {
        return Err(Error::config("heatmap must be normalized before fusion"));
    }
    let g = &h.grid;
    let cell_w = g.width_m / g.nx as f64;
    let cell_h = g.height_m / g.ny as f64;
    let weights = cloud
        .points
        .iter()
        .map(|p| {
            let Some((u_px, v_px, _)) = project_point(p, acoustic_cam) else {
                return 0.0;
            };
            let (u_px, v_px) = perturb(u_px, v_px);
            // Back-project the pixel ray onto the scan plane z = distance.
            let gx = (u_px - acoustic_cam.cx) / acoustic_cam.fx * g.distance_m;
            let gy = (v_px - acoustic_cam.cy) / acoustic_cam.fy * g.distance_m;
            let u = (gx + g.width_m / 2.0) / cell_w - 0.5;
            let v = (gy + g.height_m / 2.0) / cell_h - 0.5;
            bilinear(h, u, v)
        })
        .collect();
    Ok(WeightedPointCloud {
        points: cloud.points.clone(),
        weights,
        source_frame: h.video_frame,
    })
}

/// Weight every cloud point by the heatmap value along its viewing ray.
///
/// Points behind the camera or mapping outside the grid get weight 0; inside
/// the grid the weight is the bilinear interpolation between cell centers.
pub fn fuse(
    cloud: &PointCloud,
    h: &AcousticHeatmap,
    acoustic_cam: &CameraModel,
) -> Result<WeightedPointCloud> {
    fuse_impl(cloud, h, acoustic_cam, |u, v| (u, v))
}

/// [`fuse`] with pixel-domain reprojection noise, for robustness studies.
pub fn fuse_with_pixel_noise(
    cloud: &PointCloud,
    h: &AcousticHeatmap,
    acoustic_cam: &CameraModel,
    noise: PixelNoise,
    seed: u64,
) -> Result<WeightedPointCloud> {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(b"pixel-noise");
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(&bytes));
    fuse_impl(cloud, h, acoustic_cam, move |u, v| {
        let g: f64 = rng.sample(StandardNormal);
        let mag = (noise.mean_px + noise.std_px * g).max(0.0);
        let ang: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        (u + mag * ang.cos(), v + mag * ang.sin())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::ScanGrid;

    fn cam(fx: f64, fy: f64, cx: f64, cy: f64) -> CameraModel {
        CameraModel { fx, fy, cx, cy, resolution: (640, 480), pose: Isometry3::identity() }
    }

    fn grid() -> ScanGrid {
        ScanGrid { distance_m: 2.0, width_m: 1.0, height_m: 1.0, nx: 10, ny: 10 }
    }

    fn uniform_heatmap(value: f32) -> AcousticHeatmap {
        AcousticHeatmap {
            values: vec![value; 100],
            normalized: true,
            grid: grid(),
            time_window: (0.0, 0.04),
            video_frame: 0,
        }
    }

    #[test]
    fn on_axis_projection_hits_principal_point() {
        let c = cam(1000.0, 1000.0, 50.0, 50.0);
        let (u, v, z) = project_point(&Point3::new(0.0, 0.0, 1.0), &c).unwrap();
        assert_eq!((u, v, z), (50.0, 50.0, 1.0));
        let (u, _, _) = project_point(&Point3::new(0.05, 0.0, 1.0), &c).unwrap();
        assert_eq!(u, 100.0);
        assert!(project_point(&Point3::new(0.0, 0.0, -1.0), &c).is_none());
    }

    #[test]
    fn center_cell_maps_near_principal_point() {
        let c = cam(800.0, 800.0, 320.0, 240.0);
        let h = uniform_heatmap(1.0);
        let m = heatmap_pixel_map(&h, &c);
        // Even grid: the four central cells straddle the axis by half a cell.
        let (u, v) = m.pixels[5 * 10 + 5].unwrap();
        let half_cell_px = 0.1 / 2.0 * 800.0 / 2.0; // cell/2 * fx / distance
        assert!((u - 320.0).abs() <= half_cell_px + 1e-9);
        assert!((v - 240.0).abs() <= half_cell_px + 1e-9);
    }

    #[test]
    fn doubling_fx_doubles_pixel_offsets() {
        let c1 = cam(800.0, 800.0, 320.0, 240.0);
        let c2 = cam(1600.0, 800.0, 320.0, 240.0);
        let h = uniform_heatmap(1.0);
        let m1 = heatmap_pixel_map(&h, &c1);
        let m2 = heatmap_pixel_map(&h, &c2);
        for (a, b) in m1.pixels.iter().zip(&m2.pixels) {
            let (u1, _) = a.unwrap();
            let (u2, _) = b.unwrap();
            assert!(((u2 - 320.0) - 2.0 * (u1 - 320.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn pixel_map_is_monotone_for_front_facing_grid() {
        let c = cam(800.0, 800.0, 320.0, 240.0);
        let h = uniform_heatmap(1.0);
        let m = heatmap_pixel_map(&h, &c);
        for iy in 0..10 {
            for ix in 1..10 {
                let (u_prev, _) = m.pixels[iy * 10 + ix - 1].unwrap();
                let (u, _) = m.pixels[iy * 10 + ix].unwrap();
                assert!(u > u_prev);
            }
        }
        for ix in 0..10 {
            for iy in 1..10 {
                let (_, v_prev) = m.pixels[(iy - 1) * 10 + ix].unwrap();
                let (_, v) = m.pixels[iy * 10 + ix].unwrap();
                assert!(v > v_prev);
            }
        }
        // All projected pixels distinct.
        let mut seen: Vec<(i64, i64)> = m
            .pixels
            .iter()
            .map(|p| {
                let (u, v) = p.unwrap();
                ((u * 1e6) as i64, (v * 1e6) as i64)
            })
            .collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 100);
    }

    #[test]
    fn fusion_round_trips_cell_values() {
        let c = cam(800.0, 800.0, 320.0, 240.0);
        let mut h = uniform_heatmap(0.0);
        h.values[3 * 10 + 7] = 0.8;
        // Point exactly at cell (7,3)'s center on the scan plane.
        let p = h.grid.cell_center(7, 3);
        let cloud = PointCloud { points: vec![p], colors: None };
        let fused = fuse(&cloud, &h, &c).unwrap();
        assert!((fused.weights[0] - 0.8).abs() < 1e-6);
    }

    #[test]
    fn behind_camera_and_off_grid_points_get_zero() {
        let c = cam(800.0, 800.0, 320.0, 240.0);
        let h = uniform_heatmap(1.0);
        let cloud = PointCloud {
            points: vec![Point3::new(0.0, 0.0, -1.0), Point3::new(5.0, 0.0, 2.0)],
            colors: None,
        };
        let fused = fuse(&cloud, &h, &c).unwrap();
        assert_eq!(fused.weights, vec![0.0, 0.0]);
    }

    #[test]
    fn uniform_heatmap_weights_visible_points_fully() {
        let c = cam(800.0, 800.0, 320.0, 240.0);
        let h = uniform_heatmap(1.0);
        let cloud = PointCloud {
            points: vec![
                Point3::new(0.1, 0.1, 2.0),
                Point3::new(-0.2, 0.05, 2.5),
                Point3::new(0.0, 0.0, 1.0),
            ],
            colors: None,
        };
        let fused = fuse(&cloud, &h, &c).unwrap();
        for w in &fused.weights {
            assert!((w - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unnormalized_heatmap_is_rejected() {
        let c = cam(800.0, 800.0, 320.0, 240.0);
        let mut h = uniform_heatmap(1.0);
        h.normalized = false;
        let cloud = PointCloud::default();
        assert!(fuse(&cloud, &h, &c).is_err());
    }

    #[test]
    fn rigid_transform_of_cloud_and_camera_preserves_weights() {
        use nalgebra::{Translation3, UnitQuaternion, Vector3};
        let c = cam(800.0, 800.0, 320.0, 240.0);
        let mut h = uniform_heatmap(0.0);
        for (i, v) in h.values.iter_mut().enumerate() {
            *v = (i % 13) as f32 / 13.0;
        }
        let points = vec![
            Point3::new(0.12, -0.07, 1.9),
            Point3::new(-0.3, 0.2, 2.2),
            Point3::new(0.02, 0.31, 2.05),
        ];
        let cloud = PointCloud { points: points.clone(), colors: None };
        let base = fuse(&cloud, &h, &c).unwrap();

        let t = Isometry3::from_parts(
            Translation3::new(1.5, -0.7, 0.3),
            UnitQuaternion::from_scaled_axis(Vector3::new(0.3, -0.2, 0.9)),
        );
        let moved = PointCloud { points: points.iter().map(|p| t * p).collect(), colors: None };
        let mut cam2 = c.clone();
        cam2.pose = c.pose * t.inverse();
        let fused2 = fuse(&moved, &h, &cam2).unwrap();
        for (a, b) in base.weights.iter().zip(&fused2.weights) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn pixel_noise_perturbs_but_stays_in_range() {
        let c = cam(800.0, 800.0, 320.0, 240.0);
        let mut h = uniform_heatmap(0.0);
        for (i, v) in h.values.iter_mut().enumerate() {
            *v = (i % 7) as f32 / 7.0;
        }
        let points: Vec<_> =
            (0..50).map(|i| Point3::new(-0.3 + i as f64 * 0.012, 0.05, 2.0)).collect();
        let cloud = PointCloud { points, colors: None };
        let clean = fuse(&cloud, &h, &c).unwrap();
        let noisy = fuse_with_pixel_noise(&cloud, &h, &c, RING_REPROJECTION, 5).unwrap();
        assert_ne!(clean.weights, noisy.weights);
        assert!(noisy.weights.iter().all(|w| (0.0..=1.0).contains(w)));
        let again = fuse_with_pixel_noise(&cloud, &h, &c, RING_REPROJECTION, 5).unwrap();
        assert_eq!(noisy.weights, again.weights);
    }
}
