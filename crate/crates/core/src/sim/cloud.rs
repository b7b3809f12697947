//! Point-cloud rendering of scene primitives with front-face visibility.

use super::{PrimitiveShape, SyntheticScene};
use crate::fusion::PointCloud;
use crate::sim::fnv1a;
use nalgebra::{Point3, Unit, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn orthonormal_basis(d: &Unit<Vector3<f64>>) -> (Vector3<f64>, Vector3<f64>) {
    let pick = if d.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = d.cross(&pick).normalize();
    let v = d.cross(&u);
    (u, v)
}

/// Sample the visible surface of every primitive at its point density.
///
/// Visibility is analytic: the camera-facing hemisphere for spheres and
/// front faces for boxes, then a positive-depth check in the camera frame.
/// Deterministic given the seed; points keep primitive order.
pub fn synth_point_cloud(scene: &SyntheticScene, seed: u64) -> PointCloud {
    let cam_pos = scene.camera.pose.inverse() * Point3::origin();
    let mut points = Vec::new();

    for (pi, prim) in scene.primitives.iter().enumerate() {
        let mut bytes = seed.to_le_bytes().to_vec();
        bytes.extend_from_slice(b"cloud");
        bytes.extend_from_slice(&(pi as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(&bytes));

        match &prim.shape {
            PrimitiveShape::Sphere { center, radius } => {
                let d = Unit::new_normalize(cam_pos - center);
                let (u, v) = orthonormal_basis(&d);
                let count =
                    (prim.density * 2.0 * std::f64::consts::PI * radius * radius).round() as usize;
                for _ in 0..count {
                    // Uniform over the camera-facing hemisphere.
                    let z: f64 = rng.gen::<f64>();
                    let phi: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                    let s = (1.0 - z * z).sqrt();
                    let normal = s * (phi.cos() * u + phi.sin() * v) + z * d.into_inner();
                    points.push(center + *radius * normal);
                }
            }
            PrimitiveShape::Box { center, half_extents, rotation } => {
                // axis = face normal direction; (a, b) span the face.
                let face_axes = [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)];
                for (axis, a, b) in face_axes {
                    for sign in [1.0f64, -1.0] {
                        let mut n_local = Vector3::zeros();
                        n_local[axis] = sign;
                        let normal = rotation * n_local;
                        let face_center = center + normal * half_extents[axis];
                        if normal.dot(&(cam_pos - face_center)) <= 0.0 {
                            continue;
                        }
                        let (ha, hb) = (half_extents[a], half_extents[b]);
                        let count = (prim.density * 4.0 * ha * hb).round() as usize;
                        let mut ea = Vector3::zeros();
                        ea[a] = 1.0;
                        let mut eb = Vector3::zeros();
                        eb[b] = 1.0;
                        let (wa, wb) = (rotation * ea, rotation * eb);
                        for _ in 0..count {
                            let ca = (rng.gen::<f64>() * 2.0 - 1.0) * ha;
                            let cb = (rng.gen::<f64>() * 2.0 - 1.0) * hb;
                            points.push(face_center + ca * wa + cb * wb);
                        }
                    }
                }
            }
        }
    }

    points.retain(|p| (scene.camera.pose * p).z > 0.0);
    PointCloud { points, colors: None }
}
