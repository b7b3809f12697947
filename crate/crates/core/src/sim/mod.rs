//! Synthetic scenes: microphone arrays, source waveforms, free-field
//! propagation, and point-cloud rendering with known ground truth.

mod cloud;
mod propagate;
mod waveform;

pub use cloud::synth_point_cloud;
pub use propagate::simulate_propagation;
pub use waveform::{render_source_signal, synth_waveform};

use crate::error::{Error, Result};
use crate::fusion::CameraModel;
use crate::localize::{ActionProfile, BoxRule, OrientedBox3};
use nalgebra::{Isometry3, Point3, Rotation3, Vector3};

/// Phased microphone array; positions are in the array frame (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct MicArray {
    pub positions: Vec<Point3<f64>>,
    pub sample_rate: u32,
}

impl MicArray {
    pub fn validate(&self) -> Result<()> {
        if self.positions.len() < 2 {
            return Err(Error::config("array needs at least 2 microphones"));
        }
        if self.sample_rate == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        if self.positions.iter().any(|p| !p.coords.iter().all(|v| v.is_finite())) {
            return Err(Error::config("microphone positions must be finite"));
        }
        Ok(())
    }
}

/// Evenly spaced ring of `n` microphones in the z=0 plane, centered at the
/// array-frame origin, first mic on the +x axis.
pub fn make_ring_array(n: usize, radius: f64, sample_rate: u32) -> Result<MicArray> {
    if n < 2 {
        return Err(Error::config(format!("ring needs at least 2 mics, got {n}")));
    }
    if radius <= 0.0 || !radius.is_finite() {
        return Err(Error::config(format!("ring radius {radius} must be positive")));
    }
    let positions = (0..n)
        .map(|i| {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            Point3::new(radius * phi.cos(), radius * phi.sin(), 0.0)
        })
        .collect();
    Ok(MicArray { positions, sample_rate })
}

#[derive(Debug, Clone, PartialEq)]
pub enum WaveformKind {
    /// Exponentially decaying broadband clicks repeating at `period_s`.
    ImpulseTrain { period_s: f64, decay_s: f64 },
    /// White noise band-passed to [lo_hz, hi_hz].
    BandNoise { lo_hz: f64, hi_hz: f64 },
    Tone { freq_hz: f64 },
}

impl WaveformKind {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        match *self {
            WaveformKind::ImpulseTrain { period_s, decay_s } => {
                if period_s <= 0.0 || decay_s <= 0.0 {
                    return Err(Error::config("impulse train period and decay must be positive"));
                }
            }
            WaveformKind::BandNoise { lo_hz, hi_hz } => {
                if !(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < nyquist) {
                    return Err(Error::config(format!(
                        "noise band ({lo_hz}, {hi_hz}) outside (0, {nyquist})"
                    )));
                }
            }
            WaveformKind::Tone { freq_hz } => {
                if !(freq_hz > 0.0 && freq_hz < nyquist) {
                    return Err(Error::config(format!("tone {freq_hz} Hz above Nyquist")));
                }
            }
        }
        Ok(())
    }
}

/// A sound source with ground-truth event timing.
///
/// `onsets` are the ground-truth event instants. For impulse-train sources
/// with explicit onsets the clicks are rendered exactly there; otherwise the
/// waveform free-runs and is gated by `active_intervals` (empty = always on).
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub position: Point3<f64>,
    pub waveform: WaveformKind,
    pub onsets: Vec<f64>,
    pub amplitude: f64,
    pub active_intervals: Vec<(f64, f64)>,
    /// Instrument orientation for extent-rule ground-truth boxes.
    pub orientation: Rotation3<f64>,
}

impl SourceSpec {
    pub fn validate(&self, duration_s: f64, sample_rate: u32) -> Result<()> {
        self.waveform.validate(sample_rate)?;
        if !(self.amplitude > 0.0) {
            return Err(Error::config("source amplitude must be positive"));
        }
        if self.onsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("onsets must be strictly increasing"));
        }
        if self.onsets.iter().any(|&t| t < 0.0 || t > duration_s) {
            return Err(Error::config("onsets must lie within the clip"));
        }
        let mut last_end = f64::NEG_INFINITY;
        for &(a, b) in &self.active_intervals {
            if !(a < b) || a < last_end || b > duration_s + 1e-9 || a < 0.0 {
                return Err(Error::config(
                    "active intervals must be non-overlapping, increasing, within the clip",
                ));
            }
            last_end = b;
        }
        Ok(())
    }

    /// Ground-truth activity intervals in seconds: degenerate instants for
    /// onset-driven sources, the active intervals otherwise.
    pub fn activity(&self) -> Vec<(f64, f64)> {
        if !self.onsets.is_empty() {
            self.onsets.iter().map(|&t| (t, t)).collect()
        } else {
            self.active_intervals.clone()
        }
    }

    /// Ground-truth event instants: onsets, or interval starts for
    /// continuous sources.
    pub fn event_times(&self) -> Vec<f64> {
        if !self.onsets.is_empty() {
            self.onsets.clone()
        } else {
            self.active_intervals.iter().map(|&(a, _)| a).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrimitiveShape {
    Sphere { center: Point3<f64>, radius: f64 },
    Box { center: Point3<f64>, half_extents: Vector3<f64>, rotation: Rotation3<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenePrimitive {
    pub shape: PrimitiveShape,
    /// Surface sampling density, points per square meter.
    pub density: f64,
}

impl ScenePrimitive {
    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0) {
            return Err(Error::config("point density must be positive"));
        }
        match &self.shape {
            PrimitiveShape::Sphere { radius, .. } if *radius > 0.0 => Ok(()),
            PrimitiveShape::Box { half_extents, .. }
                if half_extents.iter().all(|&h| h > 0.0) =>
            {
                Ok(())
            }
            _ => Err(Error::config("primitive extents must be positive")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelRecording {
    pub channels: Vec<Vec<f32>>,
    pub sample_rate: u32,
}

impl MultichannelRecording {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.len();
        if self.channels.iter().any(|c| c.len() != len) {
            return Err(Error::shape("channels have unequal lengths"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub array: MicArray,
    /// Array frame -> world.
    pub array_pose: Isometry3<f64>,
    pub sources: Vec<SourceSpec>,
    pub primitives: Vec<ScenePrimitive>,
    /// The acoustic camera; its frame coincides with the array frame.
    pub camera: CameraModel,
    /// None disables sensor noise.
    pub snr_db: Option<f64>,
    pub duration_s: f64,
    pub speed_of_sound: f64,
}

impl SyntheticScene {
    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if !(self.duration_s > 0.0) {
            return Err(Error::config("duration must be positive"));
        }
        if !(self.speed_of_sound > 0.0) {
            return Err(Error::config("speed of sound must be positive"));
        }
        for s in &self.sources {
            s.validate(self.duration_s, self.array.sample_rate)?;
            for m in &self.array.positions {
                let mic_world = self.array_pose * m;
                if (s.position - mic_world).norm() < 1e-3 {
                    return Err(Error::config(format!(
                        "source at {:?} coincides with a microphone",
                        s.position
                    )));
                }
            }
        }
        for p in &self.primitives {
            p.validate()?;
        }
        self.camera.validate()?;
        Ok(())
    }
}

/// Ground-truth box for a source under an action profile: a fixed cube
/// centered on the source, or the instrument extents in the source's
/// orientation.
pub fn ground_truth_box(source: &SourceSpec, profile: &ActionProfile) -> OrientedBox3 {
    match profile.box_rule {
        BoxRule::FixedCube { edge_m } => OrientedBox3 {
            center: source.position,
            half_extents: Vector3::repeat(edge_m / 2.0),
            rotation: Rotation3::identity(),
        },
        BoxRule::InstrumentExtents { extents } => OrientedBox3 {
            center: source.position,
            half_extents: Vector3::new(extents[0] / 2.0, extents[1] / 2.0, extents[2] / 2.0),
            rotation: source.orientation,
        },
    }
}

/// FNV-1a hash, used to derive stable per-entity RNG seeds.
pub(crate) fn fnv1a(data: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Mix a base seed with a purpose tag and an index into an independent seed,
/// so different pipeline stages never share RNG streams.
pub fn derive_seed(base: u64, tag: &str, index: u64) -> u64 {
    let mut bytes = Vec::with_capacity(tag.len() + 16);
    bytes.extend_from_slice(&base.to_le_bytes());
    bytes.extend_from_slice(tag.as_bytes());
    bytes.extend_from_slice(&index.to_le_bytes());
    fnv1a(&bytes)
}

/// Seed for a source derived from the scene seed and the source's own
/// parameters, so identical specs get identical signals in any scene.
pub(crate) fn source_seed(scene_seed: u64, s: &SourceSpec) -> u64 {
    let mut bytes = Vec::with_capacity(64);
    bytes.extend_from_slice(&scene_seed.to_le_bytes());
    for v in s.position.coords.iter() {
        bytes.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    bytes.extend_from_slice(&s.amplitude.to_bits().to_le_bytes());
    match s.waveform {
        WaveformKind::ImpulseTrain { period_s, decay_s } => {
            bytes.push(1);
            bytes.extend_from_slice(&period_s.to_bits().to_le_bytes());
            bytes.extend_from_slice(&decay_s.to_bits().to_le_bytes());
        }
        WaveformKind::BandNoise { lo_hz, hi_hz } => {
            bytes.push(2);
            bytes.extend_from_slice(&lo_hz.to_bits().to_le_bytes());
            bytes.extend_from_slice(&hi_hz.to_bits().to_le_bytes());
        }
        WaveformKind::Tone { freq_hz } => {
            bytes.push(3);
            bytes.extend_from_slice(&freq_hz.to_bits().to_le_bytes());
        }
    }
    fnv1a(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localize::TriggerMode;

    #[test]
    fn ring_layout_has_exact_radius_and_count() {
        let a = make_ring_array(48, 0.35, 192_000).unwrap();
        assert_eq!(a.positions.len(), 48);
        for p in &a.positions {
            assert!((p.coords.norm() - 0.35).abs() < 1e-12);
            assert_eq!(p.z, 0.0);
        }
    }

    #[test]
    fn four_mic_ring_hits_the_axes() {
        let a = make_ring_array(4, 1.0, 192_000).unwrap();
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (p, (x, y)) in a.positions.iter().zip(expect) {
            assert!((p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12);
        }
    }

    #[test]
    fn two_mic_ring_is_antipodal() {
        let a = make_ring_array(2, 0.5, 16_000).unwrap();
        assert!(((a.positions[0] - a.positions[1]).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_rings_rejected() {
        assert!(make_ring_array(1, 1.0, 192_000).is_err());
        assert!(make_ring_array(4, 0.0, 192_000).is_err());
    }

    #[test]
    fn gt_box_fixed_cube_centers_on_source() {
        let src = SourceSpec {
            position: Point3::new(0.0, 0.0, 2.0),
            waveform: WaveformKind::Tone { freq_hz: 1000.0 },
            onsets: vec![],
            amplitude: 1.0,
            active_intervals: vec![],
            orientation: Rotation3::identity(),
        };
        let profile = ActionProfile {
            name: "chiseling".into(),
            band: None,
            box_rule: BoxRule::FixedCube { edge_m: 0.05 },
            j: 1,
            trigger: TriggerMode::Impulsive,
        };
        let b = ground_truth_box(&src, &profile);
        assert_eq!(b.center, Point3::new(0.0, 0.0, 2.0));
        assert!((b.half_extents - Vector3::repeat(0.025)).norm() < 1e-15);
    }

    #[test]
    fn gt_box_extents_rotate_with_source() {
        let rot = Rotation3::from_euler_angles(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let src = SourceSpec {
            position: Point3::origin(),
            waveform: WaveformKind::Tone { freq_hz: 1000.0 },
            onsets: vec![],
            amplitude: 1.0,
            active_intervals: vec![],
            orientation: rot,
        };
        let profile = ActionProfile {
            name: "sawing".into(),
            band: None,
            box_rule: BoxRule::InstrumentExtents { extents: [0.3, 0.1, 0.1] },
            j: 3,
            trigger: TriggerMode::Continuous { interval_s: 0.04 },
        };
        let b = ground_truth_box(&src, &profile);
        // The box's x axis maps to world y under the 90 degree rotation.
        let world_x = b.rotation * Vector3::x();
        assert!((world_x - Vector3::y()).norm() < 1e-12);
        assert!((b.half_extents.x - 0.15).abs() < 1e-15);
        // Axis-aligned extents of the rotated box swap on x/y.
        let aabb = b.aabb();
        assert!((aabb.max.x - aabb.min.x - 0.1).abs() < 1e-12);
        assert!((aabb.max.y - aabb.min.y - 0.3).abs() < 1e-12);
    }

    #[test]
    fn source_validation_catches_bad_fields() {
        let mut src = SourceSpec {
            position: Point3::origin(),
            waveform: WaveformKind::Tone { freq_hz: 1000.0 },
            onsets: vec![0.5, 0.5],
            amplitude: 1.0,
            active_intervals: vec![],
            orientation: Rotation3::identity(),
        };
        assert!(src.validate(2.0, 16_000).is_err()); // non-increasing onsets
        src.onsets = vec![0.5];
        src.amplitude = 0.0;
        assert!(src.validate(2.0, 16_000).is_err());
        src.amplitude = 1.0;
        src.active_intervals = vec![(0.5, 0.2)];
        assert!(src.validate(2.0, 16_000).is_err());
    }
}
