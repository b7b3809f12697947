//! Scene configuration files: the JSON schema that drives the simulator.
//!
//! A scene file describes one base scene plus a clip plan. Each clip is a
//! deterministic realization of the base scene: source positions and event
//! times receive a jitter drawn from a stream keyed on (dataset seed, clip
//! index), so regenerating a dataset reproduces it exactly.

use super::atomic_write;
use super::calib::{pose_from_rows, pose_to_rows, CameraFile};
use crate::error::{Error, Result};
use crate::sim::{
    derive_seed, make_ring_array, MicArray, PrimitiveShape, ScenePrimitive, SourceSpec,
    SyntheticScene, WaveformKind,
};
use nalgebra::{Point3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArraySpec {
    /// Evenly spaced ring in the array plane, first mic on +x.
    Ring { n: usize, radius_m: f64 },
    Explicit { positions: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveformFile {
    ImpulseTrain { period_s: f64, decay_s: f64 },
    BandNoise { lo_hz: f64, hi_hz: f64 },
    Tone { freq_hz: f64 },
}

impl WaveformFile {
    fn to_kind(&self) -> WaveformKind {
        match *self {
            WaveformFile::ImpulseTrain { period_s, decay_s } => {
                WaveformKind::ImpulseTrain { period_s, decay_s }
            }
            WaveformFile::BandNoise { lo_hz, hi_hz } => WaveformKind::BandNoise { lo_hz, hi_hz },
            WaveformFile::Tone { freq_hz } => WaveformKind::Tone { freq_hz },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFile {
    pub position: [f64; 3],
    pub waveform: WaveformFile,
    #[serde(default)]
    pub onsets: Vec<f64>,
    pub amplitude: f64,
    #[serde(default)]
    pub active_intervals: Vec<(f64, f64)>,
    /// Roll, pitch, yaw in radians; orients extent-rule ground-truth boxes.
    #[serde(default)]
    pub orientation_rpy: [f64; 3],
    /// Optional solid attached to the source. Its center (and box rpy) are
    /// relative to the source, so it follows the source's per-clip pose.
    #[serde(default)]
    pub surface: Option<PrimitiveFile>,
}

impl SourceFile {
    /// The realized source this entry describes (surface not included; see
    /// [`SceneFile::base_scene`]).
    pub fn to_spec(&self) -> SourceSpec {
        SourceSpec {
            position: Point3::from(self.position),
            waveform: self.waveform.to_kind(),
            onsets: self.onsets.clone(),
            amplitude: self.amplitude,
            active_intervals: self.active_intervals.clone(),
            orientation: Rotation3::from_euler_angles(
                self.orientation_rpy[0],
                self.orientation_rpy[1],
                self.orientation_rpy[2],
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimitiveFile {
    Sphere { center: [f64; 3], radius: f64, density: f64 },
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
        #[serde(default)]
        rpy: [f64; 3],
        density: f64,
    },
}

impl PrimitiveFile {
    fn to_primitive(&self) -> ScenePrimitive {
        match *self {
            PrimitiveFile::Sphere { center, radius, density } => ScenePrimitive {
                shape: PrimitiveShape::Sphere { center: Point3::from(center), radius },
                density,
            },
            PrimitiveFile::Box { center, half_extents, rpy, density } => ScenePrimitive {
                shape: PrimitiveShape::Box {
                    center: Point3::from(center),
                    half_extents: Vector3::from(half_extents),
                    rotation: Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]),
                },
                density,
            },
        }
    }

    /// Interpret the primitive relative to a source: centers translate with
    /// the source and rotate with its orientation, box rotations compose.
    fn attached_to(&self, source: &SourceSpec) -> ScenePrimitive {
        let rot = source.orientation;
        match *self {
            PrimitiveFile::Sphere { center, radius, density } => ScenePrimitive {
                shape: PrimitiveShape::Sphere {
                    center: source.position + rot * Vector3::from(center),
                    radius,
                },
                density,
            },
            PrimitiveFile::Box { center, half_extents, rpy, density } => ScenePrimitive {
                shape: PrimitiveShape::Box {
                    center: source.position + rot * Vector3::from(center),
                    half_extents: Vector3::from(half_extents),
                    rotation: rot * Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]),
                },
                density,
            },
        }
    }
}

/// How many clips a dataset run realizes from one scene, and how much each
/// realization perturbs the base scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipsSpec {
    pub count: usize,
    /// Per-axis uniform source translation, +/- this many meters.
    #[serde(default)]
    pub translation_jitter_m: f64,
    /// Uniform shift of each source's event schedule, +/- this many seconds.
    #[serde(default)]
    pub time_jitter_s: f64,
}

impl Default for ClipsSpec {
    fn default() -> Self {
        ClipsSpec { count: 1, translation_jitter_m: 0.0, time_jitter_s: 0.0 }
    }
}

fn identity_pose() -> [f64; 16] {
    pose_to_rows(&nalgebra::Isometry3::identity())
}

fn default_speed_of_sound() -> f64 {
    343.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub sample_rate: u32,
    pub array: ArraySpec,
    /// Row-major 4x4 homogeneous array-to-world transform.
    #[serde(default = "identity_pose")]
    pub array_pose: [f64; 16],
    pub camera: CameraFile,
    pub sources: Vec<SourceFile>,
    #[serde(default)]
    pub primitives: Vec<PrimitiveFile>,
    /// Sensor SNR in dB; omit to disable sensor noise.
    #[serde(default)]
    pub snr_db: Option<f64>,
    pub duration_s: f64,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
    #[serde(default)]
    pub clips: ClipsSpec,
}

impl SceneFile {
    pub fn validate(&self) -> Result<()> {
        if self.clips.count == 0 {
            return Err(Error::config("clip count must be at least 1"));
        }
        if !(self.clips.translation_jitter_m >= 0.0 && self.clips.translation_jitter_m.is_finite())
        {
            return Err(Error::config("translation jitter must be finite and non-negative"));
        }
        if !(self.clips.time_jitter_s >= 0.0 && self.clips.time_jitter_s.is_finite()) {
            return Err(Error::config("time jitter must be finite and non-negative"));
        }
        self.base_scene().map(drop)
    }

    /// The unjittered scene described by the file.
    pub fn base_scene(&self) -> Result<SyntheticScene> {
        let mut scene = self.bare_scene()?;
        self.attach_surfaces(&mut scene);
        scene.validate()?;
        Ok(scene)
    }

    /// Scene without source surfaces, which attach only after sources reach
    /// their per-clip pose.
    fn bare_scene(&self) -> Result<SyntheticScene> {
        let array = match &self.array {
            ArraySpec::Ring { n, radius_m } => make_ring_array(*n, *radius_m, self.sample_rate)?,
            ArraySpec::Explicit { positions } => {
                let array = MicArray {
                    positions: positions.iter().map(|&p| Point3::from(p)).collect(),
                    sample_rate: self.sample_rate,
                };
                array.validate()?;
                array
            }
        };
        Ok(SyntheticScene {
            array,
            array_pose: pose_from_rows(&self.array_pose)?,
            sources: self.sources.iter().map(SourceFile::to_spec).collect(),
            primitives: self.primitives.iter().map(PrimitiveFile::to_primitive).collect(),
            camera: self.camera.to_model()?,
            snr_db: self.snr_db,
            duration_s: self.duration_s,
            speed_of_sound: self.speed_of_sound,
        })
    }

    /// Append each source's surface at the source's realized pose. Surfaces
    /// always follow the standalone primitives, keeping primitive order (and
    /// with it point sampling) stable.
    fn attach_surfaces(&self, scene: &mut SyntheticScene) {
        for (file, spec) in self.sources.iter().zip(&scene.sources) {
            if let Some(surface) = &file.surface {
                scene.primitives.push(surface.attached_to(spec));
            }
        }
    }

    /// Realize clip `clip` of the dataset seeded by `seed`.
    ///
    /// Every source draws three translation offsets and one schedule shift
    /// from a stream keyed on (seed, clip), whether or not the jitter
    /// amplitudes are zero, so widening a jitter never reorders the other
    /// draws. Schedule shifts are clamped so all event times stay in the
    /// clip.
    pub fn clip_scene(&self, clip: usize, seed: u64) -> Result<SyntheticScene> {
        if clip >= self.clips.count {
            return Err(Error::config(format!(
                "clip {clip} out of range, scene plans {} clips",
                self.clips.count
            )));
        }
        let mut scene = self.bare_scene()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "clip", clip as u64));

        let tj = self.clips.translation_jitter_m;
        let dj = self.clips.time_jitter_s;
        for source in &mut scene.sources {
            let offset = Vector3::new(
                (2.0 * rng.gen::<f64>() - 1.0) * tj,
                (2.0 * rng.gen::<f64>() - 1.0) * tj,
                (2.0 * rng.gen::<f64>() - 1.0) * tj,
            );
            source.position += offset;
            let dt = (2.0 * rng.gen::<f64>() - 1.0) * dj;
            let times: Vec<f64> = source
                .onsets
                .iter()
                .copied()
                .chain(source.active_intervals.iter().flat_map(|&(a, b)| [a, b]))
                .collect();
            if times.is_empty() {
                continue;
            }
            let first = times.iter().copied().fold(f64::INFINITY, f64::min);
            let last = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let dt = dt.clamp(-first, (self.duration_s - last).max(0.0));
            for t in &mut source.onsets {
                *t += dt;
            }
            for (a, b) in &mut source.active_intervals {
                *a += dt;
                *b += dt;
            }
        }
        self.attach_surfaces(&mut scene);
        scene.validate()?;
        Ok(scene)
    }
}

pub fn write_scene(path: &Path, scene: &SceneFile) -> Result<()> {
    scene.validate()?;
    atomic_write(path, serde_json::to_string_pretty(scene)?.as_bytes())
}

pub fn read_scene(path: &Path) -> Result<SceneFile> {
    let scene: SceneFile =
        serde_json::from_str(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?;
    scene.validate()?;
    Ok(scene)
}
