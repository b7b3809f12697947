//! Built-in scenes used when no scene file is given: a 48-microphone ring at
//! 192 kHz watching a workbench 2 m away, one action source per profile, and
//! two pieces of lateral furniture so a wrong heatmap has somewhere dense to
//! land.

use nalgebra::Isometry3;
use sonoscene_core::io::calib::{pose_to_rows, CameraFile};
use sonoscene_core::io::scene::{
    ArraySpec, ClipsSpec, PrimitiveFile, SceneFile, SourceFile, WaveformFile,
};

fn camera() -> CameraFile {
    CameraFile {
        fx: 800.0,
        fy: 800.0,
        cx: 400.0,
        cy: 400.0,
        resolution: (800, 800),
        pose: pose_to_rows(&Isometry3::identity()),
    }
}

/// Furniture away from the source ray: a cabinet face and a round lamp. Dense
/// enough that a misplaced heatmap selects them instead of the instrument.
fn furniture() -> Vec<PrimitiveFile> {
    vec![
        PrimitiveFile::Box {
            center: [-0.55, 0.25, 2.05],
            half_extents: [0.25, 0.25, 0.05],
            rpy: [0.0, 0.0, 0.0],
            density: 100_000.0,
        },
        PrimitiveFile::Sphere { center: [0.45, -0.35, 2.3], radius: 0.2, density: 60_000.0 },
    ]
}

fn base(duration_s: f64, sources: Vec<SourceFile>, clips: ClipsSpec) -> SceneFile {
    SceneFile {
        sample_rate: 192_000,
        array: ArraySpec::Ring { n: 48, radius_m: 0.35 },
        array_pose: pose_to_rows(&Isometry3::identity()),
        camera: camera(),
        sources,
        primitives: furniture(),
        snr_db: Some(20.0),
        duration_s,
        speed_of_sound: 343.0,
        clips,
    }
}

/// Impulsive strikes on a small contact patch. The worked surface is a thin
/// plate whose front face holds the contact point: a deeper block would show
/// the camera its side faces too and drag the fused centroid off the cube.
fn chiseling() -> SceneFile {
    base(
        1.2,
        vec![SourceFile {
            position: [0.10, -0.06, 2.0],
            waveform: WaveformFile::ImpulseTrain { period_s: 0.35, decay_s: 0.004 },
            onsets: vec![0.25, 0.60, 0.95],
            amplitude: 1.0,
            active_intervals: vec![],
            orientation_rpy: [0.0, 0.0, 0.0],
            surface: Some(PrimitiveFile::Box {
                center: [0.0, 0.0, 0.005],
                half_extents: [0.06, 0.06, 0.005],
                rpy: [0.0, 0.0, 0.0],
                density: 120_000.0,
            }),
        }],
        ClipsSpec { count: 6, translation_jitter_m: 0.02, time_jitter_s: 0.05 },
    )
}

/// Sustained band noise from a saw blade; activity runs to the clip end so
/// the continuous trigger grid never outlives the action.
fn sawing() -> SceneFile {
    base(
        2.0,
        vec![SourceFile {
            position: [0.10, -0.06, 2.0],
            waveform: WaveformFile::BandNoise { lo_hz: 1_000.0, hi_hz: 5_000.0 },
            onsets: vec![],
            amplitude: 1.0,
            active_intervals: vec![(0.35, 2.0)],
            orientation_rpy: [0.0, 0.3, 0.5],
            surface: Some(PrimitiveFile::Box {
                center: [0.0, 0.0, 0.0],
                half_extents: [0.15, 0.04, 0.075],
                rpy: [0.0, 0.0, 0.0],
                density: 120_000.0,
            }),
        }],
        ClipsSpec { count: 9, translation_jitter_m: 0.02, time_jitter_s: 0.05 },
    )
}

/// Sustained drilling noise with energy up to 10 kHz.
fn drilling() -> SceneFile {
    base(
        2.0,
        vec![SourceFile {
            position: [0.10, -0.06, 2.0],
            waveform: WaveformFile::BandNoise { lo_hz: 1_000.0, hi_hz: 10_000.0 },
            onsets: vec![],
            amplitude: 1.0,
            active_intervals: vec![(0.4, 2.0)],
            orientation_rpy: [0.2, 0.0, 0.8],
            surface: Some(PrimitiveFile::Box {
                center: [0.0, 0.0, 0.0],
                half_extents: [0.125, 0.04, 0.10],
                rpy: [0.0, 0.0, 0.0],
                density: 120_000.0,
            }),
        }],
        ClipsSpec { count: 6, translation_jitter_m: 0.02, time_jitter_s: 0.05 },
    )
}

/// The built-in scene for a profile name, if the profile is built in.
pub fn default_scene(profile: &str) -> Option<SceneFile> {
    match profile {
        "chiseling" => Some(chiseling()),
        "sawing" => Some(sawing()),
        "drilling" => Some(drilling()),
        _ => None,
    }
}
