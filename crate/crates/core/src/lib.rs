//! Core algorithms for localizing acoustic events in dynamic 3D scenes.
//!
//! The pipeline mirrors an acoustic-camera rig on a desk: [`sim`] renders
//! synthetic microphone-array recordings and point clouds with known ground
//! truth, [`dsp`] provides resampling / filtering / log-mel features,
//! [`beamform`] turns multichannel audio into planar acoustic heatmaps,
//! [`fusion`] projects heatmap amplitudes onto point clouds, [`detect`] finds
//! event onsets in continuous audio, and [`localize`] clusters the weighted
//! cloud into 3D bounding boxes with IoU/recall evaluation.

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamform;
pub mod detect;
pub mod dsp;
pub mod error;
pub mod fusion;
pub mod io;
pub mod localize;
pub mod profile;
pub mod sim;

pub use beamform::{AcousticHeatmap, ScanGrid, SteeringTable};
pub use detect::{DetectionMetrics, EventList, MatchConfig, PredictionSequence};
pub use error::{Error, Result};
pub use fusion::{CameraModel, PointCloud, WeightedPointCloud};
pub use localize::{Aabb3, ActionProfile, ClusterParams, LocalizationResult, OrientedBox3};
pub use sim::{MicArray, MultichannelRecording, SourceSpec, SyntheticScene, WaveformKind};
