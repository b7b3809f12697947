//! Acoustic event detection: framewise log-mel features, a pluggable binary
//! classifier with a trainable logistic reference model, transition-based
//! event extraction, and fold-aggregated precision/recall/F1 evaluation.

mod classifier;
mod events;
mod features;
mod labels;

pub use classifier::{
    cross_validate, logistic_loss_grad, predict_sequence, train_classifier, AugmentationSpec,
    ClassifierModel, CrossValidation, LabeledClip, ModelKind, TrainConfig,
};
pub use events::{
    aggregate_folds, kfold_split, match_events, transitions_to_events, trigger_schedule, Event,
    EventList, MatchConfig, MatchMode, MatchOutcome,
};
pub use features::extract_features;
pub use labels::label_frames;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-hop-frame binary predictions over one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSequence {
    /// One 0/1 value per hop frame.
    pub labels: Vec<u8>,
    pub hop_len_s: f64,
    pub origin_time_s: f64,
}

impl PredictionSequence {
    pub fn validate(&self) -> Result<()> {
        if self.labels.iter().any(|l| *l > 1) {
            return Err(Error::shape("prediction labels must be 0 or 1"));
        }
        if !(self.hop_len_s > 0.0) {
            return Err(Error::config("hop length must be positive"));
        }
        Ok(())
    }
}

/// Mean and population standard deviation across folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn over(values: &[f64]) -> MeanStd {
        if values.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

/// Detection quality aggregated over cross-validation folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}
