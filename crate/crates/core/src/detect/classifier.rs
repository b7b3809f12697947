//! Frame-level activity classification: logistic regression on log-mel
//! features, audio-domain augmentation, and k-fold cross validation.

use super::events::{
    aggregate_folds, kfold_split, match_events, transitions_to_events, MatchConfig, MatchOutcome,
};
use super::features::extract_features;
use super::labels::label_frames;
use super::{DetectionMetrics, PredictionSequence};
use crate::dsp::{MelSpectrogram, SpectrogramConfig};
use crate::error::{Error, Result};
use crate::sim::fnv1a;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Audio-domain training augmentation: random gain, additive noise at a
/// random SNR, then peak clipping, applied in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    /// Gain range in dB, applied as a linear factor.
    pub gain_db_range: (f64, f64),
    /// SNR range in dB of the added gaussian noise, relative to the
    /// post-gain signal RMS.
    pub noise_snr_db_range: (f64, f64),
    /// Fraction range of the post-noise peak that gets clipped away:
    /// samples are clamped to +/- (1 - f) * peak.
    pub clip_fraction_range: (f64, f64),
    pub seed: u64,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        AugmentationSpec {
            gain_db_range: (-6.0, 6.0),
            noise_snr_db_range: (10.0, 30.0),
            clip_fraction_range: (0.0, 0.2),
            seed: 0,
        }
    }
}

impl AugmentationSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("gain_db_range", self.gain_db_range),
            ("noise_snr_db_range", self.noise_snr_db_range),
            ("clip_fraction_range", self.clip_fraction_range),
        ] {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::config(format!("{name} must be a finite (lo, hi) range")));
            }
        }
        let (lo, hi) = self.clip_fraction_range;
        if lo < 0.0 || hi >= 1.0 {
            return Err(Error::config("clip_fraction_range must lie within [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// Posterior probability above which a frame is marked active.
    pub decision_threshold: f64,
    /// Augmented copies generated per training clip.
    pub augment_copies: usize,
    pub seed: u64,
    pub spectrogram: SpectrogramConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            learning_rate: 0.5,
            l2: 1e-4,
            decision_threshold: 0.5,
            augment_copies: 2,
            seed: 0,
            spectrogram: SpectrogramConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(self.l2 >= 0.0) {
            return Err(Error::config("learning_rate must be > 0 and l2 >= 0"));
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return Err(Error::config("decision_threshold must lie in (0, 1)"));
        }
        self.spectrogram.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Fallback for single-class training folds: a frame is active when its
    /// mean log-mel value exceeds the threshold.
    EnergyThreshold { threshold: f64 },
    /// Logistic regression over one log-mel frame.
    LinearLogistic { weights: Vec<f64>, bias: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub kind: ModelKind,
    pub decision_threshold: f64,
    pub seed: u64,
    pub epochs: usize,
    /// Fold held out while this model was trained.
    pub fold: usize,
    /// True when the training folds contained a single class and the energy
    /// fallback was used instead of logistic regression.
    pub degenerate_fallback: bool,
}

/// One annotated training clip. Active intervals are (start_s, end_s) pairs;
/// instantaneous events use start == end.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClip {
    pub clip_id: String,
    pub samples: Vec<f32>,
    pub labels: Vec<(f64, f64)>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy with an L2 penalty on the weights (bias
/// unpenalized), and its gradient. `features` is row-major n x d and
/// `labels` holds one 0/1 label per row.
pub fn logistic_loss_grad(
    weights: &[f64],
    bias: f64,
    features: &[f64],
    labels: &[u8],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let d = weights.len();
    let n = labels.len();
    assert!(n > 0 && d > 0, "need at least one row and one feature");
    assert_eq!(features.len(), n * d, "features must be n x d row-major");
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; d];
    let mut grad_b = 0.0;
    for (row, &y) in features.chunks_exact(d).zip(labels) {
        let y = y as f64;
        let z = row.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() + bias;
        // max(z,0) - z*y + ln(1 + exp(-|z|)) is exact and overflow-free.
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        let e = sigmoid(z) - y;
        for (g, x) in grad_w.iter_mut().zip(row) {
            *g += e * x;
        }
        grad_b += e;
    }
    let inv = 1.0 / n as f64;
    loss = loss * inv + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    grad_b *= inv;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g * inv + l2 * w;
    }
    (loss, grad_w, grad_b)
}

pub(crate) struct LogisticFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Loss after each accepted step, starting from the initial point.
    /// Monotone non-increasing by construction. Consumed by tests.
    #[allow(dead_code)]
    pub losses: Vec<f64>,
}

/// Full-batch gradient descent with step halving: a step that would increase
/// the loss is retried at half the rate, so the loss trace never increases.
/// Features are standardized internally; the returned weights apply to raw
/// features.
pub(crate) fn train_logistic(
    features: &[f64],
    labels: &[u8],
    d: usize,
    cfg: &TrainConfig,
) -> LogisticFit {
    let n = labels.len();
    let mut mean = vec![0.0; d];
    for row in features.chunks_exact(d) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; d];
    for row in features.chunks_exact(d) {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / n as f64).sqrt().max(1e-8)).collect();
    let mut x = vec![0.0; features.len()];
    for (out, row) in x.chunks_exact_mut(d).zip(features.chunks_exact(d)) {
        for j in 0..d {
            out[j] = (row[j] - mean[j]) / std[j];
        }
    }

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut lr = cfg.learning_rate;
    let (mut cur, mut gw, mut gb) = logistic_loss_grad(&w, b, &x, labels, cfg.l2);
    let mut losses = vec![cur];
    'epochs: for _ in 0..cfg.epochs {
        loop {
            let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(w, g)| w - lr * g).collect();
            let cand_b = b - lr * gb;
            let (cl, cgw, cgb) = logistic_loss_grad(&cand_w, cand_b, &x, labels, cfg.l2);
            if cl <= cur {
                w = cand_w;
                b = cand_b;
                cur = cl;
                gw = cgw;
                gb = cgb;
                break;
            }
            lr *= 0.5;
            if lr < 1e-12 {
                break 'epochs;
            }
        }
        losses.push(cur);
    }

    // Fold the standardization into the weights so they apply to raw rows:
    // w'((x - mean) / std) + b' == (w'/std) x + (b' - sum w' mean / std).
    let weights: Vec<f64> = w.iter().zip(&std).map(|(w, s)| w / s).collect();
    let shift: f64 = w.iter().zip(&mean).zip(&std).map(|((w, m), s)| w * m / s).sum();
    LogisticFit { weights, bias: b - shift, losses }
}

fn sample_range(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// One augmented variant of a clip's samples. The RNG stream depends only on
/// the augmentation seed, the clip id, and the copy index.
fn augment_clip(clip: &LabeledClip, copy: usize, spec: &AugmentationSpec) -> Vec<f32> {
    let mut bytes = spec.seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(b"augment");
    bytes.extend_from_slice(clip.clip_id.as_bytes());
    bytes.extend_from_slice(&(copy as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(&bytes));

    let gain_db = sample_range(&mut rng, spec.gain_db_range);
    let snr_db = sample_range(&mut rng, spec.noise_snr_db_range);
    let clip_frac = sample_range(&mut rng, spec.clip_fraction_range);

    let gain = 10f64.powf(gain_db / 20.0);
    let mut out: Vec<f32> = clip.samples.iter().map(|&v| (v as f64 * gain) as f32).collect();
    if out.is_empty() {
        return out;
    }
    let rms =
        (out.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / out.len() as f64).sqrt();
    let noise_rms = rms / 10f64.powf(snr_db / 20.0);
    if noise_rms > 0.0 {
        for v in &mut out {
            let g: f64 = rng.sample(StandardNormal);
            *v += (noise_rms * g) as f32;
        }
    }
    let peak = out.iter().fold(0f32, |a, &v| a.max(v.abs()));
    if peak > 0.0 {
        let limit = ((1.0 - clip_frac) * peak as f64) as f32;
        for v in &mut out {
            *v = v.clamp(-limit, limit);
        }
    }
    out
}

struct PreparedClip {
    /// Index of the original clip this instance derives from.
    source: usize,
    feats: MelSpectrogram,
    labels: Vec<u8>,
}

/// Features and frame labels for every original clip followed by every
/// augmented copy. Copies are generated once and shared across folds.
fn prepare_dataset(
    clips: &[LabeledClip],
    aug: &AugmentationSpec,
    cfg: &TrainConfig,
) -> Result<Vec<PreparedClip>> {
    let mut prepared = Vec::with_capacity(clips.len() * (1 + cfg.augment_copies));
    for (i, clip) in clips.iter().enumerate() {
        let feats = extract_features(&clip.samples, &cfg.spectrogram)?;
        let labels = label_frames(&clip.labels, clip.samples.len(), &cfg.spectrogram);
        debug_assert_eq!(labels.len(), feats.n_frames());
        prepared.push(PreparedClip { source: i, feats, labels });
    }
    for (i, clip) in clips.iter().enumerate() {
        for copy in 0..cfg.augment_copies {
            let samples = augment_clip(clip, copy, aug);
            let feats = extract_features(&samples, &cfg.spectrogram)?;
            let labels = label_frames(&clip.labels, samples.len(), &cfg.spectrogram);
            prepared.push(PreparedClip { source: i, feats, labels });
        }
    }
    Ok(prepared)
}

/// Fit one model on every prepared instance whose source clip is not in the
/// held-out fold.
fn fit_fold(
    prepared: &[PreparedClip],
    held_out: &[usize],
    fold: usize,
    cfg: &TrainConfig,
) -> Result<ClassifierModel> {
    let d = cfg.spectrogram.n_mels;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for p in prepared {
        if held_out.contains(&p.source) {
            continue;
        }
        features.extend_from_slice(&p.feats.data);
        labels.extend_from_slice(&p.labels);
    }
    if labels.is_empty() {
        return Err(Error::shape("no training frames left after holding out a fold"));
    }

    let positives = labels.iter().filter(|&&l| l != 0).count();
    let single_class = positives == 0 || positives == labels.len();
    let kind = if single_class {
        // Per-frame mean feature statistics over the training frames; the
        // threshold sits two standard deviations toward the missing class.
        let means: Vec<f64> = features
            .chunks_exact(d)
            .map(|row| row.iter().sum::<f64>() / d as f64)
            .collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / means.len() as f64;
        let threshold = if positives == 0 { m + 2.0 * var.sqrt() } else { m - 2.0 * var.sqrt() };
        ModelKind::EnergyThreshold { threshold }
    } else {
        let fit = train_logistic(&features, &labels, d, cfg);
        ModelKind::LinearLogistic { weights: fit.weights, bias: fit.bias }
    };
    Ok(ClassifierModel {
        kind,
        decision_threshold: cfg.decision_threshold,
        seed: cfg.seed,
        epochs: cfg.epochs,
        fold,
        degenerate_fallback: single_class,
    })
}

/// Train one model per fold, each on the clips (and their augmented copies)
/// outside that fold. Returns the models in fold order.
pub fn train_classifier(
    clips: &[LabeledClip],
    k: usize,
    aug: &AugmentationSpec,
    cfg: &TrainConfig,
) -> Result<Vec<ClassifierModel>> {
    aug.validate()?;
    cfg.validate()?;
    let folds = kfold_split(clips.len(), k, cfg.seed)?;
    let prepared = prepare_dataset(clips, aug, cfg)?;
    folds
        .iter()
        .enumerate()
        .map(|(f, held_out)| fit_fold(&prepared, held_out, f, cfg))
        .collect()
}

/// Per-frame activity decisions for one feature sequence.
pub fn predict_sequence(model: &ClassifierModel, feats: &MelSpectrogram) -> Result<PredictionSequence> {
    let d = feats.n_mels;
    let labels: Vec<u8> = match &model.kind {
        ModelKind::LinearLogistic { weights, bias } => {
            if weights.len() != d {
                return Err(Error::shape(format!(
                    "model expects {} mel bands, features have {d}",
                    weights.len()
                )));
            }
            feats
                .data
                .chunks_exact(d)
                .map(|row| {
                    let z = row.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() + bias;
                    (sigmoid(z) > model.decision_threshold) as u8
                })
                .collect()
        }
        ModelKind::EnergyThreshold { threshold } => {
            if d == 0 {
                return Err(Error::shape("features have no mel bands"));
            }
            feats
                .data
                .chunks_exact(d)
                .map(|row| (row.iter().sum::<f64>() / d as f64 > *threshold) as u8)
                .collect()
        }
    };
    Ok(PredictionSequence {
        labels,
        hop_len_s: feats.hop_len_s,
        origin_time_s: feats.origin_time_s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub metrics: DetectionMetrics,
    /// Micro-averaged counts and metrics per fold, in fold order.
    pub fold_outcomes: Vec<MatchOutcome>,
    pub models: Vec<ClassifierModel>,
    pub folds: Vec<Vec<usize>>,
}

/// K-fold cross validation of event detection: each fold's model predicts the
/// held-out clips, predictions become events at 0-to-1 transitions, and the
/// events are matched against the annotated onsets. Counts are accumulated
/// within a fold; the final metrics average the per-fold scores.
pub fn cross_validate(
    clips: &[LabeledClip],
    k: usize,
    aug: &AugmentationSpec,
    cfg: &TrainConfig,
    match_cfg: &MatchConfig,
) -> Result<CrossValidation> {
    aug.validate()?;
    cfg.validate()?;
    match_cfg.validate()?;
    let folds = kfold_split(clips.len(), k, cfg.seed)?;
    let prepared = prepare_dataset(clips, aug, cfg)?;

    let mut models = Vec::with_capacity(folds.len());
    let mut fold_outcomes = Vec::with_capacity(folds.len());
    for (f, held_out) in folds.iter().enumerate() {
        let model = fit_fold(&prepared, held_out, f, cfg)?;
        let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
        for &ci in held_out {
            let p = &prepared[ci];
            let pred = transitions_to_events(&predict_sequence(&model, &p.feats)?);
            let gt = transitions_to_events(&PredictionSequence {
                labels: p.labels.clone(),
                hop_len_s: p.feats.hop_len_s,
                origin_time_s: p.feats.origin_time_s,
            });
            let m = match_events(&pred, &gt, match_cfg);
            tp += m.true_pos;
            fp += m.false_pos;
            fneg += m.false_neg;
        }
        fold_outcomes.push(MatchOutcome::from_counts(tp, fp, fneg));
        models.push(model);
    }
    let metrics = aggregate_folds(&fold_outcomes);
    Ok(CrossValidation { metrics, fold_outcomes, models, folds })
}
