//! Framewise detection features.

use crate::dsp::{log_mel, MelSpectrogram, SpectrogramConfig};
use crate::error::Result;

/// One log-mel vector per hop frame; frame k covers samples
/// `[k * hop, k * hop + window)`, so labels built with the same convention
/// line up index-for-index.
pub fn extract_features(audio: &[f32], cfg: &SpectrogramConfig) -> Result<MelSpectrogram> {
    log_mel(audio, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_seconds_gives_993_frames() {
        let cfg = SpectrogramConfig::default();
        let audio = vec![0.0f32; 16000 * 20];
        let feats = extract_features(&audio, &cfg).unwrap();
        assert_eq!(feats.n_frames(), 993);
        assert_eq!(feats.n_mels, 128);
    }

    #[test]
    fn silence_gives_constant_features() {
        let cfg = SpectrogramConfig::default();
        let audio = vec![0.0f32; 16000];
        let feats = extract_features(&audio, &cfg).unwrap();
        let first = feats.frame(0).to_vec();
        for k in 1..feats.n_frames() {
            assert_eq!(feats.frame(k), &first[..]);
        }
    }

    #[test]
    fn impulse_energy_lands_on_covering_frames() {
        let cfg = SpectrogramConfig::default();
        let mut audio = vec![0.0f32; 16000 * 2];
        audio[16000] = 1.0; // t = 1.0 s
        let feats = extract_features(&audio, &cfg).unwrap();
        let energy: Vec<f64> =
            (0..feats.n_frames()).map(|k| feats.frame(k).iter().sum::<f64>()).collect();
        let argmax =
            energy.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap();
        // Frames covering sample 16000: k*320 <= 16000 < k*320 + 2400.
        assert!((43..=50).contains(&argmax), "argmax {argmax}");
        // Frames not covering the impulse stay at the silence floor.
        assert!(energy[40] < energy[46]);
        assert!(energy[53] < energy[46]);
    }

    #[test]
    fn too_short_input_is_rejected() {
        let cfg = SpectrogramConfig::default();
        assert!(extract_features(&vec![0.0f32; 100], &cfg).is_err());
    }
}
