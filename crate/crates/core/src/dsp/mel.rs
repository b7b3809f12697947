//! Log-mel spectrograms over a sliding window, HTK mel convention.

use super::window::hann_periodic;
use crate::error::{Error, Result};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

/// Floor applied to mel energies before the natural log.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramConfig {
    pub sample_rate: u32,
    pub window_len_s: f64,
    pub hop_len_s: f64,
    pub n_fft: usize,
    pub n_mels: usize,
    pub mel_fmin: f64,
    pub mel_fmax: f64,
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        SpectrogramConfig {
            sample_rate: 16_000,
            window_len_s: 0.150,
            hop_len_s: 0.020,
            n_fft: 4096,
            n_mels: 128,
            mel_fmin: 0.0,
            mel_fmax: 8000.0,
        }
    }
}

impl SpectrogramConfig {
    pub fn window_samples(&self) -> usize {
        (self.window_len_s * self.sample_rate as f64).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.hop_len_s * self.sample_rate as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let win = self.window_samples();
        let hop = self.hop_samples();
        if win == 0 || hop == 0 || hop > win {
            return Err(Error::config(format!(
                "window {win} / hop {hop} samples out of range"
            )));
        }
        if self.n_fft < win {
            return Err(Error::config(format!(
                "n_fft {} smaller than window {win}",
                self.n_fft
            )));
        }
        if self.n_mels == 0 {
            return Err(Error::config("n_mels must be at least 1"));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(0.0..nyquist + 1e-9).contains(&self.mel_fmin) || self.mel_fmax <= self.mel_fmin {
            return Err(Error::config("mel band out of range"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    /// Row-major frames x n_mels log energies.
    pub data: Vec<f64>,
    pub n_mels: usize,
    pub hop_len_s: f64,
    pub origin_time_s: f64,
}

impl MelSpectrogram {
    pub fn n_frames(&self) -> usize {
        self.data.len().checked_div(self.n_mels).unwrap_or(0)
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_mels..(k + 1) * self.n_mels]
    }

    /// Start time of frame k in seconds.
    pub fn frame_time(&self, k: usize) -> f64 {
        self.origin_time_s + k as f64 * self.hop_len_s
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filter over FFT power bins: first bin index plus weights.
struct MelFilter {
    start: usize,
    weights: Vec<f64>,
}

/// Unit-peak triangular filters with edges equally spaced on the mel scale.
fn mel_filterbank(cfg: &SpectrogramConfig) -> Vec<MelFilter> {
    let n_bins = cfg.n_fft / 2 + 1;
    let mel_lo = hz_to_mel(cfg.mel_fmin);
    let mel_hi = hz_to_mel(cfg.mel_fmax);
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let bin_hz = cfg.sample_rate as f64 / cfg.n_fft as f64;
    (0..cfg.n_mels)
        .map(|m| {
            let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let start = ((lo / bin_hz).ceil() as usize).min(n_bins);
            let stop = ((hi / bin_hz).floor() as usize + 1).min(n_bins);
            let weights = (start..stop)
                .map(|b| {
                    let f = b as f64 * bin_hz;
                    let w = if f <= center {
                        (f - lo) / (center - lo)
                    } else {
                        (hi - f) / (hi - center)
                    };
                    w.max(0.0)
                })
                .collect();
            MelFilter { start, weights }
        })
        .collect()
}

/// Center frequencies (Hz) of the filterbank for a given config.
pub fn mel_centers(cfg: &SpectrogramConfig) -> Vec<f64> {
    let mel_lo = hz_to_mel(cfg.mel_fmin);
    let mel_hi = hz_to_mel(cfg.mel_fmax);
    (1..=cfg.n_mels)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect()
}

/// Sliding-window log-mel spectrogram.
///
/// Frame k covers samples `[k*hop, k*hop + window)`; the frame count is
/// `floor((len - window)/hop) + 1`. Each frame is Hann-windowed, zero-padded
/// to `n_fft`, and reduced to `n_mels` log energies with floor [`LOG_FLOOR`].
pub fn log_mel(signal: &[f32], cfg: &SpectrogramConfig) -> Result<MelSpectrogram> {
    cfg.validate()?;
    let win = cfg.window_samples();
    let hop = cfg.hop_samples();
    if signal.len() < win {
        return Err(Error::shape(format!(
            "signal of {} samples shorter than one {win}-sample window",
            signal.len()
        )));
    }
    let n_frames = (signal.len() - win) / hop + 1;
    let hann = hann_periodic(win);
    let filters = mel_filterbank(cfg);
    let n_bins = cfg.n_fft / 2 + 1;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(cfg.n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.n_fft];
    let mut power = vec![0.0f64; n_bins];
    let mut data = Vec::with_capacity(n_frames * cfg.n_mels);

    for k in 0..n_frames {
        let seg = &signal[k * hop..k * hop + win];
        for i in 0..win {
            buf[i] = Complex::new(seg[i] as f64 * hann[i], 0.0);
        }
        for v in buf[win..].iter_mut() {
            *v = Complex::new(0.0, 0.0);
        }
        fft.process(&mut buf);
        for (b, p) in power.iter_mut().enumerate() {
            *p = buf[b].norm_sqr();
        }
        for f in &filters {
            let mut e = 0.0;
            for (j, &w) in f.weights.iter().enumerate() {
                e += w * power[f.start + j];
            }
            data.push(e.max(LOG_FLOOR).ln());
        }
    }

    Ok(MelSpectrogram {
        data,
        n_mels: cfg.n_mels,
        hop_len_s: hop as f64 / cfg.sample_rate as f64,
        origin_time_s: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(freq: f64, dur: f64, fs: u32) -> Vec<f32> {
        (0..(dur * fs as f64) as usize)
            .map(|n| (0.1 * (2.0 * PI * freq * n as f64 / fs as f64).sin()) as f32)
            .collect()
    }

    #[test]
    fn twenty_seconds_gives_993_frames() {
        let cfg = SpectrogramConfig::default();
        let x = vec![0.0f32; 320_000];
        let m = log_mel(&x, &cfg).unwrap();
        assert_eq!(m.n_frames(), 993);
        assert_eq!(m.frame(0).len(), 128);
    }

    #[test]
    fn silence_hits_the_log_floor() {
        let cfg = SpectrogramConfig::default();
        let x = vec![0.0f32; 4800];
        let m = log_mel(&x, &cfg).unwrap();
        let expect = LOG_FLOOR.ln();
        assert!(m.data.iter().all(|&v| (v - expect).abs() < 1e-12));
    }

    #[test]
    fn tone_peaks_at_nearest_mel_center() {
        let cfg = SpectrogramConfig::default();
        let x = tone(1000.0, 1.0, 16_000);
        let m = log_mel(&x, &cfg).unwrap();
        let frame = m.frame(m.n_frames() / 2);
        let argmax = frame
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let centers = mel_centers(&cfg);
        let nearest = centers
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - 1000.0).abs().partial_cmp(&(b.1 - 1000.0).abs()).unwrap()
            })
            .unwrap()
            .0;
        assert!(
            (argmax as i64 - nearest as i64).abs() <= 1,
            "argmax {argmax} vs nearest center {nearest}"
        );
    }

    #[test]
    fn gain_equivariance_adds_two_log_a() {
        let cfg = SpectrogramConfig::default();
        let x = tone(1000.0, 0.5, 16_000);
        let a = 4.0f32; // power of two: scaling is exact in f32
        let scaled: Vec<f32> = x.iter().map(|&v| v * a).collect();
        let m1 = log_mel(&x, &cfg).unwrap();
        let m2 = log_mel(&scaled, &cfg).unwrap();
        let shift = 2.0 * (a as f64).ln();
        for (u, v) in m1.data.iter().zip(&m2.data) {
            // Only bins clearly above the floor obey the pure-gain relation.
            if *u > LOG_FLOOR.ln() + 5.0 && *v > LOG_FLOOR.ln() + 5.0 {
                assert!((v - u - shift).abs() < 1e-6, "u={u} v={v}");
            }
        }
    }

    #[test]
    fn filterbank_covers_band_with_positive_column_sums() {
        let cfg = SpectrogramConfig::default();
        let filters = mel_filterbank(&cfg);
        let n_bins = cfg.n_fft / 2 + 1;
        let mut colsum = vec![0.0f64; n_bins];
        for f in &filters {
            for (j, &w) in f.weights.iter().enumerate() {
                colsum[f.start + j] += w;
            }
        }
        let bin_hz = cfg.sample_rate as f64 / cfg.n_fft as f64;
        let lo = mel_centers(&cfg)[0];
        for (b, &s) in colsum.iter().enumerate() {
            let f = b as f64 * bin_hz;
            if f > lo && f < cfg.mel_fmax - bin_hz {
                assert!(s > 0.0, "column sum zero at {f} Hz");
            }
        }
    }

    #[test]
    fn too_short_input_is_an_error() {
        let cfg = SpectrogramConfig::default();
        assert!(log_mel(&vec![0.0f32; 100], &cfg).is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        // 1024-point FFT is smaller than the 2400-sample window.
        let cfg = SpectrogramConfig { n_fft: 1024, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SpectrogramConfig { hop_len_s: 0.5, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
