//! Deterministic source-waveform synthesis.

use super::WaveformKind;
use crate::dsp::bandpass::{bandpass, BandpassSpec};
use crate::error::Result;
use crate::sim::SourceSpec;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// One broadband click: a unit impulse at the onset followed by an
/// exponentially decaying noise tail. The leading delta keeps the spectrum
/// flat (a bare exponential would be low-pass and useless for beamforming)
/// and pins the waveform peak to the onset sample.
fn add_click(out: &mut [f32], at: usize, decay_s: f64, fs: f64, rng: &mut ChaCha8Rng) {
    if at >= out.len() {
        return;
    }
    out[at] += 1.0;
    let rho = (-1.0 / (decay_s * fs)).exp();
    let span = ((9.2 * decay_s * fs).ceil() as usize).min(out.len() - at - 1);
    let mut env = rho;
    for n in 1..=span {
        let g: f64 = rng.sample(StandardNormal);
        out[at + n] += (0.35 * g.clamp(-2.0, 2.0) * env) as f32;
        env *= rho;
    }
}

/// Synthesize `duration_s` of the waveform at unit amplitude.
///
/// Impulse trains click at 0, period, 2*period, ...; band noise is white
/// Gaussian band-passed to the requested range; tones start at phase 0.
pub fn synth_waveform(
    kind: &WaveformKind,
    duration_s: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<Vec<f32>> {
    kind.validate(sample_rate)?;
    let fs = sample_rate as f64;
    let n = (duration_s * fs).round() as usize;
    let mut out = vec![0.0f32; n];
    match *kind {
        WaveformKind::ImpulseTrain { period_s, decay_s } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut k = 0usize;
            loop {
                let t = k as f64 * period_s;
                if t >= duration_s {
                    break;
                }
                add_click(&mut out, (t * fs).round() as usize, decay_s, fs, &mut rng);
                k += 1;
            }
        }
        WaveformKind::BandNoise { lo_hz, hi_hz } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let white: Vec<f32> = (0..n)
                .map(|_| {
                    let g: f64 = rng.sample(StandardNormal);
                    g as f32
                })
                .collect();
            out = bandpass(&white, &BandpassSpec::new(lo_hz, hi_hz), fs)?;
        }
        WaveformKind::Tone { freq_hz } => {
            for (i, v) in out.iter_mut().enumerate() {
                *v = (2.0 * PI * freq_hz * i as f64 / fs).sin() as f32;
            }
        }
    }
    Ok(out)
}

/// Render a source's emitted signal over the clip: explicit onsets place
/// clicks exactly there; otherwise the free-running waveform is gated by the
/// active intervals (none = always on). Scaled by the source amplitude.
pub fn render_source_signal(
    spec: &SourceSpec,
    duration_s: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<Vec<f32>> {
    let fs = sample_rate as f64;
    let n = (duration_s * fs).round() as usize;
    let mut sig = match (&spec.waveform, spec.onsets.is_empty()) {
        (&WaveformKind::ImpulseTrain { decay_s, .. }, false) => {
            let mut out = vec![0.0f32; n];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for &t in &spec.onsets {
                add_click(&mut out, (t * fs).round() as usize, decay_s, fs, &mut rng);
            }
            out
        }
        _ => {
            let mut out = synth_waveform(&spec.waveform, duration_s, sample_rate, seed)?;
            if !spec.active_intervals.is_empty() {
                let mut keep = vec![false; n];
                for &(a, b) in &spec.active_intervals {
                    let lo = (a * fs).round() as usize;
                    let hi = ((b * fs).round() as usize).min(n);
                    keep[lo..hi].iter_mut().for_each(|k| *k = true);
                }
                for (v, k) in out.iter_mut().zip(&keep) {
                    if !k {
                        *v = 0.0;
                    }
                }
            }
            out
        }
    };
    for v in &mut sig {
        *v *= spec.amplitude as f32;
    }
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};

    fn power_spectrum(x: &[f32]) -> Vec<f64> {
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(x.len());
        let mut buf: Vec<Complex<f64>> =
            x.iter().map(|&v| Complex::new(v as f64, 0.0)).collect();
        fft.process(&mut buf);
        buf[..x.len() / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
    }

    #[test]
    fn tone_peaks_at_its_frequency_bin() {
        let x = synth_waveform(&WaveformKind::Tone { freq_hz: 1000.0 }, 1.0, 16_000, 0).unwrap();
        let p = power_spectrum(&x);
        let argmax = p.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        // 1 s at 16 kHz: bin k sits at k Hz.
        assert_eq!(argmax, 1000);
    }

    #[test]
    fn impulse_train_click_count() {
        let kind = WaveformKind::ImpulseTrain { period_s: 0.5, decay_s: 0.001 };
        let x = synth_waveform(&kind, 2.0, 16_000, 7).unwrap();
        // Clicks are unit deltas over a tail bounded by 0.7; count samples
        // at the full click amplitude.
        let clicks = x.iter().filter(|&&v| v >= 0.95).count();
        assert_eq!(clicks, 4);
        assert!(x[0] >= 0.95 && x[8000] >= 0.95);
    }

    #[test]
    fn band_noise_concentrates_energy_in_band() {
        let kind = WaveformKind::BandNoise { lo_hz: 1000.0, hi_hz: 5000.0 };
        let x = synth_waveform(&kind, 1.0, 192_000, 3).unwrap();
        let p = power_spectrum(&x);
        let hz_per_bin = 192_000.0 / x.len() as f64;
        let total: f64 = p.iter().sum();
        let fraction_within = |lo: f64, hi: f64| {
            p.iter()
                .enumerate()
                .filter(|(b, _)| {
                    let f = *b as f64 * hz_per_bin;
                    (lo..=hi).contains(&f)
                })
                .map(|(_, &e)| e)
                .sum::<f64>()
                / total
        };
        // The Butterworth transition bands hold a few percent; the deep
        // stopband an octave out must hold essentially nothing.
        let strict = fraction_within(1000.0, 5000.0);
        assert!(strict > 0.90, "strict in-band fraction {strict}");
        let guarded = fraction_within(500.0, 10_000.0);
        assert!(guarded > 0.99, "guarded in-band fraction {guarded}");
    }

    #[test]
    fn synthesis_is_deterministic_in_seed() {
        let kind = WaveformKind::BandNoise { lo_hz: 500.0, hi_hz: 3000.0 };
        let a = synth_waveform(&kind, 0.5, 16_000, 42).unwrap();
        let b = synth_waveform(&kind, 0.5, 16_000, 42).unwrap();
        let c = synth_waveform(&kind, 0.5, 16_000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn click_spectrum_is_broadband() {
        // The leading delta must keep energy up to high frequencies: the top
        // octave should hold a non-trivial share of the total.
        let kind = WaveformKind::ImpulseTrain { period_s: 1.0, decay_s: 0.001 };
        let x = synth_waveform(&kind, 1.0, 192_000, 1).unwrap();
        let p = power_spectrum(&x);
        let total: f64 = p.iter().sum();
        let top_octave: f64 = p[p.len() / 2..].iter().sum();
        assert!(top_octave / total > 0.2, "top-octave fraction {}", top_octave / total);
    }

    #[test]
    fn onset_driven_rendering_places_clicks_at_onsets() {
        let spec = SourceSpec {
            position: nalgebra::Point3::origin(),
            waveform: WaveformKind::ImpulseTrain { period_s: 9.0, decay_s: 0.001 },
            onsets: vec![0.25, 0.75],
            amplitude: 2.0,
            active_intervals: vec![],
            orientation: nalgebra::Rotation3::identity(),
        };
        let x = render_source_signal(&spec, 1.0, 16_000, 5).unwrap();
        assert!(x[4000] >= 1.9 && x[12_000] >= 1.9);
        assert!(x[..3900].iter().all(|&v| v.abs() < 1.9));
    }

    #[test]
    fn gating_zeroes_outside_active_intervals() {
        let spec = SourceSpec {
            position: nalgebra::Point3::origin(),
            waveform: WaveformKind::Tone { freq_hz: 440.0 },
            onsets: vec![],
            amplitude: 1.0,
            active_intervals: vec![(0.25, 0.5)],
            orientation: nalgebra::Rotation3::identity(),
        };
        let x = render_source_signal(&spec, 1.0, 16_000, 0).unwrap();
        assert!(x[..4000].iter().all(|&v| v == 0.0));
        assert!(x[8000..].iter().all(|&v| v == 0.0));
        assert!(x[4000..8000].iter().any(|&v| v.abs() > 0.5));
    }
}
