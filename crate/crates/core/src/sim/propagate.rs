//! Free-field propagation of source signals to the microphone array.

use super::{source_seed, MultichannelRecording, SyntheticScene};
use crate::dsp::fir::accum_fir;
use crate::dsp::window::frac_delay_kernel;
use crate::error::Result;
use crate::sim::fnv1a;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Interpolation length for propagation fractional delays.
pub const SIM_INTERP_TAPS: usize = 64;

/// Integer/fractional split of a non-negative delay in samples, expressed so
/// the fractional part lies in [0, 1): delay = shift - frac.
fn delay_split(delay: f64) -> (i64, f64) {
    let n0 = delay.floor();
    let f0 = delay - n0;
    if f0 == 0.0 {
        (n0 as i64, 0.0)
    } else {
        (n0 as i64 + 1, 1.0 - f0)
    }
}

/// Add `sig` delayed by `delay` samples and scaled by `gain` into `out`,
/// using a windowed-sinc fractional-delay filter. Out-of-range input reads 0.
fn add_delayed(out: &mut [f32], sig: &[f32], delay: f64, gain: f64, taps: usize) {
    let (shift, frac) = delay_split(delay);
    let kernel = frac_delay_kernel(frac, taps);
    let scaled: Vec<f32> = kernel.iter().map(|&k| (k * gain) as f32).collect();
    let c = shift + taps as i64 / 2 - 1;
    let n = out.len() as i64;
    let len = sig.len() as i64;

    // out[i] += sum_j scaled[j] * sig[i - c + j]
    let lo = c.clamp(0, n);
    let hi = (len + c - taps as i64 + 1).clamp(lo, n);
    for i in 0..lo {
        let mut s = 0.0f32;
        for (j, &k) in scaled.iter().enumerate() {
            let idx = i - c + j as i64;
            if idx >= 0 && idx < len {
                s += k * sig[idx as usize];
            }
        }
        out[i as usize] += s;
    }
    if hi > lo {
        let x0 = (lo - c) as usize;
        let xn = (hi - lo) as usize + taps;
        accum_fir(
            &mut out[lo as usize..hi as usize],
            &sig[x0..x0 + xn],
            &scaled,
        );
    }
    for i in hi.max(0)..n {
        let mut s = 0.0f32;
        for (j, &k) in scaled.iter().enumerate() {
            let idx = i - c + j as i64;
            if idx >= 0 && idx < len {
                s += k * sig[idx as usize];
            }
        }
        out[i as usize] += s;
    }
}

/// Simulate the array recording for a scene.
///
/// Each channel is the sum over sources of the source signal delayed by
/// distance / c and attenuated by 1 / max(distance, 0.1 m), plus white
/// Gaussian noise scaled so the clean mixture's per-channel RMS sits
/// `snr_db` above the noise RMS. Channels are independent and may be
/// computed in parallel; results do not depend on thread count.
pub fn simulate_propagation(scene: &SyntheticScene, seed: u64) -> Result<MultichannelRecording> {
    scene.validate()?;
    let fs = scene.array.sample_rate;
    let n = (scene.duration_s * fs as f64).round() as usize;

    let signals: Vec<Vec<f32>> = scene
        .sources
        .iter()
        .map(|s| super::render_source_signal(s, scene.duration_s, fs, source_seed(seed, s)))
        .collect::<Result<_>>()?;

    let mics_world: Vec<_> = scene
        .array
        .positions
        .iter()
        .map(|p| scene.array_pose * p)
        .collect();

    let channels: Vec<Vec<f32>> = mics_world
        .par_iter()
        .enumerate()
        .map(|(m, mic)| {
            let mut ch = vec![0.0f32; n];
            for (src, sig) in scene.sources.iter().zip(&signals) {
                let dist = (src.position - mic).norm();
                let delay = dist / scene.speed_of_sound * fs as f64;
                let gain = 1.0 / dist.max(0.1);
                add_delayed(&mut ch, sig, delay, gain, SIM_INTERP_TAPS);
            }
            if let Some(snr_db) = scene.snr_db {
                let rms =
                    (ch.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / n as f64).sqrt();
                let sigma = rms / 10f64.powf(snr_db / 20.0);
                if sigma > 0.0 {
                    let mut bytes = seed.to_le_bytes().to_vec();
                    bytes.extend_from_slice(b"sensor-noise");
                    bytes.extend_from_slice(&(m as u64).to_le_bytes());
                    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(&bytes));
                    for v in &mut ch {
                        let g: f64 = rng.sample(StandardNormal);
                        *v += (sigma * g) as f32;
                    }
                }
            }
            ch
        })
        .collect();

    Ok(MultichannelRecording { channels, sample_rate: fs })
}
