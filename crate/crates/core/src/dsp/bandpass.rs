//! Zero-phase Butterworth band-pass filtering.
//!
//! The band-pass is realized as a high-pass cascade at the low edge followed
//! by a low-pass cascade at the high edge, each of the requested order, run
//! forward and backward (filtfilt) so event timing is not shifted.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandpassSpec {
    pub lo_hz: f64,
    pub hi_hz: f64,
    /// Butterworth order per band edge; must be even.
    pub order: usize,
}

impl BandpassSpec {
    pub fn new(lo_hz: f64, hi_hz: f64) -> Self {
        BandpassSpec { lo_hz, hi_hz, order: 4 }
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if !(self.lo_hz > 0.0 && self.lo_hz < self.hi_hz && self.hi_hz < sample_rate / 2.0) {
            return Err(Error::config(format!(
                "band ({}, {}) Hz invalid at sample rate {}",
                self.lo_hz, self.hi_hz, sample_rate
            )));
        }
        if self.order == 0 || !self.order.is_multiple_of(2) {
            return Err(Error::config(format!("filter order {} must be even", self.order)));
        }
        Ok(())
    }
}

/// One direct-form-I biquad, coefficients normalized so a0 = 1.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    fn lowpass(freq: f64, q: f64, fs: f64) -> Biquad {
        let w0 = 2.0 * PI * freq / fs;
        let alpha = w0.sin() / (2.0 * q);
        let cosw = w0.cos();
        let a0 = 1.0 + alpha;
        Biquad {
            b0: (1.0 - cosw) / 2.0 / a0,
            b1: (1.0 - cosw) / a0,
            b2: (1.0 - cosw) / 2.0 / a0,
            a1: -2.0 * cosw / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    fn highpass(freq: f64, q: f64, fs: f64) -> Biquad {
        let w0 = 2.0 * PI * freq / fs;
        let alpha = w0.sin() / (2.0 * q);
        let cosw = w0.cos();
        let a0 = 1.0 + alpha;
        Biquad {
            b0: (1.0 + cosw) / 2.0 / a0,
            b1: -(1.0 + cosw) / a0,
            b2: (1.0 + cosw) / 2.0 / a0,
            a1: -2.0 * cosw / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    fn run(&self, x: &mut [f64]) {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for v in x.iter_mut() {
            let x0 = *v;
            let y0 = self.b0 * x0 + self.b1 * x1 + self.b2 * x2 - self.a1 * y1 - self.a2 * y2;
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
            *v = y0;
        }
    }
}

/// Butterworth pole Q factors for an even-order cascade of biquads.
fn butterworth_q(order: usize) -> Vec<f64> {
    (0..order / 2)
        .map(|k| 1.0 / (2.0 * ((2 * k + 1) as f64 * PI / (2.0 * order as f64)).sin()))
        .collect()
}

fn cascade(spec: &BandpassSpec, fs: f64) -> Vec<Biquad> {
    let mut sections = Vec::new();
    for q in butterworth_q(spec.order) {
        sections.push(Biquad::highpass(spec.lo_hz, q, fs));
    }
    for q in butterworth_q(spec.order) {
        sections.push(Biquad::lowpass(spec.hi_hz, q, fs));
    }
    sections
}

/// Zero-phase band-pass on an f64 signal; the core of [`bandpass`].
pub fn bandpass_f64(signal: &[f64], spec: &BandpassSpec, sample_rate: f64) -> Result<Vec<f64>> {
    spec.validate(sample_rate)?;
    if signal.is_empty() {
        return Ok(Vec::new());
    }
    let sections = cascade(spec, sample_rate);
    let pad = (3 * (2 * sections.len() + 1)).min(signal.len() - 1);

    // Odd reflection at both ends suppresses filtfilt start-up transients.
    let n = signal.len();
    let mut buf = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        buf.push(2.0 * signal[0] - signal[i]);
    }
    buf.extend_from_slice(signal);
    for i in 1..=pad {
        buf.push(2.0 * signal[n - 1] - signal[n - 1 - i]);
    }

    for s in &sections {
        s.run(&mut buf);
    }
    buf.reverse();
    for s in &sections {
        s.run(&mut buf);
    }
    buf.reverse();

    buf.truncate(pad + n);
    buf.drain(..pad);
    Ok(buf)
}

/// Apply the band-pass forward and backward (zero phase).
pub fn bandpass(signal: &[f32], spec: &BandpassSpec, sample_rate: f64) -> Result<Vec<f32>> {
    let wide: Vec<f64> = signal.iter().map(|&v| v as f64).collect();
    Ok(bandpass_f64(&wide, spec, sample_rate)?
        .into_iter()
        .map(|v| v as f32)
        .collect())
}
