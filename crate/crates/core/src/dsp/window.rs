//! Window functions and the Kaiser-windowed sinc interpolation kernel used
//! for fractional delays in both the simulator and the beamformer.

use std::f64::consts::PI;

/// Zeroth-order modified Bessel function of the first kind, by power series.
pub fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    // Terms are ((x/2)^k / k!)^2; converges fast for the beta values used here.
    loop {
        let f = half / k;
        term *= f * f;
        sum += term;
        if term < sum * 1e-16 {
            return sum;
        }
        k += 1.0;
    }
}

/// Normalized sinc: sin(pi x) / (pi x), with sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Continuous Kaiser window of half-width `half`, evaluated at offset `u`
/// from the center. Zero outside [-half, half].
pub fn kaiser_at(u: f64, half: f64, beta: f64) -> f64 {
    let t = u / half;
    let arg = 1.0 - t * t;
    if arg < 0.0 {
        return 0.0;
    }
    bessel_i0(beta * arg.sqrt()) / bessel_i0(beta)
}

/// Periodic Hann window of the given length.
pub fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Shape parameter for the fractional-delay kernels.
pub const FRAC_DELAY_BETA: f64 = 8.6;

/// Kaiser-windowed sinc kernel evaluating a signal at `floor(t) + frac`.
///
/// For `k = frac_delay_kernel(frac, taps)`, the interpolated value of `x` at
/// time `t` (with `frac = t - floor(t)`) is
/// `sum_j k[j] * x[floor(t) - (taps/2 - 1) + j]`.
/// At `frac = 0` the kernel is an exact unit impulse. `taps` must be even.
pub fn frac_delay_kernel(frac: f64, taps: usize) -> Vec<f64> {
    debug_assert!(taps >= 2 && taps.is_multiple_of(2));
    debug_assert!((0.0..1.0).contains(&frac));
    let half = taps as f64 / 2.0;
    let anchor = half - 1.0;
    (0..taps)
        .map(|j| {
            let u = anchor + frac - j as f64;
            sinc(u) * kaiser_at(u, half, FRAC_DELAY_BETA)
        })
        .collect()
}

/// Interpolate `x` at arbitrary time `t` (samples); out-of-range taps read 0.
pub fn interp_at(x: &[f32], t: f64, taps: usize) -> f64 {
    let floor = t.floor();
    let kernel = frac_delay_kernel(t - floor, taps);
    let base = floor as i64 - (taps as i64 / 2 - 1);
    let mut acc = 0.0;
    for (j, k) in kernel.iter().enumerate() {
        let idx = base + j as i64;
        if idx >= 0 && (idx as usize) < x.len() {
            acc += k * x[idx as usize] as f64;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i0_matches_series_values() {
        // Reference values from the defining series evaluated independently.
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.2660658777520084).abs() < 1e-12);
        assert!((bessel_i0(8.6) - 750.4611595631663).abs() < 1e-6);
    }

    #[test]
    fn kernel_is_identity_at_integer_delay() {
        for taps in [4usize, 8, 64] {
            let k = frac_delay_kernel(0.0, taps);
            for (j, v) in k.iter().enumerate() {
                let expect = if j == taps / 2 - 1 { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12, "taps={taps} j={j} v={v}");
            }
        }
    }

    #[test]
    fn kernel_interpolates_bandlimited_signal() {
        // A slow sine is far inside the kernel passband. The 64-tap kernel's
        // passband deviation bounds the error at a few 1e-6.
        let n = 512;
        let f = 0.01; // cycles per sample
        let x: Vec<f32> = (0..n)
            .map(|i| (2.0 * PI * f * i as f64).sin() as f32)
            .collect();
        for frac in [0.1, 0.25, 0.5, 0.9] {
            let t = 256.0 + frac;
            let got = interp_at(&x, t, 64);
            let expect = (2.0 * PI * f * t).sin();
            assert!((got - expect).abs() < 1e-5, "frac={frac} err={}", got - expect);
        }
    }

    #[test]
    fn kernel_dc_gain_near_unity() {
        for frac in [0.0, 0.3, 0.7] {
            let s: f64 = frac_delay_kernel(frac, 64).iter().sum();
            assert!((s - 1.0).abs() < 1e-3, "frac={frac} sum={s}");
        }
    }

    #[test]
    fn hann_endpoints_and_symmetry() {
        let w = hann_periodic(8);
        assert!(w[0].abs() < 1e-15);
        assert!((w[4] - 1.0).abs() < 1e-12);
        assert!((w[1] - w[7]).abs() < 1e-12);
    }
}
