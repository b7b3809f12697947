//! Blocked FIR accumulation shared by the propagation and beamforming hot
//! loops: `acc[n] += sum_j taps[j] * x[n + j]`.
//!
//! Requires `x.len() >= acc.len() + taps.len() - 1`. Tap counts are
//! monomorphized so the inner loops unroll; 16 independent lanes per block
//! keep the accumulation order fixed regardless of thread count.

const LANES: usize = 16;

macro_rules! impl_accum {
    ($fixed:ident, $dynamic:ident, $fir:ident, $ty:ty) => {
        fn $fixed<const TAPS: usize>(acc: &mut [$ty], x: &[$ty], taps: &[$ty]) {
            let taps: &[$ty; TAPS] = taps.try_into().expect("tap count mismatch");
            let n = acc.len();
            debug_assert!(x.len() + 1 >= n + TAPS);
            let blocks = n / LANES;
            for b in 0..blocks {
                let base = b * LANES;
                let mut lane = [0.0 as $ty; LANES];
                for j in 0..TAPS {
                    let xs = &x[base + j..base + j + LANES];
                    for l in 0..LANES {
                        lane[l] += taps[j] * xs[l];
                    }
                }
                let out = &mut acc[base..base + LANES];
                for l in 0..LANES {
                    out[l] += lane[l];
                }
            }
            for i in blocks * LANES..n {
                let mut s = 0.0 as $ty;
                for j in 0..TAPS {
                    s += taps[j] * x[i + j];
                }
                acc[i] += s;
            }
        }

        fn $dynamic(acc: &mut [$ty], x: &[$ty], taps: &[$ty]) {
            debug_assert!(x.len() + 1 >= acc.len() + taps.len());
            for (i, a) in acc.iter_mut().enumerate() {
                let mut s = 0.0 as $ty;
                for (j, t) in taps.iter().enumerate() {
                    s += t * x[i + j];
                }
                *a += s;
            }
        }

        pub(crate) fn $fir(acc: &mut [$ty], x: &[$ty], taps: &[$ty]) {
            match taps.len() {
                2 => $fixed::<2>(acc, x, taps),
                4 => $fixed::<4>(acc, x, taps),
                8 => $fixed::<8>(acc, x, taps),
                16 => $fixed::<16>(acc, x, taps),
                32 => $fixed::<32>(acc, x, taps),
                64 => $fixed::<64>(acc, x, taps),
                _ => $dynamic(acc, x, taps),
            }
        }
    };
}

impl_accum!(accum_fixed_f32, accum_dyn_f32, accum_fir, f32);
impl_accum!(accum_fixed_f64, accum_dyn_f64, accum_fir_f64, f64);

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference(acc0: &[f64], x: &[f64], taps: &[f64]) -> Vec<f64> {
        acc0.iter()
            .enumerate()
            .map(|(i, a)| a + taps.iter().enumerate().map(|(j, t)| t * x[i + j]).sum::<f64>())
            .collect()
    }

    #[test]
    fn matches_reference_for_all_tap_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &taps_n in &[2usize, 4, 5, 8, 16, 32, 64] {
            for &n in &[3usize, 16, 37, 64] {
                let x64: Vec<f64> = (0..n + taps_n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let t64: Vec<f64> = (0..taps_n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let a64: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let want = reference(&a64, &x64, &t64);

                let mut acc = a64.clone();
                accum_fir_f64(&mut acc, &x64, &t64);
                for (got, want) in acc.iter().zip(&want) {
                    assert!((got - want).abs() < 1e-12, "f64 taps={taps_n} n={n}");
                }

                let x32: Vec<f32> = x64.iter().map(|v| *v as f32).collect();
                let t32: Vec<f32> = t64.iter().map(|v| *v as f32).collect();
                let mut acc32: Vec<f32> = a64.iter().map(|v| *v as f32).collect();
                accum_fir(&mut acc32, &x32, &t32);
                for (got, want) in acc32.iter().zip(&want) {
                    assert!((*got as f64 - want).abs() < 1e-4, "f32 taps={taps_n} n={n}");
                }
            }
        }
    }
}
