//! Time-domain delay-and-sum beamforming over a fixed planar scan grid.
//!
//! A steering table is precomputed once per array/grid pair and reused across
//! frames; each heatmap cell is the RMS of the weighted, delay-aligned channel
//! sum over the analysis window.

use crate::dsp::fir::accum_fir_f64;
use crate::dsp::frac_delay_kernel;
use crate::error::{Error, Result};
use crate::sim::{MicArray, MultichannelRecording};
use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Interpolation taps used by [`compute_steering`].
pub const DEFAULT_INTERP_TAPS: usize = 8;

/// Heatmap analysis windows are one video frame long.
pub const VIDEO_FPS: u32 = 25;

/// Planar scan grid, perpendicular to the array's +z axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    /// Perpendicular distance of the grid plane from the array origin.
    pub distance_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for ScanGrid {
    /// A 1 m x 1 m plane 2 m in front of the array, 100x100 cells.
    fn default() -> Self {
        Self { distance_m: 2.0, width_m: 1.0, height_m: 1.0, nx: 100, ny: 100 }
    }
}

impl ScanGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m > 0.0 && self.distance_m.is_finite()) {
            return Err(Error::config("scan grid distance must be positive"));
        }
        if !(self.width_m > 0.0 && self.height_m > 0.0)
            || !self.width_m.is_finite()
            || !self.height_m.is_finite()
        {
            return Err(Error::config("scan grid extent must be positive"));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::config("scan grid needs at least 2x2 cells"));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Center of cell (ix, iy) in the array frame.
    pub fn cell_center(&self, ix: usize, iy: usize) -> Point3<f64> {
        let cw = self.width_m / self.nx as f64;
        let ch = self.height_m / self.ny as f64;
        Point3::new(
            -self.width_m / 2.0 + (ix as f64 + 0.5) * cw,
            -self.height_m / 2.0 + (iy as f64 + 0.5) * ch,
            self.distance_m,
        )
    }
}

/// Precomputed per-cell, per-mic alignment data.
///
/// `delays` and `weights` are row-major over cells (iy * nx + ix), mic-minor:
/// entry `cell * n_mics + m`. Delays are fractional sample counts with the
/// per-cell minimum removed; weights compensate 1/r spreading and average to
/// 1 within each cell.
#[derive(Debug, Clone)]
pub struct SteeringTable {
    pub delays: Vec<f64>,
    pub weights: Vec<f64>,
    pub grid: ScanGrid,
    pub array: MicArray,
    pub interp_taps: usize,
    /// Integer part of each delay.
    shifts: Vec<u32>,
    /// Weight-folded interpolation taps, `interp_taps` per entry.
    taps: Vec<f64>,
    max_shift: usize,
}

pub fn compute_steering(array: &MicArray, grid: ScanGrid, speed_of_sound: f64) -> Result<SteeringTable> {
    compute_steering_with_taps(array, grid, speed_of_sound, DEFAULT_INTERP_TAPS)
}

/// [`compute_steering`] with an explicit interpolation tap count (even, 2..=64).
pub fn compute_steering_with_taps(
    array: &MicArray,
    grid: ScanGrid,
    speed_of_sound: f64,
    interp_taps: usize,
) -> Result<SteeringTable> {
    array.validate()?;
    grid.validate()?;
    if !(speed_of_sound > 0.0 && speed_of_sound.is_finite()) {
        return Err(Error::config("speed of sound must be positive"));
    }
    if !(2..=64).contains(&interp_taps) || !interp_taps.is_multiple_of(2) {
        return Err(Error::config("interpolation taps must be even and in 2..=64"));
    }

    let nm = array.positions.len();
    let ncells = grid.n_cells();
    let fs = array.sample_rate as f64;
    let mut delays = vec![0.0f64; ncells * nm];
    let mut weights = vec![0.0f64; ncells * nm];
    let mut shifts = vec![0u32; ncells * nm];
    let mut max_shift = 0usize;

    let mut dists = vec![0.0f64; nm];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let cell = iy * grid.nx + ix;
            let center = grid.cell_center(ix, iy);
            for (m, p) in array.positions.iter().enumerate() {
                dists[m] = (center - p).norm();
            }
            let dmin = dists.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = dists.iter().sum::<f64>() / nm as f64;
            for (m, &dist) in dists.iter().enumerate() {
                let e = cell * nm + m;
                let d = (dist - dmin) / speed_of_sound * fs;
                delays[e] = d;
                weights[e] = dist / mean;
                let shift = d as u32;
                shifts[e] = shift;
                max_shift = max_shift.max(shift as usize);
            }
        }
    }

    let mut taps = vec![0.0f64; ncells * nm * interp_taps];
    taps.par_chunks_mut(interp_taps).enumerate().for_each(|(e, chunk)| {
        let frac = delays[e] - shifts[e] as f64;
        let kernel = frac_delay_kernel(frac, interp_taps);
        for (c, k) in chunk.iter_mut().zip(&kernel) {
            *c = k * weights[e];
        }
    });

    Ok(SteeringTable {
        delays,
        weights,
        grid,
        array: array.clone(),
        interp_taps,
        shifts,
        taps,
        max_shift,
    })
}

/// Beamformed acoustic image for one analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticHeatmap {
    /// Row-major ny x nx cell amplitudes.
    pub values: Vec<f32>,
    pub normalized: bool,
    pub grid: ScanGrid,
    pub time_window: (f64, f64),
    pub video_frame: i64,
}

/// Samples per chunk in the per-cell accumulation; sized so the accumulator
/// stays L1-resident while channels stream through.
const CHUNK: usize = 2048;

/// Delay-and-sum one analysis window into an unnormalized heatmap.
///
/// Per cell: every channel is advanced by its fractional delay (windowed-sinc
/// interpolation over the recording, zero outside it), scaled by its weight,
/// summed, and reduced to the RMS over the window. Channel accumulation is
/// sequential per cell, so results are independent of thread count.
pub fn delay_and_sum(
    rec: &MultichannelRecording,
    table: &SteeringTable,
    window: (f64, f64),
) -> Result<AcousticHeatmap> {
    rec.validate()?;
    if rec.sample_rate != table.array.sample_rate {
        return Err(Error::shape(format!(
            "recording rate {} does not match steering table rate {}",
            rec.sample_rate, table.array.sample_rate
        )));
    }
    let nm = table.array.positions.len();
    if rec.channels.len() != nm {
        return Err(Error::shape(format!(
            "recording has {} channels, steering table expects {nm}",
            rec.channels.len()
        )));
    }
    let fs = rec.sample_rate as f64;
    let (start, end) = window;
    if !start.is_finite() || !end.is_finite() || start < 0.0 || end <= start {
        return Err(Error::config("analysis window must be a forward time range"));
    }
    let s0 = (start * fs).round() as usize;
    let s1 = (end * fs).round() as usize;
    if s1 > rec.len() || s0 >= s1 {
        return Err(Error::config("analysis window out of recording range"));
    }
    let win_len = s1 - s0;

    let t = table.interp_taps;
    let margin_lo = t / 2 - 1;
    let row_len = win_len + table.max_shift + t - 1;
    let base = s0 as isize - margin_lo as isize;
    // Widened, zero-padded copies of the window (plus interpolation margins).
    let rows: Vec<Vec<f64>> = rec
        .channels
        .iter()
        .map(|ch| {
            let mut row = vec![0.0f64; row_len];
            for (i, slot) in row.iter_mut().enumerate() {
                let idx = base + i as isize;
                if idx >= 0 && (idx as usize) < ch.len() {
                    *slot = ch[idx as usize] as f64;
                }
            }
            row
        })
        .collect();

    let ncells = table.grid.n_cells();
    let values: Vec<f32> = (0..ncells)
        .into_par_iter()
        .map_init(
            || vec![0.0f64; CHUNK],
            |acc, cell| {
                let mut ssq = 0.0f64;
                let mut off = 0usize;
                while off < win_len {
                    let clen = CHUNK.min(win_len - off);
                    let acc = &mut acc[..clen];
                    acc.fill(0.0);
                    for (m, row) in rows.iter().enumerate() {
                        let e = cell * nm + m;
                        let n0 = table.shifts[e] as usize;
                        let x = &row[off + n0..off + n0 + clen + t - 1];
                        accum_fir_f64(acc, x, &table.taps[e * t..(e + 1) * t]);
                    }
                    for v in acc.iter() {
                        ssq += v * v;
                    }
                    off += clen;
                }
                (ssq / win_len as f64).sqrt() as f32
            },
        )
        .collect();

    Ok(AcousticHeatmap {
        values,
        normalized: false,
        grid: table.grid,
        time_window: (s0 as f64 / fs, s1 as f64 / fs),
        video_frame: s0 as i64 * VIDEO_FPS as i64 / rec.sample_rate as i64,
    })
}

/// Scale values into [0, 1]; all-zero heatmaps stay all-zero. Idempotent.
pub fn normalize_heatmap(mut h: AcousticHeatmap) -> AcousticHeatmap {
    let max = h.values.iter().copied().fold(0.0f32, f32::max);
    if max > 0.0 {
        for v in &mut h.values {
            *v /= max;
        }
    }
    h.normalized = true;
    h
}

/// Cell index and array-frame position of the maximum; ties break to the
/// lowest row-major index.
pub fn heatmap_peak(h: &AcousticHeatmap) -> ((usize, usize), Point3<f64>) {
    let mut best = 0usize;
    for (i, v) in h.values.iter().enumerate() {
        if *v > h.values[best] {
            best = i;
        }
    }
    let (ix, iy) = (best % h.grid.nx, best / h.grid.nx);
    ((ix, iy), h.grid.cell_center(ix, iy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::window::interp_at;
    use crate::fusion::CameraModel;
    use crate::sim::{
        make_ring_array, simulate_propagation, SourceSpec, SyntheticScene, WaveformKind,
    };
    use nalgebra::Isometry3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_grid() -> ScanGrid {
        ScanGrid { distance_m: 1.2, width_m: 0.6, height_m: 0.6, nx: 4, ny: 3 }
    }

    fn noise_recording(nm: usize, len: usize, fs: u32, seed: u64) -> MultichannelRecording {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channels = (0..nm)
            .map(|_| (0..len).map(|_| rng.gen_range(-0.5f32..0.5)).collect())
            .collect();
        MultichannelRecording { channels, sample_rate: fs }
    }

    #[test]
    fn symmetric_mics_get_zero_delay_at_centered_cell() {
        let array = MicArray {
            positions: vec![Point3::new(-0.1, 0.0, 0.0), Point3::new(0.1, 0.0, 0.0)],
            sample_rate: 48000,
        };
        // Odd cell counts put a cell center exactly on the z axis.
        let grid = ScanGrid { distance_m: 1.0, width_m: 0.5, height_m: 0.5, nx: 5, ny: 5 };
        let table = compute_steering(&array, grid, 343.0).unwrap();
        let cell = 2 * 5 + 2;
        assert_eq!(table.delays[cell * 2], 0.0);
        assert_eq!(table.delays[cell * 2 + 1], 0.0);
    }

    #[test]
    fn delays_match_analytic_path_differences() {
        let array = MicArray {
            positions: vec![Point3::origin(), Point3::new(0.2, 0.0, 0.0)],
            sample_rate: 192000,
        };
        let grid = small_grid();
        let table = compute_steering(&array, grid, 343.0).unwrap();
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let cell = iy * grid.nx + ix;
                let c = grid.cell_center(ix, iy);
                let d0 = (c - array.positions[0]).norm();
                let d1 = (c - array.positions[1]).norm();
                let expect = (d0 - d1).abs() / 343.0 * 192000.0;
                let far = table.delays[cell * 2].max(table.delays[cell * 2 + 1]);
                assert!((far - expect).abs() < 1e-9);
                let near = table.delays[cell * 2].min(table.delays[cell * 2 + 1]);
                assert_eq!(near, 0.0, "per-cell min delay must be removed");
            }
        }
    }

    #[test]
    fn weights_average_to_one_per_cell() {
        let array = make_ring_array(6, 0.3, 48000).unwrap();
        let grid = small_grid();
        let table = compute_steering(&array, grid, 343.0).unwrap();
        for cell in 0..grid.n_cells() {
            let w = &table.weights[cell * 6..(cell + 1) * 6];
            let mean = w.iter().sum::<f64>() / 6.0;
            assert!((mean - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn matches_naive_reference_on_small_problem() {
        let array = MicArray {
            positions: vec![
                Point3::new(-0.15, 0.05, 0.0),
                Point3::new(0.1, -0.1, 0.0),
                Point3::new(0.0, 0.17, 0.0),
            ],
            sample_rate: 48000,
        };
        let grid = small_grid();
        let table = compute_steering(&array, grid, 343.0).unwrap();
        let rec = noise_recording(3, 1200, 48000, 7);
        let window = (0.005, 0.020);
        let h = delay_and_sum(&rec, &table, window).unwrap();

        let s0 = 240usize;
        let s1 = 960usize;
        for cell in 0..grid.n_cells() {
            let mut ssq = 0.0f64;
            for n in s0..s1 {
                let mut b = 0.0f64;
                for m in 0..3 {
                    let d = table.delays[cell * 3 + m];
                    let w = table.weights[cell * 3 + m];
                    b += w * interp_at(&rec.channels[m], n as f64 + d, table.interp_taps);
                }
                ssq += b * b;
            }
            let want = (ssq / (s1 - s0) as f64).sqrt();
            let got = h.values[cell] as f64;
            // Internals accumulate in f64 (agreement ~1e-13), but heatmap
            // values are stored as f32, so one output ulp (~6e-8 relative)
            // is the observable agreement floor.
            assert!(
                (got - want).abs() <= 1e-6 * want.max(1e-12),
                "cell {cell}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn zero_recording_gives_zero_heatmap() {
        let array = make_ring_array(4, 0.2, 48000).unwrap();
        let table = compute_steering(&array, small_grid(), 343.0).unwrap();
        let rec = MultichannelRecording { channels: vec![vec![0.0; 2400]; 4], sample_rate: 48000 };
        let h = delay_and_sum(&rec, &table, (0.0, 0.05)).unwrap();
        assert!(h.values.iter().all(|v| *v == 0.0));
        let n = normalize_heatmap(h);
        assert!(n.normalized);
        assert!(n.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dyadic_scaling_is_exact() {
        let array = make_ring_array(4, 0.2, 48000).unwrap();
        let table = compute_steering(&array, small_grid(), 343.0).unwrap();
        let rec = noise_recording(4, 2400, 48000, 3);
        let scaled = MultichannelRecording {
            channels: rec.channels.iter().map(|c| c.iter().map(|v| 4.0 * v).collect()).collect(),
            sample_rate: 48000,
        };
        let h1 = delay_and_sum(&rec, &table, (0.01, 0.04)).unwrap();
        let h4 = delay_and_sum(&scaled, &table, (0.01, 0.04)).unwrap();
        for (a, b) in h1.values.iter().zip(&h4.values) {
            assert_eq!(4.0 * a, *b);
        }
        assert_eq!(normalize_heatmap(h1).values, normalize_heatmap(h4).values);
    }

    #[test]
    fn general_scaling_is_close() {
        let array = make_ring_array(4, 0.2, 48000).unwrap();
        let table = compute_steering(&array, small_grid(), 343.0).unwrap();
        let rec = noise_recording(4, 2400, 48000, 9);
        let a = 2.7f32;
        let scaled = MultichannelRecording {
            channels: rec.channels.iter().map(|c| c.iter().map(|v| a * v).collect()).collect(),
            sample_rate: 48000,
        };
        let h1 = delay_and_sum(&rec, &table, (0.01, 0.04)).unwrap();
        let ha = delay_and_sum(&scaled, &table, (0.01, 0.04)).unwrap();
        for (x, y) in h1.values.iter().zip(&ha.values) {
            let want = a as f64 * *x as f64;
            assert!((*y as f64 - want).abs() <= 1e-6 * want.abs().max(1e-9));
        }
    }

    #[test]
    fn steering_reuse_is_shift_invariant() {
        let array = make_ring_array(3, 0.25, 48000).unwrap();
        let table = compute_steering(&array, small_grid(), 343.0).unwrap();
        // Signal with silent edges so interpolation margins see zeros in both
        // copies of the concatenation.
        let mut rec = noise_recording(3, 2400, 48000, 21);
        for ch in &mut rec.channels {
            for v in ch[..64].iter_mut() {
                *v = 0.0;
            }
            let n = ch.len();
            for v in ch[n - 64..].iter_mut() {
                *v = 0.0;
            }
        }
        let doubled = MultichannelRecording {
            channels: rec
                .channels
                .iter()
                .map(|c| c.iter().chain(c.iter()).copied().collect())
                .collect(),
            sample_rate: 48000,
        };
        let h1 = delay_and_sum(&rec, &table, (0.0, 0.05)).unwrap();
        let h2 = delay_and_sum(&doubled, &table, (0.05, 0.10)).unwrap();
        assert_eq!(h1.values, h2.values);
        assert_eq!(h2.video_frame, 1);
        assert_eq!(h1.video_frame, 0);
    }

    #[test]
    fn normalize_examples_and_idempotence() {
        let grid = small_grid();
        let mut h = AcousticHeatmap {
            values: vec![0.0; grid.n_cells()],
            normalized: false,
            grid,
            time_window: (0.0, 0.04),
            video_frame: 0,
        };
        h.values[0] = 0.0;
        h.values[1] = 2.0;
        h.values[2] = 4.0;
        let n = normalize_heatmap(h);
        assert_eq!(&n.values[..3], &[0.0, 0.5, 1.0]);
        let again = normalize_heatmap(n.clone());
        assert_eq!(n.values, again.values);
    }

    #[test]
    fn peak_breaks_ties_row_major() {
        let grid = small_grid();
        let uniform = AcousticHeatmap {
            values: vec![0.7; grid.n_cells()],
            normalized: false,
            grid,
            time_window: (0.0, 0.04),
            video_frame: 0,
        };
        let ((ix, iy), pos) = heatmap_peak(&uniform);
        assert_eq!((ix, iy), (0, 0));
        assert_eq!(pos, grid.cell_center(0, 0));

        let mut single = uniform.clone();
        single.values = vec![0.0; grid.n_cells()];
        single.values[grid.nx + 2] = 1.0;
        let ((ix, iy), _) = heatmap_peak(&single);
        assert_eq!((ix, iy), (2, 1));
    }

    #[test]
    fn source_on_grid_plane_peaks_at_its_cell() {
        let fs = 48000;
        let grid = ScanGrid { distance_m: 1.2, width_m: 0.4, height_m: 0.4, nx: 11, ny: 11 };
        let array = make_ring_array(8, 0.25, fs).unwrap();
        let (src_ix, src_iy) = (8usize, 3usize);
        let scene = SyntheticScene {
            array: array.clone(),
            array_pose: Isometry3::identity(),
            sources: vec![SourceSpec {
                position: grid.cell_center(src_ix, src_iy),
                waveform: WaveformKind::BandNoise { lo_hz: 1000.0, hi_hz: 8000.0 },
                onsets: vec![],
                amplitude: 1.0,
                active_intervals: vec![],
                orientation: nalgebra::Rotation3::identity(),
            }],
            primitives: vec![],
            camera: CameraModel {
                fx: 600.0,
                fy: 600.0,
                cx: 320.0,
                cy: 240.0,
                resolution: (640, 480),
                pose: Isometry3::identity(),
            },
            snr_db: None,
            duration_s: 0.06,
            speed_of_sound: 343.0,
        };
        let rec = simulate_propagation(&scene, 17).unwrap();
        let table = compute_steering(&array, grid, 343.0).unwrap();
        let h = delay_and_sum(&rec, &table, (0.01, 0.05)).unwrap();
        let ((ix, iy), _) = heatmap_peak(&h);
        assert!(
            ix.abs_diff(src_ix) <= 1 && iy.abs_diff(src_iy) <= 1,
            "peak at ({ix},{iy}), source at ({src_ix},{src_iy})"
        );
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let array = make_ring_array(4, 0.2, 48000).unwrap();
        let grid = small_grid();
        assert!(compute_steering(&array, grid, 0.0).is_err());
        assert!(compute_steering_with_taps(&array, grid, 343.0, 7).is_err());
        assert!(compute_steering_with_taps(&array, grid, 343.0, 0).is_err());
        let bad = ScanGrid { nx: 1, ..grid };
        assert!(compute_steering(&array, bad, 343.0).is_err());

        let table = compute_steering(&array, grid, 343.0).unwrap();
        let rec = noise_recording(4, 2400, 48000, 1);
        assert!(delay_and_sum(&rec, &table, (0.0, 0.2)).is_err(), "window past end");
        assert!(delay_and_sum(&rec, &table, (0.03, 0.01)).is_err(), "reversed window");
        let wrong_rate = MultichannelRecording { sample_rate: 44100, ..rec.clone() };
        assert!(delay_and_sum(&wrong_rate, &table, (0.0, 0.01)).is_err());
        let wrong_ch = MultichannelRecording {
            channels: rec.channels[..3].to_vec(),
            sample_rate: 48000,
        };
        assert!(delay_and_sum(&wrong_ch, &table, (0.0, 0.01)).is_err());
    }
}
