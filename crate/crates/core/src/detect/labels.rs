//! Ground-truth frame labeling, aligned with feature extraction.

use crate::dsp::SpectrogramConfig;

/// Label each hop frame 1 when any activity interval overlaps its window.
///
/// Frame k covers samples `[k * hop, k * hop + window)`. Interval `(a, b)`
/// spans samples `[floor(a * fs), max(ceil(b * fs), floor(a * fs) + 1))`, so
/// degenerate instants (a == b) still occupy one sample.
pub fn label_frames(activity: &[(f64, f64)], n_samples: usize, cfg: &SpectrogramConfig) -> Vec<u8> {
    let win = cfg.window_samples();
    let hop = cfg.hop_samples();
    if n_samples < win {
        return Vec::new();
    }
    let n_frames = (n_samples - win) / hop + 1;
    let fs = cfg.sample_rate as f64;
    let spans: Vec<(usize, usize)> = activity
        .iter()
        .map(|&(a, b)| {
            let sa = (a * fs).floor().max(0.0) as usize;
            let sb = ((b * fs).ceil().max(0.0) as usize).max(sa + 1);
            (sa, sb)
        })
        .collect();
    (0..n_frames)
        .map(|k| {
            let lo = k * hop;
            let hi = lo + win;
            spans.iter().any(|&(sa, sb)| sa < hi && sb > lo) as u8
        })
        .collect()
}
