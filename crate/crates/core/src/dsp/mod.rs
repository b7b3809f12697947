//! Signal-processing primitives shared by detection and beamforming:
//! resampling, band-pass filtering, windowing, and log-mel spectrograms.

pub mod bandpass;
pub mod fir;
pub mod mel;
pub mod resample;
pub mod window;

pub use bandpass::{bandpass, bandpass_f64, BandpassSpec};
pub use mel::{log_mel, MelSpectrogram, SpectrogramConfig};
pub use resample::resample;
pub use window::{bessel_i0, frac_delay_kernel, hann_periodic, kaiser_at, sinc};
