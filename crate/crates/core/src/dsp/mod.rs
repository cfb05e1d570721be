//! Signal-processing kernels shared by the renderer, the loss and the
//! dataset tools.

pub mod audio;
pub mod convolve;
pub mod delay;
pub mod envelope;
pub mod fft;
pub mod filter;
pub mod minphase;
pub mod noise;
pub mod stft;

pub use audio::AudioClip;
pub use convolve::{convolve_many, correlate_valid, fft_convolve, fft_convolve_truncated, Convolver};
pub use delay::{delay_signal, delay_add, delay_gather, Delayed};
pub use envelope::{log_energy_envelope, ENVELOPE_FLOOR};
pub use filter::{bandpass, Biquad};
pub use minphase::{minimum_phase_ir, MagnitudeResponse, MinPhase, MAGNITUDE_FLOOR, PATH_FFT_SIZE};
pub use noise::pink_noise;
pub use stft::{frame_count, hann, spectral_l1_term, stft_mag, Spectrogram};
