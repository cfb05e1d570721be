//! Sine-sweep measurement helpers.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::dsp::fft::{fft, ifft_unnormalized};
use crate::dsp::AudioClip;
use crate::error::{invalid, Error, Result};

/// Seconds dropped from the end of every deconvolved response.
pub const SWEEP_TAIL_TRIM: f64 = 0.1;
const SPECTRAL_FLOOR: f64 = 1e-10;

/// Exponential sine sweep from `f0` to `f1` Hz over `duration` seconds.
pub fn log_sweep(f0: f64, f1: f64, duration: f64, rate: f64) -> Vec<f64> {
    let n = (duration * rate).round() as usize;
    let k = (f1 / f0).ln();
    (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            (2.0 * PI * f0 * duration / k * ((t * k / duration).exp() - 1.0)).sin()
        })
        .collect()
}

/// Impulse response from a recording and the loopback of the played signal.
pub fn deconvolve_sweep(recording: &AudioClip, loopback: &AudioClip) -> Result<AudioClip> {
    let a = recording.mono_samples()?;
    let l = loopback.mono_samples()?;
    if a.len() != l.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: l.len(),
        });
    }
    recording.require_rate(loopback.sample_rate())?;
    if l.iter().all(|v| *v == 0.0) {
        return Err(invalid("loopback is silent"));
    }
    let n = a.len();
    let to_c = |x: &[f64]| -> Vec<Complex64> { x.iter().map(|v| Complex64::new(*v, 0.0)).collect() };
    let mut num = to_c(a);
    let mut den = to_c(l);
    fft(&mut num);
    fft(&mut den);
    for (p, q) in num.iter_mut().zip(&den) {
        let mag = q.norm();
        let q = if mag < SPECTRAL_FLOOR {
            if mag == 0.0 {
                Complex64::new(SPECTRAL_FLOOR, 0.0)
            } else {
                q * (SPECTRAL_FLOOR / mag)
            }
        } else {
            *q
        };
        *p /= q;
    }
    ifft_unnormalized(&mut num);
    let trim = (SWEEP_TAIL_TRIM * recording.sample_rate() as f64).round() as usize;
    let keep = n.saturating_sub(trim);
    Ok(AudioClip::mono(
        num[..keep].iter().map(|c| c.re / n as f64).collect(),
        recording.sample_rate(),
    ))
}

/// Undo a microphone gain of `gain_db` decibels.
pub fn sensitivity_normalize(clip: &AudioClip, gain_db: f64) -> AudioClip {
    let s = 10f64.powf(-gain_db / 20.0);
    clip.map(|c| c.iter().map(|v| v * s).collect())
}
