//! Log energy envelopes via the analytic signal.

use rustfft::num_complex::Complex64;

use super::fft::{fft, ifft_unnormalized, next_pow2};

pub const ENVELOPE_FLOOR: f64 = 1e-12;

/// `log10(max(|analytic(x)|^2, floor))` per sample.
pub fn log_energy_envelope(x: &[f64]) -> Vec<f64> {
    let len = x.len();
    if len == 0 {
        return Vec::new();
    }
    let n = next_pow2(2 * len);
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    fft(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        if k > 0 && k < n / 2 {
            *b *= 2.0;
        } else if k > n / 2 {
            *b = Complex64::new(0.0, 0.0);
        }
    }
    ifft_unnormalized(&mut buf);
    let scale = 1.0 / (n as f64 * n as f64);
    buf[..len]
        .iter()
        .map(|z| (z.norm_sqr() * scale).max(ENVELOPE_FLOOR).log10())
        .collect()
}
