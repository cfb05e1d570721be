//! Seeded pink noise by spectral shaping.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use super::fft::ifft_unnormalized;

/// `duration` seconds of 1/f noise at `rate`, normalized to unit RMS.
/// The same seed always yields the same samples.
pub fn pink_noise(duration: f64, rate: f64, seed: u64) -> Vec<f64> {
    assert!(duration > 0.0, "duration must be positive");
    let n = ((duration * rate).round() as usize).max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..=n / 2 {
        let f = k as f64 * rate / n as f64;
        let s = 1.0 / f.sqrt();
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        spec[k] = if 2 * k == n {
            Complex64::new(re * s, 0.0)
        } else {
            Complex64::new(re * s, im * s)
        };
        if 2 * k != n {
            spec[n - k] = spec[k].conj();
        }
    }
    ifft_unnormalized(&mut spec);
    let x: Vec<f64> = spec.iter().map(|c| c.re).collect();
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    x.into_iter().map(|v| v / rms).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_unit_rms() {
        let a = pink_noise(0.5, 48_000.0, 11);
        let b = pink_noise(0.5, 48_000.0, 11);
        let c = pink_noise(0.5, 48_000.0, 12);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 24_000);
        let rms = (a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64).sqrt();
        assert!((rms - 1.0).abs() < 1e-6);
        assert!(a.iter().sum::<f64>().abs() < 1e-6 * a.len() as f64);
    }
}
