//! Minimum-phase filter synthesis from a magnitude response via the real
//! cepstrum, with its reverse-mode adjoint.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::Fft;

use super::fft::{plan_forward, plan_inverse};
use crate::error::{invalid, Result};

/// FFT size used for per-path filters at 48 kHz.
pub const PATH_FFT_SIZE: usize = 8192;
/// Magnitudes are clamped to this before taking logs.
pub const MAGNITUDE_FLOOR: f64 = 1e-8;

/// Non-negative magnitudes on the `fft_size/2 + 1` bins from DC to Nyquist.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeResponse {
    bins: Vec<f64>,
    fft_size: usize,
}

impl MagnitudeResponse {
    pub fn new(bins: Vec<f64>) -> Result<Self> {
        if bins.len() < 2 {
            return Err(invalid("magnitude response needs at least 2 bins"));
        }
        if let Some(b) = bins.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(invalid(format!("magnitude bin {b} is not a finite non-negative value")));
        }
        let fft_size = 2 * (bins.len() - 1);
        Ok(MagnitudeResponse { bins, fft_size })
    }

    pub fn flat(fft_size: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; fft_size / 2 + 1])
    }

    /// Sample `f(hz)` on the bin frequencies of an `fft_size` transform.
    pub fn from_fn(fft_size: usize, rate: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            (0..=fft_size / 2)
                .map(|k| f(k as f64 * rate / fft_size as f64))
                .collect(),
        )
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    /// Natural log of the clamped magnitudes.
    pub fn log_bins(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.max(MAGNITUDE_FLOOR).ln()).collect()
    }
}

/// Real filter of length `fft_size` with the given magnitude and minimum phase.
pub fn minimum_phase_ir(resp: &MagnitudeResponse) -> Vec<f64> {
    let mp = MinPhase::new(resp.fft_size());
    mp.synthesize(&mp.cepstrum(&resp.log_bins())).0
}

/// Cepstral minimum-phase engine for one transform size.
///
/// The forward map is split in two linear-then-nonlinear stages so callers
/// can build cepstra by linear combination and only pay for the nonlinear
/// stage per filter:
/// log-magnitude `m` -> half cepstrum `c` (linear), then
/// `c` -> fold -> FFT -> exp -> IFFT -> real filter `h`.
#[derive(Clone)]
pub struct MinPhase {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MinPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MinPhase").field("n", &self.n).finish()
    }
}

impl MinPhase {
    /// `n` must be even and at least 2.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n.is_multiple_of(2), "minimum-phase size must be even");
        MinPhase {
            n,
            fwd: plan_forward(n),
            inv: plan_inverse(n),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn half(&self) -> usize {
        self.n / 2 + 1
    }

    /// Real cepstrum samples `0..=n/2` of an even log-magnitude given on
    /// bins `0..=n/2`.
    pub fn cepstrum(&self, log_mag: &[f64]) -> Vec<f64> {
        assert_eq!(log_mag.len(), self.half());
        let n = self.n;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new(log_mag[k.min(n - k)], 0.0))
            .collect();
        self.inv.process(&mut buf);
        buf[..self.half()].iter().map(|c| c.re / n as f64).collect()
    }

    /// Adjoint of [`MinPhase::cepstrum`].
    pub fn cepstrum_adjoint(&self, g_c: &[f64]) -> Vec<f64> {
        assert_eq!(g_c.len(), self.half());
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (b, g) in buf.iter_mut().zip(g_c) {
            b.re = *g;
        }
        self.fwd.process(&mut buf);
        (0..self.half())
            .map(|k| {
                let w = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
                w * buf[k].re / n as f64
            })
            .collect()
    }

    /// Filter and its spectrum from a half cepstrum.
    pub fn synthesize(&self, c: &[f64]) -> (Vec<f64>, Vec<Complex64>) {
        assert_eq!(c.len(), self.half());
        let n = self.n;
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        spec[0].re = c[0];
        for k in 1..n / 2 {
            spec[k].re = 2.0 * c[k];
        }
        spec[n / 2].re = c[n / 2];
        self.fwd.process(&mut spec);
        for z in spec.iter_mut() {
            *z = z.exp();
        }
        let mut buf = spec.clone();
        self.inv.process(&mut buf);
        let h = buf.iter().map(|z| z.re / n as f64).collect();
        (h, spec)
    }

    /// Pull a gradient on `h` back to the half cepstrum, given the spectrum
    /// returned by [`MinPhase::synthesize`].
    pub fn synthesize_adjoint(&self, spectrum: &[Complex64], g_h: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(spectrum.len(), n);
        assert_eq!(g_h.len(), n);
        let scale = 1.0 / n as f64;
        let mut buf: Vec<Complex64> = g_h.iter().map(|g| Complex64::new(*g, 0.0)).collect();
        self.fwd.process(&mut buf);
        for (b, h) in buf.iter_mut().zip(spectrum) {
            *b = h.conj() * *b * scale;
        }
        self.inv.process(&mut buf);
        (0..self.half())
            .map(|k| {
                let w = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
                w * buf[k].re
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::fft::rfft;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rms_rel_error(h: &[f64], want: &[f64]) -> f64 {
        let spec = rfft(h, h.len());
        let num: f64 = want
            .iter()
            .zip(&spec)
            .map(|(w, s)| (s.norm() - w).powi(2))
            .sum();
        let den: f64 = want.iter().map(|w| w * w).sum();
        (num / den).sqrt()
    }

    #[test]
    fn flat_is_impulse() {
        for v in [1.0, 2.0] {
            let h = minimum_phase_ir(&MagnitudeResponse::flat(1024, v).unwrap());
            assert!((h[0] - v).abs() < 1e-12);
            assert!(h[1..].iter().map(|x| x * x).sum::<f64>() < 1e-20);
        }
    }

    #[test]
    fn recovers_known_minimum_phase_filter() {
        // 1 + a z^-1 with |a| < 1 has all zeros inside the unit circle.
        let a = 0.6;
        let n = 2048;
        let resp = MagnitudeResponse::from_fn(n, n as f64, |f| {
            let w = 2.0 * std::f64::consts::PI * f / n as f64;
            (1.0 + a * a + 2.0 * a * w.cos()).sqrt()
        })
        .unwrap();
        let h = minimum_phase_ir(&resp);
        assert!((h[0] - 1.0).abs() < 1e-9, "{}", h[0]);
        assert!((h[1] - a).abs() < 1e-9, "{}", h[1]);
        assert!(h[2..].iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn smooth_magnitudes_are_reproduced() {
        let n = 4096;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let resp = MagnitudeResponse::from_fn(n, 48_000.0, |f| {
                let x = (f.max(20.0) / 20.0).log2() / 10.0;
                (a[0] + a[1] * x.sin() * 2.0 + a[2] * (3.0 * x).cos() + a[3] * x * x).exp()
            })
            .unwrap();
            let h = minimum_phase_ir(&resp);
            assert!(rms_rel_error(&h, resp.bins()) < 0.01);
            let total: f64 = h.iter().map(|x| x * x).sum();
            let head: f64 = h[..n / 2].iter().map(|x| x * x).sum();
            assert!(head / total >= 0.99);
        }
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let n = 32;
        let mp = MinPhase::new(n);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m: Vec<f64> = (0..mp.half()).map(|_| rng.random_range(-0.5..0.5)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |m: &[f64]| -> f64 {
            let (h, _) = mp.synthesize(&mp.cepstrum(m));
            h.iter().zip(&w).map(|(a, b)| a * b).sum()
        };
        let (_, spec) = mp.synthesize(&mp.cepstrum(&m));
        let g = mp.cepstrum_adjoint(&mp.synthesize_adjoint(&spec, &w));
        for k in 0..mp.half() {
            let mut p = m.clone();
            let mut q = m.clone();
            p[k] += 1e-6;
            q[k] -= 1e-6;
            let fd = (f(&p) - f(&q)) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-7, "bin {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn rejects_negative_bins() {
        assert!(MagnitudeResponse::new(vec![1.0, -1.0, 1.0]).is_err());
        assert!(MagnitudeResponse::new(vec![1.0]).is_err());
    }
}
