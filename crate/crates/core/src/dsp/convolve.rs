//! FFT-based linear convolution and the correlation used as its adjoint.

use rustfft::num_complex::Complex64;

use super::fft::{ifft_unnormalized, next_pow2, rfft};

/// Full linear convolution, length `x.len() + h.len() - 1`.
pub fn fft_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    fft_convolve_truncated(x, h, x.len() + h.len() - 1)
}

/// First `len` samples of the linear convolution (zero-padded if longer).
pub fn fft_convolve_truncated(x: &[f64], h: &[f64], len: usize) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return vec![0.0; len];
    }
    let full = x.len() + h.len() - 1;
    let used = len.min(full);
    let n = next_pow2(full);
    let mut a = rfft(x, n);
    let b = rfft(h, n);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    ifft_unnormalized(&mut a);
    let scale = 1.0 / n as f64;
    let mut out: Vec<f64> = a[..used].iter().map(|c| c.re * scale).collect();
    out.resize(len, 0.0);
    out
}

/// `r[m] = sum_n g[n + m] * x[n]` for `m` in `0..out_len`.
///
/// If `y = (x * h)[..g.len()]`, this is the gradient on `h` given the
/// gradient `g` on `y` (and symmetrically for `x`).
pub fn correlate_valid(g: &[f64], x: &[f64], out_len: usize) -> Vec<f64> {
    if g.is_empty() || x.is_empty() {
        return vec![0.0; out_len];
    }
    let n = next_pow2(g.len() + x.len());
    let mut a = rfft(g, n);
    let b = rfft(x, n);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q.conj();
    }
    ifft_unnormalized(&mut a);
    let scale = 1.0 / n as f64;
    (0..out_len)
        .map(|m| if m < g.len() { a[m].re * scale } else { 0.0 })
        .collect()
}

/// Precomputed spectrum for repeated convolution against one signal.
#[derive(Debug, Clone)]
pub struct Convolver {
    n: usize,
    kernel_len: usize,
    spectrum: Vec<Complex64>,
}

impl Convolver {
    /// Prepare to convolve signals of up to `max_input` samples with `kernel`.
    pub fn new(kernel: &[f64], max_input: usize) -> Self {
        let n = next_pow2(kernel.len() + max_input);
        Convolver {
            n,
            kernel_len: kernel.len(),
            spectrum: rfft(kernel, n),
        }
    }

    /// First `len` samples of `x * kernel`.
    pub fn apply(&self, x: &[f64], len: usize) -> Vec<f64> {
        assert!(x.len() + self.kernel_len <= self.n, "input longer than planned");
        let mut a = rfft(x, self.n);
        for (p, q) in a.iter_mut().zip(&self.spectrum) {
            *p *= q;
        }
        ifft_unnormalized(&mut a);
        let scale = 1.0 / self.n as f64;
        (0..len)
            .map(|i| if i < self.n { a[i].re * scale } else { 0.0 })
            .collect()
    }
}

/// Convolution of one signal with each of several kernels sharing the input
/// transform. Used when binauralizing a signal through both ears.
pub fn convolve_many(x: &[f64], kernels: &[&[f64]], len: usize) -> Vec<Vec<f64>> {
    let longest = kernels.iter().map(|k| k.len()).max().unwrap_or(0);
    let n = next_pow2(x.len() + longest);
    let xs = rfft(x, n);
    kernels
        .iter()
        .map(|k| {
            let mut a = rfft(k, n);
            for (p, q) in a.iter_mut().zip(&xs) {
                *p *= q;
            }
            ifft_unnormalized(&mut a);
            (0..len)
                .map(|i| if i < n { a[i].re / n as f64 } else { 0.0 })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len() + h.len() - 1];
        for (i, a) in x.iter().enumerate() {
            for (j, b) in h.iter().enumerate() {
                y[i + j] += a * b;
            }
        }
        y
    }

    #[test]
    fn matches_naive_on_random_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = fft_convolve(&x, &h);
            for (a, b) in got.iter().zip(naive(&x, &h)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn delta_and_truncation() {
        let x = [1.0, 2.0, 3.0];
        let y = fft_convolve(&x, &[1.0]);
        assert!(y.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12));
        let t = fft_convolve_truncated(&x, &[0.0, 1.0], 6);
        let want = [0.0, 1.0, 2.0, 3.0, 0.0, 0.0];
        assert!(t.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn convolver_matches_direct() {
        let k = [0.5, -0.25, 0.125];
        let x: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let c = Convolver::new(&k, 20);
        let want = naive(&x, &k);
        let got = c.apply(&x, 25);
        for i in 0..25 {
            let w = want.get(i).copied().unwrap_or(0.0);
            assert!((got[i] - w).abs() < 1e-12);
        }
        let many = convolve_many(&x, &[&k, &[1.0]], 22);
        assert!((many[0][3] - want[3]).abs() < 1e-12);
        assert!((many[1][5] - x[5]).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn commutes(x in proptest::collection::vec(-1.0f64..1.0, 1..40),
                    h in proptest::collection::vec(-1.0f64..1.0, 1..40)) {
            let a = fft_convolve(&x, &h);
            let b = fft_convolve(&h, &x);
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() < 1e-6);
            }
        }

        #[test]
        fn correlation_is_adjoint(x in proptest::collection::vec(-1.0f64..1.0, 1..30),
                                  h in proptest::collection::vec(-1.0f64..1.0, 1..30),
                                  g in proptest::collection::vec(-1.0f64..1.0, 1..50)) {
            let y = fft_convolve_truncated(&x, &h, g.len());
            let lhs: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
            let gh = correlate_valid(&g, &x, h.len());
            let rhs: f64 = gh.iter().zip(&h).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
