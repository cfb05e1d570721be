//! Thin helpers over a per-thread FFT planner.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// In-place forward transform, no scaling.
pub fn fft(buf: &mut [Complex64]) {
    plan_forward(buf.len()).process(buf);
}

/// In-place inverse transform, no `1/n` scaling.
pub fn ifft_unnormalized(buf: &mut [Complex64]) {
    plan_inverse(buf.len()).process(buf);
}

/// Forward transform of a real signal zero-padded (or truncated) to `n`.
pub fn rfft(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().take(n).map(|v| Complex64::new(*v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    fft(&mut buf);
    buf
}

/// Real part of the normalized inverse transform.
pub fn irfft_real(mut spec: Vec<Complex64>) -> Vec<f64> {
    let n = spec.len() as f64;
    ifft_unnormalized(&mut spec);
    spec.into_iter().map(|c| c.re / n).collect()
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}
