//! Hann-windowed magnitude spectrograms and the streaming L1 spectral
//! distance used by the loss, with its gradient.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::Fft;

use super::fft::{plan_forward, plan_inverse};
use crate::error::{invalid, Result};

/// Periodic Hann window.
pub fn hann(w: usize) -> Vec<f64> {
    (0..w)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / w as f64).cos())
        .collect()
}

/// Number of frames for a signal of `len` samples. Signals shorter than
/// the window get a single zero-padded frame.
pub fn frame_count(len: usize, window: usize, hop: usize) -> usize {
    if len < window {
        1
    } else {
        (len - window) / hop + 1
    }
}

/// Magnitude spectrogram, row-major `[frame][bin]` over `window/2 + 1` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<f64>,
}

impl Spectrogram {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }
}

fn check(window: usize, hop: usize) -> Result<()> {
    if !window.is_power_of_two() || window < 2 {
        return Err(invalid(format!("window size {window} must be a power of two >= 2")));
    }
    if hop == 0 {
        return Err(invalid("hop must be at least 1"));
    }
    Ok(())
}

pub fn stft_mag(x: &[f64], window: usize, hop: usize) -> Result<Spectrogram> {
    check(window, hop)?;
    let mut fr = Framer::new(window);
    let frames = frame_count(x.len(), window, hop);
    let bins = window / 2 + 1;
    let mut data = Vec::with_capacity(frames * bins);
    for t in 0..frames {
        fr.load(x, t * hop);
        fr.fwd.process_with_scratch(&mut fr.buf, &mut fr.scratch);
        data.extend(fr.buf[..bins].iter().map(|c| c.norm()));
    }
    Ok(Spectrogram { frames, bins, data })
}

/// Reusable windowed-frame transform state.
struct Framer {
    window: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    back: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Framer {
    fn new(w: usize) -> Self {
        let fwd = plan_forward(w);
        let inv = plan_inverse(w);
        let s = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Framer {
            window: hann(w),
            fwd,
            inv,
            buf: vec![Complex64::new(0.0, 0.0); w],
            back: vec![Complex64::new(0.0, 0.0); w],
            scratch: vec![Complex64::new(0.0, 0.0); s],
        }
    }

    fn load(&mut self, x: &[f64], start: usize) {
        for (n, b) in self.buf.iter_mut().enumerate() {
            let v = x.get(start + n).copied().unwrap_or(0.0);
            *b = Complex64::new(self.window[n] * v, 0.0);
        }
    }

    /// One-sided spectra of the frames of `x` starting at `starts[..count]`.
    fn transform_two(&mut self, x: &[f64], starts: [usize; 2], count: usize, out: &mut [Vec<Complex64>; 2]) {
        let n = self.buf.len();
        for (i, z) in self.buf.iter_mut().enumerate() {
            let w = self.window[i];
            let a = x.get(starts[0] + i).copied().unwrap_or(0.0);
            let b = if count == 2 {
                x.get(starts[1] + i).copied().unwrap_or(0.0)
            } else {
                0.0
            };
            *z = Complex64::new(w * a, w * b);
        }
        self.fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        let bins = out[0].len();
        for k in 0..bins {
            let z = self.buf[k];
            let zc = self.buf[(n - k) % n].conj();
            out[0][k] = (z + zc) * 0.5;
            out[1][k] = (z - zc) * Complex64::new(0.0, -0.5);
        }
    }

    /// Leaves `Re(ifft(b0))` in the real and `Re(ifft(b1))` in the imaginary
    /// part of `self.back`, for one-sided inputs (no `1/n` scaling).
    fn inverse_two(&mut self, b: &[Vec<Complex64>; 2]) {
        let n = self.back.len();
        let bins = b[0].len();
        let i = Complex64::new(0.0, 1.0);
        for z in self.back.iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        for k in 0..bins {
            // Hermitian part of each one-sided spectrum
            let (h0, h1) = if k == 0 || k == n / 2 {
                (Complex64::new(b[0][k].re, 0.0), Complex64::new(b[1][k].re, 0.0))
            } else {
                (b[0][k] * 0.5, b[1][k] * 0.5)
            };
            self.back[k] += h0 + i * h1;
            if k != 0 && k != n / 2 {
                self.back[n - k] += h0.conj() + i * h1.conj();
            }
        }
        self.inv.process_with_scratch(&mut self.back, &mut self.scratch);
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One term of the spectral distance between `pred` and `gt`:
/// `mean|S_gt - S_pred| + mean|ln max(S_gt, floor) - ln max(S_pred, floor)|`
/// over all frames and bins. When `grad` is given, the gradient with respect
/// to `pred` is accumulated into it (scaled by `weight`, as is the value).
pub fn spectral_l1_term(
    pred: &[f64],
    gt: &[f64],
    window: usize,
    hop: usize,
    log_floor: f64,
    weight: f64,
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    check(window, hop)?;
    if pred.len() != gt.len() {
        return Err(crate::Error::LengthMismatch {
            left: pred.len(),
            right: gt.len(),
        });
    }
    if let Some(g) = grad.as_deref() {
        assert_eq!(g.len(), pred.len());
    }
    let frames = frame_count(pred.len(), window, hop);
    let bins = window / 2 + 1;
    let inv_m = weight / (frames * bins) as f64;
    let mut fr = Framer::new(window);
    let zero = Complex64::new(0.0, 0.0);
    let mut xp = [vec![zero; bins], vec![zero; bins]];
    let mut xg = [vec![zero; bins], vec![zero; bins]];
    let mut back = [vec![zero; bins], vec![zero; bins]];
    let mut lin = 0.0;
    let mut log = 0.0;
    // Frames are transformed two at a time as the real and imaginary parts
    // of one complex FFT; pred and gt go through identical arithmetic.
    for t in (0..frames).step_by(2) {
        let count = if t + 1 < frames { 2 } else { 1 };
        let starts = [t * hop, (t + 1) * hop];
        fr.transform_two(pred, starts, count, &mut xp);
        fr.transform_two(gt, starts, count, &mut xg);
        let mut any = false;
        for j in 0..count {
            for k in 0..bins {
                let sp = xp[j][k].norm();
                let sg = xg[j][k].norm();
                let lp = sp.max(log_floor).ln();
                let lg = sg.max(log_floor).ln();
                lin += (sg - sp).abs();
                log += (lg - lp).abs();
                if grad.is_some() {
                    let mut gs = -sign(sg - sp);
                    if sp > log_floor {
                        gs -= sign(lg - lp) / sp;
                    }
                    back[j][k] = if sp > 0.0 && gs != 0.0 {
                        any = true;
                        xp[j][k] * (gs * inv_m / sp)
                    } else {
                        zero
                    };
                }
            }
        }
        if let (Some(g), true) = (grad.as_deref_mut(), any) {
            if count == 1 {
                back[1].iter_mut().for_each(|b| *b = zero);
            }
            fr.inverse_two(&back);
            for (n, b) in fr.back.iter().enumerate() {
                let w = fr.window[n];
                if let Some(slot) = g.get_mut(starts[0] + n) {
                    *slot += w * b.re;
                }
                if count == 2 {
                    if let Some(slot) = g.get_mut(starts[1] + n) {
                        *slot += w * b.im;
                    }
                }
            }
        }
    }
    Ok((lin + log) * inv_m)
}
