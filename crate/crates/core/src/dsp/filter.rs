//! Band-pass filtering with a digital Butterworth design.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{invalid, Result};

/// Second-order section, direct form II transposed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    /// Denominator without the leading 1.
    pub a: [f64; 2],
}

impl Biquad {
    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        let (mut z1, mut z2) = (0.0, 0.0);
        x.iter()
            .map(|v| {
                let y = self.b[0] * v + z1;
                z1 = self.b[1] * v - self.a[0] * y + z2;
                z2 = self.b[2] * v - self.a[1] * y;
                y
            })
            .collect()
    }

    /// Complex response at `omega` radians per sample.
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b[0] + z1 * self.b[1] + z2 * self.b[2]) / (1.0 + z1 * self.a[0] + z2 * self.a[1])
    }
}

/// Sections of a 2nd-order Butterworth band-pass spanning one third of an
/// octave around `center`.
pub fn bandpass_sections(center: f64, rate: f64) -> Result<[Biquad; 2]> {
    if !(center > 0.0 && center < rate / 2.0) {
        return Err(invalid(format!("band centre {center} Hz outside (0, {})", rate / 2.0)));
    }
    let edge = 2f64.powf(1.0 / 6.0);
    let hi_hz = (center * edge).min(0.499 * rate);
    let warp = |f: f64| 2.0 * rate * (PI * f / rate).tan();
    let (lo, hi) = (warp(center / edge), warp(hi_hz));
    let bw = hi - lo;
    let w0sq = lo * hi;
    let proto = Complex64::new(-1.0, 1.0) / 2f64.sqrt();
    let disc = (proto * proto * bw * bw - 4.0 * w0sq).sqrt();
    let fs2 = 2.0 * rate;
    let mut sections = [(proto * bw + disc) / 2.0, (proto * bw - disc) / 2.0].map(|s| {
        let z = (fs2 + s) / (fs2 - s);
        Biquad {
            b: [1.0, 0.0, -1.0],
            a: [-2.0 * z.re, z.norm_sqr()],
        }
    });
    let omega = 2.0 * PI * center / rate;
    let g = sections[0].response(omega).norm() * sections[1].response(omega).norm();
    let k = g.sqrt().recip();
    for s in sections.iter_mut() {
        s.b.iter_mut().for_each(|b| *b *= k);
    }
    Ok(sections)
}

/// Forward-only band-pass of `x` around `center` Hz.
pub fn bandpass(x: &[f64], center: f64, rate: f64) -> Result<Vec<f64>> {
    let [a, b] = bandpass_sections(center, rate)?;
    Ok(b.process(&a.process(x)))
}
