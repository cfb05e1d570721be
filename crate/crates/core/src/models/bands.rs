use serde::{Deserialize, Serialize};

/// Octave-spaced center frequencies shared by directivity and reflection
/// models, with clamped piecewise-linear interpolation in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bands {
    centers: Vec<f64>,
}

/// Interpolation stencil: `value = (1 - t) * v[lo] + t * v[lo + 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandInterp {
    pub lo: usize,
    pub t: f64,
}

impl Default for Bands {
    fn default() -> Self {
        Bands::octaves(62.5, 9)
    }
}

impl Bands {
    pub fn octaves(first: f64, count: usize) -> Self {
        assert!(count >= 1 && first > 0.0);
        Bands {
            centers: (0..count).map(|i| first * 2f64.powi(i as i32)).collect(),
        }
    }

    pub fn from_centers(centers: Vec<f64>) -> crate::Result<Self> {
        if centers.is_empty() {
            return Err(crate::error::invalid("no center frequencies"));
        }
        for w in centers.windows(2) {
            if (w[1] - 2.0 * w[0]).abs() > 1e-9 * w[1] {
                return Err(crate::error::invalid(
                    "center frequencies must be octave spaced and increasing",
                ));
            }
        }
        Ok(Bands { centers })
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn stencil(&self, freq: f64) -> BandInterp {
        let c = &self.centers;
        let last = c.len() - 1;
        if last == 0 || freq <= c[0] {
            return BandInterp { lo: 0, t: 0.0 };
        }
        if freq >= c[last] {
            return BandInterp { lo: last, t: 0.0 };
        }
        let lo = c.partition_point(|&x| x <= freq) - 1;
        BandInterp {
            lo,
            t: (freq - c[lo]) / (c[lo + 1] - c[lo]),
        }
    }

    /// Stencils for the bins `k * rate / fft_size`, `k = 0..=fft_size/2`.
    pub fn bin_stencils(&self, fft_size: usize, rate: f64) -> Vec<BandInterp> {
        (0..=fft_size / 2)
            .map(|k| self.stencil(k as f64 * rate / fft_size as f64))
            .collect()
    }
}

impl BandInterp {
    pub fn apply(&self, values: &[f64]) -> f64 {
        if self.t == 0.0 {
            values[self.lo]
        } else {
            (1.0 - self.t) * values[self.lo] + self.t * values[self.lo + 1]
        }
    }

    /// Adjoint of [`BandInterp::apply`]: scatter `g` into `grad`.
    pub fn scatter(&self, g: f64, grad: &mut [f64]) {
        if self.t == 0.0 {
            grad[self.lo] += g;
        } else {
            grad[self.lo] += (1.0 - self.t) * g;
            grad[self.lo + 1] += self.t * g;
        }
    }
}
