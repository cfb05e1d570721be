use nalgebra::Matrix3;

use super::Bands;
use crate::error::{invalid, Result};
use crate::geometry::Point;

pub const LATTICE_POINTS: usize = 128;
pub const DEFAULT_SHARPNESS: f64 = 16.0;

/// `n` points spread evenly over the unit sphere.
pub fn fibonacci_lattice(n: usize) -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Point::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Check that `m` is a proper rotation (orthonormal, determinant +1).
pub fn validate_rotation(m: &Matrix3<f64>) -> Result<()> {
    let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
    let det = m.determinant();
    if !(ortho < 1e-9 && (det - 1.0).abs() < 1e-9) {
        return Err(invalid(format!(
            "not a rotation matrix (orthonormality error {ortho:.2e}, determinant {det:.6})"
        )));
    }
    Ok(())
}

/// Frequency-dependent source directivity.
///
/// One log-amplitude heatmap per center frequency, sampled on a Fibonacci
/// lattice and read out with normalized spherical-Gaussian weights
/// `exp(-sharpness * (1 - d·x))`. Gains between center frequencies are
/// linear in log amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectivityMap {
    lattice: Vec<Point>,
    /// Row-major `[lattice point][band]`, natural-log amplitude.
    log_gains: Vec<f64>,
    bands: Bands,
    sharpness: f64,
    orientation: Matrix3<f64>,
}

impl DirectivityMap {
    /// Omnidirectional unit-gain map.
    pub fn new(bands: Bands, sharpness: f64) -> Self {
        let lattice = fibonacci_lattice(LATTICE_POINTS);
        let log_gains = vec![0.0; lattice.len() * bands.len()];
        DirectivityMap {
            lattice,
            log_gains,
            bands,
            sharpness,
            orientation: Matrix3::identity(),
        }
    }

    pub(crate) fn from_parts(
        log_gains: Vec<f64>,
        bands: Bands,
        sharpness: f64,
        orientation: Matrix3<f64>,
    ) -> Result<Self> {
        let lattice = fibonacci_lattice(LATTICE_POINTS);
        if log_gains.len() != lattice.len() * bands.len() {
            return Err(invalid(format!(
                "directivity expects {} log gains, got {}",
                lattice.len() * bands.len(),
                log_gains.len()
            )));
        }
        if !(sharpness > 0.0) {
            return Err(invalid("directivity sharpness must be positive"));
        }
        validate_rotation(&orientation)?;
        Ok(DirectivityMap {
            lattice,
            log_gains,
            bands,
            sharpness,
            orientation,
        })
    }

    pub fn lattice(&self) -> &[Point] {
        &self.lattice
    }

    pub fn bands(&self) -> &Bands {
        &self.bands
    }

    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    pub fn orientation(&self) -> &Matrix3<f64> {
        &self.orientation
    }

    pub fn log_gains(&self) -> &[f64] {
        &self.log_gains
    }

    pub fn log_gains_mut(&mut self) -> &mut [f64] {
        &mut self.log_gains
    }

    pub fn log_gain(&self, point: usize, band: usize) -> f64 {
        self.log_gains[point * self.bands.len() + band]
    }

    pub fn set_log_gain(&mut self, point: usize, band: usize, value: f64) {
        let f = self.bands.len();
        self.log_gains[point * f + band] = value;
    }

    /// Normalized lattice weights for a world-frame direction.
    pub fn lattice_weights(&self, direction: &Point) -> Vec<f64> {
        let local = self.orientation.transpose() * direction;
        let dots: Vec<f64> = self.lattice.iter().map(|x| x.dot(&local)).collect();
        let top = dots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // exp(-λ(1 - d·x)) up to a common factor that cancels in normalization
        let mut w: Vec<f64> = dots
            .iter()
            .map(|d| (self.sharpness * (d - top)).exp())
            .collect();
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= sum);
        w
    }

    /// Log-amplitude gain at each center frequency for `direction`.
    pub fn band_log_gains(&self, direction: &Point) -> Vec<f64> {
        self.band_log_gains_weighted(&self.lattice_weights(direction))
    }

    pub(crate) fn band_log_gains_weighted(&self, weights: &[f64]) -> Vec<f64> {
        let f = self.bands.len();
        let mut out = vec![0.0; f];
        for (p, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let row = &self.log_gains[p * f..(p + 1) * f];
            for (o, a) in out.iter_mut().zip(row) {
                *o += w * a;
            }
        }
        out
    }

    /// Linear amplitude gain in `direction` at each query frequency.
    pub fn gain(&self, direction: &Point, freqs: &[f64]) -> Result<Vec<f64>> {
        if (direction.norm() - 1.0).abs() > 1e-6 {
            return Err(invalid(format!(
                "direction must be a unit vector (norm {})",
                direction.norm()
            )));
        }
        let bands = self.band_log_gains(direction);
        Ok(freqs
            .iter()
            .map(|f| self.bands.stencil(*f).apply(&bands).exp())
            .collect())
    }

    /// The same source rotated by `rotation`: the returned map's gain in
    /// direction `d` equals this map's gain in `rotation⁻¹ d`.
    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Result<Self> {
        validate_rotation(rotation)?;
        let mut out = self.clone();
        out.orientation = rotation * self.orientation;
        Ok(out)
    }
}
