//! Source localization from times of arrival.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::dsp::AudioClip;
use crate::error::{invalid, Result};
use crate::geometry::Point;

pub const LOCALIZE_STEPS: usize = 1000;
const LR_START: f64 = 0.1;
const LR_END: f64 = 1e-4;
/// Arrays whose smallest spread (std, meters) falls below this are coplanar.
const COPLANAR_SPREAD: f64 = 1e-3;

/// Time of the first sample whose magnitude exceeds a quarter of the peak.
pub fn first_peak_time(rir: &AudioClip) -> Result<f64> {
    let x = rir.mono_samples()?;
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || !peak.is_finite() {
        return Err(invalid("cannot locate the first peak of a silent response"));
    }
    let idx = x.iter().position(|v| v.abs() > peak / 4.0).expect("peak exists");
    Ok(idx as f64 / rir.sample_rate() as f64)
}

/// Estimated source and fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Localization {
    pub position: Point,
    /// Mean absolute time-of-arrival residual in seconds.
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// Mean absolute ToA residual and its gradient at `s`.
fn l1_objective(s: &Point, toas: &[f64], mics: &[Point], c: f64) -> (f64, Point) {
    let n = toas.len() as f64;
    let mut loss = 0.0;
    let mut grad = Point::zeros();
    for (t, m) in toas.iter().zip(mics) {
        let d = s - m;
        let r = d.norm();
        let e = r / c - t;
        loss += e.abs();
        if r > 0.0 && e != 0.0 {
            grad += d * (e.signum() / (r * c));
        }
    }
    (loss / n, grad / n)
}

/// Minimize the L1 time-of-arrival error by Adam from the origin with an
/// exponentially decaying step.
pub fn localize_from_toas(toas: &[f64], mics: &[Point], speed_of_sound: f64) -> Result<Localization> {
    if toas.is_empty() || toas.len() != mics.len() {
        return Err(invalid("need one time of arrival per microphone"));
    }
    let mut warnings = Vec::new();
    if mics.len() < 4 {
        warnings.push(format!("only {} microphones; the source is underdetermined", mics.len()));
    }
    let mean = mics.iter().sum::<Point>() / mics.len() as f64;
    let cov = mics
        .iter()
        .map(|m| (m - mean) * (m - mean).transpose())
        .sum::<Matrix3<f64>>()
        / mics.len() as f64;
    let min_eig = SymmetricEigen::new(cov).eigenvalues.min();
    if min_eig.max(0.0).sqrt() < COPLANAR_SPREAD {
        warnings.push("microphones are coplanar; the estimate may be mirrored".into());
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut s = Point::zeros();
    let mut m = Point::zeros();
    let mut v = Point::zeros();
    let decay = (LR_END / LR_START).powf(1.0 / (LOCALIZE_STEPS - 1) as f64);
    for step in 0..LOCALIZE_STEPS {
        let (_, g) = l1_objective(&s, toas, mics, speed_of_sound);
        m = m * b1 + g * (1.0 - b1);
        v = v * b2 + g.component_mul(&g) * (1.0 - b2);
        let k = (step + 1) as i32;
        let mh = m / (1.0 - b1.powi(k));
        let vh = v / (1.0 - b2.powi(k));
        let lr = LR_START * decay.powi(step as i32);
        s -= mh.zip_map(&vh, |a, b| a / (b.sqrt() + eps)) * lr;
    }
    let (residual, _) = l1_objective(&s, toas, mics, speed_of_sound);
    Ok(Localization {
        position: s,
        residual,
        warnings,
    })
}

/// Localize from measured responses via their first peaks.
pub fn localize_source(rirs: &[AudioClip], mics: &[Point], speed_of_sound: f64) -> Result<Localization> {
    let toas = rirs.iter().map(first_peak_time).collect::<Result<Vec<_>>>()?;
    localize_from_toas(&toas, mics, speed_of_sound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_peak_examples() {
        let mut x = vec![0.0; 1000];
        x[480] = 1.0;
        assert_eq!(first_peak_time(&AudioClip::mono(x, 48_000)).unwrap(), 0.01);
        let y = AudioClip::mono(vec![0.0, 0.1, 0.3, 1.0], 1);
        assert_eq!(first_peak_time(&y).unwrap(), 2.0);
        let z = AudioClip::mono(vec![0.0, 0.7, 2.1, 7.0], 1);
        assert_eq!(first_peak_time(&z).unwrap(), 2.0);
        assert!(first_peak_time(&AudioClip::mono(vec![0.0; 4], 1)).is_err());
    }

    fn mics() -> Vec<Point> {
        (0..12)
            .map(|i| {
                let a = i as f64 * 0.9;
                Point::new(2.0 + 1.5 * a.cos(), 2.5 + 1.8 * a.sin(), 0.8 + 0.15 * (i % 5) as f64)
            })
            .collect()
    }

    #[test]
    fn exact_toas_recover_the_source() {
        let src = Point::new(1.2, 3.1, 1.4);
        let m = mics();
        let toas: Vec<f64> = m.iter().map(|p| (p - src).norm() / 343.0).collect();
        let loc = localize_from_toas(&toas, &m, 343.0).unwrap();
        assert!((loc.position - src).norm() < 0.01, "{}", (loc.position - src).norm());
        assert!(loc.warnings.is_empty());
    }

    #[test]
    fn coincident_mic_is_finite() {
        let m = mics();
        let src = m[3];
        let toas: Vec<f64> = m.iter().map(|p| (p - src).norm() / 343.0).collect();
        let (l, g) = l1_objective(&src, &toas, &m, 343.0);
        assert!(l.is_finite() && g.iter().all(|v| v.is_finite()));
        let loc = localize_from_toas(&toas, &m, 343.0).unwrap();
        assert!(loc.position.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn biased_toas_cannot_beat_the_clean_optimum() {
        let src = Point::new(1.2, 3.1, 1.4);
        let m = mics();
        let clean: Vec<f64> = m.iter().map(|p| (p - src).norm() / 343.0).collect();
        let biased: Vec<f64> = clean.iter().map(|t| t + 1e-3).collect();
        let a = localize_from_toas(&clean, &m, 343.0).unwrap();
        let b = localize_from_toas(&biased, &m, 343.0).unwrap();
        assert!((b.position - src).norm() > 0.01);
        assert!(b.residual >= a.residual);
    }

    #[test]
    fn flags_degenerate_arrays() {
        let flat: Vec<Point> = (0..6).map(|i| Point::new(i as f64, (i * i) as f64 * 0.1, 1.0)).collect();
        let toas: Vec<f64> = flat.iter().map(|p| (p - Point::new(1.0, 1.0, 2.0)).norm() / 343.0).collect();
        assert!(!localize_from_toas(&toas, &flat, 343.0).unwrap().warnings.is_empty());
        let few = &flat[..3];
        let w = localize_from_toas(&toas[..3], few, 343.0).unwrap().warnings;
        assert!(w.iter().any(|s| s.contains("microphones;")));
    }
}
