//! Evaluation metrics.

use crate::dsp::envelope::log_energy_envelope;
use crate::dsp::AudioClip;
use crate::error::{invalid, Error, Result};
use crate::fit::{spectral_loss, LossConfig};

const ENERGY_FLOOR: f64 = 1e-12;

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Multi-scale spectral error with the standard loss configuration.
pub fn metric_mag(pred: &[f64], gt: &[f64]) -> Result<f64> {
    spectral_loss(pred, gt, &LossConfig::default())
}

/// Mean absolute difference of log10 energy envelopes.
pub fn metric_env(pred: &[f64], gt: &[f64]) -> Result<f64> {
    same_len(pred, gt)?;
    if pred.is_empty() {
        return Err(invalid("empty signals"));
    }
    let a = log_energy_envelope(pred);
    let b = log_energy_envelope(gt);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

fn lr_ratio(c: &AudioClip) -> Result<f64> {
    if c.channels() != 2 {
        return Err(invalid("left-right energy needs stereo audio"));
    }
    let e = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    Ok(e(c.channel(0)) / e(c.channel(1)).max(ENERGY_FLOOR))
}

/// Squared error between left/right energy ratios.
pub fn metric_lr_energy(pred: &AudioClip, gt: &AudioClip) -> Result<f64> {
    Ok((lr_ratio(pred)? - lr_ratio(gt)?).powi(2))
}

/// Mean of [`metric_lr_energy`] over pairs.
pub fn metric_lr_energy_batch(pairs: &[(AudioClip, AudioClip)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(invalid("no stereo pairs"));
    }
    let mut s = 0.0;
    for (p, g) in pairs {
        s += metric_lr_energy(p, g)?;
    }
    Ok(s / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decaying(n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 * 0.7).sin() * (-(i as f64) / 300.0).exp()).collect()
    }

    #[test]
    fn mag_is_the_loss() {
        let a = decaying(3000);
        let b: Vec<f64> = a.iter().map(|v| v * 0.3 + 1e-3).collect();
        assert_eq!(metric_mag(&a, &b).unwrap(), spectral_loss(&a, &b, &LossConfig::default()).unwrap());
        assert_eq!(metric_mag(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn env_identities() {
        let a = decaying(2000);
        let b: Vec<f64> = a.iter().map(|v| v * 10.0).collect();
        assert_eq!(metric_env(&a, &a).unwrap(), 0.0);
        assert!((metric_env(&a, &b).unwrap() - 2.0).abs() < 1e-9);
        let c: Vec<f64> = a.iter().rev().copied().collect();
        assert_eq!(metric_env(&a, &c).unwrap(), metric_env(&c, &a).unwrap());
        assert!(metric_env(&a, &a[1..]).is_err());
    }

    #[test]
    fn lr_energy_identities() {
        let s = |l: f64, r: f64| AudioClip::stereo(vec![l, 0.0], vec![r, 0.0], 48_000).unwrap();
        assert_eq!(metric_lr_energy(&s(1.0, 2.0), &s(1.0, 2.0)).unwrap(), 0.0);
        let two = s(2f64.sqrt(), 1.0);
        assert!((metric_lr_energy(&two, &s(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-12);
        let rho: f64 = 3.0;
        let gt = s(rho.sqrt(), 1.0);
        let swapped = s(1.0, rho.sqrt());
        assert!((metric_lr_energy(&swapped, &gt).unwrap() - (1.0 / rho - rho).powi(2)).abs() < 1e-9);
        assert!(metric_lr_energy(&s(1.0, 0.0), &s(1.0, 1.0)).unwrap().is_finite());
        assert!(metric_lr_energy(&AudioClip::mono(vec![1.0], 48_000), &two).is_err());
    }
}
