//! Multi-resolution spectral distance between two responses.

use serde::{Deserialize, Serialize};

use crate::dsp::stft::spectral_l1_term;
use crate::error::{invalid, Error, Result};

/// Windows and hops of the spectral loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LossConfig {
    pub window_sizes: Vec<usize>,
    /// Hop as a fraction of the window size.
    pub hop_ratio: f64,
    /// Additional fine-hop term; `None` disables it.
    pub extra_window: Option<usize>,
    pub extra_hop: usize,
    pub log_floor: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            window_sizes: vec![512, 1024, 2048, 4096],
            hop_ratio: 0.25,
            extra_window: Some(256),
            extra_hop: 1,
            log_floor: 1e-8,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("loss windows must be ascending"));
        }
        if let Some(w) = self.window_sizes.iter().chain(&self.extra_window).find(|w| !w.is_power_of_two()) {
            return Err(invalid(format!("loss window {w} is not a power of two")));
        }
        if !(self.hop_ratio > 0.0 && self.hop_ratio <= 1.0) || self.extra_hop == 0 {
            return Err(invalid("loss hops must be positive"));
        }
        if !(self.log_floor > 0.0) {
            return Err(invalid("log floor must be positive"));
        }
        Ok(())
    }

    /// Every `(window, hop)` pair, in evaluation order.
    pub fn terms(&self) -> Vec<(usize, usize)> {
        let mut t: Vec<(usize, usize)> = self
            .window_sizes
            .iter()
            .map(|w| (*w, ((*w as f64 * self.hop_ratio).round() as usize).max(1)))
            .collect();
        if let Some(w) = self.extra_window {
            t.push((w, self.extra_hop));
        }
        t
    }
}

fn check(pred: &[f64], gt: &[f64], cfg: &LossConfig) -> Result<()> {
    cfg.validate()?;
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: gt.len(),
        });
    }
    Ok(())
}

/// Sum over all terms of the mean linear and mean log magnitude L1.
pub fn spectral_loss(pred: &[f64], gt: &[f64], cfg: &LossConfig) -> Result<f64> {
    check(pred, gt, cfg)?;
    cfg.terms()
        .into_iter()
        .map(|(w, h)| spectral_l1_term(pred, gt, w, h, cfg.log_floor, 1.0, None))
        .sum()
}

/// [`spectral_loss`] and its gradient with respect to `pred`, both scaled
/// by `weight`.
pub fn spectral_loss_grad(pred: &[f64], gt: &[f64], cfg: &LossConfig, weight: f64) -> Result<(f64, Vec<f64>)> {
    check(pred, gt, cfg)?;
    let mut grad = vec![0.0; pred.len()];
    let mut total = 0.0;
    for (w, h) in cfg.terms() {
        total += spectral_l1_term(pred, gt, w, h, cfg.log_floor, weight, Some(&mut grad))?;
    }
    Ok((total, grad))
}
