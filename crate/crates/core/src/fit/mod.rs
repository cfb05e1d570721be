//! Fitting scene parameters to measured responses.

mod localize;
mod loss;
mod optim;

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::convolve::{correlate_valid, fft_convolve_truncated};
use crate::dsp::noise::pink_noise;
use crate::dsp::AudioClip;
use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, Room};
use crate::models::{SceneGradient, SceneParams};
use crate::render::{RenderConfig, Renderer};
use crate::tracer::PathRecord;

pub use localize::{first_peak_time, localize_from_toas, localize_source, Localization, LOCALIZE_STEPS};
pub use loss::{spectral_loss, spectral_loss_grad, LossConfig};
pub use optim::{Adam, LearningRates};

/// Training schedule and regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FitConfig {
    pub epochs: usize,
    /// Standard deviation, in samples, of the per-epoch arrival jitter.
    pub toa_perturb_samples: f64,
    /// Fraction of training after which pink-noise regularization starts.
    pub pink_reg_start_fraction: f64,
    /// Seconds of pink noise per regularization draw.
    pub pink_duration: f64,
    pub learning_rates: LearningRates,
    pub random_seed: u64,
    pub loss: LossConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            epochs: 1000,
            toa_perturb_samples: 7.0,
            pink_reg_start_fraction: 0.5,
            pink_duration: 5.0,
            learning_rates: LearningRates::default(),
            random_seed: 0,
            loss: LossConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.toa_perturb_samples >= 0.0) {
            return Err(invalid("arrival jitter must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.pink_reg_start_fraction) {
            return Err(invalid("pink regularization start must be in [0, 1]"));
        }
        if !(self.pink_duration > 0.0) {
            return Err(invalid("pink noise duration must be positive"));
        }
        self.loss.validate()
    }

    fn pink_start(&self) -> usize {
        (self.pink_reg_start_fraction * self.epochs as f64).ceil() as usize
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitReport {
    /// Objective at the start of each epoch, averaged over listeners;
    /// includes the pink-noise term once regularization is active.
    pub per_epoch_loss: Vec<f64>,
    /// Unregularized, unperturbed loss at the returned parameters.
    pub final_loss: f64,
    pub localized_source: [f64; 3],
    pub wall_clock: f64,
    pub random_seed: u64,
    pub path_counts: Vec<usize>,
    /// Where the fitted parameters were written, if anywhere.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_params: Option<String>,
}

/// One measured response and where it was recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPoint {
    pub listener: Point,
    pub rir: Vec<f64>,
}

/// One listener's fixed paths and target.
#[derive(Debug, Clone, Copy)]
pub struct BatchItem<'a> {
    pub paths: &'a [PathRecord],
    pub gt: &'a [f64],
    /// Arrival-time offsets in seconds, one per path.
    pub offsets: Option<&'a [f64]>,
}

/// Mean loss over `batch` and its gradient. With `pink`, the loss between
/// both signals convolved with that noise is added per listener.
pub fn loss_gradient(
    renderer: &Renderer,
    params: &SceneParams,
    batch: &[BatchItem<'_>],
    loss: &LossConfig,
    pink: Option<&[f64]>,
) -> Result<(f64, SceneGradient)> {
    if batch.is_empty() {
        return Err(invalid("empty batch"));
    }
    let prep = renderer.prepare(params)?;
    let weight = 1.0 / batch.len() as f64;
    let samples = renderer.samples();
    let parts = batch
        .par_iter()
        .map(|item| -> Result<(f64, SceneGradient)> {
            if item.gt.len() != samples {
                return Err(Error::LengthMismatch {
                    left: item.gt.len(),
                    right: samples,
                });
            }
            let mut grad = SceneGradient::zeros_like(params);
            let out = renderer.loss_and_gradient(
                &prep,
                params,
                item.paths,
                item.offsets,
                |rir| {
                    let (mut l, mut g) = spectral_loss_grad(rir, item.gt, loss, weight)?;
                    if let Some(noise) = pink {
                        let n = noise.len();
                        let yp = fft_convolve_truncated(rir, noise, n);
                        let yg = fft_convolve_truncated(item.gt, noise, n);
                        let (lp, gp) = spectral_loss_grad(&yp, &yg, loss, weight)?;
                        l += lp;
                        let back = correlate_valid(&gp, noise, rir.len());
                        g.iter_mut().zip(&back).for_each(|(a, b)| *a += b);
                    }
                    Ok((l, g))
                },
                &mut grad,
            )?;
            Ok((out.loss, grad))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = SceneGradient::zeros_like(params);
    let mut value = 0.0;
    for (l, g) in &parts {
        value += l;
        total.add_scaled(g, 1.0);
    }
    Ok((value, total))
}

/// Mean spectral loss of the current parameters, without regularization.
pub fn evaluate_loss(
    renderer: &Renderer,
    params: &SceneParams,
    paths: &[Vec<PathRecord>],
    targets: &[Vec<f64>],
    loss: &LossConfig,
) -> Result<f64> {
    let losses = paths
        .par_iter()
        .zip(targets)
        .map(|(p, gt)| spectral_loss(&renderer.render_paths(params, p)?, gt, loss))
        .collect::<Result<Vec<_>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Truncate or zero-pad to `n` samples.
fn fit_length(x: &[f64], n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = x.iter().take(n).copied().collect();
    v.resize(n, 0.0);
    v
}

/// Fit from default initialization. The source is localized from the
/// measurements unless given.
pub fn fit(
    points: &[TrainingPoint],
    room: &Room,
    source: Option<Point>,
    render: &RenderConfig,
    cfg: &FitConfig,
) -> Result<(SceneParams, FitReport)> {
    if points.is_empty() {
        return Err(invalid("no training responses"));
    }
    let source = match source {
        Some(s) => s,
        None => {
            let clips: Vec<AudioClip> = points
                .iter()
                .map(|p| AudioClip::mono(p.rir.clone(), render.sample_rate))
                .collect();
            let mics: Vec<Point> = points.iter().map(|p| p.listener).collect();
            localize_source(&clips, &mics, room.speed_of_sound())?.position
        }
    };
    let init = SceneParams::initial(room, source, render.samples());
    fit_from(init, points, room, render, cfg)
}

/// Fit starting from `init`.
pub fn fit_from(
    init: SceneParams,
    points: &[TrainingPoint],
    room: &Room,
    render: &RenderConfig,
    cfg: &FitConfig,
) -> Result<(SceneParams, FitReport)> {
    if points.is_empty() {
        return Err(invalid("no training responses"));
    }
    cfg.validate()?;
    let start = Instant::now();
    let renderer = Renderer::new(render, init.bands())?;
    let samples = renderer.samples();
    let rate = render.sample_rate as f64;
    let source = init.source_location;
    let paths: Vec<Vec<PathRecord>> = points
        .iter()
        .map(|p| Ok(render.trace(room, &source, &p.listener)?.paths))
        .collect::<Result<_>>()?;
    let targets: Vec<Vec<f64>> = points.iter().map(|p| fit_length(&p.rir, samples)).collect();
    let mut params = init;
    let mut adam = Adam::new(cfg.learning_rates.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.random_seed);
    let jitter = Normal::new(0.0, cfg.toa_perturb_samples / rate).map_err(|e| invalid(e.to_string()))?;
    let pink_start = cfg.pink_start();
    let mut per_epoch_loss = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let offsets: Vec<Vec<f64>> = paths
            .iter()
            .map(|ps| ps.iter().map(|_| jitter.sample(&mut rng)).collect())
            .collect();
        let pink = (epoch >= pink_start).then(|| pink_noise(cfg.pink_duration, rate, rng.next_u64()));
        let batch: Vec<BatchItem> = paths
            .iter()
            .zip(&targets)
            .zip(&offsets)
            .map(|((p, gt), off)| BatchItem {
                paths: p,
                gt,
                offsets: Some(off),
            })
            .collect();
        let (loss, grad) = loss_gradient(&renderer, &params, &batch, &cfg.loss, pink.as_deref())?;
        if !loss.is_finite() || !grad.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                detail: format!("loss {loss}"),
            });
        }
        per_epoch_loss.push(loss);
        if epoch % 10 == 0 || epoch + 1 == cfg.epochs {
            log::info!("epoch {epoch}: loss {loss:.6}");
        }
        adam.step(&mut params, &grad);
    }
    let final_loss = evaluate_loss(&renderer, &params, &paths, &targets, &cfg.loss)?;
    let report = FitReport {
        per_epoch_loss,
        final_loss,
        localized_source: source.into(),
        wall_clock: start.elapsed().as_secs_f64(),
        random_seed: cfg.random_seed,
        path_counts: paths.iter().map(Vec::len).collect(),
        final_params: None,
    };
    Ok((params, report))
}
