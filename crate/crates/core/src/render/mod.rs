//! Assemble impulse responses from traced paths and scene parameters.
//!
//! Each path contributes a minimum-phase filter built from the source
//! directivity in its outgoing direction and the responses of the surfaces
//! it hits, scaled by air absorption and spherical spreading and delayed by
//! its arrival time. The early sum is convolved with the source response and
//! blended with a residual by a temporal spline.

mod binaural;
mod graph;
mod grid;

use std::collections::BTreeMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::convolve::{fft_convolve, fft_convolve_truncated};
use crate::dsp::delay::delay_add;
use crate::dsp::minphase::{MinPhase, MAGNITUDE_FLOOR, PATH_FFT_SIZE};
use crate::dsp::AudioClip;
use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, Room, SurfaceId};
use crate::models::{gamma_curve, BandInterp, SceneParams};
use crate::tracer::{trace_all, PathRecord, PathSet, DEFAULT_AXIAL_ORDER, DEFAULT_MAX_ORDER};

pub use binaural::{binauralize, HrirBank, HrirEntry};
pub use graph::ListenerGradient;
pub use grid::{render_grid, render_soundfield, Grid, GridSpec, SOUNDFIELD_BAND_HZ};

pub const DEFAULT_RENDER_LENGTH: f64 = 2.0;

/// Render-time constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RenderConfig {
    /// Output length in seconds.
    pub render_length: f64,
    pub sample_rate: u32,
    pub max_order: usize,
    pub axial_order: usize,
    /// FFT size of per-path filters.
    pub filter_size: usize,
    #[serde(skip)]
    pub hrir_set: Option<Arc<HrirBank>>,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            render_length: DEFAULT_RENDER_LENGTH,
            sample_rate: crate::SAMPLE_RATE,
            max_order: DEFAULT_MAX_ORDER,
            axial_order: DEFAULT_AXIAL_ORDER,
            filter_size: PATH_FFT_SIZE,
            hrir_set: None,
        }
    }
}

impl RenderConfig {
    pub fn samples(&self) -> usize {
        (self.render_length * self.sample_rate as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.render_length > 0.0 && self.render_length.is_finite()) {
            return Err(invalid("render length must be positive"));
        }
        if self.sample_rate == 0 {
            return Err(invalid("sample rate must be positive"));
        }
        if self.filter_size < 4 || !self.filter_size.is_power_of_two() {
            return Err(invalid("filter size must be a power of two >= 4"));
        }
        Ok(())
    }

    pub fn trace(&self, room: &Room, source: &Point, listener: &Point) -> Result<PathSet> {
        trace_all(room, source, listener, self.max_order, self.axial_order)
    }
}

/// Per-surface quantities derived from the current parameters.
#[derive(Debug, Clone)]
struct SurfaceCache {
    sigma: Vec<f64>,
    /// Amplitude response on the filter bins.
    resp: Vec<f64>,
    log_resp: Vec<f64>,
    cepstrum: Vec<f64>,
    min_log: f64,
}

/// Parameter-dependent precomputation shared by every path of a render.
#[derive(Debug, Clone)]
pub struct Prepared {
    surfaces: BTreeMap<SurfaceId, SurfaceCache>,
    gamma: Vec<f64>,
}

/// One path's filter before delay.
#[derive(Debug, Clone)]
pub(crate) struct PathKernel {
    pub h: Vec<f64>,
    pub spectrum: Vec<Complex64>,
    /// Lattice weights of the outgoing direction.
    pub weights: Vec<f64>,
    pub scale: f64,
    /// Delay in samples (possibly perturbed).
    pub delay: f64,
    /// Unperturbed arrival time in seconds.
    pub time: f64,
    /// Bins where the magnitude hit the floor, if any did.
    pub clamped: Option<Vec<bool>>,
}

/// Reusable rendering engine for one configuration.
#[derive(Debug, Clone)]
pub struct Renderer {
    cfg: RenderConfig,
    mp: MinPhase,
    stencils: Vec<BandInterp>,
    /// Cepstrum of each band's interpolation weight over the bins.
    band_cepstra: Vec<Vec<f64>>,
    band_count: usize,
}

impl Renderer {
    pub fn new(cfg: &RenderConfig, bands: &crate::models::Bands) -> Result<Self> {
        cfg.validate()?;
        let mp = MinPhase::new(cfg.filter_size);
        let stencils = bands.bin_stencils(cfg.filter_size, cfg.sample_rate as f64);
        let band_cepstra = (0..bands.len())
            .map(|j| {
                let basis: Vec<f64> = stencils
                    .iter()
                    .map(|s| {
                        let mut v = vec![0.0; bands.len()];
                        s.scatter(1.0, &mut v);
                        v[j]
                    })
                    .collect();
                mp.cepstrum(&basis)
            })
            .collect();
        Ok(Renderer {
            cfg: cfg.clone(),
            mp,
            stencils,
            band_cepstra,
            band_count: bands.len(),
        })
    }

    pub fn config(&self) -> &RenderConfig {
        &self.cfg
    }

    pub fn samples(&self) -> usize {
        self.cfg.samples()
    }

    fn rate(&self) -> f64 {
        self.cfg.sample_rate as f64
    }

    fn check_bands(&self, params: &SceneParams) -> Result<()> {
        if params.bands().len() != self.band_count {
            return Err(invalid("parameters use a different band layout than the renderer"));
        }
        Ok(())
    }

    pub fn prepare(&self, params: &SceneParams) -> Result<Prepared> {
        self.check_bands(params)?;
        params.validate(self.samples())?;
        let surfaces = params
            .surfaces
            .iter()
            .map(|(id, s)| {
                let sigma: Vec<f64> = s.raw.iter().map(|v| crate::models::sigmoid(*v)).collect();
                let amps: Vec<f64> = sigma.iter().map(|v| v.sqrt()).collect();
                let resp: Vec<f64> = self.stencils.iter().map(|st| st.apply(&amps)).collect();
                let log_resp: Vec<f64> = resp.iter().map(|r| r.ln()).collect();
                let min_log = log_resp.iter().copied().fold(f64::INFINITY, f64::min);
                let cepstrum = self.mp.cepstrum(&log_resp);
                (
                    *id,
                    SurfaceCache {
                        sigma,
                        resp,
                        log_resp,
                        cepstrum,
                        min_log,
                    },
                )
            })
            .collect();
        let gamma = gamma_curve(
            &params.spline_knots,
            self.samples(),
            self.rate(),
            self.cfg.render_length,
        );
        Ok(Prepared { surfaces, gamma })
    }

    /// Filter, gain and delay of one path. `None` when it arrives after the
    /// end of the render.
    pub(crate) fn kernel(
        &self,
        prep: &Prepared,
        params: &SceneParams,
        path: &PathRecord,
        toa_offset: f64,
    ) -> Result<Option<PathKernel>> {
        let delay = ((path.arrival_time + toa_offset) * self.rate()).max(0.0);
        if delay >= self.samples() as f64 {
            return Ok(None);
        }
        let weights = params.directivity.lattice_weights(&path.out_direction);
        let band_log = params.directivity.band_log_gains_weighted(&weights);
        let caches = path
            .surfaces
            .iter()
            .map(|id| prep.surfaces.get(id).ok_or(Error::UnknownSurface(*id)))
            .collect::<Result<Vec<_>>>()?;
        let floor = MAGNITUDE_FLOOR.ln();
        let bound = band_log.iter().copied().fold(f64::INFINITY, f64::min)
            + caches.iter().map(|c| c.min_log.min(0.0)).sum::<f64>();
        let (cep, clamped) = if bound >= floor {
            let mut c = vec![0.0; self.mp.half()];
            for (a, basis) in band_log.iter().zip(&self.band_cepstra) {
                c.iter_mut().zip(basis).for_each(|(x, b)| *x += a * b);
            }
            for s in &caches {
                c.iter_mut().zip(&s.cepstrum).for_each(|(x, b)| *x += b);
            }
            (c, None)
        } else {
            let mut m: Vec<f64> = self.stencils.iter().map(|s| s.apply(&band_log)).collect();
            for s in &caches {
                m.iter_mut().zip(&s.log_resp).for_each(|(x, l)| *x += l);
            }
            let mask: Vec<bool> = m.iter().map(|v| *v < floor).collect();
            m.iter_mut().for_each(|v| *v = v.max(floor));
            (self.mp.cepstrum(&m), Some(mask))
        };
        let (h, spectrum) = self.mp.synthesize(&cep);
        let rho = path.length.max(MIN_PATH_LENGTH);
        Ok(Some(PathKernel {
            h,
            spectrum,
            weights,
            scale: params.air_absorption.powf(path.arrival_time) / rho,
            delay,
            time: path.arrival_time,
            clamped,
        }))
    }

    /// Delayed, scaled contribution of one path over the render length.
    pub fn path_contribution(&self, params: &SceneParams, path: &PathRecord) -> Result<Vec<f64>> {
        let prep = self.prepare(params)?;
        let mut out = vec![0.0; self.samples()];
        match self.kernel(&prep, params, path, 0.0)? {
            Some(k) => {
                delay_add(&k.h, k.delay, k.scale, &mut out);
            }
            None => log::warn!(
                "path arriving at {:.4} s lies beyond the {} s render",
                path.arrival_time,
                self.cfg.render_length
            ),
        }
        Ok(out)
    }

    /// Sum of all delayed path contributions. `offsets` perturbs each path's
    /// arrival time (seconds) for the delay only.
    pub fn early(
        &self,
        prep: &Prepared,
        params: &SceneParams,
        paths: &[PathRecord],
        offsets: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let mut early = vec![0.0; self.samples()];
        let mut skipped = 0;
        for (i, p) in paths.iter().enumerate() {
            let off = offsets.map_or(0.0, |o| o[i]);
            match self.kernel(prep, params, p, off)? {
                Some(k) => {
                    delay_add(&k.h, k.delay, k.scale, &mut early);
                }
                None => skipped += 1,
            }
        }
        warn_skipped(skipped, self.cfg.render_length);
        Ok(early)
    }

    /// `γ ⊙ (IR_s ⊛ early) + (1 - γ) ⊙ r`, truncated to the render length.
    pub fn assemble(&self, prep: &Prepared, params: &SceneParams, early: &[f64]) -> Vec<f64> {
        let conv = fft_convolve_truncated(&params.source_ir, early, self.samples());
        blend(&prep.gamma, &conv, &params.residual)
    }

    pub fn render_paths(&self, params: &SceneParams, paths: &[PathRecord]) -> Result<Vec<f64>> {
        let prep = self.prepare(params)?;
        let early = self.early(&prep, params, paths, None)?;
        Ok(self.assemble(&prep, params, &early))
    }
}

/// Floor on path lengths used for spherical spreading, in meters.
pub const MIN_PATH_LENGTH: f64 = 1e-3;

fn warn_skipped(skipped: usize, length: f64) {
    if skipped > 0 {
        log::warn!("{skipped} paths arrive after the {length} s render and were skipped");
    }
}

fn blend(gamma: &[f64], conv: &[f64], residual: &[f64]) -> Vec<f64> {
    gamma
        .iter()
        .zip(conv)
        .enumerate()
        .map(|(n, (g, c))| g * c + (1.0 - g) * residual.get(n).copied().unwrap_or(0.0))
        .collect()
}

/// Contribution of a single path, without the source response or blend.
pub fn render_path_contribution(
    path: &PathRecord,
    params: &SceneParams,
    cfg: &RenderConfig,
) -> Result<Vec<f64>> {
    Renderer::new(cfg, params.bands())?.path_contribution(params, path)
}

/// Mono impulse response from `source` to `listener`.
pub fn render_rir(
    params: &SceneParams,
    source: &Point,
    listener: &Point,
    room: &Room,
    cfg: &RenderConfig,
) -> Result<AudioClip> {
    let renderer = Renderer::new(cfg, params.bands())?;
    let paths = cfg.trace(room, source, listener)?;
    let rir = renderer.render_paths(params, &paths.paths)?;
    Ok(AudioClip::mono(rir, cfg.sample_rate))
}

/// Dry mono audio played at `source` as heard at `listener`.
pub fn render_music(
    params: &SceneParams,
    source: &Point,
    listener: &Point,
    room: &Room,
    cfg: &RenderConfig,
    dry: &AudioClip,
) -> Result<AudioClip> {
    dry.require_rate(cfg.sample_rate)?;
    let x = dry.mono_samples()?;
    let rir = render_rir(params, source, listener, room, cfg)?;
    let mut y = fft_convolve(x, rir.channel(0));
    y.resize(x.len() + cfg.samples(), 0.0);
    Ok(AudioClip::mono(y, cfg.sample_rate))
}
