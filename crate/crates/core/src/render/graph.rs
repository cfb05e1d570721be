//! Reverse-mode pass through the render graph.
//!
//! Path geometry is constant; gradients flow into every learnable parameter
//! group through hand-written adjoints of each stage.

use std::collections::BTreeMap;

use super::{blend, warn_skipped, PathKernel, Prepared, Renderer};
use crate::dsp::convolve::{correlate_valid, fft_convolve_truncated};
use crate::dsp::delay::{delay_add, delay_gather};
use crate::error::Result;
use crate::geometry::SurfaceId;
use crate::models::{gamma_curve_backward, SceneGradient, SceneParams};
use crate::tracer::PathRecord;

/// Loss value and rendered response for one listener.
#[derive(Debug, Clone)]
pub struct ListenerGradient {
    pub loss: f64,
    pub rir: Vec<f64>,
}

impl Renderer {
    /// Render, evaluate `loss` (which returns its value and the gradient on
    /// the render), and add the parameter gradient into `grad`.
    pub fn loss_and_gradient<F>(
        &self,
        prep: &Prepared,
        params: &SceneParams,
        paths: &[PathRecord],
        offsets: Option<&[f64]>,
        loss: F,
        grad: &mut SceneGradient,
    ) -> Result<ListenerGradient>
    where
        F: FnOnce(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let samples = self.samples();
        let mut kernels: Vec<(&PathRecord, PathKernel)> = Vec::with_capacity(paths.len());
        let mut early = vec![0.0; samples];
        let mut skipped = 0;
        for (i, p) in paths.iter().enumerate() {
            let off = offsets.map_or(0.0, |o| o[i]);
            match self.kernel(prep, params, p, off)? {
                Some(k) => {
                    delay_add(&k.h, k.delay, k.scale, &mut early);
                    kernels.push((p, k));
                }
                None => skipped += 1,
            }
        }
        warn_skipped(skipped, self.cfg.render_length);
        let conv = fft_convolve_truncated(&params.source_ir, &early, samples);
        let rir = blend(&prep.gamma, &conv, &params.residual);
        let (value, g) = loss(&rir)?;
        assert_eq!(g.len(), samples);

        // blend
        let r = &params.residual;
        let mut g_gamma = vec![0.0; samples];
        let mut g_conv = vec![0.0; samples];
        for n in 0..samples {
            let gamma = prep.gamma[n];
            let rn = r.get(n).copied().unwrap_or(0.0);
            if n < r.len() {
                grad.residual[n] += (1.0 - gamma) * g[n];
            }
            g_gamma[n] = g[n] * (conv[n] - rn);
            g_conv[n] = gamma * g[n];
        }
        let g_knots = gamma_curve_backward(
            &params.spline_knots,
            &g_gamma,
            self.rate(),
            self.cfg.render_length,
        );
        grad.spline_knots.iter_mut().zip(&g_knots).for_each(|(a, b)| *a += b);

        // source response convolution
        let g_ir = correlate_valid(&g_conv, &early, params.source_ir.len());
        grad.source_ir.iter_mut().zip(&g_ir).for_each(|(a, b)| *a += b);
        let g_early = correlate_valid(&g_conv, &params.source_ir, samples);

        // paths
        let half = self.mp.half();
        let bands = self.band_count;
        let mut cep_grads: BTreeMap<SurfaceId, Vec<f64>> = BTreeMap::new();
        let mut log_grads: BTreeMap<SurfaceId, Vec<f64>> = BTreeMap::new();
        let alpha = params.air_absorption;
        for (path, k) in &kernels {
            let gathered = delay_gather(&g_early, k.delay, k.h.len());
            let d_scale: f64 = gathered.iter().zip(&k.h).map(|(a, b)| a * b).sum();
            grad.air_absorption += d_scale * k.scale * k.time / alpha;
            let g_h: Vec<f64> = gathered.iter().map(|v| v * k.scale).collect();
            let g_c = self.mp.synthesize_adjoint(&k.spectrum, &g_h);
            let mut g_a = vec![0.0; bands];
            match &k.clamped {
                None => {
                    for (ga, basis) in g_a.iter_mut().zip(&self.band_cepstra) {
                        *ga = basis.iter().zip(&g_c).map(|(a, b)| a * b).sum();
                    }
                    for id in &path.surfaces {
                        let acc = cep_grads.entry(*id).or_insert_with(|| vec![0.0; half]);
                        acc.iter_mut().zip(&g_c).for_each(|(a, b)| *a += b);
                    }
                }
                Some(mask) => {
                    let mut g_m = self.mp.cepstrum_adjoint(&g_c);
                    g_m.iter_mut().zip(mask).for_each(|(v, m)| {
                        if *m {
                            *v = 0.0;
                        }
                    });
                    for (st, gm) in self.stencils.iter().zip(&g_m) {
                        st.scatter(*gm, &mut g_a);
                    }
                    for id in &path.surfaces {
                        let acc = log_grads.entry(*id).or_insert_with(|| vec![0.0; half]);
                        acc.iter_mut().zip(&g_m).for_each(|(a, b)| *a += b);
                    }
                }
            }
            for (x, w) in k.weights.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let row = &mut grad.log_gains[x * bands..(x + 1) * bands];
                row.iter_mut().zip(&g_a).for_each(|(a, b)| *a += w * b);
            }
        }

        // surface responses
        for (id, cache) in &prep.surfaces {
            let mut g_log = match cep_grads.get(id) {
                Some(c) => self.mp.cepstrum_adjoint(c),
                None => vec![0.0; half],
            };
            match log_grads.get(id) {
                Some(l) => g_log.iter_mut().zip(l).for_each(|(a, b)| *a += b),
                None if !cep_grads.contains_key(id) => continue,
                None => {}
            }
            let mut g_amp = vec![0.0; bands];
            for ((st, gl), resp) in self.stencils.iter().zip(&g_log).zip(&cache.resp) {
                st.scatter(gl / resp, &mut g_amp);
            }
            let target = grad.surfaces.get_mut(id).expect("gradient layout matches params");
            for ((t, ga), s) in target.iter_mut().zip(&g_amp).zip(&cache.sigma) {
                *t += ga * 0.5 * s.sqrt() * (1.0 - s);
            }
        }

        Ok(ListenerGradient { loss: value, rir })
    }
}
