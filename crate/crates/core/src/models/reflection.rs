use super::{sigmoid, Bands};

/// Per-surface specular reflection response.
///
/// Raw coefficients pass through a sigmoid to give energy reflection
/// coefficients; their square roots are amplitude gains, linearly
/// interpolated between center frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceResponse {
    pub raw: Vec<f64>,
    pub bands: Bands,
}

impl SurfaceResponse {
    pub fn new(bands: Bands) -> Self {
        SurfaceResponse {
            raw: vec![0.0; bands.len()],
            bands,
        }
    }

    /// Response with the given amplitude gain per band (each in (0, 1)).
    pub fn from_amplitudes(bands: Bands, amplitudes: &[f64]) -> Self {
        assert_eq!(amplitudes.len(), bands.len());
        let raw = amplitudes
            .iter()
            .map(|a| {
                let e = (a * a).clamp(1e-12, 1.0 - 1e-12);
                (e / (1.0 - e)).ln()
            })
            .collect();
        SurfaceResponse { raw, bands }
    }

    /// Amplitude gain at each center frequency.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.raw.iter().map(|v| sigmoid(*v).sqrt()).collect()
    }
}

/// Amplitude gain of `resp` at each query frequency.
pub fn reflection_response(resp: &SurfaceResponse, freqs: &[f64]) -> Vec<f64> {
    let amps = resp.amplitudes();
    freqs
        .iter()
        .map(|f| resp.bands.stencil(*f).apply(&amps))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neutral_and_saturated() {
        let mut r = SurfaceResponse::new(Bands::default());
        for a in reflection_response(&r, &[10.0, 500.0, 30000.0]) {
            assert!((a - 0.5f64.sqrt()).abs() < 1e-12);
        }
        r.raw.iter_mut().for_each(|v| *v = 20.0);
        for a in reflection_response(&r, &[10.0, 500.0, 30000.0]) {
            assert!((a - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn interpolates_amplitudes_not_coefficients() {
        let mut amps = vec![0.5; 9];
        amps[3] = 0.4;
        amps[4] = 0.8;
        let r = SurfaceResponse::from_amplitudes(Bands::default(), &amps);
        let mid = reflection_response(&r, &[750.0])[0];
        assert!((mid - 0.6).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn strictly_inside_unit_interval(raw in proptest::collection::vec(-30.0..30.0f64, 9), f in 1.0..24000.0f64) {
            let r = SurfaceResponse { raw, bands: Bands::default() };
            let a = reflection_response(&r, &[f])[0];
            prop_assert!(a > 0.0 && a < 1.0 + 1e-15);
        }
    }
}
