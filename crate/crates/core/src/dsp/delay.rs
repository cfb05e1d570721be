//! Fractional delay by linear interpolation between adjacent samples.

/// Result of [`delay_signal`].
#[derive(Debug, Clone, PartialEq)]
pub struct Delayed {
    pub signal: Vec<f64>,
    /// Set when the delay starts at or beyond the output length.
    pub beyond: bool,
}

/// Shift `x` by `delay` seconds into a buffer of `out_len` samples.
pub fn delay_signal(x: &[f64], delay: f64, rate: f64, out_len: usize) -> Delayed {
    assert!(delay >= 0.0, "delay must be non-negative");
    let mut signal = vec![0.0; out_len];
    let beyond = !delay_add(x, delay * rate, 1.0, &mut signal);
    if beyond {
        log::warn!("delay of {delay} s falls beyond the {out_len}-sample output");
    }
    Delayed { signal, beyond }
}

/// Split a delay in samples into integer and fractional parts.
fn split(delay: f64) -> (usize, f64) {
    let k = delay.floor();
    (k as usize, delay - k)
}

/// `out[n + d] += scale * x[n]` with linear interpolation of the fractional
/// part. Returns false when the delay lies beyond `out`.
pub fn delay_add(x: &[f64], delay: f64, scale: f64, out: &mut [f64]) -> bool {
    let (k, frac) = split(delay);
    if k >= out.len() {
        return false;
    }
    let (a, b) = ((1.0 - frac) * scale, frac * scale);
    let room = out.len() - k;
    for (o, v) in out[k..].iter_mut().zip(x.iter().take(room)) {
        *o += a * v;
    }
    if b != 0.0 && k + 1 < out.len() {
        for (o, v) in out[k + 1..].iter_mut().zip(x.iter().take(room - 1)) {
            *o += b * v;
        }
    }
    true
}

/// Adjoint of [`delay_add`] with unit scale: the gradient on `x`
/// (`x_len` samples) given the gradient on `out`.
pub fn delay_gather(g: &[f64], delay: f64, x_len: usize) -> Vec<f64> {
    let (k, frac) = split(delay);
    let mut gx = vec![0.0; x_len];
    if k >= g.len() {
        return gx;
    }
    for (n, v) in gx.iter_mut().enumerate() {
        let i = k + n;
        if i >= g.len() {
            break;
        }
        *v = (1.0 - frac) * g[i] + if i + 1 < g.len() { frac * g[i + 1] } else { 0.0 };
    }
    gx
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_delay_is_identity() {
        let x = [1.0, -2.0, 3.0];
        let d = delay_signal(&x, 0.0, 48_000.0, 5);
        assert_eq!(d.signal, vec![1.0, -2.0, 3.0, 0.0, 0.0]);
        assert!(!d.beyond);
    }

    #[test]
    fn integer_and_half_sample() {
        let d = delay_signal(&[1.0], 3.0 / 48_000.0, 48_000.0, 6);
        assert_eq!(d.signal, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let d = delay_signal(&[1.0], 2.5, 1.0, 6);
        assert_eq!(d.signal, vec![0.0, 0.0, 0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn beyond_is_flagged() {
        let d = delay_signal(&[1.0, 1.0], 10.0, 1.0, 4);
        assert!(d.beyond);
        assert!(d.signal.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn truncated_at_output_end() {
        let d = delay_signal(&[1.0, 1.0, 1.0], 2.25, 1.0, 4);
        assert_eq!(d.signal, vec![0.0, 0.0, 0.75, 1.0]);
    }

    proptest! {
        #[test]
        fn taps_sum_to_one(delay in 0.0f64..50.0) {
            let d = delay_signal(&[1.0], delay, 1.0, 64);
            prop_assert!((d.signal.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn gather_is_adjoint(delay in 0.0f64..20.0, seed in 0u64..1000) {
            let x: Vec<f64> = (0..9).map(|i| ((i as u64 * 31 + seed) % 7) as f64 - 3.0).collect();
            let g: Vec<f64> = (0..16).map(|i| ((i as u64 * 17 + seed) % 5) as f64 - 2.0).collect();
            let mut y = vec![0.0; 16];
            delay_add(&x, delay, 1.0, &mut y);
            let lhs: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
            let gx = delay_gather(&g, delay, x.len());
            let rhs: f64 = gx.iter().zip(&x).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
