//! Temporal blend between traced paths and the residual.
//!
//! Sixteen knots, uniformly spaced over the render length, are linearly
//! interpolated and squashed by a sigmoid.

use super::sigmoid;

pub const SPLINE_KNOTS: usize = 16;

fn knot_position(t: f64, render_length: f64, knots: usize) -> (usize, f64) {
    let span = (knots - 1) as f64;
    let u = (t / render_length).clamp(0.0, 1.0) * span;
    let i = (u.floor() as usize).min(knots - 2);
    (i, u - i as f64)
}

/// Blend weight at time `t` (seconds); 1 means traced paths only.
pub fn gamma_weight(knots: &[f64], t: f64, render_length: f64) -> f64 {
    let (i, frac) = knot_position(t, render_length, knots.len());
    sigmoid((1.0 - frac) * knots[i] + frac * knots[i + 1])
}

/// Blend weight for every sample of a render.
pub fn gamma_curve(knots: &[f64], samples: usize, rate: f64, render_length: f64) -> Vec<f64> {
    (0..samples)
        .map(|n| gamma_weight(knots, n as f64 / rate, render_length))
        .collect()
}

/// Gradient of `Σ grad_gamma[n] · γ[n]` with respect to the knots.
pub fn gamma_curve_backward(
    knots: &[f64],
    grad_gamma: &[f64],
    rate: f64,
    render_length: f64,
) -> Vec<f64> {
    let mut grad = vec![0.0; knots.len()];
    for (n, g) in grad_gamma.iter().enumerate() {
        let (i, frac) = knot_position(n as f64 / rate, render_length, knots.len());
        let s = sigmoid((1.0 - frac) * knots[i] + frac * knots[i + 1]);
        let d = g * s * (1.0 - s);
        grad[i] += (1.0 - frac) * d;
        grad[i + 1] += frac * d;
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_knots() {
        let hi = [20.0; SPLINE_KNOTS];
        let zero = [0.0; SPLINE_KNOTS];
        for t in [0.0, 0.3, 1.0, 1.999, 2.0] {
            assert!((gamma_weight(&hi, t, 2.0) - 1.0).abs() < 1e-8);
            assert_eq!(gamma_weight(&zero, t, 2.0), 0.5);
        }
    }

    #[test]
    fn exact_at_knots() {
        let knots: Vec<f64> = (0..SPLINE_KNOTS).map(|i| i as f64 * 0.5 - 3.0).collect();
        for (i, k) in knots.iter().enumerate() {
            let t = 2.0 * i as f64 / 15.0;
            assert!((gamma_weight(&knots, t, 2.0) - sigmoid(*k)).abs() < 1e-12);
        }
    }

    #[test]
    fn continuous_between_samples() {
        let knots: Vec<f64> = (0..SPLINE_KNOTS).map(|i| if i % 2 == 0 { 5.0 } else { -5.0 }).collect();
        let curve = gamma_curve(&knots, 96_000, 48_000.0, 2.0);
        let jump = curve.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(jump < 1e-3, "{jump}");
    }

    #[test]
    fn backward_matches_finite_differences() {
        let knots: Vec<f64> = (0..SPLINE_KNOTS).map(|i| (i as f64).sin()).collect();
        let g: Vec<f64> = (0..500).map(|n| ((n * 7) % 13) as f64 - 6.0).collect();
        let f = |k: &[f64]| -> f64 {
            gamma_curve(k, 500, 1000.0, 0.5).iter().zip(&g).map(|(a, b)| a * b).sum()
        };
        let grad = gamma_curve_backward(&knots, &g, 1000.0, 0.5);
        for i in 0..SPLINE_KNOTS {
            let mut p = knots.clone();
            let mut m = knots.clone();
            p[i] += 1e-5;
            m[i] -= 1e-5;
            let fd = (f(&p) - f(&m)) / 2e-5;
            assert!((fd - grad[i]).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }
}
