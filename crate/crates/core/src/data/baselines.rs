//! Interpolation baselines over measured responses.

use crate::error::{invalid, Result};
use crate::geometry::Point;

pub const LINEAR_NEIGHBOURS: usize = 4;
const COINCIDENT: f64 = 1e-9;

/// Nearest training position; ties go to the lowest index.
pub fn nearest_index(positions: &[Point], query: &Point) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in positions.iter().enumerate() {
        let d = (p - query).norm();
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|b| b.0).ok_or_else(|| invalid("no training positions"))
}

/// The response measured closest to `query`.
pub fn baseline_nn(positions: &[Point], rirs: &[Vec<f64>], query: &Point) -> Result<Vec<f64>> {
    Ok(rirs[nearest_index(positions, query)?].clone())
}

/// Inverse-distance weights over the nearest (up to four) positions,
/// summing to one. A coincident position gets all the weight.
pub fn linear_weights(positions: &[Point], query: &Point) -> Result<Vec<(usize, f64)>> {
    if positions.is_empty() {
        return Err(invalid("no training positions"));
    }
    let mut order: Vec<(usize, f64)> = positions
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (p - query).norm()))
        .collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    if order[0].1 < COINCIDENT {
        return Ok(vec![(order[0].0, 1.0)]);
    }
    order.truncate(LINEAR_NEIGHBOURS);
    let total: f64 = order.iter().map(|(_, d)| 1.0 / d).sum();
    Ok(order.into_iter().map(|(i, d)| (i, (1.0 / d) / total)).collect())
}

/// Inverse-distance blend of the nearest responses.
pub fn baseline_linear(positions: &[Point], rirs: &[Vec<f64>], query: &Point) -> Result<Vec<f64>> {
    let w = linear_weights(positions, query)?;
    if let [(i, _)] = w.as_slice() {
        return Ok(rirs[*i].clone());
    }
    let len = w.iter().map(|(i, _)| rirs[*i].len()).max().unwrap_or(0);
    let mut out = vec![0.0; len];
    for (i, wi) in w {
        out.iter_mut().zip(&rirs[i]).for_each(|(o, v)| *o += wi * v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square() -> (Vec<Point>, Vec<Vec<f64>>) {
        let pos = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(2.0, 0.0, 0.0),
            Point::new(0.0, 2.0, 0.0),
            Point::new(2.0, 2.0, 0.0),
            Point::new(9.0, 9.0, 0.0),
        ];
        let rirs = (0..5).map(|i| vec![i as f64, 1.0, -(i as f64)]).collect();
        (pos, rirs)
    }

    #[test]
    fn nn_contracts() {
        let (pos, rirs) = square();
        assert_eq!(baseline_nn(&pos, &rirs, &pos[3]).unwrap(), rirs[3]);
        assert_eq!(baseline_nn(&pos[..1], &rirs[..1], &Point::new(5.0, 5.0, 5.0)).unwrap(), rirs[0]);
        // equidistant from entries 0 and 1
        assert_eq!(nearest_index(&pos, &Point::new(1.0, 0.0, 0.0)).unwrap(), 0);
        let mut dup = pos.clone();
        dup.push(pos[2]);
        assert_eq!(nearest_index(&dup, &Point::new(0.1, 1.9, 0.0)).unwrap(), 2);
        assert!(baseline_nn(&[], &[], &Point::zeros()).is_err());
    }

    #[test]
    fn linear_contracts() {
        let (pos, rirs) = square();
        assert_eq!(baseline_linear(&pos, &rirs, &pos[1]).unwrap(), rirs[1]);
        let w = linear_weights(&pos, &Point::new(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.iter().all(|(i, v)| *i < 4 && (v - 0.25).abs() < 1e-12));
        let few = linear_weights(&pos[..2], &Point::new(0.5, 0.5, 0.5)).unwrap();
        assert_eq!(few.len(), 2);
    }

    proptest! {
        #[test]
        fn weights_sum_to_one(x in -5.0f64..12.0, y in -5.0f64..12.0, z in -3.0f64..3.0) {
            let (pos, _) = square();
            let w = linear_weights(&pos, &Point::new(x, y, z)).unwrap();
            prop_assert!((w.iter().map(|(_, v)| v).sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(w.iter().all(|(_, v)| *v >= 0.0));
        }
    }
}
