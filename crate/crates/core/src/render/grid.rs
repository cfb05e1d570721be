//! Loudness maps over a horizontal plane.

use rayon::prelude::*;

use super::{RenderConfig, Renderer};
use crate::dsp::filter::bandpass;
use crate::error::{invalid, Result};
use crate::geometry::{Point, Room};
use crate::models::SceneParams;

/// Band used by the low-frequency soundfield variant.
pub const SOUNDFIELD_BAND_HZ: f64 = 70.0;

/// Cells closer than this to the source are left empty.
const SOURCE_EXCLUSION: f64 = 1e-6;

/// Plane and spacing of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Height of the plane in meters.
    pub z: f64,
    /// Cell size in meters.
    pub resolution: f64,
}

/// Level in dB (20·log10 RMS) per cell, row-major `[y][x]`; `None` where
/// no response could be rendered.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub z: f64,
    pub values: Vec<Option<f64>>,
}

impl Grid {
    pub fn get(&self, ix: usize, iy: usize) -> Option<f64> {
        self.values[iy * self.xs.len() + ix]
    }

    /// First row holds x coordinates, first column y; absent cells are `nan`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y\\x");
        for x in &self.xs {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
        for (iy, y) in self.ys.iter().enumerate() {
            out.push_str(&y.to_string());
            for ix in 0..self.xs.len() {
                match self.get(ix, iy) {
                    Some(v) => out.push_str(&format!(",{v}")),
                    None => out.push_str(",nan"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// 8-bit grayscale raster scaled between the minimum and maximum level,
    /// top row at the largest y. Absent cells are black.
    pub fn to_gray8(&self) -> (u32, u32, Vec<u8>) {
        let present = self.values.iter().flatten().copied();
        let lo = present.clone().fold(f64::INFINITY, f64::min);
        let hi = present.fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let (w, h) = (self.xs.len(), self.ys.len());
        let mut px = Vec::with_capacity(w * h);
        for iy in (0..h).rev() {
            for ix in 0..w {
                px.push(match self.get(ix, iy) {
                    Some(v) => (16.0 + 239.0 * (v - lo) / span).round() as u8,
                    None => 0,
                });
            }
        }
        (w as u32, h as u32, px)
    }
}

fn axis(lo: f64, hi: f64, res: f64) -> Vec<f64> {
    let n = (((hi - lo) / res + 1e-9).floor() as usize).max(1);
    (0..n).map(|i| lo + (i as f64 + 0.5) * res).collect()
}

fn level(x: &[f64]) -> f64 {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    20.0 * rms.max(1e-12).log10()
}

fn render_levels(
    params: &SceneParams,
    room: &Room,
    cfg: &RenderConfig,
    spec: GridSpec,
    post: impl Fn(Vec<f64>) -> Result<Vec<f64>> + Sync,
) -> Result<Grid> {
    if !(spec.resolution > 0.0) {
        return Err(invalid("grid resolution must be positive"));
    }
    let bb = room.bounding_box();
    if spec.z < bb.min.z || spec.z > bb.max.z {
        return Err(invalid(format!("plane z = {} lies outside the room", spec.z)));
    }
    let xs = axis(bb.min.x, bb.max.x, spec.resolution);
    let ys = axis(bb.min.y, bb.max.y, spec.resolution);
    let renderer = Renderer::new(cfg, params.bands())?;
    let prep = renderer.prepare(params)?;
    let source = params.source_location;
    let cells: Vec<(f64, f64)> = ys.iter().flat_map(|y| xs.iter().map(move |x| (*x, *y))).collect();
    let values = cells
        .par_iter()
        .map(|&(x, y)| -> Result<Option<f64>> {
            let listener = Point::new(x, y, spec.z);
            if (listener - source).norm() < SOURCE_EXCLUSION || !bb.contains(&listener, 0.0) {
                return Ok(None);
            }
            let Ok(paths) = cfg.trace(room, &source, &listener) else {
                return Ok(None);
            };
            let early = renderer.early(&prep, params, &paths.paths, None)?;
            let rir = renderer.assemble(&prep, params, &early);
            Ok(Some(level(&post(rir)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Grid {
        xs,
        ys,
        z: spec.z,
        values,
    })
}

/// Broadband level map.
pub fn render_grid(params: &SceneParams, room: &Room, cfg: &RenderConfig, spec: GridSpec) -> Result<Grid> {
    render_levels(params, room, cfg, spec, Ok)
}

/// Level map of the responses band-passed around [`SOUNDFIELD_BAND_HZ`].
pub fn render_soundfield(params: &SceneParams, room: &Room, cfg: &RenderConfig, spec: GridSpec) -> Result<Grid> {
    let rate = cfg.sample_rate as f64;
    render_levels(params, room, cfg, spec, |x| bandpass(&x, SOUNDFIELD_BAND_HZ, rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;

    fn free(min: Point, max: Point) -> Room {
        Room::with_bounds(vec![], Aabb { min, max }, 343.0).unwrap()
    }

    fn params(room: &Room, cfg: &RenderConfig, source: Point) -> SceneParams {
        let mut p = SceneParams::initial(room, source, cfg.samples());
        p.spline_knots = vec![40.0; 16];
        p.air_absorption = 1.0;
        p
    }

    #[test]
    fn single_column_when_resolution_matches_width() {
        let room = free(Point::new(0.0, 0.0, 0.0), Point::new(1.0, 3.0, 2.0));
        let cfg = RenderConfig {
            render_length: 0.02,
            ..RenderConfig::default()
        };
        let p = params(&room, &cfg, Point::new(0.5, 0.2, 1.0));
        let g = render_grid(&p, &room, &cfg, GridSpec { z: 1.0, resolution: 1.0 }).unwrap();
        assert_eq!(g.xs, vec![0.5]);
        assert_eq!(g.ys.len(), 3);
        assert!(g.to_csv().lines().count() == 4);
        assert!(render_grid(&p, &room, &cfg, GridSpec { z: 5.0, resolution: 1.0 }).is_err());
    }

    #[test]
    fn source_cell_is_absent() {
        let room = free(Point::new(0.0, 0.0, 0.0), Point::new(2.0, 2.0, 2.0));
        let cfg = RenderConfig {
            render_length: 0.02,
            ..RenderConfig::default()
        };
        let p = params(&room, &cfg, Point::new(0.5, 0.5, 1.0));
        let g = render_grid(&p, &room, &cfg, GridSpec { z: 1.0, resolution: 1.0 }).unwrap();
        assert_eq!(g.get(0, 0), None);
        assert!(g.get(1, 1).is_some());
        let (w, h, px) = g.to_gray8();
        assert_eq!((w, h, px.len()), (2, 2, 4));
    }

    #[test]
    fn soundfield_of_equidistant_cells_is_equal() {
        let room = free(Point::new(0.0, 0.0, 0.0), Point::new(2.0, 2.0, 2.0));
        let cfg = RenderConfig {
            render_length: 0.1,
            ..RenderConfig::default()
        };
        let p = params(&room, &cfg, Point::new(1.0, 1.0, 1.0));
        let g = render_soundfield(&p, &room, &cfg, GridSpec { z: 1.0, resolution: 1.0 }).unwrap();
        let v: Vec<f64> = g.values.iter().map(|v| v.unwrap()).collect();
        assert!(v.iter().all(|x| (x - v[0]).abs() < 1e-9));
    }
}
