//! Two-ear rendering through a bank of head-related impulse responses.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{warn_skipped, Renderer};
use crate::dsp::convolve::fft_convolve_truncated;
use crate::dsp::delay::delay_add;
use crate::dsp::AudioClip;
use crate::error::{invalid, read_json, Error, Result};
use crate::geometry::{Point, Room};
use crate::models::{validate_rotation, SceneParams};

/// One measured direction. Angles are in degrees in the head frame
/// (+x front, +y left, +z up); azimuth grows towards the left.
#[derive(Debug, Clone, PartialEq)]
pub struct HrirEntry {
    pub azimuth: f64,
    pub elevation: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl HrirEntry {
    pub fn direction(&self) -> Point {
        let (az, el) = (self.azimuth.to_radians(), self.elevation.to_radians());
        Point::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
    }
}

/// Direction-indexed stereo filters with nearest-neighbour lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct HrirBank {
    sample_rate: u32,
    entries: Vec<HrirEntry>,
    directions: Vec<Point>,
    average: [Vec<f64>; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct IndexFile {
    sample_rate: u32,
    entries: Vec<IndexEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    azimuth: f64,
    elevation: f64,
    /// Stereo WAV relative to the index.
    file: String,
}

impl HrirBank {
    pub fn new(entries: Vec<HrirEntry>, sample_rate: u32) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("HRIR bank is empty"));
        }
        let longest = entries
            .iter()
            .map(|e| e.left.len().max(e.right.len()))
            .max()
            .unwrap_or(0);
        let mut average = [vec![0.0; longest], vec![0.0; longest]];
        let scale = 1.0 / entries.len() as f64;
        for e in &entries {
            for (avg, ear) in average.iter_mut().zip([&e.left, &e.right]) {
                avg.iter_mut().zip(ear).for_each(|(a, v)| *a += v * scale);
            }
        }
        Ok(HrirBank {
            sample_rate,
            directions: entries.iter().map(HrirEntry::direction).collect(),
            entries,
            average,
        })
    }

    /// Read `index.json` from `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let index: IndexFile = read_json(&dir.join("index.json"))?;
        let entries = index
            .entries
            .iter()
            .map(|e| {
                let path = dir.join(&e.file);
                let clip = AudioClip::read_wav(&path)?;
                clip.require_rate(index.sample_rate)?;
                if clip.channels() != 2 {
                    return Err(Error::Format(format!("{}: HRIR must be stereo", path.display())));
                }
                Ok(HrirEntry {
                    azimuth: e.azimuth,
                    elevation: e.elevation,
                    left: clip.channel(0).to_vec(),
                    right: clip.channel(1).to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries, index.sample_rate)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn entries(&self) -> &[HrirEntry] {
        &self.entries
    }

    /// Index of the entry closest in angle to a head-frame direction;
    /// ties go to the lower index.
    pub fn nearest(&self, direction: &Point) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, d) in self.directions.iter().enumerate() {
            let c = d.dot(direction);
            if c > best.1 {
                best = (i, c);
            }
        }
        best.0
    }

    /// Per-ear mean over all directions.
    pub fn average(&self) -> &[Vec<f64>; 2] {
        &self.average
    }
}

/// Stereo response at a listener whose head frame is `head` (columns are the
/// head's front, left and up axes in world coordinates).
pub fn binauralize(
    params: &SceneParams,
    source: &Point,
    listener: &Point,
    room: &Room,
    cfg: &super::RenderConfig,
    head: &Matrix3<f64>,
) -> Result<AudioClip> {
    let bank = cfg
        .hrir_set
        .as_ref()
        .ok_or_else(|| invalid("binaural rendering needs an HRIR bank"))?;
    if bank.sample_rate() != cfg.sample_rate {
        return Err(Error::SampleRate {
            expected: cfg.sample_rate,
            actual: bank.sample_rate(),
        });
    }
    validate_rotation(head)?;
    let renderer = Renderer::new(cfg, params.bands())?;
    let prep = renderer.prepare(params)?;
    let paths = cfg.trace(room, source, listener)?;
    let n = renderer.samples();
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut skipped = 0;
    for p in &paths.paths {
        let Some(k) = renderer.kernel(&prep, params, p, 0.0)? else {
            skipped += 1;
            continue;
        };
        let local = head.transpose() * p.in_direction;
        let slot = groups
            .entry(bank.nearest(&local))
            .or_insert_with(|| vec![0.0; n]);
        delay_add(&k.h, k.delay, k.scale, slot);
    }
    warn_skipped(skipped, cfg.render_length);
    let mut ears = Vec::with_capacity(2);
    for ear in 0..2 {
        let mut early = vec![0.0; n];
        for (idx, sig) in &groups {
            let e = &bank.entries()[*idx];
            let filt = if ear == 0 { &e.left } else { &e.right };
            let y = fft_convolve_truncated(sig, filt, n);
            early.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
        }
        let conv = fft_convolve_truncated(&params.source_ir, &early, n);
        let resid = fft_convolve_truncated(&params.residual, &bank.average()[ear], n);
        ears.push(
            prep.gamma
                .iter()
                .zip(conv.iter().zip(&resid))
                .map(|(g, (c, r))| g * c + (1.0 - g) * r)
                .collect(),
        );
    }
    AudioClip::new(ears, cfg.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{render_rir, RenderConfig};
    use std::sync::Arc;

    fn ring(f: impl Fn(f64) -> (Vec<f64>, Vec<f64>)) -> HrirBank {
        let entries = (0..12)
            .map(|i| {
                let az = i as f64 * 30.0 - 180.0;
                let (left, right) = f(az);
                HrirEntry {
                    azimuth: az,
                    elevation: 0.0,
                    left,
                    right,
                }
            })
            .chain([90.0, -90.0].map(|el| {
                let (left, right) = f(0.0);
                HrirEntry {
                    azimuth: 0.0,
                    elevation: el,
                    left,
                    right,
                }
            }))
            .collect();
        HrirBank::new(entries, 48_000).unwrap()
    }

    fn setup(bank: HrirBank) -> (SceneParams, Room, RenderConfig) {
        let room = Room::shoebox([4.0, 5.0, 3.0]).unwrap();
        let cfg = RenderConfig {
            render_length: 0.05,
            max_order: 2,
            axial_order: 0,
            hrir_set: Some(Arc::new(bank)),
            ..RenderConfig::default()
        };
        let mut p = SceneParams::initial(&room, Point::zeros(), cfg.samples());
        p.residual = (0..cfg.samples()).map(|i| 1e-3 * (i as f64 * 0.3).sin()).collect();
        (p, room, cfg)
    }

    #[test]
    fn impulse_bank_reproduces_mono() {
        let (p, room, cfg) = setup(ring(|_| (vec![1.0], vec![1.0])));
        let (s, l) = (Point::new(1.0, 1.0, 1.0), Point::new(3.0, 3.5, 1.6));
        let mono = render_rir(&p, &s, &l, &room, &cfg).unwrap();
        let bin = binauralize(&p, &s, &l, &room, &cfg, &Matrix3::identity()).unwrap();
        for ear in 0..2 {
            for (a, b) in bin.channel(ear).iter().zip(mono.channel(0)) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn silent_right_ear() {
        let (p, room, cfg) = setup(ring(|_| (vec![1.0, 0.5], vec![0.0])));
        let bin = binauralize(&p, &Point::new(1.0, 1.0, 1.0), &Point::new(3.0, 3.5, 1.6), &room, &cfg, &Matrix3::identity())
            .unwrap();
        assert!(bin.channel(1).iter().all(|v| *v == 0.0));
        assert!(bin.channel(0).iter().any(|v| *v != 0.0));
    }

    #[test]
    fn left_only_bank_isolates_left_path() {
        let bank = ring(|az| {
            let left = if az > 0.0 && az < 180.0 { 1.0 } else { 0.0 };
            (vec![left], vec![0.0])
        });
        let (mut p, _, cfg) = setup(bank);
        p.residual.iter_mut().for_each(|v| *v = 0.0);
        p.spline_knots = vec![40.0; 16];
        let room = Room::with_bounds(
            vec![],
            crate::geometry::Aabb {
                min: Point::repeat(-5.0),
                max: Point::repeat(5.0),
            },
            343.0,
        )
        .unwrap();
        // source on the listener's left (+y)
        let bin = binauralize(&p, &Point::new(0.0, 2.0, 0.0), &Point::zeros(), &room, &cfg, &Matrix3::identity()).unwrap();
        let e = |c: &[f64]| c.iter().map(|v| v * v).sum::<f64>();
        assert!(e(bin.channel(0)) > 1e-3);
        assert!(e(bin.channel(1)) < 1e-10);
    }

    #[test]
    fn symmetric_bank_balances_median_plane() {
        let bank = ring(|az| {
            let l = 1.0 + 0.5 * az.to_radians().sin();
            let r = 1.0 - 0.5 * az.to_radians().sin();
            (vec![l, 0.2 * l], vec![r, 0.2 * r])
        });
        let (mut p, room, cfg) = setup(bank);
        p.residual.iter_mut().for_each(|v| *v = 0.0);
        // listener at y = 2.5 facing +x: the room is mirror symmetric about y = 2.5
        let bin = binauralize(&p, &Point::new(3.2, 2.5, 1.1), &Point::new(1.0, 2.5, 1.5), &room, &cfg, &Matrix3::identity())
            .unwrap();
        let e = |c: &[f64]| c.iter().map(|v| v * v).sum::<f64>();
        let ratio = e(bin.channel(0)) / e(bin.channel(1));
        assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn missing_bank_is_rejected() {
        let (p, room, mut cfg) = setup(ring(|_| (vec![1.0], vec![1.0])));
        cfg.hrir_set = None;
        assert!(binauralize(&p, &Point::new(1.0, 1.0, 1.0), &Point::new(2.0, 2.0, 1.0), &room, &cfg, &Matrix3::identity()).is_err());
    }

    #[test]
    fn loads_bank_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        let mut entries = Vec::new();
        for (i, az) in [0.0, 90.0].iter().enumerate() {
            let f = format!("h{i}.wav");
            AudioClip::stereo(vec![0.5, 0.25], vec![0.125, 0.0], 48_000)
                .unwrap()
                .write_wav(&dir.path().join(&f))
                .unwrap();
            entries.push(serde_json::json!({"azimuth": az, "elevation": 0.0, "file": f}));
        }
        std::fs::write(
            dir.path().join("index.json"),
            serde_json::json!({"sampleRate": 48000, "entries": entries}).to_string(),
        )
        .unwrap();
        let bank = HrirBank::load(dir.path()).unwrap();
        assert_eq!(bank.entries().len(), 2);
        assert_eq!(bank.nearest(&Point::new(0.1, 1.0, 0.0).normalize()), 1);
        assert_eq!(bank.average()[0], vec![0.5, 0.25]);
    }
}
