//! Synthetic shoebox datasets rendered from known parameters.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, DatasetEntry, DatasetIndex, Split};
use crate::error::Result;
use crate::geometry::{Point, Room};
use crate::models::{SceneParams, SurfaceResponse, DEFAULT_KNOT_VALUE};
use crate::render::{render_rir, RenderConfig};

/// Layout of a synthetic dataset.
#[derive(Debug, Clone)]
pub struct FixtureSpec {
    pub size: [f64; 3],
    pub source: Point,
    pub train: Vec<Point>,
    pub test: Vec<Point>,
    pub render: RenderConfig,
    pub seed: u64,
}

impl FixtureSpec {
    /// 4×5×3 m room with twelve training and four test listeners.
    pub fn shoebox() -> Self {
        let size = [4.0, 5.0, 3.0];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut draw = |n: usize| -> Vec<Point> {
            (0..n)
                .map(|_| {
                    Point::new(
                        rng.random_range(0.5..size[0] - 0.5),
                        rng.random_range(0.5..size[1] - 0.5),
                        rng.random_range(0.8..size[2] - 0.8),
                    )
                })
                .collect()
        };
        let train = draw(12);
        let test = draw(4);
        FixtureSpec {
            size,
            source: Point::new(1.1, 1.3, 1.4),
            train,
            test,
            render: RenderConfig {
                render_length: 0.25,
                max_order: 3,
                axial_order: 8,
                ..RenderConfig::default()
            },
            seed: 11,
        }
    }
}

/// Decay time of the synthetic late residual, in seconds per 60 dB.
const RESIDUAL_RT60: f64 = 0.4;

/// Drop of the last decay-spline knot below the first.
const KNOT_DROP: f64 = 2.5;

/// Smallest surface amplitude in the synthetic truth.
const AMPLITUDE_FLOOR: f64 = 0.4;

/// Ground-truth parameters drawn from `seed`: distinct band responses per
/// surface, a short source response, a mild directivity and an
/// exponentially decaying noise residual that takes over late in the
/// response, so no part of a rendered response is exactly silent.
pub fn truth_params(room: &Room, source: Point, samples: usize, seed: u64) -> SceneParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = SceneParams::initial(room, source, samples);
    let bands = p.bands().clone();
    for resp in p.surfaces.values_mut() {
        let base = rng.random_range(0.5..0.9);
        let tilt = rng.random_range(-0.04..0.0);
        let amps: Vec<f64> = (0..bands.len())
            .map(|j| (base + tilt * j as f64 + rng.random_range(-0.03..0.03)).clamp(AMPLITUDE_FLOOR, 0.95))
            .collect();
        *resp = SurfaceResponse::from_amplitudes(bands.clone(), &amps);
    }
    p.directivity
        .log_gains_mut()
        .iter_mut()
        .for_each(|g| *g = rng.random_range(-0.2..0.2));
    for (n, v) in p.source_ir.iter_mut().enumerate().take(24).skip(1) {
        *v = rng.random_range(-0.2..0.2) * (-(n as f64) / 6.0).exp();
    }
    let rate = crate::SAMPLE_RATE as f64;
    let decay = 60.0 / 20.0 * std::f64::consts::LN_10 / RESIDUAL_RT60;
    for (n, v) in p.residual.iter_mut().enumerate() {
        let z: f64 = rng.sample(StandardNormal);
        *v = 0.02 * z * (-decay * n as f64 / rate).exp();
    }
    // Falls from the initial knot value by at most `KNOT_DROP`, a distance
    // a fit at the default spline rate can cover in a few hundred epochs.
    let k = p.spline_knots.len();
    for (i, v) in p.spline_knots.iter_mut().enumerate() {
        *v = DEFAULT_KNOT_VALUE - KNOT_DROP * i as f64 / (k - 1) as f64;
    }
    p.air_absorption = 0.9;
    p
}

/// Render `spec` under `dir` as `room.json`, `index.json`, `rirs/*.wav`
/// and the generating parameters in `truth/`.
pub fn write_fixture(dir: &Path, spec: &FixtureSpec) -> Result<Dataset> {
    let room = Room::shoebox(spec.size)?;
    room.save(&dir.join("room.json"))?;
    let truth = truth_params(&room, spec.source, spec.render.samples(), spec.seed);
    truth.save(&dir.join("truth"))?;
    let listeners = spec
        .train
        .iter()
        .map(|p| (p, Split::Train))
        .chain(spec.test.iter().map(|p| (p, Split::Test)));
    let mut entries = Vec::new();
    for (i, (pos, split)) in listeners.enumerate() {
        let rel = format!("rirs/{i:03}.wav");
        render_rir(&truth, &spec.source, pos, &room, &spec.render)?.write_wav(&dir.join(&rel))?;
        entries.push(DatasetEntry {
            mic_position: (*pos).into(),
            rir: rel,
            music_paths: vec![],
            binaural: false,
            split,
        });
    }
    let index = DatasetIndex {
        room: "room.json".into(),
        sample_rate: spec.render.sample_rate,
        source_location: Some(spec.source.into()),
        dry_music: None,
        entries,
    };
    Dataset::write_index(dir, &index)?;
    Dataset::load(dir)
}
