use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::directivity::DEFAULT_SHARPNESS;
use super::spline::SPLINE_KNOTS;
use super::{Bands, DirectivityMap, SurfaceResponse};
use crate::error::{invalid, read_json, write_json, Error, Result};
use crate::geometry::{Point, Room, SurfaceId};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const DEFAULT_SOURCE_IR_LEN: usize = 512;
pub const DEFAULT_KNOT_VALUE: f64 = 4.0;
pub const DEFAULT_AIR_ABSORPTION: f64 = 0.95;
/// Lower clamp for the air absorption coefficient.
pub const MIN_AIR_ABSORPTION: f64 = 1e-3;

/// The learnable parameter groups, each with its own step size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ParamGroup {
    Directivity,
    Surfaces,
    SourceIr,
    Residual,
    Spline,
    AirAbsorption,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 6] = [
        ParamGroup::Directivity,
        ParamGroup::Surfaces,
        ParamGroup::SourceIr,
        ParamGroup::Residual,
        ParamGroup::Spline,
        ParamGroup::AirAbsorption,
    ];
}

/// Everything the renderer needs besides geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    pub directivity: DirectivityMap,
    pub source_ir: Vec<f64>,
    pub surfaces: BTreeMap<SurfaceId, SurfaceResponse>,
    pub residual: Vec<f64>,
    pub spline_knots: Vec<f64>,
    pub air_absorption: f64,
    pub source_location: Point,
}

impl SceneParams {
    /// Neutral starting point: omnidirectional unit directivity, impulse
    /// source response, energy reflection 0.5 everywhere, zero residual.
    pub fn initial(room: &Room, source_location: Point, residual_len: usize) -> Self {
        let bands = Bands::default();
        let mut source_ir = vec![0.0; DEFAULT_SOURCE_IR_LEN];
        source_ir[0] = 1.0;
        SceneParams {
            directivity: DirectivityMap::new(bands.clone(), DEFAULT_SHARPNESS),
            source_ir,
            surfaces: room
                .surfaces()
                .iter()
                .map(|s| (s.id(), SurfaceResponse::new(bands.clone())))
                .collect(),
            residual: vec![0.0; residual_len],
            spline_knots: vec![DEFAULT_KNOT_VALUE; SPLINE_KNOTS],
            air_absorption: DEFAULT_AIR_ABSORPTION,
            source_location,
        }
    }

    pub fn bands(&self) -> &Bands {
        self.directivity.bands()
    }

    pub fn surface(&self, id: SurfaceId) -> Result<&SurfaceResponse> {
        self.surfaces.get(&id).ok_or(Error::UnknownSurface(id))
    }

    /// Check structural invariants against a render of `samples` samples.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let f = self.bands().len();
        if self.source_ir.is_empty() || self.source_ir.len() > samples {
            return Err(invalid(format!(
                "source IR length {} must be in 1..={samples}",
                self.source_ir.len()
            )));
        }
        if self.residual.len() > samples {
            return Err(invalid(format!(
                "residual length {} exceeds render length {samples}",
                self.residual.len()
            )));
        }
        if self.spline_knots.len() != SPLINE_KNOTS {
            return Err(invalid(format!("expected {SPLINE_KNOTS} spline knots")));
        }
        if !(self.air_absorption > 0.0 && self.air_absorption <= 1.0) {
            return Err(invalid(format!(
                "air absorption {} outside (0, 1]",
                self.air_absorption
            )));
        }
        for (id, s) in &self.surfaces {
            if s.raw.len() != f || s.bands != *self.bands() {
                return Err(invalid(format!("surface {id} has mismatched bands")));
            }
        }
        Ok(())
    }

    /// Visit every learnable slice in a fixed order.
    pub fn groups_mut(&mut self) -> Vec<(ParamGroup, &mut [f64])> {
        let mut out: Vec<(ParamGroup, &mut [f64])> =
            vec![(ParamGroup::Directivity, self.directivity.log_gains_mut())];
        for s in self.surfaces.values_mut() {
            out.push((ParamGroup::Surfaces, s.raw.as_mut_slice()));
        }
        out.push((ParamGroup::SourceIr, self.source_ir.as_mut_slice()));
        out.push((ParamGroup::Residual, self.residual.as_mut_slice()));
        out.push((ParamGroup::Spline, self.spline_knots.as_mut_slice()));
        out.push((
            ParamGroup::AirAbsorption,
            std::slice::from_mut(&mut self.air_absorption),
        ));
        out
    }

    pub fn param_count(&mut self) -> usize {
        self.groups_mut().iter().map(|(_, s)| s.len()).sum()
    }

    /// Mutable reference to the `index`-th scalar in visiting order.
    pub fn flat_mut(&mut self, mut index: usize) -> Option<(ParamGroup, &mut f64)> {
        for (g, s) in self.groups_mut() {
            if index < s.len() {
                return Some((g, &mut s[index]));
            }
            index -= s.len();
        }
        None
    }

    /// Keep constrained parameters inside their domain.
    pub fn clamp(&mut self) {
        self.air_absorption = self.air_absorption.clamp(MIN_AIR_ABSORPTION, 1.0);
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_f32(&dir.join(SOURCE_IR_FILE), &self.source_ir)?;
        write_f32(&dir.join(RESIDUAL_FILE), &self.residual)?;
        let o = self.directivity.orientation();
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION,
            bands: self.bands().centers().to_vec(),
            sharpness: self.directivity.sharpness(),
            orientation: [
                [o[(0, 0)], o[(0, 1)], o[(0, 2)]],
                [o[(1, 0)], o[(1, 1)], o[(1, 2)]],
                [o[(2, 0)], o[(2, 1)], o[(2, 2)]],
            ],
            log_gains: self.directivity.log_gains().to_vec(),
            surfaces: self
                .surfaces
                .iter()
                .map(|(id, s)| SurfaceEntry {
                    id: *id,
                    raw: s.raw.clone(),
                })
                .collect(),
            source_ir: BlobRef {
                file: SOURCE_IR_FILE.into(),
                length: self.source_ir.len(),
            },
            residual: BlobRef {
                file: RESIDUAL_FILE.into(),
                length: self.residual.len(),
            },
            spline_knots: self.spline_knots.clone(),
            air_absorption: self.air_absorption,
            source_location: self.source_location.into(),
        };
        write_json(&dir.join(PARAMS_FILE), &file)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(PARAMS_FILE);
        let file: CheckpointFile = read_json(&path)?;
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "{}: checkpoint version {} not supported",
                path.display(),
                file.version
            )));
        }
        let bands = Bands::from_centers(file.bands)?;
        let o = file.orientation;
        let orientation = Matrix3::new(
            o[0][0], o[0][1], o[0][2], o[1][0], o[1][1], o[1][2], o[2][0], o[2][1], o[2][2],
        );
        let directivity =
            DirectivityMap::from_parts(file.log_gains, bands.clone(), file.sharpness, orientation)?;
        let source_ir = read_f32(&dir.join(&file.source_ir.file), file.source_ir.length)?;
        let residual = read_f32(&dir.join(&file.residual.file), file.residual.length)?;
        let surfaces = file
            .surfaces
            .into_iter()
            .map(|s| {
                (
                    s.id,
                    SurfaceResponse {
                        raw: s.raw,
                        bands: bands.clone(),
                    },
                )
            })
            .collect();
        let params = SceneParams {
            directivity,
            source_ir,
            surfaces,
            residual,
            spline_knots: file.spline_knots,
            air_absorption: file.air_absorption,
            source_location: file.source_location.into(),
        };
        params.validate(usize::MAX)?;
        Ok(params)
    }
}

/// Gradient with the same layout as [`SceneParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGradient {
    pub log_gains: Vec<f64>,
    pub surfaces: BTreeMap<SurfaceId, Vec<f64>>,
    pub source_ir: Vec<f64>,
    pub residual: Vec<f64>,
    pub spline_knots: Vec<f64>,
    pub air_absorption: f64,
}

impl SceneGradient {
    pub fn zeros_like(p: &SceneParams) -> Self {
        SceneGradient {
            log_gains: vec![0.0; p.directivity.log_gains().len()],
            surfaces: p
                .surfaces
                .iter()
                .map(|(id, s)| (*id, vec![0.0; s.raw.len()]))
                .collect(),
            source_ir: vec![0.0; p.source_ir.len()],
            residual: vec![0.0; p.residual.len()],
            spline_knots: vec![0.0; p.spline_knots.len()],
            air_absorption: 0.0,
        }
    }

    /// Slices in the same order as [`SceneParams::groups_mut`].
    pub fn groups(&self) -> Vec<(ParamGroup, &[f64])> {
        let mut out: Vec<(ParamGroup, &[f64])> = vec![(ParamGroup::Directivity, &self.log_gains)];
        for s in self.surfaces.values() {
            out.push((ParamGroup::Surfaces, s));
        }
        out.push((ParamGroup::SourceIr, &self.source_ir));
        out.push((ParamGroup::Residual, &self.residual));
        out.push((ParamGroup::Spline, &self.spline_knots));
        out.push((
            ParamGroup::AirAbsorption,
            std::slice::from_ref(&self.air_absorption),
        ));
        out
    }

    pub fn flat(&self) -> Vec<f64> {
        self.groups()
            .into_iter()
            .flat_map(|(_, s)| s.iter().copied())
            .collect()
    }

    pub fn add_scaled(&mut self, other: &SceneGradient, scale: f64) {
        fn axpy(a: &mut [f64], b: &[f64], s: f64) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += s * y);
        }
        axpy(&mut self.log_gains, &other.log_gains, scale);
        for (id, g) in &mut self.surfaces {
            if let Some(o) = other.surfaces.get(id) {
                axpy(g, o, scale);
            }
        }
        axpy(&mut self.source_ir, &other.source_ir, scale);
        axpy(&mut self.residual, &other.residual, scale);
        axpy(&mut self.spline_knots, &other.spline_knots, scale);
        self.air_absorption += scale * other.air_absorption;
    }

    pub fn is_finite(&self) -> bool {
        self.groups()
            .iter()
            .all(|(_, s)| s.iter().all(|v| v.is_finite()))
    }
}

/// Copy the reflection response of `from_id` in `from` onto surface
/// `to_id` of `to` (which must exist in `to_room`).
pub fn transfer_surface(
    from: &SceneParams,
    from_id: SurfaceId,
    to: &SceneParams,
    to_id: SurfaceId,
    to_room: &Room,
) -> Result<SceneParams> {
    let resp = from.surface(from_id)?;
    if to_room.surface(to_id).is_none() {
        return Err(Error::UnknownSurface(to_id));
    }
    if resp.bands != *to.bands() {
        return Err(invalid("source and target checkpoints use different bands"));
    }
    let mut out = to.clone();
    out.surfaces.insert(to_id, resp.clone());
    Ok(out)
}

/// Virtual source translation: same models, moved source.
pub fn translate_source(params: &SceneParams, delta: &Point) -> SceneParams {
    let mut out = params.clone();
    out.source_location += delta;
    out
}

const PARAMS_FILE: &str = "params.json";
const SOURCE_IR_FILE: &str = "source_ir.f32";
const RESIDUAL_FILE: &str = "residual.f32";

/// `params.json` inside a checkpoint directory. Time signals live in
/// sibling files of raw little-endian `f32`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CheckpointFile {
    version: u32,
    bands: Vec<f64>,
    sharpness: f64,
    /// Row-major rotation applied to the source.
    orientation: [[f64; 3]; 3],
    /// Row-major `[lattice point][band]`.
    log_gains: Vec<f64>,
    surfaces: Vec<SurfaceEntry>,
    source_ir: BlobRef,
    residual: BlobRef,
    spline_knots: Vec<f64>,
    air_absorption: f64,
    source_location: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
struct SurfaceEntry {
    id: SurfaceId,
    raw: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BlobRef {
    file: String,
    length: usize,
}

fn write_f32(path: &Path, values: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = values
        .iter()
        .flat_map(|v| (*v as f32).to_le_bytes())
        .collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_f32(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 4 {
        return Err(Error::Format(format!(
            "{}: expected {} f32 values, found {} bytes",
            path.display(),
            expected,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}
