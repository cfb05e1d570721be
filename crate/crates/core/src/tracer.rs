//! Image-source path tracing.
//!
//! [`trace_paths`] enumerates every surface sequence of length
//! `1..=max_order` (no surface twice in a row) and keeps the ones whose
//! backward image construction yields a valid, unoccluded specular walk.
//! [`axial_boost`] extends this to much higher orders for pairs of parallel
//! surfaces only, where the number of candidate sequences grows linearly.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    detect_parallel_pairs, mirror_point, segment_intersect_with, Point, Room, Surface, SurfaceId,
    ENDPOINT_TOLERANCE,
};

/// Hard cap on the exhaustive enumeration order.
pub const MAX_TRACE_ORDER: usize = 8;
pub const DEFAULT_MAX_ORDER: usize = 5;
pub const DEFAULT_AXIAL_ORDER: usize = 50;

/// Band around a segment endpoint inside which occluder hits are ignored.
const OCCLUSION_BAND: f64 = 1e-6;

/// One specular path from source to listener.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PathRecord {
    /// Total path length in meters.
    pub length: f64,
    /// Surfaces in reflection order.
    pub surfaces: Vec<SurfaceId>,
    /// Unit direction in which the path leaves the source.
    pub out_direction: Point,
    /// Unit direction from the listener toward where the path arrives from.
    pub in_direction: Point,
    /// `length / speed_of_sound`, seconds.
    pub arrival_time: f64,
    /// Reflection points, one per surface.
    pub points: Vec<Point>,
}

impl PathRecord {
    pub fn order(&self) -> usize {
        self.surfaces.len()
    }

    /// Length of the stored polyline source → points → listener.
    pub fn polyline_length(&self, source: &Point, listener: &Point) -> f64 {
        let mut prev = *source;
        let mut total = 0.0;
        for p in self.points.iter().chain(std::iter::once(listener)) {
            total += (p - prev).norm();
            prev = *p;
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PathSet {
    pub paths: Vec<PathRecord>,
    pub max_order: usize,
    pub axial_order: usize,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// All valid paths up to `max_order` reflections, plus the direct path when
/// it is unoccluded.
pub fn trace_paths(
    room: &Room,
    source: &Point,
    listener: &Point,
    max_order: usize,
) -> Result<PathSet> {
    if max_order > MAX_TRACE_ORDER {
        return Err(invalid(format!(
            "max order {max_order} exceeds the limit of {MAX_TRACE_ORDER}; use axial boosting for higher orders"
        )));
    }
    check_inside(room, source, "source")?;
    check_inside(room, listener, "listener")?;

    let surfaces = room.surfaces();
    let mut paths = Vec::new();
    if let Some(direct) = solve_sequence(room, source, listener, &[]) {
        paths.push(direct);
    }

    // Depth-first over sequences, carrying the prefix images.
    let mut seq: Vec<usize> = Vec::with_capacity(max_order);
    let mut images: Vec<Point> = vec![*source];
    fn recurse(
        room: &Room,
        listener: &Point,
        max_order: usize,
        seq: &mut Vec<usize>,
        images: &mut Vec<Point>,
        out: &mut Vec<PathRecord>,
    ) {
        let surfaces = room.surfaces();
        for idx in 0..surfaces.len() {
            if seq.last() == Some(&idx) {
                continue;
            }
            let image = mirror_point(images.last().unwrap(), &surfaces[idx]);
            seq.push(idx);
            images.push(image);
            if let Some(path) = solve_with_images(room, listener, seq, images) {
                out.push(path);
            }
            if seq.len() < max_order {
                recurse(room, listener, max_order, seq, images, out);
            }
            seq.pop();
            images.pop();
        }
    }
    if max_order > 0 && !surfaces.is_empty() {
        recurse(room, listener, max_order, &mut seq, &mut images, &mut paths);
    }

    sort_paths(&mut paths);
    Ok(PathSet {
        paths,
        max_order,
        axial_order: 0,
    })
}

/// Alternating bounce paths between each parallel pair, for orders
/// `max_order + 1 ..= axial_order`.
pub fn axial_boost(
    room: &Room,
    source: &Point,
    listener: &Point,
    pairs: &[(SurfaceId, SurfaceId)],
    max_order: usize,
    axial_order: usize,
) -> Result<Vec<PathRecord>> {
    let mut out = Vec::new();
    for &(a, b) in pairs {
        let ia = index_of(room, a)?;
        let ib = index_of(room, b)?;
        for (first, second) in [(ia, ib), (ib, ia)] {
            let mut images = vec![*source];
            let mut seq = Vec::with_capacity(axial_order);
            for k in 1..=axial_order {
                let idx = if k % 2 == 1 { first } else { second };
                let image = mirror_point(images.last().unwrap(), &room.surfaces()[idx]);
                seq.push(idx);
                images.push(image);
                if k <= max_order {
                    continue;
                }
                if let Some(path) = solve_with_images(room, listener, &seq, &images) {
                    out.push(path);
                }
            }
        }
    }
    Ok(out)
}

/// Deduplicated union of `base` and `axial`, sorted by arrival time then
/// surface ids, with directions recomputed from the stored polylines.
pub fn merge_and_annotate(
    base: PathSet,
    axial: Vec<PathRecord>,
    source: &Point,
    listener: &Point,
) -> PathSet {
    let mut seen: BTreeSet<Vec<SurfaceId>> = BTreeSet::new();
    let mut paths = Vec::with_capacity(base.paths.len() + axial.len());
    let axial_max = axial.iter().map(PathRecord::order).max().unwrap_or(0);
    for mut p in base.paths.into_iter().chain(axial) {
        if !seen.insert(p.surfaces.clone()) {
            continue;
        }
        annotate(&mut p, source, listener);
        paths.push(p);
    }
    sort_paths(&mut paths);
    PathSet {
        paths,
        max_order: base.max_order,
        axial_order: base.axial_order.max(axial_max),
    }
}

/// Full tracing pipeline: exhaustive enumeration, axial boosting, merge.
pub fn trace_all(
    room: &Room,
    source: &Point,
    listener: &Point,
    max_order: usize,
    axial_order: usize,
) -> Result<PathSet> {
    let base = trace_paths(room, source, listener, max_order)?;
    let pairs = detect_parallel_pairs(room);
    let axial = axial_boost(room, source, listener, &pairs, max_order, axial_order)?;
    let mut set = merge_and_annotate(base, axial, source, listener);
    set.axial_order = axial_order.max(max_order);
    Ok(set)
}

/// Validate a single surface sequence.
pub fn solve_sequence(
    room: &Room,
    source: &Point,
    listener: &Point,
    surfaces: &[SurfaceId],
) -> Option<PathRecord> {
    let mut seq = Vec::with_capacity(surfaces.len());
    let mut images = vec![*source];
    for id in surfaces {
        let idx = room.surfaces().iter().position(|s| s.id() == *id)?;
        images.push(mirror_point(images.last().unwrap(), &room.surfaces()[idx]));
        seq.push(idx);
    }
    solve_with_images(room, listener, &seq, &images)
}

fn solve_with_images(
    room: &Room,
    listener: &Point,
    seq: &[usize],
    images: &[Point],
) -> Option<PathRecord> {
    let surfaces = room.surfaces();
    let k = seq.len();
    let source = images[0];

    // Walk backward from the listener toward successive images.
    let mut points = vec![Point::zeros(); k];
    let mut target = *listener;
    for j in (0..k).rev() {
        let s = &surfaces[seq[j]];
        let hit = plane_crossing(&target, &images[j + 1], s)?;
        if !s.contains(&hit, ENDPOINT_TOLERANCE) {
            return None;
        }
        points[j] = hit;
        target = hit;
    }

    let mut prev = source;
    for (i, p) in points.iter().chain(std::iter::once(listener)).enumerate() {
        if (p - prev).norm() <= ENDPOINT_TOLERANCE {
            return None;
        }
        let occluded = surfaces
            .iter()
            .any(|s| segment_intersect_with(&prev, p, s, OCCLUSION_BAND).is_some());
        if occluded {
            return None;
        }
        // The walk must actually cross to the listener side at each bounce.
        if i > 0 && i <= k {
            let s = &surfaces[seq[i - 1]];
            let before = if i >= 2 { points[i - 2] } else { source };
            if s.signed_distance(&before) * s.signed_distance(p) <= 0.0 {
                return None;
            }
        }
        prev = *p;
    }

    let length = (listener - images[k]).norm();
    let mut record = PathRecord {
        length,
        surfaces: seq.iter().map(|&i| surfaces[i].id()).collect(),
        out_direction: Point::zeros(),
        in_direction: Point::zeros(),
        arrival_time: length / room.speed_of_sound(),
        points,
    };
    annotate(&mut record, &source, listener);
    Some(record)
}

/// Crossing of the open segment `(a, b)` with the (unbounded) plane of `s`.
fn plane_crossing(a: &Point, b: &Point, s: &Surface) -> Option<Point> {
    let da = s.signed_distance(a);
    let db = s.signed_distance(b);
    if da.abs() <= ENDPOINT_TOLERANCE || db.abs() <= ENDPOINT_TOLERANCE {
        return None;
    }
    if (da > 0.0) == (db > 0.0) {
        return None;
    }
    let t = da / (da - db);
    Some(a + t * (b - a))
}

fn annotate(p: &mut PathRecord, source: &Point, listener: &Point) {
    let first = p.points.first().unwrap_or(listener);
    let last = p.points.last().unwrap_or(source);
    p.out_direction = (first - source).normalize();
    p.in_direction = (last - listener).normalize();
}

fn sort_paths(paths: &mut [PathRecord]) {
    paths.sort_by(|a, b| {
        a.arrival_time
            .total_cmp(&b.arrival_time)
            .then_with(|| a.surfaces.cmp(&b.surfaces))
    });
}

fn index_of(room: &Room, id: SurfaceId) -> Result<usize> {
    room.surfaces()
        .iter()
        .position(|s| s.id() == id)
        .ok_or(Error::UnknownSurface(id))
}

fn check_inside(room: &Room, p: &Point, what: &str) -> Result<()> {
    if !p.iter().all(|c| c.is_finite()) || !room.bounding_box().contains(p, 1e-9) {
        return Err(invalid(format!(
            "{what} ({:.3}, {:.3}, {:.3}) is outside the room bounding box",
            p.x, p.y, p.z
        )));
    }
    Ok(())
}

/// Write one JSON object per path.
pub fn write_jsonl(path: &Path, paths: &[PathRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for p in paths {
        let line = serde_json::to_string(p).map_err(|e| Error::json(path, e))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<PathRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::json(path, e))?);
    }
    Ok(out)
}
