//! Planar room geometry.
//!
//! A [`Room`] is a set of convex planar polygons ([`Surface`]). Surfaces are
//! two-sided: the normal derived from the vertex winding is only used to
//! define the plane, never to decide which side reflects.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{read_json, write_json, Error, Result};

/// A point or direction in room coordinates, in meters.
pub type Point = Vector3<f64>;

pub type SurfaceId = u32;

/// Maximum distance of any vertex from the fitted plane.
pub const COPLANAR_TOLERANCE: f64 = 1e-6;

/// Endpoints closer than this to a surface do not count as intersections.
pub const ENDPOINT_TOLERANCE: f64 = 1e-9;

/// Angular tolerance (radians) for parallel-surface detection.
pub const PARALLEL_TOLERANCE: f64 = 1e-4;

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

/// A convex planar polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    id: SurfaceId,
    name: String,
    vertices: Vec<Point>,
    normal: Point,
    offset: f64,
}

impl Surface {
    /// Build a surface, validating planarity and convexity.
    ///
    /// The normal follows the right-hand rule over the vertex order.
    pub fn new(id: SurfaceId, name: impl Into<String>, vertices: Vec<Point>) -> Result<Self> {
        let name = name.into();
        if vertices.len() < 3 {
            return Err(Error::Geometry(format!(
                "surface {id} ({name}) needs at least 3 vertices"
            )));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Geometry(format!(
                "surface {id} ({name}) has non-finite vertices"
            )));
        }

        // Newell's method is robust to collinear leading vertices.
        let mut n = Point::zeros();
        for (i, a) in vertices.iter().enumerate() {
            let b = &vertices[(i + 1) % vertices.len()];
            n.x += (a.y - b.y) * (a.z + b.z);
            n.y += (a.z - b.z) * (a.x + b.x);
            n.z += (a.x - b.x) * (a.y + b.y);
        }
        let norm = n.norm();
        if norm < 1e-12 {
            return Err(Error::Geometry(format!(
                "surface {id} ({name}) is degenerate (zero area)"
            )));
        }
        let normal = n / norm;
        let centroid = vertices.iter().sum::<Point>() / vertices.len() as f64;
        let offset = normal.dot(&centroid);

        for v in &vertices {
            let dist = (normal.dot(v) - offset).abs();
            if dist > COPLANAR_TOLERANCE {
                return Err(Error::Geometry(format!(
                    "surface {id} ({name}) is not planar: vertex off plane by {dist:.3e} m"
                )));
            }
        }

        let count = vertices.len();
        for i in 0..count {
            let a = vertices[i];
            let b = vertices[(i + 1) % count];
            let c = vertices[(i + 2) % count];
            if (b - a).norm() < COPLANAR_TOLERANCE {
                return Err(Error::Geometry(format!(
                    "surface {id} ({name}) has repeated vertices"
                )));
            }
            let turn = (b - a).cross(&(c - b)).dot(&normal);
            if turn < -COPLANAR_TOLERANCE * (b - a).norm().max(1.0) {
                return Err(Error::Geometry(format!(
                    "surface {id} ({name}) is not convex"
                )));
            }
        }

        Ok(Surface {
            id,
            name,
            vertices,
            normal,
            offset,
        })
    }

    /// Axis-aligned rectangle helper: `axis` is the constant coordinate.
    pub fn axis_rect(
        id: SurfaceId,
        name: impl Into<String>,
        axis: usize,
        value: f64,
        lo: [f64; 2],
        hi: [f64; 2],
    ) -> Result<Self> {
        let (u, v) = match axis {
            0 => (1, 2),
            1 => (2, 0),
            2 => (0, 1),
            _ => return Err(Error::Geometry(format!("axis {axis} out of range"))),
        };
        let corner = |a: f64, b: f64| {
            let mut p = Point::zeros();
            p[axis] = value;
            p[u] = a;
            p[v] = b;
            p
        };
        Surface::new(
            id,
            name,
            vec![
                corner(lo[0], lo[1]),
                corner(hi[0], lo[1]),
                corner(hi[0], hi[1]),
                corner(lo[0], hi[1]),
            ],
        )
    }

    pub fn id(&self) -> SurfaceId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn normal(&self) -> Point {
        self.normal
    }

    /// Signed distance of `p` from the surface plane.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Whether a point lying on the plane is inside the polygon (boundary
    /// inclusive, within `tol` meters).
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        let count = self.vertices.len();
        (0..count).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % count];
            let edge = b - a;
            let len = edge.norm();
            edge.cross(&(p - a)).dot(&self.normal) >= -tol * len
        })
    }

    /// Same polygon translated by `delta`.
    pub fn translated(&self, delta: &Point) -> Self {
        Surface {
            id: self.id,
            name: self.name.clone(),
            vertices: self.vertices.iter().map(|v| v + delta).collect(),
            normal: self.normal,
            offset: self.offset + self.normal.dot(delta),
        }
    }
}

/// Reflect `p` across the plane of `s`.
pub fn mirror_point(p: &Point, s: &Surface) -> Point {
    p - 2.0 * s.signed_distance(p) * s.normal
}

/// Intersection of the open segment `(a, b)` with polygon `s`.
///
/// Segments parallel to the plane never intersect. Hits within
/// [`ENDPOINT_TOLERANCE`] of either endpoint are ignored.
pub fn segment_intersect(a: &Point, b: &Point, s: &Surface) -> Option<Point> {
    segment_intersect_with(a, b, s, ENDPOINT_TOLERANCE)
}

pub(crate) fn segment_intersect_with(
    a: &Point,
    b: &Point,
    s: &Surface,
    endpoint_tol: f64,
) -> Option<Point> {
    let da = s.signed_distance(a);
    let db = s.signed_distance(b);
    if da.abs() <= endpoint_tol || db.abs() <= endpoint_tol {
        return None;
    }
    if (da > 0.0) == (db > 0.0) {
        return None;
    }
    let t = da / (da - db);
    let seg = b - a;
    let len = seg.norm();
    if t * len <= endpoint_tol || (1.0 - t) * len <= endpoint_tol {
        return None;
    }
    let hit = a + t * seg;
    s.contains(&hit, ENDPOINT_TOLERANCE).then_some(hit)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - tol && p[i] <= self.max[i] + tol)
    }

    pub fn extent(&self) -> Point {
        self.max - self.min
    }
}

/// A room: a set of surfaces plus the speed of sound.
#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    surfaces: Vec<Surface>,
    bounding_box: Aabb,
    speed_of_sound: f64,
}

impl Room {
    /// Build a room whose bounding box is the extent of its surfaces.
    pub fn new(surfaces: Vec<Surface>, speed_of_sound: f64) -> Result<Self> {
        if surfaces.is_empty() {
            return Err(Error::Geometry(
                "a room without surfaces needs an explicit bounding box".into(),
            ));
        }
        let mut min = Point::repeat(f64::INFINITY);
        let mut max = Point::repeat(f64::NEG_INFINITY);
        for v in surfaces.iter().flat_map(|s| s.vertices()) {
            min = min.inf(v);
            max = max.sup(v);
        }
        Room::with_bounds(surfaces, Aabb { min, max }, speed_of_sound)
    }

    pub fn with_bounds(surfaces: Vec<Surface>, bounds: Aabb, speed_of_sound: f64) -> Result<Self> {
        if !(speed_of_sound > 0.0 && speed_of_sound.is_finite()) {
            return Err(Error::Geometry(format!(
                "speed of sound must be positive, got {speed_of_sound}"
            )));
        }
        if (0..3).any(|i| bounds.min[i] > bounds.max[i]) {
            return Err(Error::Geometry("bounding box min exceeds max".into()));
        }
        let mut seen = HashSet::new();
        for s in &surfaces {
            if !seen.insert(s.id()) {
                return Err(Error::Geometry(format!("duplicate surface id {}", s.id())));
            }
        }
        Ok(Room {
            surfaces,
            bounding_box: bounds,
            speed_of_sound,
        })
    }

    /// Closed axis-aligned box `[0, size]` with six walls, ids 0..6 in the
    /// order x=0, x=max, y=0, y=max, z=0 (floor), z=max (ceiling).
    pub fn shoebox(size: [f64; 3]) -> Result<Self> {
        let [x, y, z] = size;
        let walls = vec![
            Surface::axis_rect(0, "x0", 0, 0.0, [0.0, 0.0], [y, z])?,
            Surface::axis_rect(1, "x1", 0, x, [0.0, 0.0], [y, z])?,
            Surface::axis_rect(2, "y0", 1, 0.0, [0.0, 0.0], [z, x])?,
            Surface::axis_rect(3, "y1", 1, y, [0.0, 0.0], [z, x])?,
            Surface::axis_rect(4, "floor", 2, 0.0, [0.0, 0.0], [x, y])?,
            Surface::axis_rect(5, "ceiling", 2, z, [0.0, 0.0], [x, y])?,
        ];
        Room::new(walls, DEFAULT_SPEED_OF_SOUND)
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    pub fn surface(&self, id: SurfaceId) -> Option<&Surface> {
        self.surfaces.iter().find(|s| s.id() == id)
    }

    pub fn bounding_box(&self) -> Aabb {
        self.bounding_box
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }

    /// A copy of this room with one more surface.
    pub fn with_surface(&self, surface: Surface) -> Result<Self> {
        let mut surfaces = self.surfaces.clone();
        surfaces.push(surface);
        let mut bounds = self.bounding_box;
        for v in surfaces.last().unwrap().vertices() {
            bounds.min = bounds.min.inf(v);
            bounds.max = bounds.max.sup(v);
        }
        Room::with_bounds(surfaces, bounds, self.speed_of_sound)
    }

    /// A copy of this room with surface `id` replaced.
    pub fn replace_surface(&self, surface: Surface) -> Result<Self> {
        let idx = self
            .surfaces
            .iter()
            .position(|s| s.id() == surface.id())
            .ok_or(Error::UnknownSurface(surface.id()))?;
        let mut surfaces = self.surfaces.clone();
        surfaces[idx] = surface;
        Room::with_bounds(surfaces, self.bounding_box, self.speed_of_sound)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: RoomFile = read_json(path)?;
        file.into_room()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, &RoomFile::from_room(self))
    }
}

/// All unordered pairs of distinct parallel planes, sorted by id pair.
pub fn detect_parallel_pairs(room: &Room) -> Vec<(SurfaceId, SurfaceId)> {
    let cos_tol = PARALLEL_TOLERANCE.cos();
    let surfaces = room.surfaces();
    let mut pairs = Vec::new();
    for (i, a) in surfaces.iter().enumerate() {
        for b in &surfaces[i + 1..] {
            let dot = a.normal.dot(&b.normal);
            if dot.abs() < cos_tol {
                continue;
            }
            // Same plane when b's offset, expressed along a's normal, matches.
            let b_offset = if dot > 0.0 { b.offset } else { -b.offset };
            if (a.offset - b_offset).abs() <= COPLANAR_TOLERANCE {
                continue;
            }
            let (lo, hi) = if a.id < b.id { (a.id, b.id) } else { (b.id, a.id) };
            pairs.push((lo, hi));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// On-disk room description.
///
/// ```json
/// {
///   "speedOfSound": 343.0,
///   "boundingBox": { "min": [0, 0, 0], "max": [4, 5, 3] },
///   "surfaces": [
///     { "id": 0, "name": "floor", "vertices": [[0,0,0],[4,0,0],[4,5,0],[0,5,0]] }
///   ]
/// }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoomFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_of_sound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounding_box: Option<BoxFile>,
    pub surfaces: Vec<SurfaceFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxFile {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceFile {
    pub id: SurfaceId,
    #[serde(default)]
    pub name: String,
    pub vertices: Vec<[f64; 3]>,
}

impl RoomFile {
    pub fn into_room(self) -> Result<Room> {
        let surfaces = self
            .surfaces
            .into_iter()
            .map(|s| {
                let verts = s.vertices.iter().map(|v| Point::from(*v)).collect();
                Surface::new(s.id, s.name, verts)
            })
            .collect::<Result<Vec<_>>>()?;
        let c = self.speed_of_sound.unwrap_or(DEFAULT_SPEED_OF_SOUND);
        match self.bounding_box {
            Some(b) => Room::with_bounds(
                surfaces,
                Aabb {
                    min: b.min.into(),
                    max: b.max.into(),
                },
                c,
            ),
            None => Room::new(surfaces, c),
        }
    }

    pub fn from_room(room: &Room) -> Self {
        let bb = room.bounding_box();
        RoomFile {
            speed_of_sound: Some(room.speed_of_sound()),
            bounding_box: Some(BoxFile {
                min: bb.min.into(),
                max: bb.max.into(),
            }),
            surfaces: room
                .surfaces()
                .iter()
                .map(|s| SurfaceFile {
                    id: s.id(),
                    name: s.name().to_string(),
                    vertices: s.vertices().iter().map(|v| (*v).into()).collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square_z0() -> Surface {
        Surface::axis_rect(0, "sq", 2, 0.0, [-1.0, -1.0], [1.0, 1.0]).unwrap()
    }

    #[test]
    fn mirror_across_floor() {
        let floor = Surface::axis_rect(0, "floor", 2, 0.0, [0.0, 0.0], [5.0, 5.0]).unwrap();
        let m = mirror_point(&Point::new(1.0, 2.0, 3.0), &floor);
        assert!((m - Point::new(1.0, 2.0, -3.0)).norm() < 1e-12);
        let on = Point::new(1.0, 1.0, 0.0);
        assert_eq!(mirror_point(&on, &floor), on);
    }

    #[test]
    fn shoebox_has_three_parallel_pairs() {
        let room = Room::shoebox([4.0, 5.0, 3.0]).unwrap();
        assert_eq!(detect_parallel_pairs(&room), vec![(0, 1), (2, 3), (4, 5)]);
    }

    #[test]
    fn perpendicular_walls_are_not_parallel() {
        let a = Surface::axis_rect(0, "a", 0, 0.0, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let b = Surface::axis_rect(1, "b", 1, 0.0, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let room = Room::new(vec![a, b], 343.0).unwrap();
        assert!(detect_parallel_pairs(&room).is_empty());
    }

    #[test]
    fn antiparallel_normals_form_a_pair() {
        let up = Surface::new(
            3,
            "up",
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(1.0, 1.0, 0.0),
            ],
        )
        .unwrap();
        let down = Surface::new(
            1,
            "down",
            vec![
                Point::new(0.0, 0.0, 2.0),
                Point::new(1.0, 1.0, 2.0),
                Point::new(1.0, 0.0, 2.0),
            ],
        )
        .unwrap();
        assert!(up.normal().dot(&down.normal()) < -0.99);
        let room = Room::new(vec![up, down.clone()], 343.0).unwrap();
        assert_eq!(detect_parallel_pairs(&room), vec![(1, 3)]);

        // Coplanar surfaces are not a pair.
        let split = down.translated(&Point::new(2.0, 0.0, 0.0));
        let split = Surface::new(7, "split", split.vertices().to_vec()).unwrap();
        let room = Room::new(vec![down, split], 343.0).unwrap();
        assert!(detect_parallel_pairs(&room).is_empty());
    }

    #[test]
    fn segment_through_square() {
        let sq = unit_square_z0();
        let hit = segment_intersect(&Point::new(0.0, 0.0, -1.0), &Point::new(0.0, 0.0, 1.0), &sq);
        assert!((hit.unwrap() - Point::zeros()).norm() < 1e-12);
        // parallel
        assert!(
            segment_intersect(&Point::new(-2.0, 0.0, 0.5), &Point::new(2.0, 0.0, 0.5), &sq).is_none()
        );
        // outside polygon
        assert!(
            segment_intersect(&Point::new(3.0, 0.0, -1.0), &Point::new(3.0, 0.0, 1.0), &sq).is_none()
        );
        // endpoint on the surface
        assert!(segment_intersect(&Point::new(0.0, 0.0, 0.0), &Point::new(0.0, 0.0, 1.0), &sq).is_none());
    }

    #[test]
    fn rejects_bad_polygons() {
        let bent = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.01),
            Point::new(0.0, 1.0, 0.0),
        ];
        assert!(matches!(Surface::new(0, "bent", bent), Err(Error::Geometry(_))));
        let concave = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(2.0, 0.0, 0.0),
            Point::new(1.0, 0.5, 0.0),
            Point::new(2.0, 2.0, 0.0),
            Point::new(0.0, 2.0, 0.0),
        ];
        assert!(matches!(Surface::new(0, "c", concave), Err(Error::Geometry(_))));
        assert!(Surface::new(0, "line", vec![Point::zeros(), Point::x(), 2.0 * Point::x()]).is_err());
    }

    #[test]
    fn room_rejects_duplicates_and_bad_speed() {
        let a = unit_square_z0();
        assert!(Room::new(vec![a.clone(), a.clone()], 343.0).is_err());
        assert!(Room::new(vec![a], 0.0).is_err());
    }

    #[test]
    fn room_file_round_trip() {
        let room = Room::shoebox([4.0, 5.0, 3.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("room.json");
        room.save(&path).unwrap();
        assert_eq!(Room::load(&path).unwrap(), room);
    }

    #[test]
    fn normal_is_unit() {
        let s = Surface::new(
            0,
            "tri",
            vec![
                Point::new(0.3, 0.1, 0.2),
                Point::new(1.7, 0.4, 0.9),
                Point::new(0.2, 2.1, 1.3),
            ],
        )
        .unwrap();
        assert!((s.normal().norm() - 1.0).abs() < 1e-9);
    }

    fn arb_point() -> impl Strategy<Value = Point> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Point::new(x, y, z))
    }

    fn tilted() -> Surface {
        Surface::new(
            0,
            "tilted",
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(2.0, 0.0, 1.0),
                Point::new(2.0, 2.0, 2.0),
                Point::new(0.0, 2.0, 1.0),
            ],
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn mirror_is_an_involution(p in arb_point()) {
            let s = tilted();
            let back = mirror_point(&mirror_point(&p, &s), &s);
            prop_assert!((back - p).norm() < 1e-9);
        }

        #[test]
        fn mirror_is_an_isometry(p in arb_point(), q in arb_point()) {
            let s = tilted();
            let d0 = (p - q).norm();
            let d1 = (mirror_point(&p, &s) - mirror_point(&q, &s)).norm();
            prop_assert!((d0 - d1).abs() < 1e-9);
        }
    }
}
