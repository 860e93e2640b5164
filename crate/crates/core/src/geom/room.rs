use std::fmt;

use super::{Point3, UnitVec3};
use crate::error::{Error, Result};

/// An infinite plane given by a point on it and its unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: Point3,
    pub normal: UnitVec3,
}

impl Plane {
    pub fn new(point: Point3, normal: UnitVec3) -> Self {
        Self { point, normal }
    }

    /// Signed distance along the normal; positive on the side the normal points to.
    pub fn signed_distance(&self, p: Point3) -> f64 {
        self.normal.dot(p - self.point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SurfaceId(pub u8);

impl fmt::Display for SurfaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Finite extent of a reflecting surface.
#[derive(Debug, Clone, PartialEq)]
pub enum Extent {
    /// Vertical rectangle above the plan edge `start → end`, from `z = 0` to `z = height`.
    Wall {
        start: [f64; 2],
        end: [f64; 2],
        height: f64,
    },
    /// Horizontal surface bounded by the room's plan polygon.
    Plan(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub id: SurfaceId,
    pub name: String,
    /// Normal points into the room.
    pub plane: Plane,
    pub extent: Extent,
}

impl Surface {
    /// Whether `p` (assumed on the plane) lies inside the finite extent,
    /// allowing `tol` meters of slack at the borders.
    pub fn contains(&self, p: Point3, tol: f64) -> bool {
        match &self.extent {
            Extent::Wall { start, end, height } => {
                let ex = end[0] - start[0];
                let ey = end[1] - start[1];
                let len = ex.hypot(ey);
                let s = ((p.x - start[0]) * ex + (p.y - start[1]) * ey) / len;
                s >= -tol && s <= len + tol && p.z >= -tol && p.z <= height + tol
            }
            Extent::Plan(poly) => {
                point_in_polygon(poly, p.x, p.y) || distance_to_polygon(poly, p.x, p.y) <= tol
            }
        }
    }
}

/// A prism-shaped room: a simple plan polygon extruded from the floor
/// (`z = 0`) to the ceiling (`z = height`).
///
/// Surfaces are numbered walls first (one per plan edge, in vertex order),
/// then the floor, then the ceiling.
#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    plan: Vec<[f64; 2]>,
    height: f64,
    surfaces: Vec<Surface>,
    convex: bool,
}

impl Room {
    /// Axis-aligned box `[0, width] × [0, depth] × [0, height]`.
    pub fn rectangular(width: f64, depth: f64, height: f64) -> Result<Self> {
        Self::from_plan(
            vec![[0.0, 0.0], [width, 0.0], [width, depth], [0.0, depth]],
            height,
        )
    }

    /// Builds a room from its plan outline. Vertices may be given in either
    /// orientation; the outline must be a simple polygon.
    pub fn from_plan(mut plan: Vec<[f64; 2]>, height: f64) -> Result<Self> {
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::domain(format!("room height must be positive, got {height}")));
        }
        if plan.len() < 3 {
            return Err(Error::domain("room plan needs at least 3 vertices"));
        }
        if plan.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(Error::domain("room plan has non-finite coordinates"));
        }
        let area = signed_area(&plan);
        if area.abs() < 1e-12 {
            return Err(Error::domain("room plan is degenerate"));
        }
        if area < 0.0 {
            plan.reverse();
        }
        if !is_simple(&plan) {
            return Err(Error::domain("room plan is not a simple polygon"));
        }

        let n = plan.len();
        if n + 2 > u8::MAX as usize {
            return Err(Error::domain("too many walls"));
        }
        let mut surfaces = Vec::with_capacity(n + 2);
        for i in 0..n {
            let a = plan[i];
            let b = plan[(i + 1) % n];
            // counter-clockwise outline: interior lies to the left of each edge
            let normal = UnitVec3::new(-(b[1] - a[1]), b[0] - a[0], 0.0)
                .ok_or_else(|| Error::domain("room plan has repeated vertices"))?;
            surfaces.push(Surface {
                id: SurfaceId(i as u8),
                name: format!("wall{i}"),
                plane: Plane::new(Point3::new(a[0], a[1], 0.0), normal),
                extent: Extent::Wall { start: a, end: b, height },
            });
        }
        surfaces.push(Surface {
            id: SurfaceId(n as u8),
            name: "floor".into(),
            plane: Plane::new(Point3::ORIGIN, UnitVec3::new(0.0, 0.0, 1.0).unwrap()),
            extent: Extent::Plan(plan.clone()),
        });
        surfaces.push(Surface {
            id: SurfaceId(n as u8 + 1),
            name: "ceiling".into(),
            plane: Plane::new(Point3::new(0.0, 0.0, height), UnitVec3::new(0.0, 0.0, -1.0).unwrap()),
            extent: Extent::Plan(plan.clone()),
        });

        let convex = is_convex(&plan);
        Ok(Self { plan, height, surfaces, convex })
    }

    /// A room with no reflecting surfaces at all; only the direct path exists.
    pub fn free_space() -> Self {
        Self { plan: Vec::new(), height: f64::INFINITY, surfaces: Vec::new(), convex: true }
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn plan(&self) -> &[[f64; 2]] {
        &self.plan
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    pub fn surface(&self, id: SurfaceId) -> &Surface {
        &self.surfaces[id.0 as usize]
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    /// Axis-aligned bounding box of the plan, `(min, max)`.
    pub fn plan_bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.plan {
            for i in 0..2 {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    /// Strict interior test; points on a surface are outside.
    pub fn contains(&self, p: Point3) -> bool {
        self.contains_with_margin(p, 0.0)
    }

    /// Interior test requiring at least `margin` meters to every surface.
    pub fn contains_with_margin(&self, p: Point3, margin: f64) -> bool {
        if !p.is_finite() {
            return false;
        }
        if self.plan.is_empty() {
            return true;
        }
        p.z > margin
            && p.z < self.height - margin
            && point_in_polygon(&self.plan, p.x, p.y)
            && distance_to_polygon(&self.plan, p.x, p.y) > margin.max(1e-12)
    }

    /// True when the open segment `a → b` passes through no wall other
    /// than those in `skip`. Always true for convex rooms with interior
    /// or on-surface endpoints.
    pub(crate) fn segment_clear(&self, a: Point3, b: Point3) -> bool {
        if self.convex {
            return true;
        }
        let dir = b - a;
        self.surfaces.iter().all(|s| {
            if !matches!(s.extent, Extent::Wall { .. }) {
                return true;
            }
            let denom = s.plane.normal.dot(dir);
            if denom.abs() < 1e-15 {
                return true;
            }
            let t = -s.plane.signed_distance(a) / denom;
            if !(1e-9..=1.0 - 1e-9).contains(&t) {
                return true;
            }
            !s.contains(a + dir * t, -1e-9)
        })
    }
}

fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

fn is_convex(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) >= -1e-12
    })
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 <= 0.0 && d3 * d4 <= 0.0
}

fn is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    for i in 0..n {
        for j in i + 1..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

pub(crate) fn point_in_polygon(poly: &[[f64; 2]], x: f64, y: f64) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (poly[i][0], poly[i][1]);
        let (xj, yj) = (poly[j][0], poly[j][1]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn distance_to_polygon(poly: &[[f64; 2]], x: f64, y: f64) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let t = (((x - a[0]) * ex + (y - a[1]) * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
            (x - a[0] - t * ex).hypot(y - a[1] - t * ey)
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_room_normals_point_inward() {
        let room = Room::rectangular(7.0, 6.0, 3.0).unwrap();
        assert_eq!(room.surfaces().len(), 6);
        let center = Point3::new(3.5, 3.0, 1.5);
        for s in room.surfaces() {
            assert!(s.plane.signed_distance(center) > 0.0, "{} faces outward", s.name);
        }
        assert!(room.is_convex());
    }

    #[test]
    fn clockwise_plan_is_reoriented() {
        let room = Room::from_plan(vec![[0.0, 0.0], [0.0, 2.0], [2.0, 2.0], [2.0, 0.0]], 3.0).unwrap();
        let center = Point3::new(1.0, 1.0, 1.0);
        assert!(room.surfaces().iter().all(|s| s.plane.signed_distance(center) > 0.0));
    }

    #[test]
    fn rejects_bad_rooms() {
        assert!(Room::rectangular(7.0, 6.0, 0.0).is_err());
        assert!(Room::from_plan(vec![[0.0, 0.0], [1.0, 0.0]], 3.0).is_err());
        // bow-tie
        let bowtie = vec![[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]];
        assert!(Room::from_plan(bowtie, 3.0).is_err());
    }

    #[test]
    fn containment() {
        let room = Room::rectangular(7.0, 6.0, 3.0).unwrap();
        assert!(room.contains(Point3::new(4.5, 2.0, 1.2)));
        assert!(!room.contains(Point3::new(7.5, 2.0, 1.2)));
        assert!(!room.contains(Point3::new(4.5, 2.0, 3.0)));
        assert!(!room.contains(Point3::new(0.0, 2.0, 1.0)));
    }

    #[test]
    fn l_shaped_room_is_not_convex_and_blocks_segments() {
        let plan = vec![[0.0, 0.0], [6.0, 0.0], [6.0, 3.0], [3.0, 3.0], [3.0, 6.0], [0.0, 6.0]];
        let room = Room::from_plan(plan, 3.0).unwrap();
        assert!(!room.is_convex());
        let a = Point3::new(5.0, 2.5, 1.0);
        let b = Point3::new(2.5, 5.0, 1.0);
        assert!(room.contains(a) && room.contains(b));
        assert!(!room.segment_clear(Point3::new(5.5, 2.9, 1.0), Point3::new(2.9, 5.5, 1.0)));
        assert!(room.segment_clear(a, Point3::new(1.0, 1.0, 1.0)));
        assert!(!room.contains(Point3::new(4.0, 4.0, 1.0)));
    }
}
