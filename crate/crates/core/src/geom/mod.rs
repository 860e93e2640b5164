//! 3D geometry, the room model and an image-method tracer for specular
//! multipath components.
//!
//! Paths are traced from a *source* (a node whose position we care about)
//! to a *sink* (an observer). Each path carries the sink mirrored across its
//! reflecting surfaces, the virtual sink, so that the path length is the
//! straight-line distance from the source to that point.

mod room;
mod trace;
mod vector;

pub use room::{Extent, Plane, Room, Surface, SurfaceId};
pub use trace::{delay_difference_bound_check, trace_paths, Mpc, PathSpec, DEFAULT_MAX_BOUNCES};
pub use vector::{Point3, UnitVec3};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Slack allowed when checking `c·|Δ| ≤ d` on floating point delays.
pub const BOUND_SLACK_M: f64 = 1e-9;

/// Reflects `p` across `plane`.
pub fn mirror_point(p: Point3, plane: &Plane) -> Point3 {
    let n = plane.normal.as_point();
    let dist = (p - plane.point).dot(n);
    p - n * (2.0 * dist)
}
