use std::collections::HashMap;
use std::fmt;

use super::{mirror_point, Point3, Room, SurfaceId, UnitVec3, BOUND_SLACK_M, SPEED_OF_LIGHT};
use crate::channel::{path_amplitude, ChannelParams};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_BOUNCES: usize = 3;
const MAX_SUPPORTED_BOUNCES: usize = 4;
const EXTENT_TOL: f64 = 1e-9;

/// The ordered reflecting surfaces of a path, from the source towards the
/// sink. Empty for the line-of-sight path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PathSpec(pub Vec<SurfaceId>);

impl PathSpec {
    pub fn los() -> Self {
        PathSpec(Vec::new())
    }

    pub fn bounces(&self) -> usize {
        self.0.len()
    }

    pub fn is_valid(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1])
    }
}

impl fmt::Display for PathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("LOS");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// A specular multipath component from a source node to a sink (observer).
#[derive(Debug, Clone, PartialEq)]
pub struct Mpc {
    pub path: PathSpec,
    /// The sink mirrored across the path's surfaces, in reverse order.
    pub virtual_sink: Point3,
    /// Propagation delay in seconds.
    pub delay: f64,
    /// Departure direction at the source.
    pub direction: UnitVec3,
    /// Linear amplitude gain.
    pub amplitude: f64,
    pub bounces: usize,
}

/// Enumerates every valid specular path with at most `max_bounces`
/// reflections between `source` and `sink`, sorted by delay.
pub fn trace_paths(
    source: Point3,
    sink: Point3,
    room: &Room,
    max_bounces: usize,
    params: &ChannelParams,
) -> Result<Vec<Mpc>> {
    if !room.contains(source) {
        return Err(Error::domain(format!("source {source:?} is outside the room")));
    }
    if !room.contains(sink) {
        return Err(Error::domain(format!("sink {sink:?} is outside the room")));
    }
    if max_bounces > MAX_SUPPORTED_BOUNCES {
        return Err(Error::domain(format!(
            "max_bounces must be at most {MAX_SUPPORTED_BOUNCES}, got {max_bounces}"
        )));
    }

    let mut out = Vec::new();
    let mut seq = Vec::with_capacity(max_bounces);
    enumerate(room, max_bounces, &mut seq, &mut |seq| {
        if let Some(virtual_sink) = unfold(source, sink, room, seq) {
            let length = source.distance(virtual_sink);
            let Some(direction) = UnitVec3::from_vector(virtual_sink - source) else {
                return;
            };
            let mut mpc = Mpc {
                path: PathSpec(seq.to_vec()),
                virtual_sink,
                delay: length / SPEED_OF_LIGHT,
                direction,
                amplitude: 0.0,
                bounces: seq.len(),
            };
            mpc.amplitude = path_amplitude(&mpc, params);
            out.push(mpc);
        }
    });
    out.sort_by(|a, b| a.delay.total_cmp(&b.delay).then_with(|| a.path.cmp(&b.path)));
    Ok(out)
}

fn enumerate(room: &Room, max_bounces: usize, seq: &mut Vec<SurfaceId>, visit: &mut impl FnMut(&[SurfaceId])) {
    visit(seq);
    if seq.len() == max_bounces {
        return;
    }
    for s in room.surfaces() {
        if seq.last() == Some(&s.id) {
            continue;
        }
        seq.push(s.id);
        enumerate(room, max_bounces, seq, visit);
        seq.pop();
    }
}

/// Image-method backtrace. Returns the virtual sink if the reflection
/// sequence is geometrically realizable.
fn unfold(source: Point3, sink: Point3, room: &Room, seq: &[SurfaceId]) -> Option<Point3> {
    let virtual_sink = seq
        .iter()
        .rev()
        .fold(sink, |p, id| mirror_point(p, &room.surface(*id).plane));

    let mut start = source;
    let mut target = virtual_sink;
    for id in seq {
        let surface = room.surface(*id);
        let plane = &surface.plane;
        let dir = target - start;
        let denom = plane.normal.dot(dir);
        let from = plane.signed_distance(start);
        // must approach the surface from the room side
        if denom >= 0.0 || from <= 0.0 {
            return None;
        }
        let t = -from / denom;
        if !(t > 1e-12 && t < 1.0 - 1e-12) {
            return None;
        }
        let hit = start + dir * t;
        if !surface.contains(hit, EXTENT_TOL) || !room.segment_clear(start, hit) {
            return None;
        }
        target = mirror_point(target, plane);
        start = hit;
    }
    if !room.segment_clear(start, sink) {
        return None;
    }
    Some(virtual_sink)
}

/// Checks `c·|τ_B − τ_A| ≤ ‖p_B − p_A‖` over paths paired by [`PathSpec`].
///
/// Both lists must contain the same set of paths.
pub fn delay_difference_bound_check(p_a: Point3, p_b: Point3, mpcs_a: &[Mpc], mpcs_b: &[Mpc]) -> Result<bool> {
    if mpcs_a.len() != mpcs_b.len() {
        return Err(Error::domain("unmatched path sets"));
    }
    let by_path: HashMap<&PathSpec, f64> = mpcs_a.iter().map(|m| (&m.path, m.delay)).collect();
    let d = p_a.distance(p_b);
    let mut ok = true;
    for m in mpcs_b {
        let Some(&tau_a) = by_path.get(&m.path) else {
            return Err(Error::domain(format!("path {} has no counterpart", m.path)));
        };
        if SPEED_OF_LIGHT * (m.delay - tau_a).abs() > d + BOUND_SLACK_M {
            ok = false;
        }
    }
    Ok(ok)
}
