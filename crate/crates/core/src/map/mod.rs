//! Lane-graph maps, goal definitions and road corridors.

mod corridor;
mod format;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Point2, Polygon, Polyline, Region};

pub use corridor::{
    compute_road_corridor, corridor_agent_in_front, LaneChain, Neighbor, RoadCorridor,
};
pub use format::{parse_map, serialize_map, FORMAT_VERSION};

/// Lane width used when a lane has no explicit boundaries.
pub const DEFAULT_LANE_WIDTH: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LaneId(pub u32);

impl fmt::Display for LaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{0}")]
    Semantic(String),
    #[error("unknown lane {0}")]
    UnknownLane(LaneId),
    #[error("no route from lane {0} to the goal")]
    NoRoute(LaneId),
}

/// Where an agent wants to go.
#[derive(Debug, Clone, PartialEq)]
pub enum GoalDefinition {
    /// Reached when the agent center lies in the polygon.
    Region(Polygon),
    /// Reached when the agent center is on `lane` at arclength `>= min_s`.
    Lane { lane: LaneId, min_s: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: LaneId,
    pub center: Polyline,
    pub left_boundary: Polyline,
    pub right_boundary: Polyline,
    pub successors: Vec<LaneId>,
    pub left_neighbor: Option<LaneId>,
    pub right_neighbor: Option<LaneId>,
    /// Lane drop: the lane ends and traffic has to leave it before the end.
    pub drop: bool,
    half_widths: Vec<(f64, f64)>,
    region: Region,
}

/// Everything needed to build a [`Lane`]; boundaries default to a
/// constant-width offset of the center line.
#[derive(Debug, Clone, Default)]
pub struct LaneBuilder {
    pub id: u32,
    pub center: Vec<Point2>,
    pub left_boundary: Option<Vec<Point2>>,
    pub right_boundary: Option<Vec<Point2>>,
    pub successors: Vec<u32>,
    pub left_neighbor: Option<u32>,
    pub right_neighbor: Option<u32>,
    pub drop: bool,
}

impl LaneBuilder {
    pub fn straight(id: u32, from: Point2, to: Point2) -> Self {
        Self {
            id,
            center: vec![from, to],
            ..Default::default()
        }
    }

    pub fn build(self) -> Result<Lane, MapError> {
        let id = LaneId(self.id);
        let geo =
            |what: &str, e: GeometryError| MapError::Semantic(format!("lane {id}: {what}: {e}"));
        if self.center.len() < 2 {
            return Err(MapError::Semantic(format!(
                "lane {id}: centerline needs at least 2 points, got {}",
                self.center.len()
            )));
        }
        let center = Polyline::new(self.center).map_err(|e| geo("center", e))?;
        let half = DEFAULT_LANE_WIDTH / 2.0;
        let left_boundary = match self.left_boundary {
            Some(pts) => Polyline::new(pts).map_err(|e| geo("left boundary", e))?,
            None => offset_polyline(&center, half).map_err(|e| geo("left boundary", e))?,
        };
        let right_boundary = match self.right_boundary {
            Some(pts) => Polyline::new(pts).map_err(|e| geo("right boundary", e))?,
            None => offset_polyline(&center, -half).map_err(|e| geo("right boundary", e))?,
        };
        for p in left_boundary.points() {
            if center.project(*p).d <= 0.0 {
                return Err(MapError::Semantic(format!(
                    "lane {id}: left boundary lies right of center"
                )));
            }
        }
        for p in right_boundary.points() {
            if center.project(*p).d >= 0.0 {
                return Err(MapError::Semantic(format!(
                    "lane {id}: right boundary lies left of center"
                )));
            }
        }
        let half_widths: Vec<(f64, f64)> = center
            .points()
            .iter()
            .map(|&p| {
                (
                    distance_to(&left_boundary, p),
                    distance_to(&right_boundary, p),
                )
            })
            .collect();
        let region = lane_region(&center, &half_widths);
        Ok(Lane {
            id,
            center,
            left_boundary,
            right_boundary,
            successors: self.successors.into_iter().map(LaneId).collect(),
            left_neighbor: self.left_neighbor.map(LaneId),
            right_neighbor: self.right_neighbor.map(LaneId),
            drop: self.drop,
            half_widths,
            region,
        })
    }
}

impl Lane {
    /// (left, right) half widths at each center-line point.
    pub fn half_widths(&self) -> &[(f64, f64)] {
        &self.half_widths
    }

    /// Convex decomposition of the lane surface.
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn width_at(&self, s: f64) -> f64 {
        let (l, r) = interpolate_widths(&self.center, &self.half_widths, s);
        l + r
    }
}

pub(crate) fn interpolate_widths(line: &Polyline, widths: &[(f64, f64)], s: f64) -> (f64, f64) {
    let i = line.segment_at(s);
    let c = line.cumulative();
    let u = ((s - c[i]) / (c[i + 1] - c[i])).clamp(0.0, 1.0);
    let (l0, r0) = widths[i];
    let (l1, r1) = widths[i + 1];
    (l0 + (l1 - l0) * u, r0 + (r1 - r0) * u)
}

fn distance_to(line: &Polyline, p: Point2) -> f64 {
    let f = line.project(p);
    let (foot, _) = line.point_at_extended(f.s, 0.0);
    foot.distance(p)
}

fn vertex_normals(line: &Polyline) -> Vec<Point2> {
    let pts = line.points();
    let seg_normal = |i: usize| {
        let e = pts[i + 1] - pts[i];
        e.perp() * (1.0 / e.norm())
    };
    let n = pts.len();
    (0..n)
        .map(|i| {
            let v = if i == 0 {
                seg_normal(0)
            } else if i == n - 1 {
                seg_normal(n - 2)
            } else {
                seg_normal(i - 1) + seg_normal(i)
            };
            v * (1.0 / v.norm())
        })
        .collect()
}

fn offset_polyline(line: &Polyline, d: f64) -> Result<Polyline, GeometryError> {
    let normals = vertex_normals(line);
    Polyline::new(
        line.points()
            .iter()
            .zip(&normals)
            .map(|(&p, &n)| p + n * d)
            .collect(),
    )
}

pub(crate) fn lane_region(center: &Polyline, half_widths: &[(f64, f64)]) -> Region {
    let pts = center.points();
    let mut parts = Vec::new();
    let mut prev_normal: Option<Point2> = None;
    for i in 0..pts.len() - 1 {
        let e = pts[i + 1] - pts[i];
        let n = e.perp() * (1.0 / e.norm());
        let (l0, r0) = half_widths[i];
        let (l1, r1) = half_widths[i + 1];
        if let Ok(q) = Polygon::new(vec![
            pts[i] - n * r0,
            pts[i + 1] - n * r1,
            pts[i + 1] + n * l1,
            pts[i] + n * l0,
        ]) {
            parts.push(q);
        }
        // fill the wedge left open on the outside of a bend
        if let Some(pn) = prev_normal {
            for (w, sign) in [(l0, 1.0), (r0, -1.0)] {
                if let Ok(t) = Polygon::new(vec![
                    pts[i],
                    pts[i] + pn * (sign * w),
                    pts[i] + n * (sign * w),
                ]) {
                    parts.push(t);
                }
            }
        }
        prev_normal = Some(n);
    }
    Region::new(parts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadMap {
    pub name: String,
    lanes: BTreeMap<LaneId, Lane>,
}

impl RoadMap {
    /// Validates references: every successor and neighbor id must exist and
    /// no lane may succeed itself.
    pub fn new(name: impl Into<String>, lanes: Vec<Lane>) -> Result<Self, MapError> {
        let mut map = BTreeMap::new();
        for lane in lanes {
            let id = lane.id;
            if map.insert(id, lane).is_some() {
                return Err(MapError::Semantic(format!("duplicate lane {id}")));
            }
        }
        for lane in map.values() {
            for s in &lane.successors {
                if *s == lane.id {
                    return Err(MapError::Semantic(format!(
                        "lane {} is its own successor",
                        lane.id
                    )));
                }
            }
            let refs = lane
                .successors
                .iter()
                .chain(lane.left_neighbor.iter())
                .chain(lane.right_neighbor.iter());
            for r in refs {
                if !map.contains_key(r) {
                    return Err(MapError::Semantic(format!("unknown lane {r}")));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            lanes: map,
        })
    }

    pub fn lane(&self, id: LaneId) -> Option<&Lane> {
        self.lanes.get(&id)
    }

    pub fn lanes(&self) -> impl Iterator<Item = &Lane> {
        self.lanes.values()
    }

    pub fn len(&self) -> usize {
        self.lanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    /// Lane whose center line is closest to `p`; ties go to the smaller id.
    pub fn nearest_lane(&self, p: Point2) -> Option<LaneId> {
        let mut best: Option<(f64, LaneId)> = None;
        for lane in self.lanes.values() {
            let f = lane.center.project(p);
            let (foot, _) = lane.center.point_at_extended(f.s, 0.0);
            let dist = foot.distance(p);
            if best.is_none_or(|(b, _)| dist < b - 1e-12) {
                best = Some((dist, lane.id));
            }
        }
        best.map(|(_, id)| id)
    }

    /// Convex polygon covering `lane` between two arclengths (end points only,
    /// so it is exact for straight lanes).
    pub fn lane_patch(&self, lane: LaneId, s_from: f64, s_to: f64) -> Result<Polygon, MapError> {
        let l = self.lane(lane).ok_or(MapError::UnknownLane(lane))?;
        let len = l.center.length();
        let (a, b) = (s_from.clamp(0.0, len), s_to.clamp(0.0, len));
        let (la, ra) = interpolate_widths(&l.center, &l.half_widths, a);
        let (lb, rb) = interpolate_widths(&l.center, &l.half_widths, b);
        let pts = vec![
            l.center.point_at_extended(a, -ra).0,
            l.center.point_at_extended(b, -rb).0,
            l.center.point_at_extended(b, lb).0,
            l.center.point_at_extended(a, la).0,
        ];
        Polygon::new(pts).map_err(|e| MapError::Semantic(format!("lane {lane}: goal patch: {e}")))
    }
}
