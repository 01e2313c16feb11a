//! Lane routing and road corridors.
//!
//! A corridor is precomputed when an agent is created. It holds the routed
//! lane sequence plus a set of parallel lane chains across the road, ordered
//! right to left; one of them is the chain the agent starts on. Sibling
//! corridors share the chains and only move the current index.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use super::{interpolate_widths, GoalDefinition, LaneId, MapError, RoadMap};
use crate::geometry::{FrenetCoord, Point2, Polyline, Region};
use crate::world::AgentId;

/// Nearest agent on a chain as `(id, s)`.
pub type Nearest = Option<(AgentId, f64)>;

/// Junction points closer than this are merged when concatenating centers.
const JOIN_TOLERANCE: f64 = 1e-6;

/// Successor-connected lanes with a concatenated center line.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneChain {
    pub lanes: Vec<LaneId>,
    pub center: Polyline,
    /// The last lane is a lane drop.
    pub dead_end: bool,
    half_widths: Vec<(f64, f64)>,
    region: Region,
}

impl LaneChain {
    pub fn build(map: &RoadMap, lanes: Vec<LaneId>) -> Result<Self, MapError> {
        let mut points: Vec<Point2> = Vec::new();
        let mut half_widths = Vec::new();
        let mut region = Region::default();
        for id in &lanes {
            let lane = map.lane(*id).ok_or(MapError::UnknownLane(*id))?;
            let mut skip_first = false;
            if let Some(last) = points.last() {
                skip_first = last.distance(lane.center.points()[0]) <= JOIN_TOLERANCE;
            }
            let start = usize::from(skip_first);
            points.extend_from_slice(&lane.center.points()[start..]);
            half_widths.extend_from_slice(&lane.half_widths()[start..]);
            region.extend(lane.region());
        }
        let center = Polyline::new(points)
            .map_err(|e| MapError::Semantic(format!("corridor over {lanes:?}: {e}")))?;
        let dead_end = lanes
            .last()
            .and_then(|l| map.lane(*l))
            .is_some_and(|l| l.drop);
        Ok(Self {
            lanes,
            center,
            dead_end,
            half_widths,
            region,
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// (left, right) half widths at arclength `s`.
    pub fn half_widths_at(&self, s: f64) -> (f64, f64) {
        interpolate_widths(&self.center, &self.half_widths, s)
    }

    pub fn width_at(&self, s: f64) -> f64 {
        let (l, r) = self.half_widths_at(s);
        l + r
    }

    /// Frenet coordinates with extrapolation past the chain ends.
    pub fn frenet(&self, p: Point2) -> FrenetCoord {
        self.center.project_extended(p)
    }

    /// Whether a point at `f` lies laterally within the chain.
    pub fn is_on(&self, f: FrenetCoord) -> bool {
        f.d.abs() < self.width_at(f.s) / 2.0
    }

    /// Closest on-chain agents ahead of and behind arclength `s`, as
    /// `(id, s)`. Ties in `s` go to the smaller id.
    pub fn front_and_behind(
        &self,
        s: f64,
        others: impl IntoIterator<Item = (AgentId, Point2)>,
    ) -> (Nearest, Nearest) {
        let mut front: Option<(AgentId, f64)> = None;
        let mut behind: Option<(AgentId, f64)> = None;
        for (id, p) in others {
            let f = self.frenet(p);
            if !self.is_on(f) {
                continue;
            }
            if f.s > s {
                if front.is_none_or(|(fid, fs)| (f.s, id) < (fs, fid)) {
                    front = Some((id, f.s));
                }
            } else if behind.is_none_or(|(bid, bs)| f.s > bs || (f.s == bs && id < bid)) {
                behind = Some((id, f.s));
            }
        }
        (front, behind)
    }
}

/// One agent found relative to a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: AgentId,
    pub s: f64,
}

#[derive(Debug, Clone)]
pub struct RoadCorridor {
    route: Arc<[LaneId]>,
    chains: Arc<[LaneChain]>,
    drivable: Arc<Region>,
    current: usize,
}

impl PartialEq for RoadCorridor {
    fn eq(&self, other: &Self) -> bool {
        self.current == other.current && self.route == other.route && self.chains == other.chains
    }
}

impl RoadCorridor {
    /// Corridor over explicit chains; `current` indexes into `chains`.
    pub fn from_chains(route: Vec<LaneId>, chains: Vec<LaneChain>, current: usize) -> Self {
        assert!(current < chains.len(), "current chain out of range");
        let mut drivable = Region::default();
        for c in &chains {
            drivable.extend(c.region());
        }
        Self {
            route: route.into(),
            chains: chains.into(),
            drivable: Arc::new(drivable),
            current,
        }
    }

    /// Routed lane ids from the start lane to a goal lane.
    pub fn lane_sequence(&self) -> &[LaneId] {
        &self.route
    }

    pub fn chain(&self) -> &LaneChain {
        &self.chains[self.current]
    }

    pub fn chains(&self) -> &[LaneChain] {
        &self.chains
    }

    pub fn current_index(&self) -> usize {
        self.current
    }

    pub fn center(&self) -> &Polyline {
        &self.chain().center
    }

    pub fn region(&self) -> &Region {
        self.chain().region()
    }

    /// Union of all chains across the road.
    pub fn drivable_region(&self) -> &Region {
        &self.drivable
    }

    pub fn with_current(&self, index: usize) -> Option<RoadCorridor> {
        (index < self.chains.len()).then(|| RoadCorridor {
            current: index,
            ..self.clone()
        })
    }

    pub fn left(&self) -> Option<RoadCorridor> {
        self.with_current(self.current + 1)
    }

    pub fn right(&self) -> Option<RoadCorridor> {
        self.current
            .checked_sub(1)
            .and_then(|i| self.with_current(i))
    }

    /// Index of the chain whose center is laterally closest to `p`; ties go
    /// to the current chain, then the lower index.
    pub fn nearest_chain(&self, p: Point2) -> usize {
        let mut best = (self.chain().frenet(p).d.abs(), self.current);
        for (i, c) in self.chains.iter().enumerate() {
            let d = c.frenet(p).d.abs();
            if d < best.0 - 1e-9 {
                best = (d, i);
            }
        }
        best.1
    }
}

fn goal_lane_satisfied(map: &RoadMap, lane: LaneId, goal: &GoalDefinition) -> bool {
    match goal {
        GoalDefinition::Lane { lane: g, .. } => lane == *g,
        GoalDefinition::Region(poly) => map
            .lane(lane)
            .is_some_and(|l| l.region().contains_point(poly.centroid())),
    }
}

/// Breadth-first route by lane count. Edges are successors and lateral
/// neighbors; two lateral hops may not follow each other. Among equally
/// short routes the lexicographically smallest id sequence wins.
fn route(map: &RoadMap, start: LaneId, goal: &GoalDefinition) -> Result<Vec<LaneId>, MapError> {
    if map.lane(start).is_none() {
        return Err(MapError::UnknownLane(start));
    }
    if let GoalDefinition::Lane { lane, .. } = goal {
        if map.lane(*lane).is_none() {
            return Err(MapError::UnknownLane(*lane));
        }
    }
    type State = (LaneId, bool);
    let mut parent: HashMap<State, Option<State>> = HashMap::new();
    let mut queue = VecDeque::new();
    parent.insert((start, false), None);
    queue.push_back((start, false));
    while let Some(state) = queue.pop_front() {
        let (lane_id, hopped) = state;
        if goal_lane_satisfied(map, lane_id, goal) {
            let mut seq = vec![lane_id];
            let mut cur = state;
            while let Some(Some(p)) = parent.get(&cur) {
                seq.push(p.0);
                cur = *p;
            }
            seq.reverse();
            return Ok(seq);
        }
        let lane = map.lane(lane_id).expect("validated map");
        let mut edges: Vec<State> = lane.successors.iter().map(|s| (*s, false)).collect();
        if !hopped {
            edges.extend(
                lane.left_neighbor
                    .iter()
                    .chain(lane.right_neighbor.iter())
                    .map(|n| (*n, true)),
            );
        }
        edges.sort();
        for e in edges {
            if let Entry::Vacant(slot) = parent.entry(e) {
                slot.insert(Some(state));
                queue.push_back(e);
            }
        }
    }
    Err(MapError::NoRoute(start))
}

/// Follows successors from the last lane, preferring the lane the route
/// continues with, otherwise the smallest id. Stops at dead ends or repeats.
fn extend_chain(map: &RoadMap, mut lanes: Vec<LaneId>, hint: &[LaneId]) -> Vec<LaneId> {
    while lanes.len() < map.len() {
        let last = *lanes.last().unwrap();
        let lane = map.lane(last).unwrap();
        let mut candidates: Vec<LaneId> = lane
            .successors
            .iter()
            .copied()
            .filter(|s| !lanes.contains(s))
            .collect();
        if candidates.is_empty() {
            break;
        }
        candidates.sort();
        let preferred = hint
            .iter()
            .position(|l| *l == last)
            .and_then(|k| hint.get(k + 1))
            .filter(|n| candidates.contains(n));
        lanes.push(*preferred.unwrap_or(&candidates[0]));
    }
    lanes
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

fn sibling_lanes(
    map: &RoadMap,
    base: &[LaneId],
    side: Side,
    hint: &[LaneId],
) -> Option<Vec<LaneId>> {
    let mut seeds: Vec<LaneId> = Vec::new();
    for id in base {
        let lane = map.lane(*id)?;
        let n = match side {
            Side::Left => lane.left_neighbor,
            Side::Right => lane.right_neighbor,
        };
        let Some(n) = n else {
            if seeds.is_empty() {
                continue;
            }
            break;
        };
        match seeds.last() {
            Some(last) if *last == n => {}
            Some(last) if map.lane(*last)?.successors.contains(&n) && !seeds.contains(&n) => {
                seeds.push(n)
            }
            Some(_) => break,
            None => seeds.push(n),
        }
    }
    if seeds.is_empty() {
        return None;
    }
    Some(extend_chain(map, seeds, hint))
}

/// Routes from `start` to the goal and precomputes the corridor geometry.
pub fn compute_road_corridor(
    map: &RoadMap,
    start: LaneId,
    goal: &GoalDefinition,
) -> Result<RoadCorridor, MapError> {
    let route = route(map, start, goal)?;
    let mut prefix = vec![route[0]];
    for w in route.windows(2) {
        if map.lane(w[0]).unwrap().successors.contains(&w[1]) {
            prefix.push(w[1]);
        } else {
            break;
        }
    }
    let start_lanes = extend_chain(map, prefix, &route);
    let mut used: Vec<LaneId> = start_lanes.clone();
    let mut lefts = Vec::new();
    let mut rights = Vec::new();
    for (side, out) in [(Side::Left, &mut lefts), (Side::Right, &mut rights)] {
        let mut base = start_lanes.clone();
        while let Some(lanes) = sibling_lanes(map, &base, side, &route) {
            if lanes.iter().any(|l| used.contains(l)) {
                break;
            }
            used.extend_from_slice(&lanes);
            out.push(lanes.clone());
            base = lanes;
        }
    }
    let mut chains = Vec::new();
    for lanes in rights.iter().rev() {
        chains.push(LaneChain::build(map, lanes.clone())?);
    }
    let current = chains.len();
    chains.push(LaneChain::build(map, start_lanes)?);
    for lanes in &lefts {
        chains.push(LaneChain::build(map, lanes.clone())?);
    }
    Ok(RoadCorridor::from_chains(route, chains, current))
}

/// Closest agent ahead of `ego` on the corridor's current chain, with the
/// center-point arclength gap.
pub fn corridor_agent_in_front(
    corridor: &RoadCorridor,
    states: &[(AgentId, Point2)],
    ego: AgentId,
) -> Option<(AgentId, f64)> {
    let (_, ego_pos) = states.iter().find(|(id, _)| *id == ego)?;
    let chain = corridor.chain();
    let ego_s = chain.frenet(*ego_pos).s;
    let others = states.iter().filter(|(id, _)| *id != ego).copied();
    chain
        .front_and_behind(ego_s, others)
        .0
        .map(|(id, s)| (id, s - ego_s))
}
