//! Shared longitudinal integration and lateral tracking laws.
//!
//! While keeping a lane the lateral offset decays as `d0 * exp(-t / T_d)`.
//! A lane change ramps the offset to the new center with a cubic smoothstep
//! over `T_lat`; it counts as done once `|d| < CHANGE_DONE`.

use crate::geometry::Point2;
use crate::map::{LaneChain, RoadCorridor};
use crate::world::{AgentId, AgentState, ObservedWorld, Trajectory};

use super::BehaviorError;

/// Internal integration step.
pub const SUBSTEP: f64 = 0.05;
/// Lane-keeping decay time constant T_d.
pub const KEEP_TIME_CONSTANT: f64 = 1.0;
/// Lane-change duration T_lat.
pub const CHANGE_DURATION: f64 = 3.0;
/// Lateral offset below which a lane change is complete.
pub const CHANGE_DONE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneChange {
    pub start_time: f64,
    /// Offset to the target center when the change began.
    pub d0: f64,
}

/// Which chain of its corridor an agent tracks, and any lane change in
/// progress.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaneTracking {
    pub chain: Option<usize>,
    pub change: Option<LaneChange>,
}

impl LaneTracking {
    /// Resolves the tracked chain, starting on the nearest one, and ends a
    /// lane change that has converged.
    pub fn update(&mut self, corridor: &RoadCorridor, pos: Point2, t: f64) -> usize {
        let idx = match self.chain {
            Some(i) if i < corridor.chains().len() => i,
            _ => corridor.nearest_chain(pos),
        };
        self.chain = Some(idx);
        if let Some(c) = self.change {
            let d = corridor.chains()[idx].frenet(pos).d;
            if d.abs() < CHANGE_DONE || t - c.start_time >= CHANGE_DURATION - 1e-9 {
                self.change = None;
            }
        }
        idx
    }

    pub fn is_changing(&self) -> bool {
        self.change.is_some()
    }

    pub fn begin_change(&mut self, corridor: &RoadCorridor, target: usize, pos: Point2, t: f64) {
        let d0 = corridor.chains()[target].frenet(pos).d;
        self.chain = Some(target);
        self.change = Some(LaneChange { start_time: t, d0 });
    }

    /// Lateral offset at time `t` given offset `d_start` at `t_start`.
    pub fn offset_at(&self, d_start: f64, t_start: f64, t: f64) -> f64 {
        match self.change {
            Some(c) => {
                let u = ((t - c.start_time) / CHANGE_DURATION).clamp(0.0, 1.0);
                c.d0 * (1.0 - u * u * (3.0 - 2.0 * u))
            }
            None => d_start * (-(t - t_start) / KEEP_TIME_CONSTANT).exp(),
        }
    }
}

/// Integrates along `chain` with semi-implicit Euler at a step of at most
/// [`SUBSTEP`]. `accel(tau, s, v)` receives time since the step start.
pub fn integrate_along(
    chain: &LaneChain,
    start: &AgentState,
    dt: f64,
    tracking: &LaneTracking,
    t0: f64,
    mut accel: impl FnMut(f64, f64, f64) -> f64,
) -> Result<Trajectory, BehaviorError> {
    let n = ((dt / SUBSTEP) - 1e-9).ceil().max(1.0) as usize;
    let h = dt / n as f64;
    let f0 = chain.frenet(start.position());
    let (mut s, mut v) = (f0.s, start.v);
    let mut d_prev = f0.d;
    let mut states = Vec::with_capacity(n + 1);
    states.push(AgentState { t: t0, ..*start });
    for k in 1..=n {
        let a = accel((k - 1) as f64 * h, s, v);
        v = (v + a * h).max(0.0);
        let ds = v * h;
        s += ds;
        let t = if k == n { t0 + dt } else { t0 + k as f64 * h };
        let d = tracking.offset_at(f0.d, t0, t);
        let (p, heading) = chain.center.point_at_extended(s, d);
        let theta = if ds > 1e-9 {
            heading + (d - d_prev).atan2(ds)
        } else {
            heading
        };
        d_prev = d;
        states.push(AgentState {
            t,
            x: p.x,
            y: p.y,
            theta,
            v,
        });
    }
    Ok(Trajectory::new(states)?)
}

/// An agent or a static obstacle on a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    /// `None` for the virtual obstacle at the end of a dropped lane.
    pub id: Option<AgentId>,
    pub s: f64,
    pub v: f64,
    pub length: f64,
}

/// All perceived agents (observer included) laterally on `chain`, plus the
/// end-of-lane obstacle of a dropped lane, sorted by arclength.
pub fn vehicles_on(chain: &LaneChain, observed: &ObservedWorld<'_>) -> Vec<Vehicle> {
    let ego = observed.ego();
    let mut out = Vec::new();
    let mut push = |id: AgentId, state: &AgentState, length: f64| {
        let f = chain.frenet(state.position());
        if chain.is_on(f) {
            out.push(Vehicle {
                id: Some(id),
                s: f.s,
                v: state.v,
                length,
            });
        }
    };
    push(ego.id, &ego.state, ego.length());
    for o in observed.others() {
        push(o.id(), o.state(), o.length());
    }
    if chain.dead_end {
        out.push(Vehicle {
            id: None,
            s: chain.center.length(),
            v: 0.0,
            length: 0.0,
        });
    }
    out.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.id.cmp(&b.id)));
    out
}

/// Closest vehicle strictly ahead of `s`, skipping `exclude`.
pub fn lead_of(vehicles: &[Vehicle], s: f64, exclude: Option<AgentId>) -> Option<Vehicle> {
    vehicles
        .iter()
        .find(|v| v.s > s && (v.id.is_none() || v.id != exclude))
        .copied()
}

/// Closest agent at or behind `s`, skipping `exclude` and obstacles.
pub fn follower_of(vehicles: &[Vehicle], s: f64, exclude: Option<AgentId>) -> Option<Vehicle> {
    vehicles
        .iter()
        .rev()
        .find(|v| v.s <= s && v.id.is_some() && v.id != exclude)
        .copied()
}

/// Bumper gap from a follower at `s` to `lead`.
pub fn bumper_gap(lead: &Vehicle, s: f64, length: f64) -> f64 {
    lead.s - lead.length / 2.0 - s - length / 2.0
}
