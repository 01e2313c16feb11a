use std::collections::BTreeMap;

use super::lateral::{integrate_along, lead_of, vehicles_on, LaneTracking};
use super::{BehaviorError, BehaviorKind, BehaviorModel, BehaviorSpec};
use crate::map::LaneChain;
use crate::world::{ObservedWorld, Trajectory};

/// Gaps at or below this trigger the emergency deceleration.
pub const EMERGENCY_GAP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmParams {
    pub v0: f64,
    pub a_max: f64,
    pub tau: f64,
    pub b: f64,
    pub s0: f64,
    pub delta: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v0: 15.0,
            a_max: 1.7,
            tau: 1.0,
            b: 1.7,
            s0: 2.0,
            delta: 4.0,
        }
    }
}

impl IdmParams {
    /// The replay parameter set family: v0 = 5, a_max = b = 1.7, tau = 1.
    pub fn replay_set(s0: f64) -> Self {
        Self {
            v0: 5.0,
            a_max: 1.7,
            tau: 1.0,
            b: 1.7,
            s0,
            delta: 4.0,
        }
    }

    pub(crate) fn read(p: &BTreeMap<String, f64>) -> Self {
        Self {
            v0: p["v0"],
            a_max: p["a_max"],
            tau: p["tau"],
            b: p["b"],
            s0: p["s0"],
            delta: p["delta"],
        }
    }

    pub(crate) fn write(&self, p: &mut BTreeMap<String, f64>) {
        for (k, v) in [
            ("v0", self.v0),
            ("a_max", self.a_max),
            ("tau", self.tau),
            ("b", self.b),
            ("s0", self.s0),
            ("delta", self.delta),
        ] {
            p.insert(k.to_string(), v);
        }
    }

    /// Desired dynamic gap s*.
    pub fn desired_gap(&self, v: f64, dv: f64) -> f64 {
        self.s0 + (v * self.tau + v * dv / (2.0 * (self.a_max * self.b).sqrt())).max(0.0)
    }
}

/// IDM acceleration; `lead` is `(v_lead, gap)` with the bumper gap.
pub fn idm_acceleration(p: &IdmParams, v: f64, lead: Option<(f64, f64)>) -> f64 {
    let free = 1.0 - (v / p.v0).powf(p.delta);
    match lead {
        None => p.a_max * free,
        Some((_, gap)) if gap <= EMERGENCY_GAP => -10.0 * p.a_max,
        Some((v_lead, gap)) => {
            let ratio = p.desired_gap(v, v - v_lead) / gap;
            p.a_max * (free - ratio * ratio)
        }
    }
}

/// Lane following with the IDM on the lane chain nearest to the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct IdmModel {
    pub params: IdmParams,
}

impl IdmModel {
    pub fn new(params: IdmParams) -> Self {
        Self { params }
    }
}

/// IDM car following along `chain` behind its closest leader; the leader
/// keeps its current speed over the step.
pub(crate) fn idm_follow(
    p: &IdmParams,
    chain: &LaneChain,
    observed: &ObservedWorld<'_>,
    tracking: &LaneTracking,
    dt: f64,
) -> Result<Trajectory, BehaviorError> {
    let ego = observed.ego();
    let vehicles = vehicles_on(chain, observed);
    let ego_s = chain.frenet(ego.state.position()).s;
    let lead = lead_of(&vehicles, ego_s, Some(ego.id));
    let half = ego.length() / 2.0;
    integrate_along(
        chain,
        &ego.state,
        dt,
        tracking,
        observed.time(),
        |tau, s, v| {
            let gap = lead.map(|l| (l.v, l.s + l.v * tau - l.length / 2.0 - half - s));
            idm_acceleration(p, v, gap)
        },
    )
}

impl BehaviorModel for IdmModel {
    fn plan(&mut self, dt: f64, observed: &ObservedWorld<'_>) -> Result<Trajectory, BehaviorError> {
        let ego = observed.ego();
        let corridor = &ego.corridor;
        let chain = &corridor.chains()[corridor.nearest_chain(ego.state.position())];
        idm_follow(&self.params, chain, observed, &LaneTracking::default(), dt)
    }

    fn spec(&self) -> BehaviorSpec {
        let mut s = BehaviorSpec::new(BehaviorKind::Idm);
        self.params.write(&mut s.params);
        s
    }

    fn box_clone(&self) -> Box<dyn BehaviorModel> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> IdmParams {
        IdmParams::replay_set(2.0)
    }

    #[test]
    fn free_road_cases() {
        assert_eq!(idm_acceleration(&p1(), 5.0, None), 0.0);
        assert_eq!(idm_acceleration(&p1(), 0.0, None), 1.7);
    }

    #[test]
    fn following_case() {
        let p = p1();
        assert_eq!(p.desired_gap(5.0, 0.0), 7.0);
        let a = idm_acceleration(&p, 5.0, Some((5.0, 10.0)));
        assert!((a - 1.7 * (1.0 - 1.0 - 0.49)).abs() < 1e-12, "{a}");
    }

    #[test]
    fn emergency_clamp() {
        assert_eq!(idm_acceleration(&p1(), 3.0, Some((0.0, 0.1))), -17.0);
        assert_eq!(idm_acceleration(&p1(), 3.0, Some((0.0, -2.0))), -17.0);
    }

    #[test]
    fn negative_desired_term_is_clamped() {
        let p = p1();
        // Leader pulling away fast: s* falls back to s0.
        assert_eq!(p.desired_gap(5.0, -100.0), 2.0);
    }
}
