use std::collections::BTreeMap;

use super::idm::{idm_acceleration, idm_follow, IdmParams};
use super::lateral::{bumper_gap, vehicles_on, LaneTracking, Vehicle};
use super::{BehaviorError, BehaviorKind, BehaviorModel, BehaviorSpec};
use crate::world::{AgentId, ObservedWorld, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilParams {
    pub politeness: f64,
    pub a_threshold: f64,
    pub b_safe: f64,
    pub idm: IdmParams,
}

impl Default for MobilParams {
    fn default() -> Self {
        let idm = IdmParams::default();
        Self {
            politeness: 0.3,
            a_threshold: 0.1,
            b_safe: 2.0 * idm.b,
            idm,
        }
    }
}

impl MobilParams {
    pub(crate) fn read(p: &BTreeMap<String, f64>) -> Self {
        Self {
            politeness: p["politeness"],
            a_threshold: p["a_threshold"],
            b_safe: p["b_safe"],
            idm: IdmParams::read(p),
        }
    }

    fn write(&self, p: &mut BTreeMap<String, f64>) {
        self.idm.write(p);
        p.insert("politeness".into(), self.politeness);
        p.insert("a_threshold".into(), self.a_threshold);
        p.insert("b_safe".into(), self.b_safe);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilDecision {
    KeepLane,
    ChangeLeft,
    ChangeRight,
}

/// The accelerations behind one candidate lane change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeAssessment {
    /// Target chain index in the ego corridor.
    pub target: usize,
    pub a_ego: f64,
    pub a_ego_new: f64,
    /// New follower: id, acceleration now, acceleration after the change.
    pub new_follower: Option<(AgentId, f64, f64)>,
    /// Old follower: id, acceleration now, acceleration after the change.
    pub old_follower: Option<(AgentId, f64, f64)>,
    pub incentive: f64,
    pub safe: bool,
}

impl ChangeAssessment {
    pub fn qualifies(&self, p: &MobilParams) -> bool {
        self.safe && self.incentive > p.a_threshold
    }
}

fn ahead(vs: &[Vehicle], s: f64, skip: [Option<AgentId>; 2]) -> Option<Vehicle> {
    vs.iter()
        .find(|v| v.s > s && (v.id.is_none() || !skip.contains(&v.id)))
        .copied()
}

fn behind(vs: &[Vehicle], s: f64, skip: AgentId) -> Option<Vehicle> {
    vs.iter()
        .rev()
        .find(|v| v.s <= s && v.id.is_some() && v.id != Some(skip))
        .copied()
}

fn acc(p: &IdmParams, v: f64, s: f64, length: f64, lead: Option<Vehicle>) -> f64 {
    idm_acceleration(p, v, lead.map(|l| (l.v, bumper_gap(&l, s, length))))
}

/// Evaluates moving from chain `current` to chain `target` of the ego
/// corridor; all agents are assumed to drive with the ego IDM parameters.
pub fn mobil_assess(
    p: &MobilParams,
    observed: &ObservedWorld<'_>,
    current: usize,
    target: usize,
) -> ChangeAssessment {
    let ego = observed.ego();
    let chains = ego.corridor.chains();
    let (cur, tgt) = (&chains[current], &chains[target]);
    let pos = ego.state.position();
    let (s_c, s_t) = (cur.frenet(pos).s, tgt.frenet(pos).s);
    let (v, len) = (ego.state.v, ego.length());
    let me = Vehicle {
        id: Some(ego.id),
        s: s_t,
        v,
        length: len,
    };
    let vc = vehicles_on(cur, observed);
    let vt = vehicles_on(tgt, observed);
    let idm = &p.idm;

    let old_lead = ahead(&vc, s_c, [Some(ego.id), None]);
    let a_ego = acc(idm, v, s_c, len, old_lead);
    let a_ego_new = acc(idm, v, s_t, len, ahead(&vt, s_t, [Some(ego.id), None]));

    let new_follower = behind(&vt, s_t, ego.id).map(|nf| {
        let now = acc(
            idm,
            nf.v,
            nf.s,
            nf.length,
            ahead(&vt, nf.s, [nf.id, Some(ego.id)]),
        );
        let after = acc(idm, nf.v, nf.s, nf.length, Some(me));
        (nf.id.unwrap(), now, after)
    });
    let old_follower = behind(&vc, s_c, ego.id).map(|of| {
        let me_cur = Vehicle { s: s_c, ..me };
        let now = acc(idm, of.v, of.s, of.length, Some(me_cur));
        let after = acc(
            idm,
            of.v,
            of.s,
            of.length,
            ahead(&vc, of.s, [of.id, Some(ego.id)]),
        );
        (of.id.unwrap(), now, after)
    });

    let gain = |x: Option<(AgentId, f64, f64)>| x.map_or(0.0, |(_, now, after)| after - now);
    let incentive = a_ego_new - a_ego + p.politeness * (gain(new_follower) + gain(old_follower));
    let safe = new_follower.is_none_or(|(_, _, after)| after >= -p.b_safe);
    ChangeAssessment {
        target,
        a_ego,
        a_ego_new,
        new_follower,
        old_follower,
        incentive,
        safe,
    }
}

pub(crate) fn decide_on(
    p: &MobilParams,
    observed: &ObservedWorld<'_>,
    current: usize,
) -> MobilDecision {
    let n = observed.ego().corridor.chains().len();
    if current + 1 < n && mobil_assess(p, observed, current, current + 1).qualifies(p) {
        return MobilDecision::ChangeLeft;
    }
    if current > 0 && mobil_assess(p, observed, current, current - 1).qualifies(p) {
        return MobilDecision::ChangeRight;
    }
    MobilDecision::KeepLane
}

/// Lane-change decision from the chain nearest to the ego.
pub fn mobil_decide(p: &MobilParams, observed: &ObservedWorld<'_>) -> MobilDecision {
    let ego = observed.ego();
    decide_on(
        p,
        observed,
        ego.corridor.nearest_chain(ego.state.position()),
    )
}

/// IDM longitudinal control with MOBIL lane changes. A started change
/// persists until the agent is within the completion offset of the target.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilModel {
    pub params: MobilParams,
    tracking: LaneTracking,
}

impl MobilModel {
    pub fn new(params: MobilParams) -> Self {
        Self {
            params,
            tracking: LaneTracking::default(),
        }
    }
}

impl BehaviorModel for MobilModel {
    fn plan(&mut self, dt: f64, observed: &ObservedWorld<'_>) -> Result<Trajectory, BehaviorError> {
        let ego = observed.ego();
        let corridor = &ego.corridor;
        let pos = ego.state.position();
        let t = observed.time();
        let idx = self.tracking.update(corridor, pos, t);
        if !self.tracking.is_changing() {
            match decide_on(&self.params, observed, idx) {
                MobilDecision::ChangeLeft => self.tracking.begin_change(corridor, idx + 1, pos, t),
                MobilDecision::ChangeRight => self.tracking.begin_change(corridor, idx - 1, pos, t),
                MobilDecision::KeepLane => {}
            }
        }
        let chain = &corridor.chains()[self.tracking.chain.unwrap_or(idx)];
        idm_follow(&self.params.idm, chain, observed, &self.tracking, dt)
    }

    fn spec(&self) -> BehaviorSpec {
        let mut s = BehaviorSpec::new(BehaviorKind::Mobil);
        self.params.write(&mut s.params);
        s
    }

    fn box_clone(&self) -> Box<dyn BehaviorModel> {
        Box::new(self.clone())
    }

    fn lane_tracking(&self) -> Option<LaneTracking> {
        Some(self.tracking)
    }
}
