use log::debug;

use crate::behaviors::{
    integrate_along, BehaviorError, BehaviorKind, BehaviorModel, BehaviorSpec, LaneTracking,
};
use crate::world::{ObservedWorld, Trajectory};

/// Discrete maneuvers in their fixed index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManeuverKind {
    LaneKeepCV,
    LaneKeepCA,
    LaneKeepCD,
    ChangeLeft,
    ChangeRight,
}

impl ManeuverKind {
    pub const ALL: [ManeuverKind; 5] = [
        ManeuverKind::LaneKeepCV,
        ManeuverKind::LaneKeepCA,
        ManeuverKind::LaneKeepCD,
        ManeuverKind::ChangeLeft,
        ManeuverKind::ChangeRight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Kinds selected by a bit mask over [`ManeuverKind::ALL`].
    pub fn from_mask(mask: u32) -> Vec<ManeuverKind> {
        Self::ALL
            .into_iter()
            .filter(|k| mask & (1 << k.index()) != 0)
            .collect()
    }

    pub fn mask(kinds: &[ManeuverKind]) -> u32 {
        kinds.iter().fold(0, |m, k| m | (1 << k.index()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManeuverAction {
    pub kind: ManeuverKind,
    pub accel: f64,
}

impl ManeuverAction {
    pub fn new(kind: ManeuverKind, a_std: f64) -> Self {
        let accel = match kind {
            ManeuverKind::LaneKeepCA => a_std,
            ManeuverKind::LaneKeepCD => -a_std,
            _ => 0.0,
        };
        Self { kind, accel }
    }
}

/// Executes one maneuver primitive. A lane change starts a switch of the
/// tracked chain; when no such neighbor exists, or a change is already
/// running, it falls back to constant velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverModel {
    pub action: ManeuverAction,
    a_std: f64,
    pub tracking: LaneTracking,
    /// The last plan replaced an unavailable change by constant velocity.
    pub substituted: bool,
}

impl ManeuverModel {
    pub fn new(kind: ManeuverKind, a_std: f64, tracking: LaneTracking) -> Self {
        Self {
            action: ManeuverAction::new(kind, a_std),
            a_std,
            tracking,
            substituted: false,
        }
    }
}

impl BehaviorModel for ManeuverModel {
    fn plan(&mut self, dt: f64, observed: &ObservedWorld<'_>) -> Result<Trajectory, BehaviorError> {
        let ego = observed.ego();
        let corridor = &ego.corridor;
        let pos = ego.state.position();
        let t = observed.time();
        let idx = self.tracking.update(corridor, pos, t);
        let target = match self.action.kind {
            ManeuverKind::ChangeLeft => Some(idx + 1).filter(|i| *i < corridor.chains().len()),
            ManeuverKind::ChangeRight => idx.checked_sub(1),
            _ => None,
        };
        let is_change = matches!(
            self.action.kind,
            ManeuverKind::ChangeLeft | ManeuverKind::ChangeRight
        );
        self.substituted = false;
        if is_change {
            match target {
                Some(i) if !self.tracking.is_changing() => {
                    self.tracking.begin_change(corridor, i, pos, t)
                }
                _ => {
                    debug!(
                        "agent {}: {:?} unavailable, using constant velocity",
                        ego.id, self.action.kind
                    );
                    self.substituted = true;
                }
            }
        }
        let chain = &corridor.chains()[self.tracking.chain.unwrap_or(idx)];
        let a = self.action.accel;
        integrate_along(chain, &ego.state, dt, &self.tracking, t, |_, _, _| a)
    }

    fn spec(&self) -> BehaviorSpec {
        BehaviorSpec::new(BehaviorKind::Maneuver)
            .with("action", self.action.kind.index() as f64)
            .with("a_std", self.a_std)
    }

    fn box_clone(&self) -> Box<dyn BehaviorModel> {
        Box::new(self.clone())
    }

    fn lane_tracking(&self) -> Option<LaneTracking> {
        Some(self.tracking)
    }
}
