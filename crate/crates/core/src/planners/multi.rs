use super::maneuver::ManeuverKind;
use super::search::{search, SearchProblem, SearchTree};
use super::single::{apply_joint, execute_choice, root_world, MctsParams};
use crate::behaviors::{BehaviorError, BehaviorKind, BehaviorModel, BehaviorSpec, LaneTracking};
use crate::evaluators::{agent_in_collision, eval_goal_reached};
use crate::world::{AgentId, ObservedWorld, PredictionConfig, Trajectory, World};

/// Agents within `radius` of the ego, nearest first (ties by id), at most
/// `max` of them.
pub fn interacting_agents(observed: &ObservedWorld<'_>, radius: f64, max: usize) -> Vec<AgentId> {
    let p = observed.ego_state().position();
    let mut near: Vec<(f64, AgentId)> = observed
        .others()
        .map(|o| (o.state().position().distance(p), o.id()))
        .filter(|(d, _)| *d <= radius)
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    near.into_iter().take(max).map(|(_, id)| id).collect()
}

/// Joint state: the world plus which members already collected their goal.
#[derive(Clone)]
pub struct JointState {
    pub world: World,
    reached: Vec<bool>,
}

struct JointProblem<'a> {
    /// Ego first.
    members: Vec<AgentId>,
    p: &'a MctsParams,
}

impl JointProblem<'_> {
    fn decode(&self, mut joint: usize) -> Vec<(AgentId, ManeuverKind)> {
        let k = self.p.actions.len();
        let mut out = vec![(AgentId(0), ManeuverKind::LaneKeepCV); self.members.len()];
        for (i, id) in self.members.iter().enumerate().rev() {
            out[i] = (*id, self.p.actions[joint % k]);
            joint /= k;
        }
        out
    }
}

impl SearchProblem for JointProblem<'_> {
    type State = JointState;

    fn num_actions(&self) -> usize {
        self.p.actions.len().pow(self.members.len() as u32)
    }

    fn step(&self, state: &JointState, action: usize) -> (JointState, f64, bool) {
        let p = self.p;
        let Some(world) = apply_joint(&state.world, &self.decode(action), p.a_std, p.action_dt)
        else {
            return (
                state.clone(),
                p.w_collision * self.members.len() as f64,
                true,
            );
        };
        let mut reward = 0.0;
        let mut terminal = false;
        let mut reached = state.reached.clone();
        for (i, id) in self.members.iter().enumerate() {
            if agent_in_collision(&world, *id).unwrap_or(true) {
                reward += p.w_collision;
                terminal = true;
            } else if !reached[i] && eval_goal_reached(&world, *id).unwrap_or(false) {
                reward += p.w_goal;
                reached[i] = true;
                terminal |= i == 0;
            } else {
                reward += p.w_step;
            }
        }
        (JointState { world, reached }, reward, terminal)
    }
}

/// Multi-agent search result: the member list (ego first) and the tree over
/// joint actions, encoded in mixed radix with the ego most significant.
pub struct JointSearch {
    pub members: Vec<AgentId>,
    pub tree: SearchTree<JointState>,
}

impl JointSearch {
    /// Ego maneuver of the most visited root joint action.
    pub fn ego_choice(&self, p: &MctsParams) -> ManeuverKind {
        let k = p.actions.len();
        let joint = self.tree.best_action();
        p.actions[joint / k.pow(self.members.len() as u32 - 1)]
    }
}

pub fn mcts_multi_search(
    p: &MctsParams,
    radius: f64,
    max_interacting: usize,
    observed: &ObservedWorld<'_>,
    tracking: LaneTracking,
) -> Result<JointSearch, BehaviorError> {
    let mut members = vec![observed.observer_id()];
    members.extend(interacting_agents(observed, radius, max_interacting));
    let world = root_world(observed, tracking, p.a_std)?;
    let reached = vec![false; members.len()];
    let problem = JointProblem {
        members: members.clone(),
        p,
    };
    let tree = search(&problem, JointState { world, reached }, &p.search_params());
    Ok(JointSearch { members, tree })
}

/// Multi-agent MCTS over joint maneuvers of the ego and nearby agents with
/// a cooperative (summed) reward.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiMctsModel {
    pub params: MctsParams,
    pub radius: f64,
    pub max_interacting: usize,
    prediction: Option<Box<PredictionConfig>>,
    tracking: LaneTracking,
    pub last_choice: Option<ManeuverKind>,
}

impl MultiMctsModel {
    pub fn new(params: MctsParams, radius: f64, max_interacting: usize) -> Self {
        Self {
            params,
            radius,
            max_interacting,
            prediction: None,
            tracking: LaneTracking::default(),
            last_choice: None,
        }
    }

    pub(crate) fn from_spec(spec: &BehaviorSpec) -> Self {
        let p = &spec.params;
        Self {
            prediction: spec.prediction.clone(),
            ..Self::new(
                MctsParams::read(p),
                p["radius"],
                p["max_interacting"] as usize,
            )
        }
    }
}

impl BehaviorModel for MultiMctsModel {
    fn plan(&mut self, dt: f64, observed: &ObservedWorld<'_>) -> Result<Trajectory, BehaviorError> {
        let ego = observed.ego();
        self.tracking
            .update(&ego.corridor, ego.state.position(), observed.time());
        let js = mcts_multi_search(
            &self.params,
            self.radius,
            self.max_interacting,
            observed,
            self.tracking,
        )?;
        let kind = js.ego_choice(&self.params);
        self.last_choice = Some(kind);
        execute_choice(kind, self.params.a_std, &mut self.tracking, dt, observed)
    }

    fn spec(&self) -> BehaviorSpec {
        let mut s = BehaviorSpec::new(BehaviorKind::MctsMulti)
            .with("radius", self.radius)
            .with("max_interacting", self.max_interacting as f64);
        self.params.write(&mut s);
        s.prediction = self.prediction.clone();
        s
    }

    fn box_clone(&self) -> Box<dyn BehaviorModel> {
        Box::new(self.clone())
    }

    fn lane_tracking(&self) -> Option<LaneTracking> {
        Some(self.tracking)
    }
}
