use std::collections::BTreeMap;

use super::maneuver::{ManeuverKind, ManeuverModel};
use super::search::{search, SearchParams, SearchProblem, SearchTree};
use crate::behaviors::{BehaviorError, BehaviorKind, BehaviorModel, BehaviorSpec, LaneTracking};
use crate::evaluators::{agent_in_collision, eval_goal_reached};
use crate::world::{AgentId, ObservedWorld, PredictionConfig, Trajectory, World};

#[derive(Debug, Clone, PartialEq)]
pub struct MctsParams {
    pub iterations: u64,
    pub uct_c: f64,
    pub horizon: usize,
    pub action_dt: f64,
    pub discount: f64,
    pub a_std: f64,
    pub w_collision: f64,
    pub w_goal: f64,
    pub w_step: f64,
    pub seed: u64,
    pub actions: Vec<ManeuverKind>,
}

impl Default for MctsParams {
    fn default() -> Self {
        Self {
            iterations: 500,
            uct_c: 1.0,
            horizon: 10,
            action_dt: 1.0,
            discount: 0.95,
            a_std: 1.7,
            w_collision: -1.0,
            w_goal: 1.0,
            w_step: -0.01,
            seed: 0,
            actions: ManeuverKind::ALL.to_vec(),
        }
    }
}

impl MctsParams {
    pub(crate) fn read(p: &BTreeMap<String, f64>) -> Self {
        Self {
            iterations: p["iterations"] as u64,
            uct_c: p["uct_c"],
            horizon: p["horizon"] as usize,
            action_dt: p["action_dt"],
            discount: p["discount"],
            a_std: p["a_std"],
            w_collision: p["w_collision"],
            w_goal: p["w_goal"],
            w_step: p["w_step"],
            seed: p["seed"] as u64,
            actions: ManeuverKind::from_mask(p["action_mask"] as u32),
        }
    }

    pub(crate) fn write(&self, spec: &mut BehaviorSpec) {
        for (k, v) in [
            ("iterations", self.iterations as f64),
            ("uct_c", self.uct_c),
            ("horizon", self.horizon as f64),
            ("action_dt", self.action_dt),
            ("discount", self.discount),
            ("a_std", self.a_std),
            ("w_collision", self.w_collision),
            ("w_goal", self.w_goal),
            ("w_step", self.w_step),
            ("seed", self.seed as f64),
            ("action_mask", ManeuverKind::mask(&self.actions) as f64),
        ] {
            spec.params.insert(k.to_string(), v);
        }
    }

    pub(crate) fn search_params(&self) -> SearchParams {
        SearchParams {
            iterations: self.iterations,
            uct_c: self.uct_c,
            horizon: self.horizon,
            discount: self.discount,
            seed: self.seed,
        }
    }
}

/// Reward of a state for `agent` and whether it ends the search.
pub fn evaluate_leaf_reward(world: &World, agent: AgentId, p: &MctsParams) -> (f64, bool) {
    if agent_in_collision(world, agent).unwrap_or(true) {
        (p.w_collision, true)
    } else if eval_goal_reached(world, agent).unwrap_or(false) {
        (p.w_goal, true)
    } else {
        (p.w_step, false)
    }
}

pub(crate) fn tracking_of(world: &World, id: AgentId) -> LaneTracking {
    world
        .agent(id)
        .ok()
        .and_then(|a| a.behavior().lane_tracking())
        .unwrap_or_default()
}

/// Steps a simulated world by `dt` with `agent` executing `kind` and all
/// other agents running their attached (predicted) models.
pub fn apply_maneuver(
    world: &World,
    agent: AgentId,
    kind: ManeuverKind,
    a_std: f64,
    dt: f64,
) -> Option<World> {
    apply_joint(world, &[(agent, kind)], a_std, dt)
}

pub(crate) fn apply_joint(
    world: &World,
    moves: &[(AgentId, ManeuverKind)],
    a_std: f64,
    dt: f64,
) -> Option<World> {
    let mut next = world.clone();
    for (id, kind) in moves {
        let tracking = tracking_of(world, *id);
        next.agent_mut(*id)
            .ok()?
            .set_behavior(Box::new(ManeuverModel::new(*kind, a_std, tracking)));
    }
    match next.step(dt) {
        Ok(()) => Some(next),
        Err(e) => {
            log::debug!("forward simulation failed: {e}");
            None
        }
    }
}

struct SingleProblem<'a> {
    ego: AgentId,
    p: &'a MctsParams,
}

impl SearchProblem for SingleProblem<'_> {
    type State = World;

    fn num_actions(&self) -> usize {
        self.p.actions.len()
    }

    fn step(&self, world: &World, action: usize) -> (World, f64, bool) {
        match apply_maneuver(
            world,
            self.ego,
            self.p.actions[action],
            self.p.a_std,
            self.p.action_dt,
        ) {
            Some(next) => {
                let (r, terminal) = evaluate_leaf_reward(&next, self.ego, self.p);
                (next, r, terminal)
            }
            None => (world.clone(), self.p.w_collision, true),
        }
    }
}

/// Builds the simulated root world: others run predicted models, the ego a
/// lane-keeping maneuver carrying its tracking memory.
pub(crate) fn root_world(
    observed: &ObservedWorld<'_>,
    tracking: LaneTracking,
    a_std: f64,
) -> Result<World, BehaviorError> {
    let mut world = observed.simulated_world()?;
    let ego = observed.observer_id();
    world
        .agent_mut(ego)?
        .set_behavior(Box::new(ManeuverModel::new(
            ManeuverKind::LaneKeepCV,
            a_std,
            tracking,
        )));
    Ok(world)
}

/// Runs the single-agent search from an observed world.
pub fn mcts_single_search(
    p: &MctsParams,
    observed: &ObservedWorld<'_>,
    tracking: LaneTracking,
) -> Result<SearchTree<World>, BehaviorError> {
    let root = root_world(observed, tracking, p.a_std)?;
    let problem = SingleProblem {
        ego: observed.observer_id(),
        p,
    };
    Ok(search(&problem, root, &p.search_params()))
}

/// Single-agent MCTS: the ego searches over maneuvers while other agents
/// follow the observer's prediction models.
#[derive(Debug, Clone, PartialEq)]
pub struct MctsModel {
    pub params: MctsParams,
    prediction: Option<Box<PredictionConfig>>,
    tracking: LaneTracking,
    /// Maneuver chosen by the last plan call.
    pub last_choice: Option<ManeuverKind>,
}

impl MctsModel {
    pub fn new(params: MctsParams) -> Self {
        Self {
            params,
            prediction: None,
            tracking: LaneTracking::default(),
            last_choice: None,
        }
    }

    pub(crate) fn from_spec(spec: &BehaviorSpec) -> Self {
        Self {
            prediction: spec.prediction.clone(),
            ..Self::new(MctsParams::read(&spec.params))
        }
    }
}

/// Executes `kind` for one real step and returns the trajectory.
pub(crate) fn execute_choice(
    kind: ManeuverKind,
    a_std: f64,
    tracking: &mut LaneTracking,
    dt: f64,
    observed: &ObservedWorld<'_>,
) -> Result<Trajectory, BehaviorError> {
    let mut m = ManeuverModel::new(kind, a_std, *tracking);
    let traj = m.plan(dt, observed)?;
    *tracking = m.tracking;
    Ok(traj)
}

impl BehaviorModel for MctsModel {
    fn plan(&mut self, dt: f64, observed: &ObservedWorld<'_>) -> Result<Trajectory, BehaviorError> {
        let ego = observed.ego();
        self.tracking
            .update(&ego.corridor, ego.state.position(), observed.time());
        let tree = mcts_single_search(&self.params, observed, self.tracking)?;
        let kind = self.params.actions[tree.best_action()];
        self.last_choice = Some(kind);
        execute_choice(kind, self.params.a_std, &mut self.tracking, dt, observed)
    }

    fn spec(&self) -> BehaviorSpec {
        let mut s = BehaviorSpec::new(BehaviorKind::MctsSingle);
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
