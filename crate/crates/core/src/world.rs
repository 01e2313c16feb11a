//! Ground-truth world state, observed worlds and simultaneous stepping.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::behaviors::{build_behavior, BehaviorError, BehaviorModel, BehaviorSpec};
use crate::geometry::{normalize_angle, Point2, Polygon, Pose};
use crate::map::{GoalDefinition, RoadCorridor, RoadMap};

/// Time tolerance for trajectory coverage and sample matching.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("duplicate agent {0}")]
    DuplicateAgent(AgentId),
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("time {t} outside trajectory span [{from}, {to}]")]
    OutOfRange { t: f64, from: f64, to: f64 },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("agent {agent}: {msg}")]
    Contract { agent: AgentId, msg: String },
    #[error("agent {agent}: {source}")]
    Behavior {
        agent: AgentId,
        source: BehaviorError,
    },
    #[error("agent {0} has no prediction configuration")]
    NoPrediction(AgentId),
    #[error("invalid prediction configuration: {0}")]
    Prediction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

impl AgentState {
    pub const fn new(t: f64, x: f64, y: f64, theta: f64, v: f64) -> Self {
        Self { t, x, y, theta, v }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.theta)
    }

    pub fn is_finite(&self) -> bool {
        [self.t, self.x, self.y, self.theta, self.v]
            .iter()
            .all(|c| c.is_finite())
    }
}

/// Time-ordered agent states; at least two, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<AgentState>,
}

impl Trajectory {
    pub fn new(states: Vec<AgentState>) -> Result<Self, WorldError> {
        if states.len() < 2 {
            return Err(WorldError::InvalidTrajectory(
                "needs at least 2 states".into(),
            ));
        }
        if let Some(s) = states.iter().find(|s| !s.is_finite()) {
            return Err(WorldError::InvalidTrajectory(format!(
                "non-finite state at t={}",
                s.t
            )));
        }
        if let Some(w) = states.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(WorldError::InvalidTrajectory(format!(
                "time not increasing at t={}",
                w[1].t
            )));
        }
        Ok(Self { states })
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn start_time(&self) -> f64 {
        self.states[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.states[self.states.len() - 1].t
    }

    pub fn last(&self) -> &AgentState {
        &self.states[self.states.len() - 1]
    }
}

/// Linear interpolation of a trajectory at `t`; heading follows the
/// shortest arc. A time within [`TIME_EPS`] of a sample returns the sample.
pub fn execute_interpolate(traj: &Trajectory, t: f64) -> Result<AgentState, WorldError> {
    let s = traj.states();
    let (from, to) = (traj.start_time(), traj.end_time());
    if !(t >= from - TIME_EPS && t <= to + TIME_EPS) {
        return Err(WorldError::OutOfRange { t, from, to });
    }
    let k = s.partition_point(|x| x.t < t);
    if let Some(hit) = [k.checked_sub(1), Some(k)]
        .into_iter()
        .flatten()
        .filter_map(|i| s.get(i))
        .find(|x| (x.t - t).abs() <= TIME_EPS)
    {
        return Ok(*hit);
    }
    let (a, b) = (&s[k - 1], &s[k]);
    let u = (t - a.t) / (b.t - a.t);
    let lerp = |p: f64, q: f64| p + (q - p) * u;
    Ok(AgentState {
        t,
        x: lerp(a.x, b.x),
        y: lerp(a.y, b.y),
        theta: normalize_angle(a.theta + normalize_angle(b.theta - a.theta) * u),
        v: lerp(a.v, b.v),
    })
}

/// Maps a planned trajectory to the state actually reached.
pub trait ExecutionModel: Send + Sync + fmt::Debug {
    fn execute(&self, traj: &Trajectory, t_next: f64) -> Result<AgentState, WorldError>;
}

/// Exact tracking of the plan.
#[derive(Debug, Clone, Copy, Default)]
pub struct InterpolationExecution;

impl ExecutionModel for InterpolationExecution {
    fn execute(&self, traj: &Trajectory, t_next: f64) -> Result<AgentState, WorldError> {
        execute_interpolate(traj, t_next)
    }
}

/// What other agents are assumed to do, from one agent's point of view.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionConfig {
    pub default_model: BehaviorSpec,
    pub overrides: BTreeMap<AgentId, BehaviorSpec>,
    /// Multiplicative factors applied to named model parameters.
    pub perturbation: BTreeMap<String, f64>,
}

impl PredictionConfig {
    pub fn new(default_model: BehaviorSpec) -> Self {
        Self {
            default_model,
            overrides: BTreeMap::new(),
            perturbation: BTreeMap::new(),
        }
    }

    pub fn with_scale(mut self, param: &str, factor: f64) -> Self {
        self.perturbation.insert(param.to_string(), factor);
        self
    }

    /// Builds the prototype models once; observations clone them.
    pub fn compile(&self) -> Result<Prediction, WorldError> {
        let perr = |m: String| WorldError::Prediction(m);
        for (name, f) in &self.perturbation {
            if !(f.is_finite() && *f > 0.0) {
                return Err(perr(format!(
                    "scale for '{name}' must be positive, got {f}"
                )));
            }
        }
        let default_spec = self
            .default_model
            .normalized()
            .map_err(|e| perr(e.to_string()))?;
        for name in self.perturbation.keys() {
            if !default_spec.params.contains_key(name) {
                return Err(perr(format!(
                    "'{name}' is not a parameter of the {} prediction model",
                    default_spec.kind
                )));
            }
        }
        let build =
            |spec: &BehaviorSpec| -> Result<(BehaviorSpec, Arc<dyn BehaviorModel>), WorldError> {
                let mut spec = spec.normalized().map_err(|e| perr(e.to_string()))?;
                if spec.kind.is_planner() {
                    return Err(perr(format!(
                        "{} cannot be used as a prediction model",
                        spec.kind
                    )));
                }
                for (name, f) in &self.perturbation {
                    if let Some(v) = spec.params.get_mut(name) {
                        *v *= f;
                    }
                }
                let model = build_behavior(&spec).map_err(|e| perr(e.to_string()))?;
                Ok((spec, Arc::from(model)))
            };
        let default = build(&default_spec)?;
        let overrides = self
            .overrides
            .iter()
            .map(|(id, s)| Ok((*id, build(s)?)))
            .collect::<Result<BTreeMap<_, _>, WorldError>>()?;
        Ok(Prediction {
            config: self.clone(),
            default,
            overrides,
        })
    }
}

/// A compiled [`PredictionConfig`].
#[derive(Debug)]
pub struct Prediction {
    config: PredictionConfig,
    default: (BehaviorSpec, Arc<dyn BehaviorModel>),
    overrides: BTreeMap<AgentId, (BehaviorSpec, Arc<dyn BehaviorModel>)>,
}

impl Prediction {
    pub fn config(&self) -> &PredictionConfig {
        &self.config
    }

    fn entry(&self, id: AgentId) -> &(BehaviorSpec, Arc<dyn BehaviorModel>) {
        self.overrides.get(&id).unwrap_or(&self.default)
    }

    /// Effective (perturbed) spec predicted for agent `id`.
    pub fn spec_for(&self, id: AgentId) -> &BehaviorSpec {
        &self.entry(id).0
    }

    /// Fresh model instance predicted for agent `id`.
    pub fn model_for(&self, id: AgentId) -> Box<dyn BehaviorModel> {
        self.entry(id).1.box_clone()
    }
}

/// Decides which agents an observer can see.
pub trait Perception: Send + Sync + fmt::Debug {
    fn perceives(&self, observer: &Agent, other: &Agent) -> bool;
}

pub struct Agent {
    pub id: AgentId,
    pub state: AgentState,
    /// Body shape centered on the agent position, heading along +x.
    pub shape: Arc<Polygon>,
    behavior: Box<dyn BehaviorModel>,
    pub execution: Arc<dyn ExecutionModel>,
    pub goal: Arc<GoalDefinition>,
    pub corridor: RoadCorridor,
    pub prediction: Option<Arc<Prediction>>,
}

impl Clone for Agent {
    fn clone(&self) -> Self {
        Self {
            id: self.id,
            state: self.state,
            shape: self.shape.clone(),
            behavior: self.behavior.box_clone(),
            execution: self.execution.clone(),
            goal: self.goal.clone(),
            corridor: self.corridor.clone(),
            prediction: self.prediction.clone(),
        }
    }
}

impl fmt::Debug for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Agent")
            .field("id", &self.id)
            .field("state", &self.state)
            .field("behavior", &self.behavior)
            .finish_non_exhaustive()
    }
}

impl Agent {
    pub fn new(
        id: AgentId,
        state: AgentState,
        shape: Polygon,
        behavior: Box<dyn BehaviorModel>,
        goal: GoalDefinition,
        corridor: RoadCorridor,
    ) -> Self {
        Self {
            id,
            state,
            shape: Arc::new(shape),
            behavior,
            execution: Arc::new(InterpolationExecution),
            goal: Arc::new(goal),
            corridor,
            prediction: None,
        }
    }

    pub fn with_prediction(mut self, prediction: Arc<Prediction>) -> Self {
        self.prediction = Some(prediction);
        self
    }

    pub fn behavior(&self) -> &dyn BehaviorModel {
        self.behavior.as_ref()
    }

    pub fn set_behavior(&mut self, behavior: Box<dyn BehaviorModel>) {
        self.behavior = behavior;
    }

    /// Shape placed at the current pose.
    pub fn polygon(&self) -> Polygon {
        self.shape.transform(self.state.pose())
    }

    pub fn length(&self) -> f64 {
        self.shape.length()
    }
}

#[derive(Clone, Debug)]
pub struct World {
    pub time: f64,
    pub step_index: u64,
    agents: Vec<Agent>,
    map: Arc<RoadMap>,
    pub controlled: Vec<AgentId>,
    perception: Option<Arc<dyn Perception>>,
}

impl World {
    pub fn new(map: Arc<RoadMap>, time: f64) -> Self {
        Self {
            time,
            step_index: 0,
            agents: Vec::new(),
            map,
            controlled: Vec::new(),
            perception: None,
        }
    }

    /// Adds an agent; its state time is set to the world time.
    pub fn add_agent(&mut self, mut agent: Agent) -> Result<(), WorldError> {
        match self.agents.binary_search_by_key(&agent.id, |a| a.id) {
            Ok(_) => Err(WorldError::DuplicateAgent(agent.id)),
            Err(pos) => {
                agent.state.t = self.time;
                self.agents.insert(pos, agent);
                Ok(())
            }
        }
    }

    pub fn remove_agent(&mut self, id: AgentId) -> Option<Agent> {
        let pos = self.index_of(id)?;
        self.controlled.retain(|c| *c != id);
        Some(self.agents.remove(pos))
    }

    pub fn set_perception(&mut self, perception: Arc<dyn Perception>) {
        self.perception = Some(perception);
    }

    pub fn map(&self) -> &Arc<RoadMap> {
        &self.map
    }

    /// Agents in ascending id order.
    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    fn index_of(&self, id: AgentId) -> Option<usize> {
        self.agents.binary_search_by_key(&id, |a| a.id).ok()
    }

    pub fn agent(&self, id: AgentId) -> Result<&Agent, WorldError> {
        self.index_of(id)
            .map(|i| &self.agents[i])
            .ok_or(WorldError::UnknownAgent(id))
    }

    pub fn agent_mut(&mut self, id: AgentId) -> Result<&mut Agent, WorldError> {
        match self.index_of(id) {
            Some(i) => Ok(&mut self.agents[i]),
            None => Err(WorldError::UnknownAgent(id)),
        }
    }

    /// View of the world from `observer` under an explicit prediction.
    pub fn observe<'a>(
        &'a self,
        observer: AgentId,
        prediction: &'a Prediction,
    ) -> Result<ObservedWorld<'a>, WorldError> {
        let idx = self
            .index_of(observer)
            .ok_or(WorldError::UnknownAgent(observer))?;
        Ok(ObservedWorld {
            world: self,
            observer: idx,
            prediction: Some(prediction),
        })
    }

    /// View of the world from `observer` under its own prediction setting.
    pub fn observe_default(&self, observer: AgentId) -> Result<ObservedWorld<'_>, WorldError> {
        let idx = self
            .index_of(observer)
            .ok_or(WorldError::UnknownAgent(observer))?;
        Ok(ObservedWorld {
            world: self,
            observer: idx,
            prediction: self.agents[idx].prediction.as_deref(),
        })
    }

    /// Advances all agents by `dt`. Every agent plans from the same
    /// pre-step world; the new states are applied together afterwards.
    pub fn step(&mut self, dt: f64) -> Result<(), WorldError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(WorldError::InvalidStep(dt));
        }
        let t_next = self.time + dt;
        let mut updates = Vec::with_capacity(self.agents.len());
        for (i, agent) in self.agents.iter().enumerate() {
            let observed = ObservedWorld {
                world: self,
                observer: i,
                prediction: agent.prediction.as_deref(),
            };
            let mut model = agent.behavior.box_clone();
            let traj = model
                .plan(dt, &observed)
                .map_err(|source| WorldError::Behavior {
                    agent: agent.id,
                    source,
                })?;
            let contract = |msg: String| WorldError::Contract {
                agent: agent.id,
                msg,
            };
            if (traj.start_time() - self.time).abs() > TIME_EPS {
                return Err(contract(format!(
                    "trajectory starts at {} instead of {}",
                    traj.start_time(),
                    self.time
                )));
            }
            if traj.end_time() < t_next - TIME_EPS {
                return Err(contract(format!(
                    "trajectory ends at {} before {t_next}",
                    traj.end_time()
                )));
            }
            if let Some(s) = traj.states().iter().find(|s| s.v < -TIME_EPS) {
                return Err(contract(format!("negative velocity {} at t={}", s.v, s.t)));
            }
            let mut next = agent
                .execution
                .execute(&traj, t_next)
                .map_err(|e| contract(e.to_string()))?;
            next.t = t_next;
            next.v = next.v.max(0.0);
            updates.push((model, next));
        }
        for (agent, (model, next)) in self.agents.iter_mut().zip(updates) {
            agent.behavior = model;
            agent.state = next;
        }
        self.time = t_next;
        self.step_index += 1;
        Ok(())
    }
}

/// Another agent as seen by the observer: physical state only, plus the
/// model the observer predicts for it.
#[derive(Clone, Copy)]
pub struct OtherAgent<'a> {
    agent: &'a Agent,
    prediction: Option<&'a Prediction>,
}

impl<'a> OtherAgent<'a> {
    pub fn id(&self) -> AgentId {
        self.agent.id
    }

    pub fn state(&self) -> &'a AgentState {
        &self.agent.state
    }

    pub fn shape(&self) -> &'a Polygon {
        &self.agent.shape
    }

    pub fn length(&self) -> f64 {
        self.agent.shape.length()
    }

    pub fn polygon(&self) -> Polygon {
        self.agent.polygon()
    }

    pub fn goal(&self) -> &'a GoalDefinition {
        &self.agent.goal
    }

    pub fn corridor(&self) -> &'a RoadCorridor {
        &self.agent.corridor
    }

    pub fn predicted_spec(&self) -> Option<&'a BehaviorSpec> {
        self.prediction.map(|p| p.spec_for(self.agent.id))
    }
}

/// The world from one agent's perspective. Other agents' true behavior
/// models are not reachable; a simulated copy carries predicted models.
#[derive(Clone, Copy)]
pub struct ObservedWorld<'a> {
    world: &'a World,
    observer: usize,
    prediction: Option<&'a Prediction>,
}

impl<'a> ObservedWorld<'a> {
    pub fn observer_id(&self) -> AgentId {
        self.world.agents[self.observer].id
    }

    pub fn ego(&self) -> &'a Agent {
        &self.world.agents[self.observer]
    }

    pub fn ego_state(&self) -> &'a AgentState {
        &self.ego().state
    }

    pub fn time(&self) -> f64 {
        self.world.time
    }

    pub fn step_index(&self) -> u64 {
        self.world.step_index
    }

    pub fn map(&self) -> &'a Arc<RoadMap> {
        &self.world.map
    }

    pub fn prediction(&self) -> Option<&'a Prediction> {
        self.prediction
    }

    /// Perceived agents other than the observer, in ascending id order.
    pub fn others(&self) -> impl Iterator<Item = OtherAgent<'a>> + 'a {
        let world = self.world;
        let me = self.observer;
        let prediction = self.prediction;
        world
            .agents
            .iter()
            .enumerate()
            .filter(move |(i, a)| {
                *i != me
                    && world
                        .perception
                        .as_ref()
                        .is_none_or(|p| p.perceives(&world.agents[me], a))
            })
            .map(move |(_, agent)| OtherAgent { agent, prediction })
    }

    pub fn other(&self, id: AgentId) -> Option<OtherAgent<'a>> {
        self.others().find(|o| o.id() == id)
    }

    /// Deep copy in which every other agent runs a fresh instance of its
    /// predicted model; the observer keeps its own model.
    pub fn simulated_world(&self) -> Result<World, WorldError> {
        let prediction = self
            .prediction
            .ok_or(WorldError::NoPrediction(self.observer_id()))?;
        let mut world = self.world.clone();
        let me = self.observer_id();
        let visible: Vec<AgentId> = self.others().map(|o| o.id()).collect();
        world
            .agents
            .retain(|a| a.id == me || visible.binary_search(&a.id).is_ok());
        for agent in world.agents.iter_mut().filter(|a| a.id != me) {
            agent.behavior = prediction.model_for(agent.id);
        }
        Ok(world)
    }
}
