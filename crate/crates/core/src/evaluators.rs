//! Read-only metrics over a world state.

use std::fmt;

use crate::geometry::{Point2, Polygon};
use crate::map::{GoalDefinition, RoadMap};
use crate::world::{Agent, AgentId, AgentState, World, WorldError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalValue {
    Bool(bool),
    Int(i64),
    Real(f64),
}

impl fmt::Display for EvalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalValue::Bool(b) => write!(f, "{b}"),
            EvalValue::Int(i) => write!(f, "{i}"),
            EvalValue::Real(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResult {
    pub name: &'static str,
    pub value: EvalValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionScope {
    Any,
    Controlled,
}

/// Named evaluators with a fixed result kind each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluator {
    StepCount,
    GoalReached,
    Collision(CollisionScope),
    DrivableArea,
    GoalDistance,
}

impl Evaluator {
    pub fn name(self) -> &'static str {
        match self {
            Evaluator::StepCount => "step_count",
            Evaluator::GoalReached => "goal_reached",
            Evaluator::Collision(CollisionScope::Any) => "collision",
            Evaluator::Collision(CollisionScope::Controlled) => "collision_controlled",
            Evaluator::DrivableArea => "drivable_area",
            Evaluator::GoalDistance => "goal_distance",
        }
    }

    /// Evaluates for `agent` (ignored by world-level evaluators).
    pub fn evaluate(self, world: &World, agent: AgentId) -> Result<EvaluationResult, WorldError> {
        let value = match self {
            Evaluator::StepCount => EvalValue::Int(eval_step_count(world) as i64),
            Evaluator::GoalReached => EvalValue::Bool(eval_goal_reached(world, agent)?),
            Evaluator::Collision(scope) => EvalValue::Bool(eval_collision(world, scope)),
            Evaluator::DrivableArea => EvalValue::Bool(eval_drivable_area(world, agent)?),
            Evaluator::GoalDistance => EvalValue::Real(eval_goal_distance(world, agent)?),
        };
        Ok(EvaluationResult {
            name: self.name(),
            value,
        })
    }
}

pub fn eval_step_count(world: &World) -> u64 {
    world.step_index
}

/// Goal test on an agent center: inside the goal polygon, or on the goal
/// lane laterally within half its width at arclength >= `min_s`.
pub fn goal_satisfied(map: &RoadMap, goal: &GoalDefinition, p: Point2) -> bool {
    match goal {
        GoalDefinition::Region(poly) => poly.contains_point(p),
        GoalDefinition::Lane { lane, min_s } => map.lane(*lane).is_some_and(|l| {
            let f = l.center.project_extended(p);
            f.s >= *min_s && f.s <= l.center.length() && f.d.abs() < l.width_at(f.s) / 2.0
        }),
    }
}

pub fn eval_goal_reached(world: &World, id: AgentId) -> Result<bool, WorldError> {
    let a = world.agent(id)?;
    Ok(goal_satisfied(world.map(), &a.goal, a.state.position()))
}

fn may_touch(a: &Agent, b: &Agent) -> bool {
    let ra = a
        .shape
        .vertices()
        .iter()
        .map(|p| p.norm())
        .fold(0.0, f64::max);
    let rb = b
        .shape
        .vertices()
        .iter()
        .map(|p| p.norm())
        .fold(0.0, f64::max);
    a.state.position().distance(b.state.position()) <= ra + rb + 1e-6
}

/// Whether two agents' placed shapes intersect.
pub fn agents_collide(a: &Agent, b: &Agent) -> bool {
    may_touch(a, b) && a.polygon().collides(&b.polygon())
}

/// Whether agent `id` collides with any other agent.
pub fn agent_in_collision(world: &World, id: AgentId) -> Result<bool, WorldError> {
    let a = world.agent(id)?;
    Ok(world
        .agents()
        .iter()
        .any(|b| b.id != id && agents_collide(a, b)))
}

pub fn eval_collision(world: &World, scope: CollisionScope) -> bool {
    let agents = world.agents();
    for (i, a) in agents.iter().enumerate() {
        for b in &agents[i + 1..] {
            if scope == CollisionScope::Controlled
                && !world.controlled.contains(&a.id)
                && !world.controlled.contains(&b.id)
            {
                continue;
            }
            if agents_collide(a, b) {
                return true;
            }
        }
    }
    false
}

/// The placed shape lies fully in the union of the agent's corridor chains.
pub fn eval_drivable_area(world: &World, id: AgentId) -> Result<bool, WorldError> {
    let a = world.agent(id)?;
    Ok(a.corridor.drivable_region().contains_polygon(&a.polygon()))
}

/// Distance left to the goal: centroid distance for a region (0 inside),
/// remaining arclength to `min_s` for a lane goal.
pub fn goal_distance(world: &World, agent: &Agent) -> f64 {
    goal_distance_from(world.map(), agent, &agent.state)
}

fn goal_distance_from(map: &RoadMap, agent: &Agent, state: &AgentState) -> f64 {
    let p = state.position();
    match agent.goal.as_ref() {
        GoalDefinition::Region(poly) => region_distance(poly, p),
        GoalDefinition::Lane { lane, min_s } => {
            for chain in agent.corridor.chains() {
                if let Some(k) = chain.lanes.iter().position(|l| l == lane) {
                    let offset: f64 = chain.lanes[..k]
                        .iter()
                        .filter_map(|l| map.lane(*l))
                        .map(|l| l.center.length())
                        .sum();
                    return (offset + min_s - chain.frenet(p).s).max(0.0);
                }
            }
            match map.lane(*lane) {
                Some(l) => {
                    let (target, _) = l
                        .center
                        .point_at_extended(min_s.clamp(0.0, l.center.length()), 0.0);
                    let f = l.center.project_extended(p);
                    if f.s >= *min_s && f.d.abs() < l.width_at(f.s) / 2.0 {
                        0.0
                    } else {
                        target.distance(p)
                    }
                }
                None => f64::INFINITY,
            }
        }
    }
}

fn region_distance(poly: &Polygon, p: Point2) -> f64 {
    if poly.contains_point(p) {
        0.0
    } else {
        poly.centroid().distance(p)
    }
}

pub fn eval_goal_distance(world: &World, id: AgentId) -> Result<f64, WorldError> {
    Ok(goal_distance(world, world.agent(id)?))
}
