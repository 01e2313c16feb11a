use super::{BehaviorError, BehaviorKind, BehaviorModel, BehaviorSpec};
use crate::world::{AgentState, ObservedWorld, Trajectory};

/// Straight-line motion at the current speed and heading.
pub fn constant_velocity_plan(start: &AgentState, dt: f64) -> Result<Trajectory, BehaviorError> {
    let (sin, cos) = start.theta.sin_cos();
    let end = AgentState {
        t: start.t + dt,
        x: start.x + start.v * dt * cos,
        y: start.y + start.v * dt * sin,
        ..*start
    };
    Ok(Trajectory::new(vec![*start, end])?)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstantVelocity;

impl BehaviorModel for ConstantVelocity {
    fn plan(&mut self, dt: f64, observed: &ObservedWorld<'_>) -> Result<Trajectory, BehaviorError> {
        let start = AgentState {
            t: observed.time(),
            ..*observed.ego_state()
        };
        constant_velocity_plan(&start, dt)
    }

    fn spec(&self) -> BehaviorSpec {
        BehaviorSpec::new(BehaviorKind::ConstVel)
    }

    fn box_clone(&self) -> Box<dyn BehaviorModel> {
        Box::new(*self)
    }
}
