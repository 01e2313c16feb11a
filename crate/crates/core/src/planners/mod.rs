//! Monte-Carlo tree search planners over discrete maneuvers.

mod maneuver;
mod multi;
mod search;
mod single;

pub use maneuver::{ManeuverAction, ManeuverKind, ManeuverModel};
pub use multi::{interacting_agents, mcts_multi_search, JointSearch, JointState, MultiMctsModel};
pub use search::{search, uct_select, Node, SearchParams, SearchProblem, SearchTree};
pub use single::{apply_maneuver, evaluate_leaf_reward, mcts_single_search, MctsModel, MctsParams};

use crate::behaviors::{BehaviorError, BehaviorModel};
use crate::world::{ObservedWorld, Trajectory};

/// One single-agent planning call with fresh lane-tracking memory.
pub fn mcts_single_plan(
    p: &MctsParams,
    dt: f64,
    observed: &ObservedWorld<'_>,
) -> Result<Trajectory, BehaviorError> {
    MctsModel::new(p.clone()).plan(dt, observed)
}

/// One multi-agent planning call with fresh lane-tracking memory.
pub fn mcts_multi_plan(
    p: &MctsParams,
    radius: f64,
    max_interacting: usize,
    dt: f64,
    observed: &ObservedWorld<'_>,
) -> Result<Trajectory, BehaviorError> {
    MultiMctsModel::new(p.clone(), radius, max_interacting).plan(dt, observed)
}
