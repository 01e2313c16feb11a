//! Sampling-based scenario generation from source-sink pairs.
//!
//! Generator config (TOML):
//!
//! ```toml
//! map = "two_lane.map"       # relative to the config file
//! seed = 7                   # default seed, overridable on the command line
//! dt = 0.2
//! horizon = 30
//!
//! [[set]]
//! name = "tau_100"
//! count = 100
//! prediction_scale = { tau = 1.0 }
//!
//! [[source_sink]]
//! source = 1
//! sink = 1
//! distance_range = [20.0, 30.0]
//! velocity_range_kmh = [40.0, 60.0]
//! count = [3, 3]
//! behavior = { kind = "IDM", tau = 3.0 }
//! goal = { type = "sink" }
//! controlled = { index = 1, behavior = { kind = "MCTS_Single" }, goal = { type = "lane", lane = 2 } }
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{MapSource, Scenario, ScenarioAgent, ScenarioDatabase, ScenarioError};
use crate::behaviors::{BehaviorKind, BehaviorSpec};
use crate::geometry::{Polygon, Pose};
use crate::map::{compute_road_corridor, GoalDefinition, LaneChain, LaneId, RoadMap};
use crate::rng::CounterRng;
use crate::world::{AgentId, AgentState, PredictionConfig};

/// Resamples per agent before generation gives up.
pub const MAX_PLACEMENT_RETRIES: usize = 100;

const KMH: f64 = 1.0 / 3.6;

/// A behavior spec written as `{ kind = "...", param = value, ... }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorTemplate {
    pub kind: BehaviorKind,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl BehaviorTemplate {
    pub fn to_spec(&self) -> BehaviorSpec {
        let mut s = BehaviorSpec::new(self.kind);
        s.params = self.params.clone();
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GoalTemplate {
    /// Anywhere on the sink lane.
    Sink,
    Lane {
        lane: u32,
        #[serde(default)]
        min_s: f64,
    },
    /// Patch of `lane` between `ahead[0]` and `ahead[1]` meters ahead of the
    /// agent's projection onto that lane.
    Patch { lane: u32, ahead: [f64; 2] },
}

impl GoalTemplate {
    fn instantiate(
        &self,
        map: &RoadMap,
        sink: LaneId,
        pose: Pose,
    ) -> Result<GoalDefinition, ScenarioError> {
        Ok(match *self {
            GoalTemplate::Sink => GoalDefinition::Lane {
                lane: sink,
                min_s: 0.0,
            },
            GoalTemplate::Lane { lane, min_s } => GoalDefinition::Lane {
                lane: LaneId(lane),
                min_s,
            },
            GoalTemplate::Patch { lane, ahead } => {
                let l = map
                    .lane(LaneId(lane))
                    .ok_or(crate::map::MapError::UnknownLane(LaneId(lane)))?;
                let s = l.center.project(pose.position()).s;
                GoalDefinition::Region(map.lane_patch(LaneId(lane), s + ahead[0], s + ahead[1])?)
            }
        })
    }

    fn lanes(&self) -> Option<LaneId> {
        match self {
            GoalTemplate::Sink => None,
            GoalTemplate::Lane { lane, .. } | GoalTemplate::Patch { lane, .. } => {
                Some(LaneId(*lane))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlledTemplate {
    /// Position in this pair's placement order (0 is the rearmost agent).
    pub index: usize,
    pub behavior: BehaviorTemplate,
    pub goal: GoalTemplate,
    /// Prediction model for the other agents, scaled per scenario set.
    #[serde(default)]
    pub prediction: Option<BehaviorTemplate>,
    /// Multiplicative factors applied to the prediction model parameters.
    #[serde(default)]
    pub prediction_scale: BTreeMap<String, f64>,
}

fn default_start_s() -> f64 {
    10.0
}

fn default_length() -> f64 {
    4.5
}

fn default_width() -> f64 {
    1.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSinkConfig {
    pub source: u32,
    pub sink: u32,
    /// Center-to-center spacing between consecutive agents, m.
    pub distance_range: [f64; 2],
    /// m/s; alternatively give `velocity_range_kmh`.
    #[serde(default)]
    pub velocity_range: Option<[f64; 2]>,
    #[serde(default)]
    pub velocity_range_kmh: Option<[f64; 2]>,
    /// Inclusive range of agent counts.
    pub count: [usize; 2],
    /// Arclength of the rearmost agent along the source chain.
    #[serde(default = "default_start_s")]
    pub start_s: f64,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    pub behavior: BehaviorTemplate,
    pub goal: GoalTemplate,
    #[serde(default)]
    pub controlled: Option<ControlledTemplate>,
}

impl SourceSinkConfig {
    /// Speed range in m/s.
    pub fn speeds(&self) -> Result<[f64; 2], ScenarioError> {
        match (self.velocity_range, self.velocity_range_kmh) {
            (Some(v), None) => Ok(v),
            (None, Some([a, b])) => Ok([a * KMH, b * KMH]),
            _ => Err(ScenarioError::Config(
                "give exactly one of velocity_range and velocity_range_kmh".into(),
            )),
        }
    }

    pub fn validate(&self, map: &RoadMap) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Config(m));
        let [v0, v1] = self.speeds()?;
        let [d0, d1] = self.distance_range;
        if !(d0.is_finite() && d1.is_finite() && d0 <= d1 && d0 > 0.0) {
            return bad(format!(
                "distance_range [{d0}, {d1}] must satisfy 0 < min <= max"
            ));
        }
        if !(v0.is_finite() && v1.is_finite() && v0 <= v1 && v0 >= 0.0) {
            return bad(format!(
                "velocity range [{v0}, {v1}] must satisfy 0 <= min <= max"
            ));
        }
        if self.count[0] > self.count[1] {
            return bad(format!("count range {:?} has min > max", self.count));
        }
        if !(self.length > 0.0 && self.width > 0.0) {
            return bad("vehicle length and width must be positive".into());
        }
        let lanes = [
            Some(LaneId(self.source)),
            Some(LaneId(self.sink)),
            self.goal.lanes(),
        ];
        let ctl_lane = self.controlled.as_ref().and_then(|c| c.goal.lanes());
        for l in lanes.into_iter().chain([ctl_lane]).flatten() {
            if map.lane(l).is_none() {
                return Err(crate::map::MapError::UnknownLane(l).into());
            }
        }
        self.behavior.to_spec().normalized()?;
        if let Some(c) = &self.controlled {
            if c.index >= self.count[0] {
                return bad(format!(
                    "controlled index {} may exceed the agent count",
                    c.index
                ));
            }
            c.behavior.to_spec().normalized()?;
            if let Some(p) = c.prediction_config() {
                p.compile()?;
            } else if !c.prediction_scale.is_empty() {
                return bad("prediction_scale given without a prediction model".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSetConfig {
    pub name: String,
    pub count: usize,
    /// Multiplicative factors for the controlled agent's prediction model.
    #[serde(default)]
    pub prediction_scale: BTreeMap<String, f64>,
}

fn default_dt() -> f64 {
    0.2
}

fn default_horizon() -> u64 {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub map: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(rename = "set")]
    pub sets: Vec<ScenarioSetConfig>,
    pub source_sink: Vec<SourceSinkConfig>,
}

impl GeneratorConfig {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))
    }

    pub fn validate(&self, map: &RoadMap) -> Result<(), ScenarioError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ScenarioError::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.sets.is_empty() {
            return Err(ScenarioError::Config(
                "at least one [[set]] is required".into(),
            ));
        }
        let controlled = self
            .source_sink
            .iter()
            .filter(|c| c.controlled.is_some())
            .count();
        if controlled != 1 {
            return Err(ScenarioError::Config(format!(
                "exactly one controlled agent required, found {controlled}"
            )));
        }
        for c in &self.source_sink {
            c.validate(map)?;
        }
        Ok(())
    }

    /// Source-sink list with a set's prediction scaling applied.
    fn for_set(&self, set: &ScenarioSetConfig) -> Vec<SourceSinkConfig> {
        let mut cfgs = self.source_sink.clone();
        for c in cfgs.iter_mut().filter_map(|c| c.controlled.as_mut()) {
            c.prediction_scale
                .extend(set.prediction_scale.iter().map(|(k, f)| (k.clone(), *f)));
        }
        cfgs
    }

    /// Generates every set from the same seed, so sets differ only in
    /// their configuration.
    pub fn generate(
        &self,
        map: Arc<MapSource>,
        seed: u64,
    ) -> Result<ScenarioDatabase, ScenarioError> {
        self.validate(&map.map)?;
        let mut sets = BTreeMap::new();
        for set in &self.sets {
            let cfgs = self.for_set(set);
            let scenarios =
                generate_scenarios(&map, &cfgs, set.count, seed, self.dt, self.horizon)?;
            sets.insert(set.name.clone(), scenarios);
        }
        let provenance = toml::to_string(self).map_err(|e| ScenarioError::Config(e.to_string()))?;
        Ok(ScenarioDatabase {
            seed,
            provenance,
            sets,
        })
    }
}

impl ControlledTemplate {
    fn prediction_config(&self) -> Option<PredictionConfig> {
        let mut cfg = PredictionConfig::new(self.prediction.as_ref()?.to_spec());
        cfg.perturbation = self.prediction_scale.clone();
        Some(cfg)
    }
}

fn lane_at(map: &RoadMap, chain: &LaneChain, s: f64) -> LaneId {
    let mut acc = 0.0;
    for id in &chain.lanes {
        let len = map.lane(*id).map_or(0.0, |l| l.center.length());
        if s < acc + len {
            return *id;
        }
        acc += len;
    }
    *chain.lanes.last().expect("chain has lanes")
}

/// Places agents along each pair's routed source chain. Scenario `k` draws
/// from the stream keyed by `(seed, k)`; within it, each agent draws a
/// spacing and then a speed, resampling both on rejection.
pub fn generate_scenarios(
    map: &Arc<MapSource>,
    cfgs: &[SourceSinkConfig],
    n: usize,
    seed: u64,
    dt: f64,
    horizon: u64,
) -> Result<Vec<Scenario>, ScenarioError> {
    let road = &map.map;
    let mut chains = Vec::with_capacity(cfgs.len());
    for c in cfgs {
        c.validate(road)?;
        let corridor = compute_road_corridor(
            road,
            LaneId(c.source),
            &GoalDefinition::Lane {
                lane: LaneId(c.sink),
                min_s: 0.0,
            },
        )?;
        chains.push(corridor.chain().clone());
    }
    (0..n)
        .map(|k| generate_one(map, cfgs, &chains, k, seed, dt, horizon))
        .collect()
}

fn generate_one(
    map: &Arc<MapSource>,
    cfgs: &[SourceSinkConfig],
    chains: &[LaneChain],
    k: usize,
    seed: u64,
    dt: f64,
    horizon: u64,
) -> Result<Scenario, ScenarioError> {
    let road = &map.map;
    let mut rng = CounterRng::keyed(seed, &[k as u64]);
    let mut agents: Vec<ScenarioAgent> = Vec::new();
    let mut placed: Vec<Polygon> = Vec::new();
    let mut controlled = None;
    for (c, chain) in cfgs.iter().zip(chains) {
        let [v0, v1] = c.speeds()?;
        let [d0, d1] = c.distance_range;
        let count = c.count[0] + rng.below(c.count[1] - c.count[0] + 1);
        let shape = Polygon::rectangle(c.length, c.width)
            .map_err(|e| ScenarioError::Config(e.to_string()))?;
        let mut s = c.start_s;
        for i in 0..count {
            let mut accepted = None;
            for _ in 0..MAX_PLACEMENT_RETRIES {
                let gap = if i == 0 {
                    0.0
                } else {
                    rng.uniform_range(d0, d1)
                };
                let v = rng.uniform_range(v0, v1);
                let si = s + gap;
                if si - c.length / 2.0 < 0.0 || si + c.length / 2.0 > chain.center.length() {
                    continue;
                }
                let (p, theta) = chain.center.point_at_extended(si, 0.0);
                let pose = Pose::new(p.x, p.y, theta);
                let poly = shape.transform(pose);
                if !chain.region().contains_polygon(&poly)
                    || placed.iter().any(|q| q.collides(&poly))
                {
                    continue;
                }
                accepted = Some((si, v, pose, poly));
                break;
            }
            let Some((si, v, pose, poly)) = accepted else {
                return Err(ScenarioError::Generation(format!(
                    "scenario {k}: could not place agent {i} of source lane {} after {MAX_PLACEMENT_RETRIES} tries",
                    c.source
                )));
            };
            s = si;
            placed.push(poly);
            let id = AgentId(agents.len() as u32);
            let sink = LaneId(c.sink);
            let (behavior, goal) = match &c.controlled {
                Some(ct) if ct.index == i => {
                    controlled = Some(id);
                    let mut spec = ct.behavior.to_spec();
                    spec.prediction = ct.prediction_config().map(Box::new);
                    (spec, ct.goal.instantiate(road, sink, pose)?)
                }
                _ => (c.behavior.to_spec(), c.goal.instantiate(road, sink, pose)?),
            };
            agents.push(ScenarioAgent {
                id,
                state: AgentState::new(0.0, pose.x, pose.y, pose.theta, v),
                length: c.length,
                width: c.width,
                behavior,
                goal,
                start_lane: lane_at(road, chain, si),
            });
        }
    }
    let controlled = controlled.ok_or_else(|| {
        ScenarioError::Generation(format!("scenario {k}: no controlled agent was placed"))
    })?;
    let scenario = Scenario {
        map: map.clone(),
        agents,
        controlled,
        horizon,
        dt,
    };
    scenario.validate()?;
    Ok(scenario)
}
