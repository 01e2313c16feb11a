//! Scenarios, scenario generation and the binary scenario database.

mod db;
mod generation;
pub mod synthetic;
mod tracks;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::behaviors::{build_behavior, BehaviorError, BehaviorSpec};
use crate::evaluators::agents_collide;
use crate::geometry::Polygon;
use crate::map::{compute_road_corridor, parse_map, GoalDefinition, LaneId, MapError, RoadMap};
use crate::world::{Agent, AgentId, AgentState, World, WorldError};

pub use db::{db_load, db_save, DB_MAGIC, DB_VERSION};
pub use generation::{
    generate_scenarios, BehaviorTemplate, ControlledTemplate, GeneratorConfig, GoalTemplate,
    ScenarioSetConfig, SourceSinkConfig, MAX_PLACEMENT_RETRIES,
};
pub use tracks::{parse_tracks_csv, scenario_from_tracks, write_tracks_csv};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("unknown track {0}")]
    UnknownTrack(u32),
    #[error("start time {t} outside track {track} span [{from}, {to}]")]
    TrackRange {
        track: u32,
        t: f64,
        from: f64,
        to: f64,
    },
    #[error("track file: {0}")]
    TrackFile(String),
    #[error("unsupported database version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },
    #[error("malformed database: {0}")]
    Parse(String),
    #[error("map content hash mismatch for '{0}'")]
    MapHash(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A map embedded by content: source text plus its SHA-256.
#[derive(Debug, Clone)]
pub struct MapSource {
    pub name: String,
    pub hash: [u8; 32],
    pub text: String,
    pub map: Arc<RoadMap>,
}

impl MapSource {
    pub fn from_text(
        name: impl Into<String>,
        text: impl Into<String>,
    ) -> Result<Self, ScenarioError> {
        let text = text.into();
        let map = Arc::new(parse_map(&text)?);
        Ok(Self {
            name: name.into(),
            hash: Sha256::digest(text.as_bytes()).into(),
            text,
            map,
        })
    }

    pub fn hash_hex(&self) -> String {
        self.hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl PartialEq for MapSource {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.hash == other.hash && self.text == other.text
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioAgent {
    pub id: AgentId,
    pub state: AgentState,
    pub length: f64,
    pub width: f64,
    pub behavior: BehaviorSpec,
    pub goal: GoalDefinition,
    pub start_lane: LaneId,
}

impl ScenarioAgent {
    pub fn shape(&self) -> Result<Polygon, ScenarioError> {
        Polygon::rectangle(self.length, self.width)
            .map_err(|e| ScenarioError::Invalid(format!("agent {}: {e}", self.id)))
    }
}

/// Initial condition of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub map: Arc<MapSource>,
    pub agents: Vec<ScenarioAgent>,
    pub controlled: AgentId,
    /// Maximum number of steps.
    pub horizon: u64,
    pub dt: f64,
}

impl Scenario {
    pub fn controlled_agent(&self) -> Option<&ScenarioAgent> {
        self.agents.iter().find(|a| a.id == self.controlled)
    }

    /// Checks the invariants: one controlled agent, unique ids, finite
    /// states, non-overlapping initial shapes.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.controlled_agent().is_none() {
            return bad(format!("controlled agent {} is missing", self.controlled));
        }
        let mut ids: Vec<AgentId> = self.agents.iter().map(|a| a.id).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate agent id".into());
        }
        for a in &self.agents {
            if !a.state.is_finite() || a.state.v < 0.0 {
                return bad(format!("agent {}: invalid initial state", a.id));
            }
            if self.map.map.lane(a.start_lane).is_none() {
                return bad(format!(
                    "agent {}: unknown start lane {}",
                    a.id, a.start_lane
                ));
            }
        }
        let world = self.build_world_with(None)?;
        for (i, a) in world.agents().iter().enumerate() {
            for b in &world.agents()[i + 1..] {
                if agents_collide(a, b) {
                    return bad(format!("agents {} and {} overlap initially", a.id, b.id));
                }
            }
        }
        Ok(())
    }

    /// Builds the initial world with every agent's stored model.
    pub fn build_world(&self) -> Result<World, ScenarioError> {
        self.build_world_with(None)
    }

    /// Builds the initial world, replacing the controlled agent's model by
    /// `controlled` when given.
    pub fn build_world_with(
        &self,
        controlled: Option<&BehaviorSpec>,
    ) -> Result<World, ScenarioError> {
        let map = self.map.map.clone();
        let mut world = World::new(map.clone(), 0.0);
        for a in &self.agents {
            let spec = match controlled {
                Some(s) if a.id == self.controlled => s,
                _ => &a.behavior,
            };
            let corridor = compute_road_corridor(&map, a.start_lane, &a.goal)?;
            let model = build_behavior(spec)?;
            let mut agent = Agent::new(a.id, a.state, a.shape()?, model, a.goal.clone(), corridor);
            if let Some(p) = &spec.prediction {
                agent = agent.with_prediction(Arc::new(p.compile()?));
            }
            world.add_agent(agent)?;
        }
        world.controlled = vec![self.controlled];
        Ok(world)
    }
}

/// Named, versioned collection of scenario sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDatabase {
    pub seed: u64,
    /// Snapshot of the generator config the database came from.
    pub provenance: String,
    pub sets: BTreeMap<String, Vec<Scenario>>,
}

impl ScenarioDatabase {
    pub fn scenario_count(&self) -> usize {
        self.sets.values().map(Vec::len).sum()
    }

    /// (set, index, scenario) in set-name then index order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize, &Scenario)> {
        self.sets.iter().flat_map(|(name, v)| {
            v.iter()
                .enumerate()
                .map(move |(i, s)| (name.as_str(), i, s))
        })
    }
}

impl fmt::Display for ScenarioDatabase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, v) in &self.sets {
            writeln!(f, "{name}: {} scenarios", v.len())?;
        }
        write!(f, "total: {}", self.scenario_count())
    }
}
