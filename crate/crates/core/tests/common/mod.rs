#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use drivebench::behaviors::{build_behavior, BehaviorSpec};
use drivebench::geometry::Polygon;
use drivebench::map::{compute_road_corridor, parse_map, GoalDefinition, LaneId, RoadMap};
use drivebench::scenario::{GeneratorConfig, MapSource, ScenarioDatabase};
use drivebench::world::{Agent, AgentId, AgentState};

pub const LANE_WIDTH: f64 = 3.5;
pub const LENGTH: f64 = 4.5;
pub const WIDTH: f64 = 1.8;

/// Straight parallel lanes along +x; lane 1 is the rightmost at y = 0.
pub fn straight_map(lanes: u32, length: f64) -> Arc<RoadMap> {
    let mut text = String::from("lanemap 1\nname straight\n");
    for i in 1..=lanes {
        let y = (i - 1) as f64 * LANE_WIDTH;
        text.push_str(&format!("lane {i} {{\n"));
        if i > 1 {
            text.push_str(&format!("  right {}\n", i - 1));
        }
        if i < lanes {
            text.push_str(&format!("  left {}\n", i + 1));
        }
        text.push_str(&format!("  center (0, {y}) ({length}, {y})\n}}\n"));
    }
    Arc::new(parse_map(&text).unwrap())
}

pub fn lane_y(lane: u32) -> f64 {
    (lane - 1) as f64 * LANE_WIDTH
}

/// Agent centered on `lane` at `x`, heading along +x, whose goal is the
/// far end of its own lane.
pub fn agent_on(map: &RoadMap, id: u32, lane: u32, x: f64, v: f64, spec: &BehaviorSpec) -> Agent {
    let goal = GoalDefinition::Lane {
        lane: LaneId(lane),
        min_s: 1e9,
    };
    let corridor = compute_road_corridor(map, LaneId(lane), &goal).unwrap();
    Agent::new(
        AgentId(id),
        AgentState::new(0.0, x, lane_y(lane), 0.0, v),
        Polygon::rectangle(LENGTH, WIDTH).unwrap(),
        build_behavior(spec).unwrap(),
        goal,
        corridor,
    )
}

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Loads a generator config from `configs/` with its map.
pub fn load_generator(name: &str) -> (GeneratorConfig, Arc<MapSource>) {
    let dir = workspace_root().join("configs");
    let cfg =
        GeneratorConfig::from_toml(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap();
    let text = std::fs::read_to_string(dir.join(&cfg.map)).unwrap();
    let map = Arc::new(MapSource::from_text(cfg.map.clone(), text).unwrap());
    (cfg, map)
}

pub fn generate(name: &str) -> ScenarioDatabase {
    let (cfg, map) = load_generator(name);
    cfg.generate(map, cfg.seed).unwrap()
}

pub fn read_config(name: &str) -> String {
    std::fs::read_to_string(workspace_root().join("configs").join(name)).unwrap()
}
