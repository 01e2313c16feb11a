//! Recorded tracks and dataset-based scenarios.
//!
//! Track files use the object-list CSV schema
//! `track_id,frame_id,timestamp_ms,agent_type,x,y,vx,vy,psi_rad,length,width`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Deserialize;

use super::{MapSource, Scenario, ScenarioAgent, ScenarioError};
use crate::behaviors::{BehaviorSpec, TrackRecord, TrackSample};
use crate::map::GoalDefinition;
use crate::world::{AgentId, TIME_EPS};

/// Distance before the last recorded position at which a track agent's lane
/// goal starts.
const GOAL_MARGIN: f64 = 10.0;

#[derive(Debug, Deserialize)]
struct Row {
    track_id: u32,
    #[allow(dead_code)]
    frame_id: u64,
    timestamp_ms: i64,
    #[allow(dead_code)]
    agent_type: String,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    psi_rad: f64,
    length: f64,
    width: f64,
}

/// Parses a track CSV into records sorted by track id.
pub fn parse_tracks_csv(text: &str) -> Result<Vec<Arc<TrackRecord>>, ScenarioError> {
    let mut by_id: BTreeMap<u32, Vec<TrackSample>> = BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    for row in rdr.deserialize::<Row>() {
        let r = row.map_err(|e| ScenarioError::TrackFile(e.to_string()))?;
        by_id.entry(r.track_id).or_default().push(TrackSample {
            t: r.timestamp_ms as f64 / 1000.0,
            x: r.x,
            y: r.y,
            theta: r.psi_rad,
            v: r.vx.hypot(r.vy),
            length: r.length,
            width: r.width,
        });
    }
    by_id
        .into_iter()
        .map(|(id, mut samples)| {
            samples.sort_by(|a, b| a.t.total_cmp(&b.t));
            Ok(Arc::new(TrackRecord::new(id, samples)?))
        })
        .collect()
}

/// Writes records in the CSV schema; `frame_id` counts samples from 1.
pub fn write_tracks_csv(tracks: &[TrackRecord]) -> String {
    let mut out =
        String::from("track_id,frame_id,timestamp_ms,agent_type,x,y,vx,vy,psi_rad,length,width\n");
    for t in tracks {
        for (i, s) in t.samples().iter().enumerate() {
            let (vx, vy) = (s.v * s.theta.cos(), s.v * s.theta.sin());
            let _ = writeln!(
                out,
                "{},{},{},car,{:.3},{:.3},{:.3},{:.3},{:.4},{},{}",
                t.track_id,
                i + 1,
                (s.t * 1000.0).round() as i64,
                s.x,
                s.y,
                vx,
                vy,
                s.theta,
                s.length,
                s.width
            );
        }
    }
    out
}

/// Builds a scenario from recorded tracks. World time 0 corresponds to
/// recording time `start_time`. Agents keep their track ids; replaced
/// agents start from the recorded state and run the given model, all others
/// replay their track.
pub fn scenario_from_tracks(
    map: Arc<MapSource>,
    tracks: &[Arc<TrackRecord>],
    start_time: f64,
    replaced: &BTreeMap<u32, BehaviorSpec>,
    controlled: u32,
    dt: f64,
    horizon: u64,
) -> Result<Scenario, ScenarioError> {
    let find = |id: u32| tracks.iter().find(|t| t.track_id == id);
    for id in replaced.keys().chain([&controlled]) {
        if find(*id).is_none() {
            return Err(ScenarioError::UnknownTrack(*id));
        }
    }
    let road = &map.map;
    let mut agents = Vec::with_capacity(tracks.len());
    for t in tracks {
        if start_time < t.start() - TIME_EPS || start_time > t.end() + TIME_EPS {
            return Err(ScenarioError::TrackRange {
                track: t.track_id,
                t: start_time,
                from: t.start(),
                to: t.end(),
            });
        }
        let mut state = t.state_at(start_time)?;
        state.t = 0.0;
        let start_lane = road
            .nearest_lane(state.position())
            .ok_or_else(|| ScenarioError::Invalid("map has no lanes".into()))?;
        let last = t.samples()[t.samples().len() - 1];
        let end = crate::geometry::Point2::new(last.x, last.y);
        let goal_lane = road.nearest_lane(end).expect("map has lanes");
        let s_end = road
            .lane(goal_lane)
            .expect("lane exists")
            .center
            .project(end)
            .s;
        let goal = GoalDefinition::Lane {
            lane: goal_lane,
            min_s: (s_end - GOAL_MARGIN).max(0.0),
        };
        let behavior = match replaced.get(&t.track_id) {
            Some(spec) => spec.clone(),
            None => BehaviorSpec::track(t.clone(), start_time),
        };
        let (length, width) = t.dims();
        agents.push(ScenarioAgent {
            id: AgentId(t.track_id),
            state,
            length,
            width,
            behavior,
            goal,
            start_lane,
        });
    }
    let s = Scenario {
        map,
        agents,
        controlled: AgentId(controlled),
        horizon,
        dt,
    };
    s.validate()?;
    Ok(s)
}
