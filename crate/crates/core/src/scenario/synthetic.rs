//! Synthetic zip-merge recording used for agent-replacement replays.
//!
//! Two lanes merge into one. The right lane (2) ends at x = 150; its
//! vehicles 66 and 68 zip into the gaps in front of 67 and 69. Every vehicle
//! follows the same speed profile, so the recording itself is collision
//! free and the final order is 63, 64, 65, 66, 67, 68, 69. The gaps that 67
//! and 69 leave for the mergers are wider than an IDM follower keeps, so a
//! follower with a small minimum distance closes them before the merge.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use super::{scenario_from_tracks, MapSource, Scenario, ScenarioError};
use crate::behaviors::{BehaviorSpec, TrackRecord, TrackSample};

pub const ZIP_MERGE_MAP: &str = "lanemap 1
name zip_merge
lane 1 {
  right 2
  successors 3
  center (0, 0) (150, 0)
}
lane 2 {
  left 1
  drop
  center (0, -3.5) (150, -3.5)
}
lane 3 {
  center (150, 0) (300, 0)
}
";

/// Recording start and end, s.
pub const RECORD_START: f64 = 230.0;
pub const RECORD_END: f64 = 265.0;
/// Scenario start within the recording, s.
pub const REPLAY_START: f64 = 232.0;
pub const SAMPLE_RATE: f64 = 10.0;
/// Simulation step of the replay, s.
pub const REPLAY_DT: f64 = 0.1;

const LENGTH: f64 = 4.5;
const WIDTH: f64 = 1.8;
const LANE_OFFSET: f64 = 3.5;
const MERGE_DURATION: f64 = 4.0;

/// (track id, x at record start, merge start after record start or none).
const VEHICLES: [(u32, f64, Option<f64>); 7] = [
    (63, 100.0, None),
    (64, 90.0, None),
    (65, 72.0, None),
    (66, 60.0, Some(14.0)),
    (67, 52.0, None),
    (68, 36.0, Some(20.0)),
    (69, 22.0, None),
];

/// Replaced-agent sets, named as in the result table.
pub const REPLACED_SETS: [(&str, &[u32]); 7] = [
    ("A0", &[66]),
    ("A1", &[68]),
    ("A2", &[66, 68]),
    ("A3", &[65]),
    ("A4", &[67]),
    ("A5", &[65, 67]),
    ("A6", &[66, 68, 65, 67]),
];

fn speed(tau: f64) -> f64 {
    4.0 + 0.8 * (2.0 * PI * tau / 12.0).sin()
}

fn travelled(tau: f64) -> f64 {
    4.0 * tau + 0.8 * 12.0 / (2.0 * PI) * (1.0 - (2.0 * PI * tau / 12.0).cos())
}

fn smoothstep(u: f64) -> (f64, f64) {
    let u = u.clamp(0.0, 1.0);
    (3.0 * u * u - 2.0 * u * u * u, 6.0 * u - 6.0 * u * u)
}

fn sample(tau: f64, x0: f64, merge: Option<f64>) -> TrackSample {
    let v = speed(tau);
    let (y, vy) = match merge {
        Some(m) => {
            let (f, df) = smoothstep((tau - m) / MERGE_DURATION);
            (
                -LANE_OFFSET + LANE_OFFSET * f,
                LANE_OFFSET * df / MERGE_DURATION,
            )
        }
        None => (0.0, 0.0),
    };
    TrackSample {
        t: RECORD_START + tau,
        x: x0 + travelled(tau),
        y,
        theta: vy.atan2(v),
        v: v.hypot(vy),
        length: LENGTH,
        width: WIDTH,
    }
}

/// The recording, sampled at 10 Hz over [230 s, 265 s].
pub fn zip_merge_tracks() -> Vec<TrackRecord> {
    let n = ((RECORD_END - RECORD_START) * SAMPLE_RATE).round() as usize;
    VEHICLES
        .iter()
        .map(|&(id, x0, merge)| {
            let samples = (0..=n)
                .map(|k| sample(k as f64 / SAMPLE_RATE, x0, merge))
                .collect();
            TrackRecord::new(id, samples).expect("synthetic track is valid")
        })
        .collect()
}

/// Steps from the replay start to the end of the recording.
pub fn replay_steps() -> u64 {
    ((RECORD_END - REPLAY_START) / REPLAY_DT).round() as u64
}

/// Replay from [`REPLAY_START`] with the agents in `ids` running `spec`.
/// The first replaced agent is the controlled one; an empty set is a pure
/// replay controlled on the first track.
pub fn replacement_scenario(ids: &[u32], spec: &BehaviorSpec) -> Result<Scenario, ScenarioError> {
    let map = Arc::new(MapSource::from_text("zip_merge", ZIP_MERGE_MAP)?);
    let tracks: Vec<Arc<TrackRecord>> = zip_merge_tracks().into_iter().map(Arc::new).collect();
    let replaced: BTreeMap<u32, BehaviorSpec> = ids.iter().map(|&id| (id, spec.clone())).collect();
    let controlled = ids.first().copied().unwrap_or(VEHICLES[0].0);
    scenario_from_tracks(
        map,
        &tracks,
        REPLAY_START,
        &replaced,
        controlled,
        REPLAY_DT,
        replay_steps(),
    )
}
