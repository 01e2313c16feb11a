use std::sync::Arc;

use super::{BehaviorError, BehaviorModel, BehaviorSpec};
use crate::geometry::normalize_angle;
use crate::world::{AgentState, ObservedWorld, Trajectory, TIME_EPS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub length: f64,
    pub width: f64,
}

/// One recorded object track, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRecord {
    pub track_id: u32,
    samples: Vec<TrackSample>,
}

impl TrackRecord {
    pub fn new(track_id: u32, samples: Vec<TrackSample>) -> Result<Self, BehaviorError> {
        let bad = |m: String| {
            Err(BehaviorError::InvalidTrack(format!(
                "track {track_id}: {m}"
            )))
        };
        if samples.len() < 2 {
            return bad("needs at least 2 samples".into());
        }
        for s in &samples {
            let fields = [s.t, s.x, s.y, s.theta, s.v, s.length, s.width];
            if fields.iter().any(|f| !f.is_finite()) {
                return bad(format!("non-finite value at t={}", s.t));
            }
            if s.v < 0.0 || s.length <= 0.0 || s.width <= 0.0 {
                return bad(format!("negative speed or empty shape at t={}", s.t));
            }
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].t <= w[0].t) {
            return bad(format!("time not increasing at t={}", w[1].t));
        }
        Ok(Self { track_id, samples })
    }

    pub fn samples(&self) -> &[TrackSample] {
        &self.samples
    }

    pub fn start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Recorded length and width (first sample).
    pub fn dims(&self) -> (f64, f64) {
        (self.samples[0].length, self.samples[0].width)
    }

    /// State at recording time `t`: exact at sample times, linear between
    /// samples, and the final pose at rest after the recording ends.
    pub fn state_at(&self, t: f64) -> Result<AgentState, BehaviorError> {
        let s = &self.samples;
        if t < self.start() - TIME_EPS {
            return Err(BehaviorError::OutOfRange {
                t,
                from: self.start(),
                to: self.end(),
            });
        }
        let at = |x: &TrackSample| AgentState::new(x.t, x.x, x.y, x.theta, x.v);
        if t > self.end() + TIME_EPS {
            return Ok(AgentState {
                t,
                v: 0.0,
                ..at(&s[s.len() - 1])
            });
        }
        let k = s.partition_point(|x| x.t < t);
        for i in [k.saturating_sub(1), k] {
            if let Some(x) = s.get(i).filter(|x| (x.t - t).abs() <= TIME_EPS) {
                return Ok(at(x));
            }
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
}

/// Replays a recorded track. World time `t` maps to recording time
/// `t + time_offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackModel {
    record: Arc<TrackRecord>,
    time_offset: f64,
}

impl TrackModel {
    pub fn new(record: Arc<TrackRecord>, time_offset: f64) -> Self {
        Self {
            record,
            time_offset,
        }
    }

    /// Trajectory over world times `[t, t + dt]`.
    pub fn plan_at(&self, t: f64, dt: f64) -> Result<Trajectory, BehaviorError> {
        let (r0, r1) = (t + self.time_offset, t + dt + self.time_offset);
        let mut states = vec![AgentState {
            t,
            ..self.record.state_at(r0)?
        }];
        for x in self
            .record
            .samples()
            .iter()
            .filter(|x| x.t > r0 + TIME_EPS && x.t < r1 - TIME_EPS)
        {
            let wt = x.t - self.time_offset;
            if wt > states[states.len() - 1].t && wt < t + dt {
                states.push(AgentState::new(wt, x.x, x.y, x.theta, x.v));
            }
        }
        states.push(AgentState {
            t: t + dt,
            ..self.record.state_at(r1)?
        });
        Ok(Trajectory::new(states)?)
    }
}

impl BehaviorModel for TrackModel {
    fn plan(&mut self, dt: f64, observed: &ObservedWorld<'_>) -> Result<Trajectory, BehaviorError> {
        self.plan_at(observed.time(), dt)
    }

    fn spec(&self) -> BehaviorSpec {
        BehaviorSpec::track(self.record.clone(), self.time_offset)
    }

    fn box_clone(&self) -> Box<dyn BehaviorModel> {
        Box::new(self.clone())
    }
}
