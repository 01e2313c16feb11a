//! Behavior model interface, model specs and the closed-form models.

mod constvel;
mod idm;
mod lateral;
mod mobil;
mod policy;
mod track;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planners::{ManeuverKind, ManeuverModel, MctsModel, MultiMctsModel};
use crate::world::{ObservedWorld, PredictionConfig, Trajectory, WorldError};

pub use constvel::{constant_velocity_plan, ConstantVelocity};
pub use idm::{idm_acceleration, IdmModel, IdmParams, EMERGENCY_GAP};
pub use lateral::{
    bumper_gap, follower_of, integrate_along, lead_of, vehicles_on, LaneChange, LaneTracking,
    Vehicle, CHANGE_DONE, CHANGE_DURATION, KEEP_TIME_CONSTANT, SUBSTEP,
};
pub use mobil::{
    mobil_assess, mobil_decide, ChangeAssessment, MobilDecision, MobilModel, MobilParams,
};
pub use policy::PolicyTableModel;
pub use track::{TrackModel, TrackRecord, TrackSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BehaviorError {
    #[error("unknown behavior kind '{0}'")]
    UnknownKind(String),
    #[error("{kind}: unknown parameter '{name}'")]
    UnknownParam { kind: BehaviorKind, name: String },
    #[error("{kind}: parameter '{name}' {msg}")]
    InvalidParam {
        kind: BehaviorKind,
        name: String,
        msg: String,
    },
    #[error("{0}: missing track data")]
    MissingTrack(BehaviorKind),
    #[error("invalid track: {0}")]
    InvalidTrack(String),
    #[error("time {t} outside recorded span [{from}, {to}]")]
    OutOfRange { t: f64, from: f64, to: f64 },
    #[error("{0}")]
    World(Box<WorldError>),
}

impl From<WorldError> for BehaviorError {
    fn from(e: WorldError) -> Self {
        BehaviorError::World(Box::new(e))
    }
}

/// A behavior model: maps an observed world to a desired trajectory that
/// covers at least `[t, t + dt]`.
pub trait BehaviorModel: Send + Sync + fmt::Debug {
    fn plan(&mut self, dt: f64, observed: &ObservedWorld<'_>) -> Result<Trajectory, BehaviorError>;

    /// Spec that rebuilds an equivalent fresh model.
    fn spec(&self) -> BehaviorSpec;

    fn box_clone(&self) -> Box<dyn BehaviorModel>;

    /// Lateral tracking memory, for models that keep one.
    fn lane_tracking(&self) -> Option<LaneTracking> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BehaviorKind {
    ConstVel,
    #[serde(rename = "IDM")]
    Idm,
    #[serde(rename = "MOBIL")]
    Mobil,
    #[serde(rename = "MCTS_Single")]
    MctsSingle,
    #[serde(rename = "MCTS_Multi")]
    MctsMulti,
    Track,
    PolicyStub,
    /// A single fixed maneuver primitive.
    Maneuver,
}

impl BehaviorKind {
    pub const ALL: [BehaviorKind; 8] = [
        BehaviorKind::ConstVel,
        BehaviorKind::Idm,
        BehaviorKind::Mobil,
        BehaviorKind::MctsSingle,
        BehaviorKind::MctsMulti,
        BehaviorKind::Track,
        BehaviorKind::PolicyStub,
        BehaviorKind::Maneuver,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BehaviorKind::ConstVel => "ConstVel",
            BehaviorKind::Idm => "IDM",
            BehaviorKind::Mobil => "MOBIL",
            BehaviorKind::MctsSingle => "MCTS_Single",
            BehaviorKind::MctsMulti => "MCTS_Multi",
            BehaviorKind::Track => "Track",
            BehaviorKind::PolicyStub => "PolicyStub",
            BehaviorKind::Maneuver => "Maneuver",
        }
    }

    /// Search-based planners; these cannot serve as prediction models.
    pub fn is_planner(self) -> bool {
        matches!(self, BehaviorKind::MctsSingle | BehaviorKind::MctsMulti)
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for BehaviorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BehaviorKind {
    type Err = BehaviorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| BehaviorError::UnknownKind(s.to_string()))
    }
}

const IDM_DEFAULTS: [(&str, f64); 6] = [
    ("v0", 15.0),
    ("a_max", 1.7),
    ("tau", 1.0),
    ("b", 1.7),
    ("s0", 2.0),
    ("delta", 4.0),
];
const MOBIL_EXTRA: [(&str, f64); 2] = [("politeness", 0.3), ("a_threshold", 0.1)];
const MCTS_DEFAULTS: [(&str, f64); 11] = [
    ("iterations", 500.0),
    ("uct_c", 1.0),
    ("horizon", 10.0),
    ("action_dt", 1.0),
    ("discount", 0.95),
    ("a_std", 1.7),
    ("w_collision", -1.0),
    ("w_goal", 1.0),
    ("w_step", -0.01),
    ("seed", 0.0),
    ("action_mask", 31.0),
];
const MULTI_EXTRA: [(&str, f64); 2] = [("radius", 30.0), ("max_interacting", 2.0)];
const POLICY_DEFAULTS: [(&str, f64); 5] = [
    ("v_bin", 5.0),
    ("a0", 1.0),
    ("a1", 0.5),
    ("a2", 0.0),
    ("a3", -0.5),
];

/// Model kind plus named parameters, enough to construct the model.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorSpec {
    pub kind: BehaviorKind,
    pub params: BTreeMap<String, f64>,
    /// Prediction used by the search planners for other agents.
    pub prediction: Option<Box<PredictionConfig>>,
    /// Recorded track followed by the `Track` kind.
    pub track: Option<Arc<TrackRecord>>,
}

impl BehaviorSpec {
    pub fn new(kind: BehaviorKind) -> Self {
        Self {
            kind,
            params: BTreeMap::new(),
            prediction: None,
            track: None,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_prediction(mut self, prediction: PredictionConfig) -> Self {
        self.prediction = Some(Box::new(prediction));
        self
    }

    pub fn idm(p: &IdmParams) -> Self {
        let mut s = Self::new(BehaviorKind::Idm);
        p.write(&mut s.params);
        s
    }

    pub fn track(record: Arc<TrackRecord>, time_offset: f64) -> Self {
        let mut s = Self::new(BehaviorKind::Track)
            .with("track_id", record.track_id as f64)
            .with("time_offset", time_offset);
        s.track = Some(record);
        s
    }

    pub fn get(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or(f64::NAN)
    }

    /// Copy with every default filled in; validates names and ranges.
    pub fn normalized(&self) -> Result<BehaviorSpec, BehaviorError> {
        let kind = self.kind;
        let mut defaults: Vec<(&str, f64)> = match kind {
            BehaviorKind::ConstVel => vec![],
            BehaviorKind::Idm => IDM_DEFAULTS.to_vec(),
            BehaviorKind::Mobil => [&IDM_DEFAULTS[..], &MOBIL_EXTRA[..]].concat(),
            BehaviorKind::MctsSingle => MCTS_DEFAULTS.to_vec(),
            BehaviorKind::MctsMulti => [&MCTS_DEFAULTS[..], &MULTI_EXTRA[..]].concat(),
            BehaviorKind::Track => vec![("time_offset", 0.0)],
            BehaviorKind::PolicyStub => vec![("v_bin", 5.0)],
            BehaviorKind::Maneuver => vec![("action", 0.0), ("a_std", 1.7)],
        };
        let table_keys = kind == BehaviorKind::PolicyStub
            && self
                .params
                .keys()
                .any(|k| k.starts_with('a') && k[1..].parse::<usize>().is_ok());
        if kind == BehaviorKind::PolicyStub && !table_keys {
            defaults = POLICY_DEFAULTS.to_vec();
        }
        let mut out = self.clone();
        for (name, value) in &self.params {
            let known = defaults.iter().any(|(n, _)| n == name)
                || (kind == BehaviorKind::Mobil && name == "b_safe")
                || (kind == BehaviorKind::Track && name == "track_id")
                || (table_keys && name.starts_with('a') && name[1..].parse::<usize>().is_ok());
            if !known {
                return Err(BehaviorError::UnknownParam {
                    kind,
                    name: name.clone(),
                });
            }
            if !value.is_finite() {
                return invalid(kind, name, "must be finite");
            }
        }
        for (name, value) in defaults {
            out.params.entry(name.to_string()).or_insert(value);
        }
        if kind == BehaviorKind::Mobil {
            let b = out.params["b"];
            out.params.entry("b_safe".into()).or_insert(2.0 * b);
        }
        validate(&out)?;
        Ok(out)
    }
}

fn invalid<T>(kind: BehaviorKind, name: &str, msg: &str) -> Result<T, BehaviorError> {
    Err(BehaviorError::InvalidParam {
        kind,
        name: name.to_string(),
        msg: msg.to_string(),
    })
}

fn validate(spec: &BehaviorSpec) -> Result<(), BehaviorError> {
    let kind = spec.kind;
    let p = &spec.params;
    let positive = |names: &[&str]| -> Result<(), BehaviorError> {
        for n in names {
            if p[*n] <= 0.0 {
                return invalid(kind, n, "must be > 0");
            }
        }
        Ok(())
    };
    let integer = |n: &str, min: f64| -> Result<(), BehaviorError> {
        let v = p[n];
        if v.fract() != 0.0 || v < min || v > 9.007_199_254_740_992e15 {
            return invalid(kind, n, &format!("must be an integer >= {min}"));
        }
        Ok(())
    };
    match kind {
        BehaviorKind::ConstVel => {}
        BehaviorKind::Idm | BehaviorKind::Mobil => {
            positive(&["v0", "a_max", "tau", "b", "s0", "delta"])?;
            if kind == BehaviorKind::Mobil {
                if !(0.0..=1.0).contains(&p["politeness"]) {
                    return invalid(kind, "politeness", "must be in [0, 1]");
                }
                if p["a_threshold"] < 0.0 {
                    return invalid(kind, "a_threshold", "must be >= 0");
                }
                positive(&["b_safe"])?;
            }
        }
        BehaviorKind::MctsSingle | BehaviorKind::MctsMulti => {
            integer("iterations", 1.0)?;
            integer("horizon", 1.0)?;
            integer("seed", 0.0)?;
            integer("action_mask", 1.0)?;
            if p["action_mask"] > 31.0 {
                return invalid(kind, "action_mask", "must be at most 31");
            }
            positive(&["action_dt"])?;
            if !(p["discount"] > 0.0 && p["discount"] <= 1.0) {
                return invalid(kind, "discount", "must be in (0, 1]");
            }
            for n in ["uct_c", "a_std"] {
                if p[n] < 0.0 {
                    return invalid(kind, n, "must be >= 0");
                }
            }
            if kind == BehaviorKind::MctsMulti {
                positive(&["radius"])?;
                integer("max_interacting", 0.0)?;
            }
        }
        BehaviorKind::Track => {
            if !p.contains_key("track_id") {
                return invalid(kind, "track_id", "is required");
            }
            integer("track_id", 0.0)?;
            let track = spec
                .track
                .as_ref()
                .ok_or(BehaviorError::MissingTrack(kind))?;
            if track.track_id as f64 != p["track_id"] {
                return invalid(kind, "track_id", "does not match the attached track");
            }
        }
        BehaviorKind::Maneuver => {
            integer("action", 0.0)?;
            if p["action"] >= ManeuverKind::ALL.len() as f64 {
                return invalid(kind, "action", "must be a maneuver index below 5");
            }
            if p["a_std"] < 0.0 {
                return invalid(kind, "a_std", "must be >= 0");
            }
        }
        BehaviorKind::PolicyStub => {
            positive(&["v_bin"])?;
            let n = p.keys().filter(|k| k.starts_with('a')).count();
            for i in 0..n {
                if !p.contains_key(&format!("a{i}")) {
                    return invalid(kind, &format!("a{i}"), "is missing from the table");
                }
            }
        }
    }
    Ok(())
}

/// Builds a fresh model from a spec.
pub fn build_behavior(spec: &BehaviorSpec) -> Result<Box<dyn BehaviorModel>, BehaviorError> {
    let spec = spec.normalized()?;
    let p = &spec.params;
    Ok(match spec.kind {
        BehaviorKind::ConstVel => Box::new(ConstantVelocity),
        BehaviorKind::Idm => Box::new(IdmModel::new(IdmParams::read(p))),
        BehaviorKind::Mobil => Box::new(MobilModel::new(MobilParams::read(p))),
        BehaviorKind::MctsSingle => Box::new(MctsModel::from_spec(&spec)),
        BehaviorKind::MctsMulti => Box::new(MultiMctsModel::from_spec(&spec)),
        BehaviorKind::Track => Box::new(TrackModel::new(
            spec.track.clone().unwrap(),
            p["time_offset"],
        )),
        BehaviorKind::PolicyStub => Box::new(PolicyTableModel::from_params(p)),
        BehaviorKind::Maneuver => Box::new(ManeuverModel::new(
            ManeuverKind::ALL[p["action"] as usize],
            p["a_std"],
            LaneTracking::default(),
        )),
    })
}
