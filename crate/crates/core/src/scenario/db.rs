//! Binary scenario database.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      4 bytes  "BBDB"
//! version    u16
//! seed       u64
//! provenance str                      str = u32 byte length + UTF-8
//! maps       u32 count, then per map: name str, sha256 [32 bytes], text str
//! sets       u32 count, then per set: name str, u32 count, scenarios
//! scenario   map index u32, dt f64, horizon u64, controlled u32,
//!            u32 agent count, agents
//! agent      id u32, t x y theta v (5 x f64), length f64, width f64,
//!            start lane u32, goal, behavior
//! goal       u8 tag: 0 region (u32 n, n x (x f64, y f64)),
//!                    1 lane (lane u32, min_s f64)
//! behavior   kind code u8, u32 n, n x (name str, value f64),
//!            u8 has prediction [prediction], u8 has track [track]
//! prediction default behavior, u32 n, n x (agent u32, behavior),
//!            u32 n, n x (name str, factor f64)
//! track      id u32, u32 n, n x (t x y theta v length width, f64 each)
//! ```
//!
//! Maps are written once, in order of first use. Maps (BTreeMap) and
//! parameter lists are emitted in key order, so equal databases encode to
//! equal bytes.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Arc;

use super::{MapSource, Scenario, ScenarioAgent, ScenarioDatabase, ScenarioError};
use crate::behaviors::{BehaviorKind, BehaviorSpec, TrackRecord, TrackSample};
use crate::geometry::{Point2, Polygon};
use crate::map::{GoalDefinition, LaneId};
use crate::world::{AgentId, AgentState, PredictionConfig};

pub const DB_MAGIC: &[u8; 4] = b"BBDB";
pub const DB_VERSION: u16 = 1;

#[derive(Default)]
struct Enc {
    buf: Vec<u8>,
}

impl Enc {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("collection too large"));
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn goal(&mut self, g: &GoalDefinition) {
        match g {
            GoalDefinition::Region(p) => {
                self.u8(0);
                self.len(p.vertices().len());
                for v in p.vertices() {
                    self.f64(v.x);
                    self.f64(v.y);
                }
            }
            GoalDefinition::Lane { lane, min_s } => {
                self.u8(1);
                self.u32(lane.0);
                self.f64(*min_s);
            }
        }
    }

    fn behavior(&mut self, b: &BehaviorSpec) {
        self.u8(b.kind.code());
        self.len(b.params.len());
        for (k, v) in &b.params {
            self.str(k);
            self.f64(*v);
        }
        match &b.prediction {
            Some(p) => {
                self.u8(1);
                self.behavior(&p.default_model);
                self.len(p.overrides.len());
                for (id, s) in &p.overrides {
                    self.u32(id.0);
                    self.behavior(s);
                }
                self.len(p.perturbation.len());
                for (k, f) in &p.perturbation {
                    self.str(k);
                    self.f64(*f);
                }
            }
            None => self.u8(0),
        }
        match &b.track {
            Some(t) => {
                self.u8(1);
                self.u32(t.track_id);
                self.len(t.samples().len());
                for s in t.samples() {
                    for f in [s.t, s.x, s.y, s.theta, s.v, s.length, s.width] {
                        self.f64(f);
                    }
                }
            }
            None => self.u8(0),
        }
    }

    fn agent(&mut self, a: &ScenarioAgent) {
        self.u32(a.id.0);
        let s = a.state;
        for f in [s.t, s.x, s.y, s.theta, s.v, a.length, a.width] {
            self.f64(f);
        }
        self.u32(a.start_lane.0);
        self.goal(&a.goal);
        self.behavior(&a.behavior);
    }
}

/// Canonical encoding of `db`.
pub fn encode(db: &ScenarioDatabase) -> Vec<u8> {
    let mut maps: Vec<Arc<MapSource>> = Vec::new();
    let mut index_of = |m: &Arc<MapSource>| -> u32 {
        match maps.iter().position(|x| Arc::ptr_eq(x, m) || **x == **m) {
            Some(i) => i as u32,
            None => {
                maps.push(m.clone());
                (maps.len() - 1) as u32
            }
        }
    };
    let mut body = Enc::default();
    body.len(db.sets.len());
    for (name, scenarios) in &db.sets {
        body.str(name);
        body.len(scenarios.len());
        for s in scenarios {
            body.u32(index_of(&s.map));
            body.f64(s.dt);
            body.u64(s.horizon);
            body.u32(s.controlled.0);
            body.len(s.agents.len());
            for a in &s.agents {
                body.agent(a);
            }
        }
    }
    let mut e = Enc::default();
    e.buf.extend_from_slice(DB_MAGIC);
    e.u16(DB_VERSION);
    e.u64(db.seed);
    e.str(&db.provenance);
    e.len(maps.len());
    for m in maps {
        e.str(&m.name);
        e.buf.extend_from_slice(&m.hash);
        e.str(&m.text);
    }
    e.buf.extend_from_slice(&body.buf);
    e.buf
}

struct Dec<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn truncated<T>(what: &str) -> Result<T, ScenarioError> {
    Err(ScenarioError::Parse(format!(
        "truncated stream while reading {what}"
    )))
}

impl<'a> Dec<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ScenarioError> {
        if self.buf.len() - self.pos < n {
            return truncated(what);
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self, what: &str) -> Result<u8, ScenarioError> {
        Ok(self.take(1, what)?[0])
    }
    fn u16(&mut self, what: &str) -> Result<u16, ScenarioError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
    fn u32(&mut self, what: &str) -> Result<u32, ScenarioError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn u64(&mut self, what: &str) -> Result<u64, ScenarioError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn f64(&mut self, what: &str) -> Result<f64, ScenarioError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    /// Collection length, bounded by the bytes left (each element takes at
    /// least `min_size` bytes).
    fn len(&mut self, min_size: usize, what: &str) -> Result<usize, ScenarioError> {
        let n = self.u32(what)? as usize;
        if n.saturating_mul(min_size) > self.buf.len() - self.pos {
            return truncated(what);
        }
        Ok(n)
    }
    fn str(&mut self, what: &str) -> Result<String, ScenarioError> {
        let n = self.len(1, what)?;
        let b = self.take(n, what)?;
        String::from_utf8(b.to_vec())
            .map_err(|_| ScenarioError::Parse(format!("{what} is not UTF-8")))
    }
    fn flag(&mut self, what: &str) -> Result<bool, ScenarioError> {
        match self.u8(what)? {
            0 => Ok(false),
            1 => Ok(true),
            t => Err(ScenarioError::Parse(format!("invalid {what} flag {t}"))),
        }
    }

    fn goal(&mut self) -> Result<GoalDefinition, ScenarioError> {
        match self.u8("goal tag")? {
            0 => {
                let n = self.len(16, "goal polygon")?;
                let pts = (0..n)
                    .map(|_| {
                        Ok(Point2::new(
                            self.f64("goal vertex")?,
                            self.f64("goal vertex")?,
                        ))
                    })
                    .collect::<Result<Vec<_>, ScenarioError>>()?;
                let poly = Polygon::new(pts)
                    .map_err(|e| ScenarioError::Parse(format!("goal polygon: {e}")))?;
                Ok(GoalDefinition::Region(poly))
            }
            1 => Ok(GoalDefinition::Lane {
                lane: LaneId(self.u32("goal lane")?),
                min_s: self.f64("goal min_s")?,
            }),
            t => Err(ScenarioError::Parse(format!("unknown goal tag {t}"))),
        }
    }

    fn behavior(&mut self) -> Result<BehaviorSpec, ScenarioError> {
        let code = self.u8("behavior kind")?;
        let kind = BehaviorKind::from_code(code)
            .ok_or_else(|| ScenarioError::Parse(format!("unknown behavior kind {code}")))?;
        let mut spec = BehaviorSpec::new(kind);
        for _ in 0..self.len(12, "behavior params")? {
            let k = self.str("param name")?;
            let v = self.f64("param value")?;
            spec.params.insert(k, v);
        }
        if self.flag("prediction")? {
            let mut p = PredictionConfig::new(self.behavior()?);
            for _ in 0..self.len(7, "prediction overrides")? {
                let id = AgentId(self.u32("override agent")?);
                p.overrides.insert(id, self.behavior()?);
            }
            for _ in 0..self.len(12, "perturbation")? {
                let k = self.str("perturbation name")?;
                p.perturbation.insert(k, self.f64("perturbation factor")?);
            }
            spec.prediction = Some(Box::new(p));
        }
        if self.flag("track")? {
            let id = self.u32("track id")?;
            let n = self.len(56, "track samples")?;
            let mut samples = Vec::with_capacity(n);
            for _ in 0..n {
                let mut f = [0.0; 7];
                for x in &mut f {
                    *x = self.f64("track sample")?;
                }
                let [t, x, y, theta, v, length, width] = f;
                samples.push(TrackSample {
                    t,
                    x,
                    y,
                    theta,
                    v,
                    length,
                    width,
                });
            }
            spec.track = Some(Arc::new(TrackRecord::new(id, samples)?));
        }
        Ok(spec)
    }

    fn agent(&mut self) -> Result<ScenarioAgent, ScenarioError> {
        let id = AgentId(self.u32("agent id")?);
        let mut f = [0.0; 7];
        for x in &mut f {
            *x = self.f64("agent state")?;
        }
        let [t, x, y, theta, v, length, width] = f;
        Ok(ScenarioAgent {
            id,
            state: AgentState::new(t, x, y, theta, v),
            length,
            width,
            start_lane: LaneId(self.u32("start lane")?),
            goal: self.goal()?,
            behavior: self.behavior()?,
        })
    }
}

/// Parses a database, verifying magic, version and embedded map hashes.
pub fn decode(buf: &[u8]) -> Result<ScenarioDatabase, ScenarioError> {
    let mut d = Dec { buf, pos: 0 };
    if d.take(4, "magic")? != DB_MAGIC {
        return Err(ScenarioError::Parse("missing BBDB magic".into()));
    }
    let version = d.u16("version")?;
    if version != DB_VERSION {
        return Err(ScenarioError::Version {
            found: version,
            expected: DB_VERSION,
        });
    }
    let seed = d.u64("seed")?;
    let provenance = d.str("provenance")?;
    let mut maps = Vec::new();
    for _ in 0..d.len(40, "maps")? {
        let name = d.str("map name")?;
        let hash: [u8; 32] = d.take(32, "map hash")?.try_into().unwrap();
        let text = d.str("map text")?;
        let m = MapSource::from_text(name, text)?;
        if m.hash != hash {
            return Err(ScenarioError::MapHash(m.name));
        }
        maps.push(Arc::new(m));
    }
    let mut sets = BTreeMap::new();
    for _ in 0..d.len(8, "sets")? {
        let name = d.str("set name")?;
        let n = d.len(28, "scenarios")?;
        let mut scenarios = Vec::with_capacity(n);
        for _ in 0..n {
            let mi = d.u32("map index")? as usize;
            let map = maps
                .get(mi)
                .cloned()
                .ok_or_else(|| ScenarioError::Parse(format!("map index {mi} out of range")))?;
            let dt = d.f64("dt")?;
            let horizon = d.u64("horizon")?;
            let controlled = AgentId(d.u32("controlled id")?);
            let agents = (0..d.len(80, "agents")?)
                .map(|_| d.agent())
                .collect::<Result<Vec<_>, _>>()?;
            scenarios.push(Scenario {
                map,
                agents,
                controlled,
                horizon,
                dt,
            });
        }
        if sets.insert(name.clone(), scenarios).is_some() {
            return Err(ScenarioError::Parse(format!("duplicate set '{name}'")));
        }
    }
    if d.pos != buf.len() {
        return Err(ScenarioError::Parse(format!(
            "{} trailing bytes",
            buf.len() - d.pos
        )));
    }
    Ok(ScenarioDatabase {
        seed,
        provenance,
        sets,
    })
}

pub fn db_save(db: &ScenarioDatabase, sink: &mut impl Write) -> Result<(), ScenarioError> {
    sink.write_all(&encode(db))?;
    Ok(())
}

pub fn db_load(source: &mut impl Read) -> Result<ScenarioDatabase, ScenarioError> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    decode(&buf)
}
