//! Benchmark runner: scenarios x configurations, evaluator-driven
//! termination, deterministic result tables.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::behaviors::{BehaviorError, BehaviorSpec};
use crate::evaluators::{
    eval_collision, eval_drivable_area, eval_goal_distance, eval_goal_reached, CollisionScope,
};
use crate::scenario::BehaviorTemplate;
use crate::scenario::{Scenario, ScenarioDatabase};
use crate::world::World;

pub const CSV_HEADER: &str =
    "scenario_set,scenario_index,config_name,seed,terminal_reason,steps,collision,goal_reached,goal_distance,wall_time_s";

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("invalid benchmark config: {0}")]
    Config(String),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error("no records to summarize")]
    Empty,
    #[error("results file: {0}")]
    Results(String),
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why a run stopped, in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TerminalReason {
    Collision,
    OffDrivableArea,
    GoalReached,
    MaxSteps,
    /// A behavior model broke its contract or failed.
    Error,
}

impl TerminalReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminalReason::Collision => "Collision",
            TerminalReason::OffDrivableArea => "OffDrivableArea",
            TerminalReason::GoalReached => "GoalReached",
            TerminalReason::MaxSteps => "MaxSteps",
            TerminalReason::Error => "Error",
        }
    }
}

impl fmt::Display for TerminalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TerminalReason {
    type Err = BenchmarkError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            TerminalReason::Collision,
            TerminalReason::OffDrivableArea,
            TerminalReason::GoalReached,
            TerminalReason::MaxSteps,
            TerminalReason::Error,
        ]
        .into_iter()
        .find(|r| r.name() == s)
        .ok_or_else(|| BenchmarkError::Results(format!("unknown terminal reason '{s}'")))
    }
}

/// A termination criterion; each maps to one terminal reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// The controlled agent collides with anyone.
    Collision,
    /// Any two agents collide.
    CollisionAny,
    /// The controlled agent leaves its corridor.
    DrivableArea,
    GoalReached,
}

impl Criterion {
    pub fn reason(self) -> TerminalReason {
        match self {
            Criterion::Collision | Criterion::CollisionAny => TerminalReason::Collision,
            Criterion::DrivableArea => TerminalReason::OffDrivableArea,
            Criterion::GoalReached => TerminalReason::GoalReached,
        }
    }

    fn fires(self, world: &World) -> bool {
        let ego = world.controlled[0];
        match self {
            Criterion::Collision => eval_collision(world, CollisionScope::Controlled),
            Criterion::CollisionAny => eval_collision(world, CollisionScope::Any),
            Criterion::DrivableArea => !eval_drivable_area(world, ego).unwrap_or(false),
            Criterion::GoalReached => eval_goal_reached(world, ego).unwrap_or(false),
        }
    }
}

pub const DEFAULT_CRITERIA: [Criterion; 3] = [
    Criterion::Collision,
    Criterion::DrivableArea,
    Criterion::GoalReached,
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub name: String,
    /// Replaces the controlled agent's model; a missing prediction is taken
    /// from the scenario's stored spec.
    pub behavior: Option<BehaviorSpec>,
    pub criteria: Vec<Criterion>,
    /// Step limit; the scenario horizon when absent.
    pub max_steps: Option<u64>,
    /// Step size; the scenario's when absent.
    pub dt: Option<f64>,
}

impl BenchmarkConfig {
    pub fn new(name: impl Into<String>, behavior: Option<BehaviorSpec>) -> Self {
        Self {
            name: name.into(),
            behavior,
            criteria: DEFAULT_CRITERIA.to_vec(),
            max_steps: None,
            dt: None,
        }
    }

    pub fn validate(&self) -> Result<(), BenchmarkError> {
        let bad = |m: String| Err(BenchmarkError::Config(format!("'{}': {m}", self.name)));
        if self.name.is_empty() || self.name.contains([',', '"', '\n']) {
            return bad("name must be non-empty without commas, quotes or newlines".into());
        }
        if self.criteria.is_empty() {
            return bad("at least one termination criterion is required".into());
        }
        if self.max_steps == Some(0) {
            return bad("max_steps must be >= 1".into());
        }
        if self.dt.is_some_and(|dt| !(dt > 0.0 && dt.is_finite())) {
            return bad("dt must be positive".into());
        }
        if let Some(b) = &self.behavior {
            b.normalized()?;
        }
        Ok(())
    }

    /// Effective controlled-agent spec for `scenario`.
    pub fn controlled_spec(&self, scenario: &Scenario) -> Option<BehaviorSpec> {
        let mut spec = self.behavior.clone()?;
        if spec.prediction.is_none() {
            spec.prediction = scenario
                .controlled_agent()
                .and_then(|a| a.behavior.prediction.clone());
        }
        Some(spec)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigEntry {
    name: String,
    #[serde(default)]
    behavior: Option<BehaviorTemplate>,
    #[serde(default)]
    prediction: Option<BehaviorTemplate>,
    #[serde(default)]
    prediction_scale: BTreeMap<String, f64>,
    #[serde(default)]
    terminate_on: Option<Vec<Criterion>>,
    #[serde(default)]
    max_steps: Option<u64>,
    #[serde(default)]
    dt: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    config: Vec<ConfigEntry>,
}

/// Parses a benchmark file:
///
/// ```toml
/// [[config]]
/// name = "mcts_500"
/// max_steps = 30
/// terminate_on = ["collision", "drivable_area", "goal_reached"]
/// behavior = { kind = "MCTS_Single", iterations = 500 }
/// ```
pub fn parse_benchmark_configs(text: &str) -> Result<Vec<BenchmarkConfig>, BenchmarkError> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| BenchmarkError::Config(e.to_string()))?;
    let mut out: Vec<BenchmarkConfig> = Vec::new();
    for e in file.config {
        let mut behavior = e.behavior.map(|b| b.to_spec());
        if let Some(p) = e.prediction {
            let spec = behavior.as_mut().ok_or_else(|| {
                BenchmarkError::Config(format!("'{}': prediction needs a behavior", e.name))
            })?;
            let mut pc = crate::world::PredictionConfig::new(p.to_spec());
            pc.perturbation = e.prediction_scale;
            spec.prediction = Some(Box::new(pc));
        }
        let cfg = BenchmarkConfig {
            name: e.name,
            behavior,
            criteria: e.terminate_on.unwrap_or_else(|| DEFAULT_CRITERIA.to_vec()),
            max_steps: e.max_steps,
            dt: e.dt,
        };
        cfg.validate()?;
        if out.iter().any(|c| c.name == cfg.name) {
            return Err(BenchmarkError::Config(format!(
                "duplicate config name '{}'",
                cfg.name
            )));
        }
        out.push(cfg);
    }
    if out.is_empty() {
        return Err(BenchmarkError::Config("no [[config]] entries".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub scenario_set: String,
    pub scenario_index: usize,
    pub config_name: String,
    pub seed: u64,
    pub terminal_reason: TerminalReason,
    pub steps: u64,
    pub collision: bool,
    pub goal_reached: bool,
    pub goal_distance: f64,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

impl BenchmarkRecord {
    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        Self {
            wall_time_s: 0.0,
            ..self.clone()
        } == Self {
            wall_time_s: 0.0,
            ..other.clone()
        }
    }
}

/// Runs one scenario under `cfg`, calling `observe` on the initial world
/// and after every step.
pub fn run_scenario_with(
    scenario: &Scenario,
    cfg: &BenchmarkConfig,
    mut observe: impl FnMut(&World),
) -> BenchmarkRecord {
    let started = Instant::now();
    let mut record = BenchmarkRecord {
        scenario_set: String::new(),
        scenario_index: 0,
        config_name: cfg.name.clone(),
        seed: 0,
        terminal_reason: TerminalReason::Error,
        steps: 0,
        collision: false,
        goal_reached: false,
        goal_distance: f64::NAN,
        wall_time_s: 0.0,
        error: None,
    };
    let spec = cfg.controlled_spec(scenario);
    let mut world = match scenario.build_world_with(spec.as_ref()) {
        Ok(w) => w,
        Err(e) => {
            record.error = Some(e.to_string());
            record.wall_time_s = started.elapsed().as_secs_f64();
            return record;
        }
    };
    let dt = cfg.dt.unwrap_or(scenario.dt);
    let max_steps = cfg.max_steps.unwrap_or(scenario.horizon).max(1);
    observe(&world);
    let reason = loop {
        if let Err(e) = world.step(dt) {
            log::debug!("run stopped at step {}: {e}", world.step_index);
            record.error = Some(e.to_string());
            break TerminalReason::Error;
        }
        observe(&world);
        let fired = cfg
            .criteria
            .iter()
            .filter(|c| c.fires(&world))
            .map(|c| c.reason())
            .min();
        if let Some(r) = fired {
            break r;
        }
        if world.step_index >= max_steps {
            break TerminalReason::MaxSteps;
        }
    };
    let ego = scenario.controlled;
    record.terminal_reason = reason;
    record.steps = world.step_index;
    record.collision = eval_collision(&world, CollisionScope::Controlled);
    record.goal_reached = eval_goal_reached(&world, ego).unwrap_or(false);
    record.goal_distance = eval_goal_distance(&world, ego).unwrap_or(f64::NAN);
    record.wall_time_s = started.elapsed().as_secs_f64();
    record
}

pub fn run_scenario(scenario: &Scenario, cfg: &BenchmarkConfig) -> BenchmarkRecord {
    run_scenario_with(scenario, cfg, |_| {})
}

/// Runs every (scenario, config) pair on `workers` threads. Output is sorted
/// by (set, index, config name) and does not depend on `workers`.
pub fn run_benchmark(
    db: &ScenarioDatabase,
    cfgs: &[BenchmarkConfig],
    workers: usize,
) -> Result<Vec<BenchmarkRecord>, BenchmarkError> {
    if workers == 0 {
        return Err(BenchmarkError::Config("workers must be >= 1".into()));
    }
    let tasks: Vec<(&str, usize, &Scenario, &BenchmarkConfig)> = db
        .iter()
        .flat_map(|(set, i, s)| cfgs.iter().map(move |c| (set, i, s, c)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchmarkError::Pool(e.to_string()))?;
    let mut records: Vec<BenchmarkRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(set, i, s, c)| BenchmarkRecord {
                scenario_set: set.to_string(),
                scenario_index: *i,
                seed: db.seed,
                ..run_scenario(s, c)
            })
            .collect()
    });
    records.sort_by(|a, b| {
        (&a.scenario_set, a.scenario_index, &a.config_name).cmp(&(
            &b.scenario_set,
            b.scenario_index,
            &b.config_name,
        ))
    });
    Ok(records)
}

/// Outcome rates for one (set, config) group, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub scenario_set: String,
    pub config_name: String,
    pub runs: usize,
    pub success: f64,
    pub collision: f64,
    pub max_steps: f64,
    pub off_road: f64,
    pub error: f64,
    /// Mean steps over goal-reaching runs; `None` when there are none.
    pub mean_steps_to_goal: Option<f64>,
}

pub fn summarize(records: &[BenchmarkRecord]) -> Result<Vec<Summary>, BenchmarkError> {
    if records.is_empty() {
        return Err(BenchmarkError::Empty);
    }
    let mut groups: BTreeMap<(&str, &str), Vec<&BenchmarkRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((&r.scenario_set, &r.config_name))
            .or_default()
            .push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((set, cfg), rs)| {
            let n = rs.len() as f64;
            let pct = |reason| {
                100.0 * rs.iter().filter(|r| r.terminal_reason == reason).count() as f64 / n
            };
            let goal_steps: Vec<f64> = rs
                .iter()
                .filter(|r| r.terminal_reason == TerminalReason::GoalReached)
                .map(|r| r.steps as f64)
                .collect();
            Summary {
                scenario_set: set.to_string(),
                config_name: cfg.to_string(),
                runs: rs.len(),
                success: pct(TerminalReason::GoalReached),
                collision: pct(TerminalReason::Collision),
                max_steps: pct(TerminalReason::MaxSteps),
                off_road: pct(TerminalReason::OffDrivableArea),
                error: pct(TerminalReason::Error),
                mean_steps_to_goal: (!goal_steps.is_empty())
                    .then(|| goal_steps.iter().sum::<f64>() / goal_steps.len() as f64),
            }
        })
        .collect())
}

/// Formats like C's `%.9g`.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..9).contains(&exp) {
        trim(format!("{:.*}", (8 - exp).max(0) as usize, x))
    } else {
        format!(
            "{}e{}{:02}",
            trim(mant.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

pub fn write_results_csv(records: &[BenchmarkRecord], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scenario_set,
            r.scenario_index,
            r.config_name,
            r.seed,
            r.terminal_reason,
            r.steps,
            r.collision,
            r.goal_reached,
            fmt_sig9(r.goal_distance),
            fmt_sig9(r.wall_time_s)
        )?;
    }
    Ok(())
}

/// Reads a results CSV back; column order is free, all header columns are
/// required.
pub fn read_results_csv(text: &str) -> Result<Vec<BenchmarkRecord>, BenchmarkError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| BenchmarkError::Results(e.to_string()))?
        .clone();
    let mut col = BTreeMap::new();
    for name in CSV_HEADER.split(',') {
        let i = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| BenchmarkError::MissingColumn(name.into()))?;
        col.insert(name, i);
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| BenchmarkError::Results(e.to_string()))?;
        let get = |name: &str| row.get(col[name]).unwrap_or("");
        let bad = |name: &str| {
            BenchmarkError::Results(format!("row {}: invalid {name} '{}'", line + 1, get(name)))
        };
        out.push(BenchmarkRecord {
            scenario_set: get("scenario_set").to_string(),
            scenario_index: get("scenario_index")
                .parse()
                .map_err(|_| bad("scenario_index"))?,
            config_name: get("config_name").to_string(),
            seed: get("seed").parse().map_err(|_| bad("seed"))?,
            terminal_reason: get("terminal_reason").parse()?,
            steps: get("steps").parse().map_err(|_| bad("steps"))?,
            collision: get("collision").parse().map_err(|_| bad("collision"))?,
            goal_reached: get("goal_reached")
                .parse()
                .map_err(|_| bad("goal_reached"))?,
            goal_distance: get("goal_distance")
                .parse()
                .map_err(|_| bad("goal_distance"))?,
            wall_time_s: get("wall_time_s").parse().map_err(|_| bad("wall_time_s"))?,
            error: None,
        });
    }
    Ok(out)
}

/// World steps per second when stepping a copy of `world` `steps` times.
pub fn measure_step_throughput(
    world: &World,
    dt: f64,
    steps: u64,
) -> Result<f64, crate::world::WorldError> {
    let mut w = world.clone();
    let started = Instant::now();
    for _ in 0..steps {
        w.step(dt)?;
    }
    Ok(steps as f64 / started.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_matches_percent_g() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(0.1), "0.1");
        assert_eq!(fmt_sig9(123.456), "123.456");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(2.0 / 3.0 * 1e-7), "6.66666667e-08");
        assert_eq!(fmt_sig9(123456789012.0), "1.23456789e+11");
        assert_eq!(fmt_sig9(-42.5), "-42.5");
        assert_eq!(fmt_sig9(f64::INFINITY), "inf");
    }

    fn rec(reason: TerminalReason, steps: u64) -> BenchmarkRecord {
        BenchmarkRecord {
            scenario_set: "s".into(),
            scenario_index: 0,
            config_name: "c".into(),
            seed: 0,
            terminal_reason: reason,
            steps,
            collision: reason == TerminalReason::Collision,
            goal_reached: reason == TerminalReason::GoalReached,
            goal_distance: 0.0,
            wall_time_s: 0.0,
            error: None,
        }
    }

    #[test]
    fn summary_percentages() {
        let mut rs = vec![rec(TerminalReason::GoalReached, 12); 6];
        rs.extend(vec![rec(TerminalReason::Collision, 3); 3]);
        rs.push(rec(TerminalReason::MaxSteps, 30));
        let s = &summarize(&rs).unwrap()[0];
        assert_eq!((s.success, s.collision, s.max_steps), (60.0, 30.0, 10.0));
        assert_eq!(s.mean_steps_to_goal, Some(12.0));
    }

    #[test]
    fn summary_without_goals_has_no_mean() {
        let s = &summarize(&[rec(TerminalReason::MaxSteps, 30)]).unwrap()[0];
        assert_eq!(s.mean_steps_to_goal, None);
        assert!(matches!(summarize(&[]), Err(BenchmarkError::Empty)));
    }

    #[test]
    fn csv_round_trip() {
        let rs = vec![
            rec(TerminalReason::GoalReached, 12),
            rec(TerminalReason::Collision, 4),
        ];
        let mut buf = Vec::new();
        write_results_csv(&rs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert!(!text.contains('\r'));
        assert_eq!(read_results_csv(&text).unwrap(), rs);
    }

    #[test]
    fn missing_column_is_named() {
        let err = read_results_csv("scenario_set,scenario_index\n").unwrap_err();
        assert!(matches!(err, BenchmarkError::MissingColumn(c) if c == "config_name"));
    }

    #[test]
    fn config_file_parses() {
        let cfgs = parse_benchmark_configs(
            r#"
[[config]]
name = "a"
max_steps = 30
behavior = { kind = "MCTS_Single", iterations = 200 }
[[config]]
name = "b"
terminate_on = ["collision_any"]
"#,
        )
        .unwrap();
        assert_eq!(cfgs.len(), 2);
        assert_eq!(
            cfgs[0].behavior.as_ref().unwrap().params["iterations"],
            200.0
        );
        assert_eq!(cfgs[1].criteria, vec![Criterion::CollisionAny]);
        assert!(parse_benchmark_configs("[[config]]\nname = \"a\"\nmax_steps = 0\n").is_err());
        assert!(parse_benchmark_configs("[[config]]\nname = \"a\"\nbogus = 1\n").is_err());
    }
}
