//! Acceptance criteria. Each test writes one `criterion N: PASS|FAIL` line
//! straight to stdout (so it shows even when output is captured) and then
//! asserts the outcome. Tests take a shared lock so timings do not overlap.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use common::*;
use drivebench::behaviors::{
    idm_acceleration, mobil_decide, BehaviorKind, BehaviorSpec, IdmParams, MobilDecision,
    MobilParams, EMERGENCY_GAP,
};
use drivebench::benchmark::{
    measure_step_throughput, parse_benchmark_configs, run_benchmark, summarize, write_results_csv,
    BenchmarkConfig, BenchmarkRecord, Criterion, Summary, TerminalReason,
};
use drivebench::evaluators::agents_collide;
use drivebench::planners::{
    apply_maneuver, evaluate_leaf_reward, mcts_single_search, ManeuverKind, MctsParams,
};
use drivebench::rng::CounterRng;
use drivebench::scenario::synthetic::{replacement_scenario, REPLACED_SETS};
use drivebench::scenario::{db_load, db_save, ScenarioDatabase};
use drivebench::world::{AgentId, PredictionConfig, World};

static LOCK: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n}: {verdict} {detail}");
    let _ = out.flush();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn note(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "    {line}");
}

fn find<'a>(rows: &'a [Summary], set: &str, cfg: &str) -> &'a Summary {
    rows.iter()
        .find(|s| s.scenario_set == set && s.config_name == cfg)
        .unwrap_or_else(|| panic!("no summary for {set}/{cfg}"))
}

const PREDICTION_SETS: [&str; 4] = ["tau_100", "tau_080", "tau_060", "tau_020"];

#[test]
fn criterion_01_prediction_error_trend() {
    let _g = serial();
    let started = Instant::now();
    let db = generate("prediction_error.toml");
    let cfgs = parse_benchmark_configs(&read_config("mcts_500.toml")).unwrap();
    let records = run_benchmark(&db, &cfgs, 1).unwrap();
    let rows = summarize(&records).unwrap();
    let rates: Vec<f64> = PREDICTION_SETS
        .iter()
        .map(|s| find(&rows, s, "mcts_500").collision)
        .collect();
    for s in PREDICTION_SETS {
        let r = find(&rows, s, "mcts_500");
        note(&format!(
            "{s}: runs {} success {:.0}% collision {:.0}% max_steps {:.0}%",
            r.runs, r.success, r.collision, r.max_steps
        ));
    }
    let monotone = rates.windows(2).all(|w| w[0] <= w[1]);
    report(
        1,
        monotone && rows.iter().all(|r| r.runs == 100),
        &format!(
            "collision rate by tau scale 1.0/0.8/0.6/0.2 = {rates:?}% (non-decreasing required), {:.1} s",
            started.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_iteration_budget() {
    let _g = serial();
    let mut db = generate("prediction_error.toml");
    db.sets.retain(|name, _| name == "tau_100");
    let cfgs = parse_benchmark_configs(&read_config("iterations.toml")).unwrap();
    let rows = summarize(&run_benchmark(&db, &cfgs, 1).unwrap()).unwrap();
    let low = find(&rows, "tau_100", "mcts_200");
    let high = find(&rows, "tau_100", "mcts_2000");
    report(
        2,
        low.runs == 100 && high.success >= low.success,
        &format!(
            "success at 2000 iterations {:.0}% >= at 200 iterations {:.0}%",
            high.success, low.success
        ),
    );
}

#[test]
fn criterion_03_agent_replacement_replay() {
    let _g = serial();
    let started = Instant::now();
    let mut cfg = BenchmarkConfig::new("replay", None);
    cfg.criteria = vec![Criterion::CollisionAny];
    let s0s = [2.0, 3.0, 4.0, 5.0];
    let models = [
        BehaviorKind::Idm,
        BehaviorKind::Mobil,
        BehaviorKind::MctsSingle,
    ];
    // (set, model, P index) -> collision; None where IDM cannot apply
    let mut matrix: BTreeMap<(&str, BehaviorKind, usize), Option<bool>> = BTreeMap::new();
    for (name, ids) in REPLACED_SETS {
        let merging = ids.iter().any(|id| *id == 66 || *id == 68);
        for model in models {
            for (k, s0) in s0s.iter().enumerate() {
                if model == BehaviorKind::Idm && merging {
                    matrix.insert((name, model, k), None);
                    continue;
                }
                let idm = BehaviorSpec::idm(&IdmParams::replay_set(*s0));
                let spec = match model {
                    BehaviorKind::MctsSingle => BehaviorSpec::new(model)
                        .with("iterations", 50.0)
                        .with("horizon", 5.0)
                        .with_prediction(PredictionConfig::new(idm)),
                    _ => BehaviorSpec { kind: model, ..idm },
                };
                let scenario = replacement_scenario(ids, &spec).unwrap();
                let r = drivebench::benchmark::run_scenario(&scenario, &cfg);
                assert!(
                    r.error.is_none(),
                    "{name} {model} P{}: {:?}",
                    k + 1,
                    r.error
                );
                matrix.insert(
                    (name, model, k),
                    Some(r.terminal_reason == TerminalReason::Collision),
                );
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    note(
        "set  replaced        | IDM P1-4  | MOBIL P1-4 | MCTS P1-4   (X collision, o none, - n/a)",
    );
    for (name, ids) in REPLACED_SETS {
        let list: Vec<String> = ids.iter().map(u32::to_string).collect();
        let mut line = format!("{name:<4} {:<15}", list.join(","));
        for model in models {
            line.push_str(" |");
            for k in 0..4 {
                line.push_str(match matrix[&(name, model, k)] {
                    None => " -",
                    Some(true) => " X",
                    Some(false) => " o",
                });
            }
        }
        note(&line);
    }
    let counts: Vec<usize> = (0..4)
        .map(|k| {
            REPLACED_SETS
                .iter()
                .filter(|(n, _)| matrix[&(*n, BehaviorKind::Idm, k)] == Some(true))
                .count()
        })
        .collect();
    let monotone = counts.windows(2).all(|w| w[0] >= w[1]);
    report(
        3,
        monotone && elapsed < 60.0,
        &format!(
            "IDM collision count for s0 = 2/3/4/5: {counts:?} (non-increasing required), {elapsed:.1} s (< 60 s)"
        ),
    );
}

/// IDM written out independently of the library.
fn idm_oracle(p: &IdmParams, v: f64, lead: Option<(f64, f64)>) -> f64 {
    let free = 1.0 - (v / p.v0).powf(p.delta);
    match lead {
        None => p.a_max * free,
        Some((_, gap)) if gap <= EMERGENCY_GAP => -10.0 * p.a_max,
        Some((vl, gap)) => {
            let dyn_term = v * p.tau + v * (v - vl) / (2.0 * (p.a_max * p.b).sqrt());
            let s_star = p.s0 + dyn_term.max(0.0);
            p.a_max * (free - (s_star / gap).powi(2))
        }
    }
}

fn random_idm(rng: &mut CounterRng) -> IdmParams {
    IdmParams {
        v0: rng.uniform_range(3.0, 35.0),
        a_max: rng.uniform_range(0.3, 3.0),
        tau: rng.uniform_range(0.3, 3.0),
        b: rng.uniform_range(0.5, 4.0),
        s0: rng.uniform_range(0.5, 6.0),
        delta: 4.0,
    }
}

#[test]
fn criterion_04_idm_oracle() {
    let _g = serial();
    let mut worst: f64 = 0.0;
    for k in 0..1000u64 {
        let mut rng = CounterRng::keyed(4, &[k]);
        let p = random_idm(&mut rng);
        let v = rng.uniform_range(0.0, 40.0);
        let lead =
            (k % 5 != 0).then(|| (rng.uniform_range(0.0, 40.0), rng.uniform_range(0.2, 150.0)));
        let got = idm_acceleration(&p, v, lead);
        let want = idm_oracle(&p, v, lead);
        let rel = (got - want).abs() / want.abs().max(1e-300);
        worst = worst.max(if got == want { 0.0 } else { rel });
    }
    let mut exact = true;
    for k in 0..200u64 {
        let mut rng = CounterRng::keyed(40, &[k]);
        let p = random_idm(&mut rng);
        exact &= idm_acceleration(&p, p.v0, None) == 0.0;
        exact &= idm_acceleration(&p, 0.0, None) == p.a_max;
        // equilibrium gap behind a same-speed leader
        let v = rng.uniform_range(0.1, 0.95) * p.v0;
        let gap = (p.s0 + v * p.tau) / (1.0 - (v / p.v0).powf(p.delta)).sqrt();
        exact &= idm_acceleration(&p, v, Some((v, gap))).abs() < 1e-12;
    }
    let p1 = IdmParams::replay_set(2.0);
    let hand = (idm_acceleration(&p1, 5.0, Some((5.0, 10.0))) - (-0.833)).abs() < 1e-12;
    report(
        4,
        worst <= 1e-12 && exact && hand,
        &format!(
            "1000 random tuples, worst relative error {worst:.2e} (<= 1e-12); free-road and equilibrium cases exact: {exact}"
        ),
    );
}

struct Car {
    id: u32,
    lane: u32,
    x: f64,
    v: f64,
}

fn leader<'a>(cars: &'a [Car], lane: u32, x: f64, skip: &[u32]) -> Option<&'a Car> {
    cars.iter()
        .filter(|c| c.lane == lane && c.x > x && !skip.contains(&c.id))
        .min_by(|a, b| a.x.total_cmp(&b.x))
}

fn follower<'a>(cars: &'a [Car], lane: u32, x: f64, skip: &[u32]) -> Option<&'a Car> {
    cars.iter()
        .filter(|c| c.lane == lane && c.x <= x && !skip.contains(&c.id))
        .max_by(|a, b| a.x.total_cmp(&b.x))
}

fn acc_behind(p: &IdmParams, x: f64, v: f64, lead: Option<(f64, f64)>) -> f64 {
    idm_oracle(p, v, lead.map(|(lx, lv)| (lv, lx - x - LENGTH)))
}

/// Brute-force MOBIL: returns (qualifies, margin) for a move to `target`.
fn mobil_oracle(p: &MobilParams, cars: &[Car], target: u32) -> (bool, f64) {
    let ego = &cars[0];
    let idm = &p.idm;
    let at = |c: &Car| Some((c.x, c.v));
    let a_ego = acc_behind(
        idm,
        ego.x,
        ego.v,
        leader(cars, ego.lane, ego.x, &[ego.id]).and_then(at),
    );
    let a_new = acc_behind(
        idm,
        ego.x,
        ego.v,
        leader(cars, target, ego.x, &[ego.id]).and_then(at),
    );
    let mut incentive = a_new - a_ego;
    let mut margin = f64::INFINITY;
    let mut safe = true;
    if let Some(nf) = follower(cars, target, ego.x, &[ego.id]) {
        let now = acc_behind(
            idm,
            nf.x,
            nf.v,
            leader(cars, target, nf.x, &[nf.id, ego.id]).and_then(at),
        );
        let after = acc_behind(idm, nf.x, nf.v, Some((ego.x, ego.v)));
        incentive += p.politeness * (after - now);
        safe = after >= -p.b_safe;
        margin = (after + p.b_safe).abs();
    }
    if let Some(of) = follower(cars, ego.lane, ego.x, &[ego.id]) {
        let now = acc_behind(idm, of.x, of.v, Some((ego.x, ego.v)));
        let after = acc_behind(
            idm,
            of.x,
            of.v,
            leader(cars, ego.lane, of.x, &[of.id, ego.id]).and_then(at),
        );
        incentive += p.politeness * (after - now);
    }
    margin = margin.min((incentive - p.a_threshold).abs());
    (safe && incentive > p.a_threshold, margin)
}

#[test]
fn criterion_05_mobil_oracle() {
    let _g = serial();
    let map = straight_map(3, 400.0);
    let constvel = BehaviorSpec::new(BehaviorKind::ConstVel);
    let (mut agree, mut marginal, mut disagree) = (0, 0, 0);
    let mut decisions = [0usize; 3];
    for k in 0..500u64 {
        let mut rng = CounterRng::keyed(5, &[k]);
        let p = MobilParams {
            politeness: rng.uniform(),
            a_threshold: rng.uniform_range(0.0, 0.5),
            b_safe: rng.uniform_range(1.0, 6.0),
            idm: random_idm(&mut rng),
        };
        let mut cars = vec![Car {
            id: 1,
            lane: 1 + rng.below(3) as u32,
            x: 150.0,
            v: rng.uniform_range(0.0, 30.0),
        }];
        while cars.len() < 3 {
            let c = Car {
                id: cars.len() as u32 + 1,
                lane: 1 + rng.below(3) as u32,
                x: 150.0 + rng.uniform_range(-60.0, 60.0),
                v: rng.uniform_range(0.0, 30.0),
            };
            if cars
                .iter()
                .all(|o| o.lane != c.lane || (o.x - c.x).abs() > LENGTH + 0.1)
            {
                cars.push(c);
            }
        }
        let mut world = World::new(map.clone(), 0.0);
        for c in &cars {
            world
                .add_agent(agent_on(&map, c.id, c.lane, c.x, c.v, &constvel))
                .unwrap();
        }
        let observed = world.observe_default(AgentId(1)).unwrap();
        let got = mobil_decide(&p, &observed);

        let ego_lane = cars[0].lane;
        let left = (ego_lane < 3).then(|| mobil_oracle(&p, &cars, ego_lane + 1));
        let right = (ego_lane > 1).then(|| mobil_oracle(&p, &cars, ego_lane - 1));
        let margin = left
            .map_or(f64::INFINITY, |l| l.1)
            .min(right.map_or(f64::INFINITY, |r| r.1));
        let want = if left.is_some_and(|l| l.0) {
            MobilDecision::ChangeLeft
        } else if right.is_some_and(|r| r.0) {
            MobilDecision::ChangeRight
        } else {
            MobilDecision::KeepLane
        };
        if margin <= 1e-6 {
            marginal += 1;
        } else if got == want {
            agree += 1;
            decisions[match want {
                MobilDecision::KeepLane => 0,
                MobilDecision::ChangeLeft => 1,
                MobilDecision::ChangeRight => 2,
            }] += 1;
        } else {
            disagree += 1;
        }
    }
    report(
        5,
        disagree == 0 && agree > 0,
        &format!(
            "{agree}/{} non-marginal configurations agree ({marginal} marginal skipped); keep/left/right = {decisions:?}",
            agree + disagree
        ),
    );
}

/// Exhaustive discounted value of `world` for the ego under `p`.
fn exhaustive_value(world: &World, p: &MctsParams, depth: usize) -> f64 {
    if depth >= p.horizon {
        return 0.0;
    }
    (0..p.actions.len())
        .map(|a| exhaustive_q(world, p, depth, a))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn exhaustive_q(world: &World, p: &MctsParams, depth: usize, a: usize) -> f64 {
    let ego = AgentId(1);
    match apply_maneuver(world, ego, p.actions[a], p.a_std, p.action_dt) {
        None => p.w_collision,
        Some(next) => {
            let (r, terminal) = evaluate_leaf_reward(&next, ego, p);
            if terminal {
                r
            } else {
                r + p.discount * exhaustive_value(&next, p, depth + 1)
            }
        }
    }
}

#[test]
fn criterion_06_mcts_small_instance_oracle() {
    let _g = serial();
    let map = straight_map(1, 400.0);
    let mut world = World::new(map.clone(), 0.0);
    let cv = BehaviorSpec::new(BehaviorKind::ConstVel);
    let prediction = PredictionConfig::new(cv.clone()).compile().unwrap();
    world
        .add_agent(agent_on(&map, 1, 1, 50.0, 10.0, &cv).with_prediction(Arc::new(prediction)))
        .unwrap();
    // stopped leader 25 m (bumper to bumper) ahead
    world
        .add_agent(agent_on(&map, 2, 1, 50.0 + 25.0 + LENGTH, 0.0, &cv))
        .unwrap();
    let base = MctsParams {
        iterations: 500,
        horizon: 3,
        actions: vec![ManeuverKind::LaneKeepCV, ManeuverKind::LaneKeepCD],
        ..MctsParams::default()
    };
    let observed = world.observe_default(AgentId(1)).unwrap();
    let root = {
        let tree = mcts_single_search(&base, &observed, Default::default()).unwrap();
        tree.root().state.clone()
    };
    let q: Vec<f64> = (0..2).map(|a| exhaustive_q(&root, &base, 0, a)).collect();
    let optimum = if q[1] > q[0] { 1 } else { 0 };
    let mut hits = 0;
    for seed in 0..100 {
        let p = MctsParams {
            seed,
            ..base.clone()
        };
        let tree = mcts_single_search(&p, &observed, Default::default()).unwrap();
        hits += usize::from(tree.best_action() == optimum);
    }
    report(
        6,
        hits >= 99 && q[0] != q[1],
        &format!(
            "exhaustive Q(CV) = {:.4}, Q(CD) = {:.4}, optimum {:?}; MCTS agrees in {hits}/100 seeds (>= 99)",
            q[0], q[1], base.actions[optimum]
        ),
    );
}

fn csv_without_wall_time(records: &[BenchmarkRecord]) -> String {
    let stripped: Vec<BenchmarkRecord> = records
        .iter()
        .map(|r| BenchmarkRecord {
            wall_time_s: 0.0,
            ..r.clone()
        })
        .collect();
    let mut buf = Vec::new();
    write_results_csv(&stripped, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn state_bits(world: &World) -> Vec<(u32, [u64; 5])> {
    let mut v: Vec<(u32, [u64; 5])> = world
        .agents()
        .iter()
        .map(|a| {
            let s = a.state;
            (
                a.id.0,
                [
                    s.t.to_bits(),
                    s.x.to_bits(),
                    s.y.to_bits(),
                    s.theta.to_bits(),
                    s.v.to_bits(),
                ],
            )
        })
        .collect();
    v.sort_by_key(|e| e.0);
    v
}

#[test]
fn criterion_07_determinism() {
    let _g = serial();
    let encode = |db: &ScenarioDatabase| {
        let mut b = Vec::new();
        db_save(db, &mut b).unwrap();
        b
    };
    // (a) generation
    let db = generate("prediction_error.toml");
    let a = encode(&db) == encode(&generate("prediction_error.toml"));

    // (b) worker count
    let mut small = db.clone();
    for v in small.sets.values_mut() {
        v.truncate(4);
    }
    let cfgs = parse_benchmark_configs(
        "[[config]]\nname = \"mcts\"\nbehavior = { kind = \"MCTS_Single\", iterations = 100 }\n\
         [[config]]\nname = \"mobil\"\nbehavior = { kind = \"MOBIL\" }\n",
    )
    .unwrap();
    let csvs: Vec<String> = [1, 2, 8]
        .iter()
        .map(|w| csv_without_wall_time(&run_benchmark(&small, &cfgs, *w).unwrap()))
        .collect();
    let b = csvs.iter().all(|c| *c == csvs[0]) && csvs[0].lines().count() == 1 + 4 * 4 * 2;

    // (c) round trip
    let bytes = encode(&db);
    let back = db_load(&mut bytes.as_slice()).unwrap();
    let c = back == db && encode(&back) == bytes;

    // (d) repeated simulation
    let scenario = &db.sets["tau_060"][3];
    let spec = BehaviorSpec::new(BehaviorKind::Mobil);
    let run = || {
        let mut w = scenario.build_world_with(Some(&spec)).unwrap();
        let mut seq = vec![state_bits(&w)];
        for _ in 0..100 {
            w.step(0.2).unwrap();
            seq.push(state_bits(&w));
        }
        seq
    };
    let d = run() == run();
    let mcts_run = || {
        let mut w = scenario.build_world().unwrap();
        for _ in 0..10 {
            w.step(0.2).unwrap();
        }
        state_bits(&w)
    };
    let d = d && mcts_run() == mcts_run();
    report(
        7,
        a && b && c && d,
        &format!(
            "(a) generation byte-identical {a}; (b) CSV identical for 1/2/8 workers {b}; (c) round trip {c}; (d) simulation bit-identical {d}"
        ),
    );
}

#[test]
fn criterion_08_simultaneity() {
    let _g = serial();
    let map = straight_map(3, 600.0);
    let mut invariant = 0;
    for k in 0..100u64 {
        let mut rng = CounterRng::keyed(8, &[k]);
        let n = 3 + rng.below(4);
        let mut placed: Vec<(u32, u32, f64, f64, BehaviorSpec)> = Vec::new();
        while placed.len() < n {
            let lane = 1 + rng.below(3) as u32;
            let x = rng.uniform_range(20.0, 200.0);
            let v = rng.uniform_range(0.0, 20.0);
            let spec = match rng.below(3) {
                0 => BehaviorSpec::new(BehaviorKind::ConstVel),
                1 => BehaviorSpec::idm(&random_idm(&mut rng)),
                _ => BehaviorSpec::new(BehaviorKind::Mobil).with("politeness", rng.uniform()),
            };
            if placed
                .iter()
                .all(|p| p.1 != lane || (p.2 - x).abs() > LENGTH + 1.0)
            {
                placed.push((placed.len() as u32 + 1, lane, x, v, spec));
            }
        }
        let build = |order: &[usize]| {
            let mut w = World::new(map.clone(), 0.0);
            for &i in order {
                let (id, lane, x, v, spec) = &placed[i];
                w.add_agent(agent_on(&map, *id, *lane, *x, *v, spec))
                    .unwrap();
            }
            w
        };
        let forward: Vec<usize> = (0..n).collect();
        let mut shuffled = forward.clone();
        for i in (1..n).rev() {
            shuffled.swap(i, rng.below(i + 1));
        }
        if shuffled == forward {
            shuffled.reverse();
        }
        let (mut a, mut b) = (build(&forward), build(&shuffled));
        let mut same = true;
        for _ in 0..10 {
            a.step(0.2).unwrap();
            b.step(0.2).unwrap();
            same &= state_bits(&a) == state_bits(&b);
        }
        invariant += usize::from(same);
    }
    report(
        8,
        invariant == 100,
        &format!(
            "{invariant}/100 random worlds give bit-identical states under permuted insertion"
        ),
    );
}

#[test]
fn criterion_09_platoon_safety() {
    let _g = serial();
    let map = straight_map(1, 2000.0);
    let p = IdmParams::default();
    let v = 10.0;
    let gap = (p.s0 + v * p.tau) / (1.0 - (v / p.v0).powf(p.delta)).sqrt();
    let spec = BehaviorSpec::idm(&p);
    let mut world = World::new(map.clone(), 0.0);
    for i in 0..5u32 {
        let x = 100.0 + i as f64 * (gap + LENGTH);
        world
            .add_agent(agent_on(&map, i + 1, 1, x, v, &spec))
            .unwrap();
    }
    let (mut collisions, mut vmax) = (0, 0.0f64);
    for _ in 0..200 {
        world.step(0.2).unwrap();
        let agents = world.agents();
        for i in 0..agents.len() {
            vmax = vmax.max(agents[i].state.v);
            for b in &agents[i + 1..] {
                collisions += usize::from(agents_collide(&agents[i], b));
            }
        }
    }
    report(
        9,
        collisions == 0 && vmax <= p.v0 + 1e-9,
        &format!(
            "5 IDM agents at equilibrium gap {gap:.2} m, 200 steps: {collisions} collisions, max speed {vmax:.4} <= v0 {}",
            p.v0
        ),
    );
}

#[test]
fn criterion_10_performance_floor() {
    let _g = serial();
    let map = straight_map(2, 50_000.0);
    let mut world = World::new(map.clone(), 0.0);
    for i in 0..6u32 {
        let lane = 1 + i % 2;
        let x = 100.0 + (i / 2) as f64 * 25.0;
        let spec = BehaviorSpec::idm(&IdmParams::default());
        world
            .add_agent(agent_on(&map, i + 1, lane, x, 12.0, &spec))
            .unwrap();
    }
    measure_step_throughput(&world, 0.05, 2_000).unwrap();
    let rate = (0..3)
        .map(|_| measure_step_throughput(&world, 0.05, 20_000).unwrap())
        .fold(0.0, f64::max);
    report(
        10,
        rate >= 50_000.0,
        &format!("{rate:.0} world steps/s on a 6-agent IDM world (>= 50000)"),
    );
}
