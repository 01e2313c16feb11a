mod common;

use std::sync::Arc;

use common::*;
use drivebench::behaviors::{idm_acceleration, BehaviorKind, BehaviorSpec, IdmParams};
use drivebench::geometry::{Point2, Polygon, Polyline, Pose};
use drivebench::map::{compute_road_corridor, parse_map, GoalDefinition, LaneId, MapError};
use drivebench::scenario::{
    db_load, db_save, generate_scenarios, BehaviorTemplate, ControlledTemplate, GoalTemplate,
    MapSource, SourceSinkConfig,
};
use drivebench::world::World;
use proptest::prelude::*;

fn grid_map(rows: u32, cols: u32) -> String {
    let id = |r: u32, c: u32| 10 * r + c + 1;
    let mut text = String::from("lanemap 1\nname grid\n");
    for r in 0..rows {
        for c in 0..cols {
            text.push_str(&format!("lane {} {{\n", id(r, c)));
            if c + 1 < cols {
                text.push_str(&format!("  successors {}\n", id(r, c + 1)));
            }
            if r + 1 < rows {
                text.push_str(&format!("  left {}\n", id(r + 1, c)));
            }
            if r > 0 {
                text.push_str(&format!("  right {}\n", id(r - 1, c)));
            }
            let y = r as f64 * LANE_WIDTH;
            text.push_str(&format!(
                "  center ({}, {y}) ({}, {y})\n}}\n",
                c as f64 * 50.0,
                (c + 1) as f64 * 50.0
            ));
        }
    }
    text
}

fn ring_config(count: usize, gap: [f64; 2], speed_kmh: [f64; 2]) -> SourceSinkConfig {
    SourceSinkConfig {
        source: 1,
        sink: 1,
        distance_range: gap,
        velocity_range: None,
        velocity_range_kmh: Some(speed_kmh),
        count: [count, count],
        start_s: 10.0,
        length: LENGTH,
        width: WIDTH,
        behavior: BehaviorTemplate {
            kind: BehaviorKind::Idm,
            params: [("tau".to_string(), 3.0)].into(),
        },
        goal: GoalTemplate::Sink,
        controlled: Some(ControlledTemplate {
            index: 0,
            behavior: BehaviorTemplate {
                kind: BehaviorKind::ConstVel,
                params: Default::default(),
            },
            goal: GoalTemplate::Sink,
            prediction: None,
            prediction_scale: Default::default(),
        }),
    }
}

fn two_lane() -> Arc<MapSource> {
    let text = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/two_lane.map"),
    )
    .unwrap();
    Arc::new(MapSource::from_text("two_lane.map", text).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn route_length_matches_hop_count(
        rows in 1u32..4, cols in 1u32..5, r0 in 0u32..4, r1 in 0u32..4, c1 in 0u32..5
    ) {
        let (r0, r1, c1) = (r0 % rows, r1 % rows, c1 % cols);
        let map = parse_map(&grid_map(rows, cols)).unwrap();
        let start = LaneId(10 * r0 + 1);
        let goal_lane = LaneId(10 * r1 + c1 + 1);
        let goal = GoalDefinition::Lane { lane: goal_lane, min_s: 0.0 };
        let hops = r0.abs_diff(r1);
        match compute_road_corridor(&map, start, &goal) {
            Ok(c) => {
                let seq = c.lane_sequence();
                prop_assert!(hops <= c1 + 1);
                prop_assert_eq!(seq.len() as u32, 1 + c1 + hops);
                prop_assert_eq!(seq[0], start);
                prop_assert_eq!(*seq.last().unwrap(), goal_lane);
                prop_assert_eq!(c.chains().len() as u32, rows);
            }
            Err(MapError::NoRoute(_)) => prop_assert!(hops > c1 + 1),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn collision_is_symmetric_and_matches_separation(
        l in 1.0f64..6.0, w in 0.5f64..3.0,
        x in -8.0f64..8.0, y in -8.0f64..8.0, th in -3.2f64..3.2
    ) {
        let a = Polygon::rectangle(l, w).unwrap();
        let b = a.transform(Pose::new(x, y, th));
        prop_assert_eq!(a.collides(&b), b.collides(&a));
        let r = (l * l + w * w).sqrt() / 2.0;
        if x.hypot(y) > 2.0 * r {
            prop_assert!(!a.collides(&b));
        }
        if x.hypot(y) < w.min(l) / 2.0 {
            prop_assert!(a.collides(&b));
        }
        prop_assert!((b.area() - l * w).abs() < 1e-9);
    }

    #[test]
    fn frenet_round_trip(s_frac in 0.0f64..1.0, d in -3.0f64..3.0, bend in -1.0f64..1.0) {
        let line = Polyline::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(40.0, 0.0),
            Point2::new(40.0 + 40.0 * bend.cos(), 40.0 * bend.sin()),
        ])
        .unwrap();
        let s = s_frac * line.length();
        let (p, _) = line.point_at(s, d).unwrap();
        let f = line.project(p);
        // near the joint the nearest segment can change; only check when unambiguous
        if (s - 40.0).abs() > 4.0 {
            prop_assert!((f.s - s).abs() < 1e-6, "{} vs {}", f.s, s);
            prop_assert!((f.d - d).abs() < 1e-6);
        }
    }

    #[test]
    fn idm_is_bounded_by_a_max(
        v in 0.0f64..40.0, vl in 0.0f64..40.0, gap in 0.01f64..200.0,
        v0 in 1.0f64..40.0, s0 in 0.5f64..5.0
    ) {
        let p = IdmParams { v0, s0, ..IdmParams::default() };
        let a = idm_acceleration(&p, v, Some((vl, gap)));
        prop_assert!(a.is_finite());
        prop_assert!(a <= p.a_max);
        prop_assert!(idm_acceleration(&p, v, None) >= a);
    }

    #[test]
    fn generated_gaps_and_speeds_stay_in_range(seed in any::<u64>(), count in 1usize..8) {
        let map = two_lane();
        let cfg = ring_config(count, [20.0, 30.0], [40.0, 60.0]);
        let scenarios = generate_scenarios(&map, std::slice::from_ref(&cfg), 3, seed, 0.2, 30).unwrap();
        prop_assert_eq!(
            &scenarios,
            &generate_scenarios(&map, &[cfg], 3, seed, 0.2, 30).unwrap()
        );
        for s in &scenarios {
            prop_assert_eq!(s.agents.len(), count);
            prop_assert!((s.agents[0].state.x - 10.0).abs() < 1e-9);
            for w in s.agents.windows(2) {
                let gap = w[1].state.x - w[0].state.x;
                prop_assert!((20.0 - 1e-9..=30.0 + 1e-9).contains(&gap), "gap {}", gap);
            }
            for a in &s.agents {
                prop_assert!(a.state.v >= 40.0 / 3.6 - 1e-12 && a.state.v <= 60.0 / 3.6 + 1e-12);
            }
            s.validate().unwrap();
        }
    }

    #[test]
    fn database_round_trips(seed in any::<u64>(), n in 0usize..4) {
        let map = two_lane();
        let scenarios = generate_scenarios(&map, &[ring_config(3, [15.0, 40.0], [0.0, 80.0])], n, seed, 0.1, 50).unwrap();
        let db = drivebench::scenario::ScenarioDatabase {
            seed,
            provenance: format!("seed {seed}"),
            sets: [("only".to_string(), scenarios)].into(),
        };
        let mut bytes = Vec::new();
        db_save(&db, &mut bytes).unwrap();
        let back = db_load(&mut bytes.as_slice()).unwrap();
        prop_assert_eq!(&back, &db);
        let mut again = Vec::new();
        db_save(&back, &mut again).unwrap();
        prop_assert_eq!(again, bytes);
    }
}

#[test]
fn idm_platoon_never_exceeds_v0() {
    let map = straight_map(1, 3000.0);
    let p = IdmParams::replay_set(2.0);
    let mut world = World::new(map.clone(), 0.0);
    for i in 0..5u32 {
        let spec = BehaviorSpec::idm(&p);
        world
            .add_agent(agent_on(
                &map,
                i + 1,
                1,
                10.0 + 8.0 * i as f64,
                0.5 * i as f64,
                &spec,
            ))
            .unwrap();
    }
    for _ in 0..300 {
        world.step(0.1).unwrap();
        assert!(world
            .agents()
            .iter()
            .all(|a| a.state.v <= p.v0 + 1e-9 && a.state.v >= 0.0));
    }
}

#[test]
fn constant_velocity_agent_moves_in_a_straight_line() {
    let map = straight_map(1, 500.0);
    let mut world = World::new(map.clone(), 0.0);
    world
        .add_agent(agent_on(
            &map,
            1,
            1,
            0.0,
            7.0,
            &BehaviorSpec::new(BehaviorKind::ConstVel),
        ))
        .unwrap();
    for _ in 0..50 {
        world.step(0.2).unwrap();
    }
    let s = world.agents()[0].state;
    assert!((s.x - 70.0).abs() < 1e-9, "{}", s.x);
    assert_eq!(s.y, 0.0);
    assert_eq!(world.step_index, 50);
}
