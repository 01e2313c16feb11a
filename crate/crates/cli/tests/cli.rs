use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drivebench::benchmark::{read_results_csv, summarize};
use drivebench::scenario::db_load;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_drivebench"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn two_lane_map() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/two_lane.map")
}

/// Generator config with two sets of `n` scenarios each.
fn write_generator(dir: &Path, n: usize, map: &Path) -> PathBuf {
    let text = format!(
        r#"map = "{}"
seed = 3
dt = 0.2
horizon = 40

[[set]]
name = "a"
count = {n}

[[set]]
name = "b"
count = {n}
prediction_scale = {{ tau = 0.5 }}

[[source_sink]]
source = 2
sink = 2
distance_range = [20.0, 30.0]
velocity_range_kmh = [40.0, 60.0]
count = [2, 3]
behavior = {{ kind = "IDM", tau = 3.0 }}
goal = {{ type = "sink" }}

[[source_sink]]
source = 1
sink = 1
distance_range = [20.0, 30.0]
velocity_range_kmh = [40.0, 60.0]
count = [3, 3]
start_s = 15.0
behavior = {{ kind = "IDM", tau = 3.0 }}
goal = {{ type = "sink" }}

[source_sink.controlled]
index = 1
behavior = {{ kind = "MOBIL" }}
goal = {{ type = "lane", lane = 2 }}
prediction = {{ kind = "IDM", tau = 3.0 }}
"#,
        map.display()
    );
    let path = dir.join("gen.toml");
    fs::write(&path, text).unwrap();
    path
}

fn gen_db(dir: &Path, n: usize) -> PathBuf {
    let cfg = write_generator(dir, n, &two_lane_map());
    let out = dir.join("s.db");
    let o = run(&["gen-db", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const BENCH: &str = r#"
[[config]]
name = "idm"
behavior = { kind = "IDM" }

[[config]]
name = "mobil"
behavior = { kind = "MOBIL" }
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn strip_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').unwrap().0)
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn help_exits_zero_for_every_command() {
    for args in [
        vec!["--help"],
        vec!["gen-db", "--help"],
        vec!["run", "--help"],
        vec!["replay", "--help"],
        vec!["chart", "--help"],
    ] {
        let o = run(&args);
        assert!(o.status.success(), "{args:?}");
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn gen_db_writes_requested_count() {
    let dir = TempDir::new().unwrap();
    let db = gen_db(dir.path(), 5);
    let db = db_load(&mut fs::File::open(db).unwrap()).unwrap();
    assert_eq!(db.scenario_count(), 10);
    assert_eq!(db.sets.keys().collect::<Vec<_>>(), ["a", "b"]);
}

#[test]
fn gen_db_is_byte_identical_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_generator(dir.path(), 3, &two_lane_map());
    let (a, b, c) = (
        dir.path().join("1.db"),
        dir.path().join("2.db"),
        dir.path().join("3.db"),
    );
    for (out, seed) in [(&a, "11"), (&b, "11"), (&c, "12")] {
        let o = run(&[
            "gen-db",
            "--config",
            s(&cfg),
            "--out",
            s(out),
            "--seed",
            seed,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn gen_db_missing_map_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_generator(dir.path(), 1, &dir.path().join("nowhere.map"));
    let o = run(&[
        "gen-db",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("x.db")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("map not found"), "{}", stderr(&o));
}

#[test]
fn run_writes_one_row_per_scenario_and_config() {
    let dir = TempDir::new().unwrap();
    let db = gen_db(dir.path(), 2);
    let bench = write(dir.path(), "bench.toml", BENCH);
    let out = dir.path().join("r.csv");
    let o = run(&[
        "run",
        "--db",
        s(&db),
        "--bench",
        s(&bench),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    // header + 4 scenarios x 2 configs
    assert_eq!(text.lines().count(), 9);
    assert!(String::from_utf8_lossy(&o.stdout).contains("success"));
}

#[test]
fn run_is_independent_of_worker_count() {
    let dir = TempDir::new().unwrap();
    let db = gen_db(dir.path(), 3);
    let bench = write(dir.path(), "bench.toml", BENCH);
    let mut csvs = Vec::new();
    for w in ["1", "4"] {
        let out = dir.path().join(format!("r{w}.csv"));
        let o = run(&[
            "run",
            "--db",
            s(&db),
            "--bench",
            s(&bench),
            "--workers",
            w,
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        csvs.push(strip_wall_time(&fs::read_to_string(&out).unwrap()));
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn run_rejects_malformed_bench() {
    let dir = TempDir::new().unwrap();
    let db = gen_db(dir.path(), 1);
    let bench = write(dir.path(), "bench.toml", "[[config]]\nname = 3\n");
    let o = run(&[
        "run",
        "--db",
        s(&db),
        "--bench",
        s(&bench),
        "--out",
        s(&dir.path().join("r.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn run_rejects_future_database_version() {
    let dir = TempDir::new().unwrap();
    let db = gen_db(dir.path(), 1);
    let mut bytes = fs::read(&db).unwrap();
    bytes[4..6].copy_from_slice(&99u16.to_le_bytes());
    fs::write(&db, bytes).unwrap();
    let bench = write(dir.path(), "bench.toml", BENCH);
    let o = run(&[
        "run",
        "--db",
        s(&db),
        "--bench",
        s(&bench),
        "--out",
        s(&dir.path().join("r.csv")),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

fn replay(dir: &Path, db: &Path, index: &str, out: &str) -> Output {
    let bench = write(
        dir,
        "replay.toml",
        "[[config]]\nname = \"cruise\"\nbehavior = { kind = \"IDM\" }\nmax_steps = 30\nterminate_on = [\"collision\"]\n",
    );
    run(&[
        "replay",
        "--db",
        s(db),
        "--index",
        index,
        "--config",
        "cruise",
        "--bench",
        s(&bench),
        "--out-dir",
        s(&dir.join(out)),
        "--every",
        "10",
    ])
}

fn frames(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn replay_writes_every_kth_frame_and_the_last() {
    let dir = TempDir::new().unwrap();
    let db = gen_db(dir.path(), 1);
    let o = replay(dir.path(), &db, "0", "f");
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("MaxSteps after 30 steps"));
    assert_eq!(
        frames(&dir.path().join("f")),
        [
            "frame_00000.svg",
            "frame_00010.svg",
            "frame_00020.svg",
            "frame_00030.svg"
        ]
    );
}

#[test]
fn replay_frames_hold_one_polygon_per_agent_and_pose() {
    let dir = TempDir::new().unwrap();
    let db = gen_db(dir.path(), 1);
    assert!(replay(dir.path(), &db, "1", "f").status.success());
    let loaded = db_load(&mut fs::File::open(&db).unwrap()).unwrap();
    let (_, _, scenario) = loaded.iter().nth(1).unwrap();
    let agents = scenario.agents.len();
    let svg = fs::read_to_string(dir.path().join("f/frame_00030.svg")).unwrap();
    assert_eq!(svg.matches("<polygon class=\"agent\"").count(), agents);
    // the last four steps are drawn as past poses
    assert_eq!(svg.matches("<polygon class=\"past\"").count(), 4 * agents);
    for a in &scenario.agents {
        let tag = format!("data-agent=\"{}\"", a.id.0);
        assert_eq!(svg.matches(&tag).count(), 5);
    }
    let first = fs::read_to_string(dir.path().join("f/frame_00000.svg")).unwrap();
    assert_eq!(first.matches("<polygon").count(), agents);
    assert_eq!(first.matches("class=\"goal\"").count(), 1);
}

#[test]
fn replay_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let db = gen_db(dir.path(), 1);
    assert!(replay(dir.path(), &db, "0", "x").status.success());
    assert!(replay(dir.path(), &db, "0", "y").status.success());
    for name in frames(&dir.path().join("x")) {
        assert_eq!(
            fs::read(dir.path().join("x").join(&name)).unwrap(),
            fs::read(dir.path().join("y").join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn replay_rejects_out_of_range_index() {
    let dir = TempDir::new().unwrap();
    let db = gen_db(dir.path(), 1);
    let o = replay(dir.path(), &db, "2", "f");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("out of range"));
}

#[test]
fn chart_draws_one_group_per_set_and_config() {
    let dir = TempDir::new().unwrap();
    let db = gen_db(dir.path(), 2);
    let bench = write(dir.path(), "bench.toml", BENCH);
    let csv = dir.path().join("r.csv");
    assert!(run(&[
        "run",
        "--db",
        s(&db),
        "--bench",
        s(&bench),
        "--out",
        s(&csv)
    ])
    .status
    .success());
    let svg_path = dir.path().join("c.svg");
    let o = run(&["chart", "--results", s(&csv), "--out", s(&svg_path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(&svg_path).unwrap();
    assert_eq!(svg.matches("<g class=\"group\"").count(), 4);

    let summaries =
        summarize(&read_results_csv(&fs::read_to_string(&csv).unwrap()).unwrap()).unwrap();
    for sm in &summaries {
        let head = format!(
            "<g class=\"group\" data-set=\"{}\" data-config=\"{}\">",
            sm.scenario_set, sm.config_name
        );
        let group = svg
            .split(&head)
            .nth(1)
            .unwrap()
            .split("</g>")
            .next()
            .unwrap();
        for (class, rate) in [
            ("success", sm.success),
            ("collision", sm.collision),
            ("max_steps", sm.max_steps),
        ] {
            let attr = format!("class=\"{class}\" data-rate=\"");
            let value: f64 = group
                .split(&attr)
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap()
                .parse()
                .unwrap();
            assert_eq!(value, rate, "{class}");
        }
    }
}

#[test]
fn chart_rejects_empty_results() {
    let dir = TempDir::new().unwrap();
    let csv = write(dir.path(), "r.csv", "");
    let o = run(&[
        "chart",
        "--results",
        s(&csv),
        "--out",
        s(&dir.path().join("c.svg")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn chart_names_a_missing_column() {
    let dir = TempDir::new().unwrap();
    let csv = write(
        dir.path(),
        "r.csv",
        "scenario_set,scenario_index,config_name,seed,terminal_reason,steps,collision,goal_reached,goal_distance\n",
    );
    let o = run(&[
        "chart",
        "--results",
        s(&csv),
        "--out",
        s(&dir.path().join("c.svg")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("wall_time_s"), "{}", stderr(&o));
}
