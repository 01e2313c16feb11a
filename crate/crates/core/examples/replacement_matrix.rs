//! Prints the collision matrix of the zip-merge agent-replacement replay:
//! one row per replaced set, one column per (model, IDM parameter set).
//!
//! `cargo run --release --example replacement_matrix [mcts_iterations]`

use drivebench::behaviors::{BehaviorKind, BehaviorSpec, IdmParams};
use drivebench::benchmark::{run_scenario, BenchmarkConfig, Criterion, TerminalReason};
use drivebench::scenario::synthetic::{replacement_scenario, REPLACED_SETS};
use drivebench::world::PredictionConfig;

fn main() {
    let iterations: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(50.0);
    let mut cfg = BenchmarkConfig::new("replay", None);
    cfg.criteria = vec![Criterion::CollisionAny];

    print!("{:<4} {:<16}", "set", "replaced");
    for model in ["IDM", "MOBIL", "MCTS"] {
        print!(" | {model:<11}");
    }
    println!();
    for (name, ids) in REPLACED_SETS {
        let list: Vec<String> = ids.iter().map(u32::to_string).collect();
        print!("{name:<4} {:<16}", list.join(","));
        for model in [
            BehaviorKind::Idm,
            BehaviorKind::Mobil,
            BehaviorKind::MctsSingle,
        ] {
            print!(" |");
            for s0 in [2.0, 3.0, 4.0, 5.0] {
                let idm = BehaviorSpec::idm(&IdmParams::replay_set(s0));
                // a pure lane follower cannot leave the merging lane
                if model == BehaviorKind::Idm && ids.iter().any(|id| *id == 66 || *id == 68) {
                    print!("  -");
                    continue;
                }
                let spec = match model {
                    BehaviorKind::MctsSingle => BehaviorSpec::new(model)
                        .with("iterations", iterations)
                        .with("horizon", 5.0)
                        .with_prediction(PredictionConfig::new(idm)),
                    _ => BehaviorSpec { kind: model, ..idm },
                };
                let scenario = replacement_scenario(ids, &spec).expect("valid replay");
                let r = run_scenario(&scenario, &cfg);
                let mark = if r.terminal_reason == TerminalReason::Collision {
                    "X"
                } else {
                    "o"
                };
                print!("  {mark}");
            }
        }
        println!();
    }
    println!("X collision, o none, - not applicable");
}
