//! `drivebench` command-line front end.
//!
//! Exit codes: 0 ok, 2 user or config error, 3 data or version error,
//! 4 internal contract violation. `BB_LOG` sets the log filter.

mod svg;

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use drivebench::benchmark::{
    parse_benchmark_configs, read_results_csv, run_benchmark, run_scenario_with, summarize,
    write_results_csv, BenchmarkConfig, BenchmarkError, Summary,
};
use drivebench::scenario::{db_load, db_save, GeneratorConfig, MapSource, ScenarioError};
use thiserror::Error;

use svg::{render_chart, render_world, Snapshot, TRAIL};

#[derive(Parser)]
#[command(
    name = "drivebench",
    version,
    about = "Driving behavior simulation and benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario database from a generator config
    GenDb {
        /// Generator config (TOML); its map path is relative to this file
        #[arg(long)]
        config: PathBuf,
        /// Output database file
        #[arg(long)]
        out: PathBuf,
        /// Generation seed; defaults to the seed in the config
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run benchmark configs over every scenario of a database
    Run {
        /// Scenario database
        #[arg(long)]
        db: PathBuf,
        /// Benchmark config file (TOML, one [[config]] per entry)
        #[arg(long)]
        bench: PathBuf,
        /// Worker threads
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Results CSV
        #[arg(long)]
        out: PathBuf,
    },
    /// Step one scenario and write SVG frames
    Replay {
        /// Scenario database
        #[arg(long)]
        db: PathBuf,
        /// Scenario index, counted over all sets in name order
        #[arg(long)]
        index: usize,
        /// Benchmark config name to run; the stored models when absent
        #[arg(long, requires = "bench")]
        config: Option<String>,
        /// Benchmark config file holding `--config`
        #[arg(long)]
        bench: Option<PathBuf>,
        /// Output directory for frame_<step>.svg files
        #[arg(long)]
        out_dir: PathBuf,
        /// Write a frame every k steps (and at the final step)
        #[arg(long, default_value_t = 1)]
        every: u64,
    },
    /// Draw outcome rates from a results CSV as a grouped bar chart
    Chart {
        /// Results CSV written by `run`
        #[arg(long)]
        results: PathBuf,
        /// Output SVG
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Version { .. } | ScenarioError::Parse(_) | ScenarioError::MapHash(_) => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<BenchmarkError> for CliError {
    fn from(e: BenchmarkError) -> Self {
        match e {
            BenchmarkError::Pool(_) => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn read_text(path: &Path, what: &str) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn load_db(path: &Path) -> Result<drivebench::scenario::ScenarioDatabase, CliError> {
    let mut file = fs::File::open(path)
        .map_err(|e| CliError::Usage(format!("cannot open database {}: {e}", path.display())))?;
    Ok(db_load(&mut file)?)
}

fn cmd_gen_db(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let cfg = GeneratorConfig::from_toml(&read_text(config, "config")?)?;
    let map_path = config.parent().unwrap_or(Path::new(".")).join(&cfg.map);
    let text = fs::read_to_string(&map_path)
        .map_err(|_| CliError::Usage(format!("map not found: {}", map_path.display())))?;
    let map = Arc::new(MapSource::from_text(cfg.map.clone(), text)?);
    let db = cfg.generate(map, seed.unwrap_or(cfg.seed))?;
    let mut bytes = Vec::new();
    db_save(&db, &mut bytes)?;
    write_file(out, &bytes)?;
    println!("{db}");
    Ok(())
}

fn print_summary(rows: &[Summary]) {
    println!(
        "{:<16} {:<16} {:>5} {:>8} {:>10} {:>10} {:>8} {:>7} {:>12}",
        "set",
        "config",
        "runs",
        "success",
        "collision",
        "max_steps",
        "off_road",
        "error",
        "steps_to_goal"
    );
    for s in rows {
        let steps = s
            .mean_steps_to_goal
            .map_or_else(|| "-".to_string(), |m| format!("{m:.1}"));
        println!(
            "{:<16} {:<16} {:>5} {:>7.1}% {:>9.1}% {:>9.1}% {:>7.1}% {:>6.1}% {:>12}",
            s.scenario_set,
            s.config_name,
            s.runs,
            s.success,
            s.collision,
            s.max_steps,
            s.off_road,
            s.error,
            steps
        );
    }
}

fn cmd_run(db: &Path, bench: &Path, workers: usize, out: &Path) -> Result<(), CliError> {
    let cfgs = parse_benchmark_configs(&read_text(bench, "benchmark config")?)?;
    let db = load_db(db)?;
    log::info!(
        "running {} scenarios x {} configs on {workers} workers",
        db.scenario_count(),
        cfgs.len()
    );
    let records = run_benchmark(&db, &cfgs, workers)?;
    for r in records.iter().filter(|r| r.error.is_some()) {
        log::warn!(
            "{}[{}] {}: {}",
            r.scenario_set,
            r.scenario_index,
            r.config_name,
            r.error.as_deref().unwrap_or_default()
        );
    }
    let mut buf = Vec::new();
    write_results_csv(&records, &mut buf)
        .map_err(|e| CliError::Internal(format!("csv encoding failed: {e}")))?;
    write_file(out, &buf)?;
    if records.is_empty() {
        println!("database holds no scenarios");
    } else {
        print_summary(&summarize(&records)?);
    }
    Ok(())
}

fn cmd_replay(
    db: &Path,
    index: usize,
    config: Option<&str>,
    bench: Option<&Path>,
    out_dir: &Path,
    every: u64,
) -> Result<(), CliError> {
    if every == 0 {
        return Err(CliError::Usage("--every must be >= 1".into()));
    }
    let cfg = match (config, bench) {
        (Some(name), Some(path)) => parse_benchmark_configs(&read_text(path, "benchmark config")?)?
            .into_iter()
            .find(|c| c.name == name)
            .ok_or_else(|| {
                CliError::Usage(format!("no config named '{name}' in {}", path.display()))
            })?,
        _ => BenchmarkConfig::new("stored", None),
    };
    let db = load_db(db)?;
    let total = db.scenario_count();
    let (set, i, scenario) = db.iter().nth(index).ok_or_else(|| {
        CliError::Usage(format!(
            "index {index} out of range (database has {total} scenarios)"
        ))
    })?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out_dir.display())))?;

    let map = &scenario.map.map;
    let goal = scenario.controlled_agent().map(|a| &a.goal);
    let mut history: VecDeque<Snapshot> = VecDeque::with_capacity(TRAIL);
    let mut last: Option<Snapshot> = None;
    let mut written = Vec::new();
    let mut failed = None;
    let record = run_scenario_with(scenario, &cfg, |world| {
        if failed.is_some() {
            return;
        }
        let snap = Snapshot::of(world);
        if snap.step.is_multiple_of(every) {
            let svg = render_world(
                map,
                goal,
                scenario.controlled,
                history.make_contiguous(),
                &snap,
            );
            let path = out_dir.join(format!("frame_{:05}.svg", snap.step));
            match fs::write(&path, svg) {
                Ok(()) => written.push(snap.step),
                Err(e) => failed = Some(format!("cannot write {}: {e}", path.display())),
            }
        }
        if let Some(prev) = last.replace(snap) {
            if history.len() == TRAIL {
                history.pop_front();
            }
            history.push_back(prev);
        }
    });
    if let Some(msg) = failed {
        return Err(CliError::Usage(msg));
    }
    let last = last.ok_or_else(|| CliError::Internal("scenario produced no frames".into()))?;
    if written.last() != Some(&last.step) {
        let svg = render_world(
            map,
            goal,
            scenario.controlled,
            history.make_contiguous(),
            &last,
        );
        write_file(
            &out_dir.join(format!("frame_{:05}.svg", last.step)),
            svg.as_bytes(),
        )?;
        written.push(last.step);
    }
    println!(
        "{set}[{i}] {}: {} after {} steps, {} frames",
        cfg.name,
        record.terminal_reason,
        record.steps,
        written.len()
    );
    if let Some(e) = record.error {
        return Err(CliError::Internal(format!("simulation failed: {e}")));
    }
    Ok(())
}

fn cmd_chart(results: &Path, out: &Path) -> Result<(), CliError> {
    let records = read_results_csv(&read_text(results, "results")?)?;
    let summaries = summarize(&records)?;
    write_file(out, render_chart(&summaries).as_bytes())?;
    println!("{} bar groups", summaries.len());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BB_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenDb { config, out, seed } => cmd_gen_db(config, out, *seed),
        Command::Run {
            db,
            bench,
            workers,
            out,
        } => cmd_run(db, bench, *workers, out),
        Command::Replay {
            db,
            index,
            config,
            bench,
            out_dir,
            every,
        } => cmd_replay(
            db,
            *index,
            config.as_deref(),
            bench.as_deref(),
            out_dir,
            *every,
        ),
        Command::Chart { results, out } => cmd_chart(results, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
