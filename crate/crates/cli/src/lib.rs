//! Command-line front end: runs trials, the controller sweep and the
//! validation matrix, renders snapshots, and cross-checks metrics.

pub mod config;
pub mod manifest;
pub mod oracle;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use multiswarm::harness::{run_trial_with, run_validation_matrix_with, STEADY_STATE_PC};
use multiswarm::physics::StepConfig;
use multiswarm::report;
use multiswarm::synthesis::{self, grid_search, SearchOptions};
use multiswarm::{ControllerParams, World};
use serde_json::json;

use crate::config::RunConfig;
use crate::manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRIAL_SUMMARY_FILE: &str = "summary.json";
pub const FINAL_WORLD_FILE: &str = "final_world.json";
pub const RUNS_FILE: &str = "runs.csv";
pub const HEATMAP_FILE: &str = "heatmap.csv";
pub const BEST_FILE: &str = "best.json";
pub const VALIDATION_FILE: &str = "validation.csv";
pub const VALIDATION_SUMMARY_FILE: &str = "validation_summary.csv";
pub const STEADY_FILE: &str = "time_to_steady.csv";

#[derive(Debug, Parser)]
#[command(name = "multiswarm", version, about = "Multitask self-aggregation simulator")]
struct Cli {
    /// Run seed; base seed for multi-run commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    #[arg(long, global = true, default_value = "multiswarm-out")]
    out_dir: PathBuf,
    /// JSON config file, or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    groups: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    per_group: Option<u64>,
    #[arg(long, conflicts_with = "no_bollards")]
    bollards: bool,
    #[arg(long)]
    no_bollards: bool,
    /// Arena side (cm).
    #[arg(long)]
    arena_side: Option<f64>,
    /// Simulated duration (s).
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One seeded trial: metrics CSV, summary, optional snapshots.
    Trial {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Keep every N-th cycle in the metrics CSV.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        sample_every: Option<u64>,
        /// Snapshot times (s), comma separated.
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
        /// Six normalized wheel velocities, e.g. "[-0.7,-1.0,1.0,-1.0,-0.7,-1.0]".
        #[arg(long)]
        controller: Option<String>,
    },
    /// Sweep the other-group response; resumes from the runs file in the out dir.
    GridSearch {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Axis spacing; must divide 2.
        #[arg(long)]
        axis_step: Option<f64>,
        /// Runs per cell.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        runs: Option<u64>,
        /// Stop after this many newly computed cells.
        #[arg(long)]
        max_cells: Option<usize>,
    },
    /// Best controller across groups, sizes and bollard settings.
    Validate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        groups: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        per_group: Option<Vec<usize>>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<f64>>,
    },
    /// World JSON to SVG.
    Render {
        input: PathBuf,
        /// Output file (default: <out-dir>/<input stem>.svg).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the metrics of a world JSON against brute-force oracles.
    Oracle { input: PathBuf },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, &argv) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn run(cli: Cli, argv: &[String]) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(Failure::Usage)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
    }
    let jobs = cli.jobs.map_or(0, |j| j as usize);
    match cli.command {
        Command::Trial { scenario, sample_every, snapshots, controller } => {
            apply_scenario(&mut cfg, &scenario);
            if let Some(n) = sample_every {
                cfg.sample_every = n as usize;
            }
            if let Some(s) = snapshots {
                cfg.snapshots_s = s;
            }
            if let Some(text) = controller {
                let c: ControllerParams = text.parse().map_err(|e| Failure::Usage(format!("--controller: {e}")))?;
                cfg.controller = c.values();
            }
            trial(&cfg, &cli.out_dir, argv)
        }
        Command::GridSearch { scenario, axis_step, runs, max_cells } => {
            apply_scenario(&mut cfg, &scenario);
            if let Some(step) = axis_step {
                cfg.grid.axis_values = synthesis::axis(step).map_err(|e| Failure::Usage(format!("--axis-step: {e}")))?;
            }
            if let Some(r) = runs {
                cfg.grid.runs_per_cell = r as usize;
            }
            if max_cells.is_some() {
                cfg.grid.max_new_cells = max_cells;
            }
            grid(&cfg, jobs, &cli.out_dir, argv)
        }
        Command::Validate { trials, groups, per_group, duration, checkpoints } => {
            if let Some(t) = trials {
                cfg.validation.trials_per_config = t as usize;
            }
            if let Some(g) = groups {
                cfg.validation.groups = g;
            }
            if let Some(n) = per_group {
                cfg.validation.per_group = n;
            }
            if let Some(d) = duration {
                cfg.scenario.duration_s = d;
            }
            if let Some(c) = checkpoints {
                cfg.validation.checkpoints_s = c;
            }
            validate(&cfg, jobs, &cli.out_dir, argv)
        }
        Command::Render { input, output } => render(&cfg, &input, output, &cli.out_dir, argv),
        Command::Oracle { input } => oracle_check(&input),
    }
}

fn apply_scenario(cfg: &mut RunConfig, args: &ScenarioArgs) {
    let s = &mut cfg.scenario;
    if let Some(g) = args.groups {
        s.g = g as usize;
    }
    if let Some(n) = args.per_group {
        s.n_per_group = n as usize;
    }
    if args.bollards {
        s.bollards_enabled = true;
    }
    if args.no_bollards {
        s.bollards_enabled = false;
    }
    if let Some(a) = args.arena_side {
        s.arena_side = a;
    }
    if let Some(d) = args.duration {
        s.duration_s = d;
    }
}

fn prepare_out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_artifact(dir: &Path, name: &str, contents: &str, manifest: &mut RunManifest) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
    manifest.artifacts.push(name.to_owned());
    Ok(())
}

fn snapshot_name(seconds: f64) -> String {
    format!("snapshot_{seconds}s.svg")
}

fn trial(cfg: &RunConfig, out: &Path, argv: &[String]) -> Result<(), Failure> {
    let started = Utc::now();
    let scenario = &cfg.scenario;
    scenario.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let controller = cfg.controller().map_err(Failure::Usage)?;
    if cfg.sample_every == 0 {
        return Err(Failure::Usage("sample_every must be at least 1".into()));
    }
    if let Some(s) = cfg.snapshots_s.iter().find(|&&s| !(0.0..=scenario.duration_s).contains(&s)) {
        return Err(Failure::Usage(format!(
            "--snapshots: {s} s outside the trial (0 to {} s)",
            scenario.duration_s
        )));
    }
    let step = StepConfig::default();
    let mut wanted: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &s in &cfg.snapshots_s {
        wanted.entry(step.cycles_for(s)).or_default().push(s);
    }
    let last_tick = step.cycles_for(scenario.duration_s);
    let mut snapshots: Vec<(String, String)> = Vec::new();
    let mut final_world = String::new();
    let result = run_trial_with(scenario, &controller, &step, |world: &World| {
        if world.tick == last_tick {
            final_world = world.to_json() + "\n";
        }
        if let Some(times) = wanted.get(&world.tick) {
            let svg = report::snapshot_svg(world);
            for &s in times {
                snapshots.push((snapshot_name(s), svg.clone()));
            }
        }
    })
    .map_err(runtime)?;

    prepare_out_dir(out)?;
    let mut manifest = RunManifest::new("trial", argv, cfg, vec![scenario.seed], started);
    write_artifact(out, METRICS_FILE, &report::trial_metrics_csv(&result, &step, cfg.sample_every), &mut manifest)?;
    let last = result.series.last();
    let summary = json!({
        "cycles": result.series.len(),
        "final_cost": result.final_cost,
        "cumulative_u": result.cumulative_u(),
        "final_d": last.map(|s| s.d),
        "final_u": last.map(|s| s.u),
        "final_pc": last.map(|s| s.pc),
        "final_lc": last.map(|s| s.lc.clone()),
    });
    write_artifact(out, TRIAL_SUMMARY_FILE, &(serde_json::to_string_pretty(&summary).map_err(runtime)? + "\n"), &mut manifest)?;
    write_artifact(out, FINAL_WORLD_FILE, &final_world, &mut manifest)?;
    for (name, svg) in &snapshots {
        write_artifact(out, name, svg, &mut manifest)?;
    }
    manifest.write(out).map_err(runtime)?;
    println!(
        "trial seed {}: {} cycles, U = {}, final pc = {}",
        scenario.seed,
        result.series.len(),
        result.final_cost,
        last.map_or(1.0, |s| s.pc)
    );
    Ok(())
}

fn grid(cfg: &RunConfig, jobs: usize, out: &Path, argv: &[String]) -> Result<(), Failure> {
    let started = Utc::now();
    let spec = cfg.grid_spec();
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    prepare_out_dir(out)?;
    let runs_path = out.join(RUNS_FILE);
    let opts = SearchOptions {
        jobs,
        results_path: Some(&runs_path),
        max_new_cells: cfg.grid.max_new_cells,
        step: StepConfig::default(),
    };
    let base = cfg.scenario.seed;
    let outcome = grid_search(&spec, base, &opts).map_err(runtime)?;
    let seeds = (0..spec.runs_per_cell as u64).map(|j| base + j).collect();
    let mut manifest = RunManifest::new("grid-search", argv, cfg, seeds, started);
    manifest.artifacts.push(RUNS_FILE.to_owned());
    write_artifact(out, HEATMAP_FILE, &report::heatmap_csv(&outcome.cells), &mut manifest)?;
    let total = spec.cells().len();
    if outcome.complete {
        let best = outcome.best().map_err(runtime)?;
        let ctrl = synthesis::best_controller(&outcome.cells, spec.fixed_prefix).map_err(runtime)?;
        let doc = json!({
            "vl2": best.vl2,
            "vr2": best.vr2,
            "mean_cost": best.mean_cost,
            "controller": ctrl.to_string(),
        });
        write_artifact(out, BEST_FILE, &(serde_json::to_string_pretty(&doc).map_err(runtime)? + "\n"), &mut manifest)?;
        println!("grid complete: {total} cells, best (vl2, vr2) = ({}, {}), controller {ctrl}", best.vl2, best.vr2);
    } else {
        println!("grid partial: {}/{total} cells done; rerun to resume", outcome.cells.len());
    }
    manifest.write(out).map_err(runtime)?;
    Ok(())
}

fn validate(cfg: &RunConfig, jobs: usize, out: &Path, argv: &[String]) -> Result<(), Failure> {
    let started = Utc::now();
    let plan = cfg.validation_plan();
    plan.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    for c in &plan.configs() {
        c.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let controller = cfg.controller().map_err(Failure::Usage)?;
    let report = run_validation_matrix_with(&plan, &controller, &StepConfig::default(), jobs).map_err(runtime)?;
    prepare_out_dir(out)?;
    let seeds = (0..plan.trials_per_config as u64).map(|j| plan.base_seed + j).collect();
    let mut manifest = RunManifest::new("validate", argv, cfg, seeds, started);
    write_artifact(out, VALIDATION_FILE, &report::validation_csv(&report), &mut manifest)?;
    write_artifact(out, VALIDATION_SUMMARY_FILE, &report::summary_csv(&report), &mut manifest)?;
    let mut steady = String::from("g,n_per_group,bollards,mean_time_to_steady_s\n");
    for ((g, n, b), t) in report.mean_time_to_steady(STEADY_STATE_PC) {
        steady.push_str(&format!("{g},{n},{b},{t}\n"));
    }
    write_artifact(out, STEADY_FILE, &steady, &mut manifest)?;
    manifest.write(out).map_err(runtime)?;
    println!("validation: {} trials written to {}", report.trials.len(), out.display());
    Ok(())
}

fn read_world(input: &Path) -> Result<World, Failure> {
    let text = fs::read_to_string(input).map_err(|e| runtime(format!("cannot read {}: {e}", input.display())))?;
    World::from_json(&text).map_err(|e| runtime(format!("{}: {e}", input.display())))
}

fn render(cfg: &RunConfig, input: &Path, output: Option<PathBuf>, out: &Path, argv: &[String]) -> Result<(), Failure> {
    let started = Utc::now();
    let world = read_world(input)?;
    let output = output.unwrap_or_else(|| {
        let stem = input.file_stem().map_or("snapshot".into(), |s| s.to_string_lossy().into_owned());
        out.join(format!("{stem}.svg"))
    });
    let dir = match output.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    prepare_out_dir(&dir)?;
    report::render_snapshot(&world, &output).map_err(runtime)?;
    let mut manifest = RunManifest::new("render", argv, cfg, Vec::new(), started);
    manifest
        .artifacts
        .push(output.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned()));
    manifest.write(&dir).map_err(runtime)?;
    println!("wrote {}", output.display());
    Ok(())
}

fn oracle_check(input: &Path) -> Result<(), Failure> {
    let world = read_world(input)?;
    let report = oracle::check_world(&world).map_err(runtime)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(runtime)?);
    if report.ok {
        Ok(())
    } else {
        Err(runtime("metrics disagree with the oracles"))
    }
}
