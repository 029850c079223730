//! Scenario generation, seeded trials, and the scalability matrix.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::ControllerParams;
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec2};
use crate::metrics::{self, CostAccumulator, MetricSample};
use crate::physics::{step_control_cycle, StepConfig};
use crate::rng::SimRng;
use crate::world::{ArenaConfig, Bollard, RobotBody, World, BOLLARD_RADIUS, DEFAULT_ARENA_SIDE, ROBOT_RADIUS};

/// Rejection-sampling budget per robot.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;
/// Extra clearance between initially placed bodies, in cm.
pub const PLACEMENT_MARGIN: f64 = 0.1;
/// Bollards sit on a circle of this fraction of the arena side.
pub const BOLLARD_CIRCLE_FRACTION: f64 = 0.4;
/// Checkpoints (seconds) reported by the validation matrix.
pub const VALIDATION_CHECKPOINTS_S: [f64; 6] = [300.0, 600.0, 900.0, 1200.0, 1800.0, 2400.0];
/// `pc` at or above which a trial is considered to have reached steady state.
pub const STEADY_STATE_PC: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of groups.
    pub g: usize,
    pub n_per_group: usize,
    pub arena_side: f64,
    pub bollards_enabled: bool,
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// Synthesis setup: 3 groups of 25 robots, bollards on, 2400 s.
    fn default() -> Self {
        Self {
            g: 3,
            n_per_group: 25,
            arena_side: DEFAULT_ARENA_SIDE,
            bollards_enabled: true,
            duration_s: 2400.0,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn robot_count(&self) -> usize {
        self.g * self.n_per_group
    }

    pub fn validate(&self) -> Result<()> {
        if self.g == 0 {
            return Err(Error::InvalidScenario("g must be at least 1".into()));
        }
        if self.n_per_group == 0 {
            return Err(Error::InvalidScenario("n_per_group must be at least 1".into()));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::InvalidScenario("duration_s must be positive".into()));
        }
        ArenaConfig::new(self.arena_side)?;
        let footprint = self.robot_count() as f64 * (2.0 * ROBOT_RADIUS).powi(2);
        if footprint >= 0.5 * self.arena_side * self.arena_side {
            return Err(Error::InvalidScenario(format!(
                "{} robots do not fit a {} cm arena",
                self.robot_count(),
                self.arena_side
            )));
        }
        Ok(())
    }
}

/// Bollard centers: evenly spaced on a circle around the arena center,
/// the first one due east.
pub fn bollard_positions(g: usize, arena_side: f64) -> Vec<Vec2> {
    let center = Vec2::new(arena_side / 2.0, arena_side / 2.0);
    let radius = BOLLARD_CIRCLE_FRACTION * arena_side;
    (0..g)
        .map(|k| center + Vec2::from_angle(TAU * k as f64 / g as f64) * radius)
        .collect()
}

/// Builds the initial world for a scenario.
///
/// Robots are placed one at a time by rejection sampling: a candidate
/// center is drawn uniformly in `[r, side - r]²` and kept if it clears every
/// body already placed by `PLACEMENT_MARGIN`. The heading is then drawn
/// uniformly in `[-π, π)`. Robot `i` belongs to group `i / n_per_group`.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<World> {
    cfg.validate()?;
    let arena = ArenaConfig::new(cfg.arena_side)?;
    let bollards: Vec<Bollard> = if cfg.bollards_enabled {
        bollard_positions(cfg.g, cfg.arena_side)
            .into_iter()
            .enumerate()
            .map(|(k, p)| Bollard::new(k, p))
            .collect()
    } else {
        Vec::new()
    };

    let mut rng = SimRng::new(cfg.seed);
    let lo = ROBOT_RADIUS;
    let hi = cfg.arena_side - ROBOT_RADIUS;
    let robot_gap = 2.0 * ROBOT_RADIUS + PLACEMENT_MARGIN;
    let bollard_gap = ROBOT_RADIUS + BOLLARD_RADIUS + PLACEMENT_MARGIN;
    let mut robots: Vec<RobotBody> = Vec::with_capacity(cfg.robot_count());
    for id in 0..cfg.robot_count() {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let candidate = Vec2::new(rng.uniform(lo, hi), rng.uniform(lo, hi));
            let clear = robots.iter().all(|r| r.position().distance(candidate) >= robot_gap)
                && bollards.iter().all(|b| b.position.distance(candidate) >= bollard_gap);
            if clear {
                placed = Some(candidate);
                break;
            }
        }
        let position = placed.ok_or(Error::Placement {
            robot: id,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?;
        let orientation = rng.uniform(-PI, PI);
        robots.push(RobotBody::new(
            id,
            id / cfg.n_per_group,
            Pose {
                position,
                orientation,
            },
        ));
    }
    World::new(arena, robots, bollards, cfg.g)
}

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub config: ScenarioConfig,
    pub controller: ControllerParams,
    /// `U = Σ t·d(t)` over the whole run.
    pub final_cost: f64,
    /// One sample per control cycle, ticks `1..=T`.
    pub series: Vec<MetricSample>,
    pub runtime: Duration,
}

impl TrialResult {
    /// Sample recorded at the end of the cycle closest to `seconds`.
    pub fn sample_at(&self, seconds: f64, step: &StepConfig) -> Option<&MetricSample> {
        let tick = step.cycles_for(seconds);
        tick.checked_sub(1).and_then(|i| self.series.get(i as usize))
    }

    /// Running sum of `u` over the series.
    pub fn cumulative_u(&self) -> f64 {
        self.series.iter().map(|s| s.u).sum()
    }
}

pub fn run_trial(cfg: &ScenarioConfig, controller: &ControllerParams) -> Result<TrialResult> {
    run_trial_with(cfg, controller, &StepConfig::default(), |_| {})
}

/// Runs a full trial. `observe` sees the initial world and the world after
/// every control cycle.
pub fn run_trial_with(
    cfg: &ScenarioConfig,
    controller: &ControllerParams,
    step: &StepConfig,
    mut observe: impl FnMut(&World),
) -> Result<TrialResult> {
    step.validate()?;
    let started = Instant::now();
    let mut world = generate_scenario(cfg)?;
    observe(&world);
    let cycles = step.cycles_for(cfg.duration_s);
    let mut series = Vec::with_capacity(cycles as usize);
    let mut cost = CostAccumulator::new();
    for _ in 0..cycles {
        step_control_cycle(&mut world, controller, step)?;
        observe(&world);
        let sample = metrics::sample(&world)?;
        cost.accumulate(world.tick, sample.d)?;
        series.push(sample);
    }
    Ok(TrialResult {
        config: cfg.clone(),
        controller: *controller,
        final_cost: cost.total(),
        series,
        runtime: started.elapsed(),
    })
}

/// Cost-only trial: same dynamics as [`run_trial_with`] but tracks just
/// `d` and `U`.
pub fn trial_cost(cfg: &ScenarioConfig, controller: &ControllerParams, step: &StepConfig) -> Result<f64> {
    step.validate()?;
    let mut world = generate_scenario(cfg)?;
    let mut cost = CostAccumulator::new();
    for _ in 0..step.cycles_for(cfg.duration_s) {
        step_control_cycle(&mut world, controller, step)?;
        cost.accumulate(world.tick, metrics::group_dispersion(&world)?)?;
    }
    Ok(cost.total())
}

/// Builds a rayon pool with `jobs` workers (0 = available parallelism).
pub fn worker_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationPlan {
    pub groups: Vec<usize>,
    pub per_group: Vec<usize>,
    pub bollards: Vec<bool>,
    pub arena_side: f64,
    pub duration_s: f64,
    pub checkpoints_s: Vec<f64>,
    pub trials_per_config: usize,
    /// Trial `j` of every configuration uses seed `base_seed + j`.
    pub base_seed: u64,
}

impl ValidationPlan {
    /// g ∈ {3, 5} × n ∈ {10, 15, 20, 25, 30} × bollards on/off, 2400 s each.
    pub fn full(base_seed: u64, trials_per_config: usize) -> Self {
        Self {
            groups: vec![3, 5],
            per_group: vec![10, 15, 20, 25, 30],
            bollards: vec![true, false],
            arena_side: DEFAULT_ARENA_SIDE,
            duration_s: 2400.0,
            checkpoints_s: VALIDATION_CHECKPOINTS_S.to_vec(),
            trials_per_config,
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_config == 0 {
            return Err(Error::Validation("trials_per_config must be at least 1".into()));
        }
        if self.groups.is_empty() || self.per_group.is_empty() || self.bollards.is_empty() {
            return Err(Error::Validation("validation plan has an empty axis".into()));
        }
        if let Some(c) = self
            .checkpoints_s
            .iter()
            .find(|&&c| !(c > 0.0 && c <= self.duration_s))
        {
            return Err(Error::Validation(format!(
                "checkpoint {c} s outside (0, {}] s",
                self.duration_s
            )));
        }
        Ok(())
    }

    /// Every trial configuration in report order.
    pub fn configs(&self) -> Vec<ScenarioConfig> {
        let mut out = Vec::new();
        for &g in &self.groups {
            for &n in &self.per_group {
                for &b in &self.bollards {
                    for j in 0..self.trials_per_config {
                        out.push(ScenarioConfig {
                            g,
                            n_per_group: n,
                            arena_side: self.arena_side,
                            bollards_enabled: b,
                            duration_s: self.duration_s,
                            seed: self.base_seed + j as u64,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Metrics of one trial at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointRow {
    pub g: usize,
    pub n_per_group: usize,
    pub bollards: bool,
    pub seed: u64,
    pub checkpoint_s: f64,
    pub pc: f64,
    pub u: f64,
    pub d: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    fn of(values: &[f64]) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { mean, min, max }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub g: usize,
    pub n_per_group: usize,
    pub bollards: bool,
    pub checkpoint_s: f64,
    pub trials: usize,
    pub pc: Stats,
    pub u: Stats,
}

/// Checkpoint metrics of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialCheckpoints {
    pub config: ScenarioConfig,
    pub rows: Vec<CheckpointRow>,
}

impl TrialCheckpoints {
    /// First checkpoint whose `pc` reaches `threshold`.
    pub fn time_to_steady(&self, threshold: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.pc >= threshold).map(|r| r.checkpoint_s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    /// Sorted by `(g, n_per_group, bollards, seed)`.
    pub trials: Vec<TrialCheckpoints>,
}

type ConfigKey = (usize, usize, bool);

impl ValidationReport {
    pub fn rows(&self) -> impl Iterator<Item = &CheckpointRow> {
        self.trials.iter().flat_map(|t| &t.rows)
    }

    /// Mean/min/max of `pc` and `u` per configuration and checkpoint.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut grouped: BTreeMap<(ConfigKey, u64), Vec<&CheckpointRow>> = BTreeMap::new();
        for row in self.rows() {
            grouped
                .entry(((row.g, row.n_per_group, row.bollards), row.checkpoint_s.to_bits()))
                .or_default()
                .push(row);
        }
        grouped
            .into_iter()
            .map(|(((g, n, b), _), rows)| {
                let pcs: Vec<f64> = rows.iter().map(|r| r.pc).collect();
                let us: Vec<f64> = rows.iter().map(|r| r.u).collect();
                SummaryRow {
                    g,
                    n_per_group: n,
                    bollards: b,
                    checkpoint_s: rows[0].checkpoint_s,
                    trials: rows.len(),
                    pc: Stats::of(&pcs),
                    u: Stats::of(&us),
                }
            })
            .collect()
    }

    /// Mean time (s) to the first checkpoint with `pc ≥ threshold`, per
    /// configuration. Trials that never get there count as their full
    /// duration.
    pub fn mean_time_to_steady(&self, threshold: f64) -> BTreeMap<ConfigKey, f64> {
        let mut times: BTreeMap<ConfigKey, Vec<f64>> = BTreeMap::new();
        for t in &self.trials {
            let c = &t.config;
            times
                .entry((c.g, c.n_per_group, c.bollards_enabled))
                .or_default()
                .push(t.time_to_steady(threshold).unwrap_or(c.duration_s));
        }
        times
            .into_iter()
            .map(|(k, v)| (k, v.iter().sum::<f64>() / v.len() as f64))
            .collect()
    }
}

/// Runs every configuration of `plan` with the best controller on a pool
/// of `jobs` workers.
pub fn run_validation_matrix(plan: &ValidationPlan, jobs: usize) -> Result<ValidationReport> {
    run_validation_matrix_with(plan, &ControllerParams::BEST, &StepConfig::default(), jobs)
}

pub fn run_validation_matrix_with(
    plan: &ValidationPlan,
    controller: &ControllerParams,
    step: &StepConfig,
    jobs: usize,
) -> Result<ValidationReport> {
    plan.validate()?;
    let configs = plan.configs();
    let checkpoint_ticks: Vec<(f64, u64)> = plan
        .checkpoints_s
        .iter()
        .map(|&c| (c, step.cycles_for(c)))
        .collect();
    let pool = worker_pool(jobs)?;
    let mut trials: Vec<TrialCheckpoints> = pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| -> Result<TrialCheckpoints> {
                let result = run_trial_with(cfg, controller, step, |_| {})?;
                let rows = checkpoint_ticks
                    .iter()
                    .map(|&(seconds, tick)| {
                        let s = &result.series[tick as usize - 1];
                        CheckpointRow {
                            g: cfg.g,
                            n_per_group: cfg.n_per_group,
                            bollards: cfg.bollards_enabled,
                            seed: cfg.seed,
                            checkpoint_s: seconds,
                            pc: s.pc,
                            u: s.u,
                            d: s.d,
                        }
                    })
                    .collect();
                Ok(TrialCheckpoints {
                    config: cfg.clone(),
                    rows,
                })
            })
            .collect::<Result<_>>()
    })?;
    trials.sort_by(|a, b| {
        let key = |t: &TrialCheckpoints| (t.config.g, t.config.n_per_group, t.config.bollards_enabled, t.config.seed);
        key(a).cmp(&key(b))
    });
    Ok(ValidationReport { trials })
}
