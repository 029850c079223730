//! Grid search over the controller's response to other-group robots.
//!
//! The first four controller parameters stay fixed; every `(vl2, vr2)` pair
//! on the axis grid is scored by the mean cost `U` over a set of seeded
//! runs. Run `j` of every cell uses seed `base_seed + j`, so all cells are
//! compared on identical initial worlds.
//!
//! Sweeps can be persisted to an append-only per-run results file
//! (`vl2,vr2,seed,U`). Completed cells are appended in grid order as soon as
//! they and all cells before them are done; a restarted sweep reloads them
//! and only runs what is missing.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::mpsc;

use rayon::prelude::*;

use crate::controller::{ControllerParams, WheelPair};
use crate::error::{Error, Result};
use crate::harness::{trial_cost, worker_pool, ScenarioConfig};
use crate::physics::StepConfig;

/// Responses to "nothing" and "same group" kept fixed during the sweep.
pub const FIXED_PREFIX: [f64; 4] = [-0.7, -1.0, 1.0, -1.0];

pub const DETAIL_HEADER: &str = "vl2,vr2,seed,U";
pub const HEATMAP_HEADER: &str = "vl2,vr2,mean_cost,ln_mean_cost,n_runs";

/// Evenly spaced values from -1 to 1 inclusive. `step` must divide 2.
pub fn axis(step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && step <= 2.0) {
        return Err(Error::Validation(format!("axis step {step} outside (0, 2]")));
    }
    let intervals = (2.0 / step).round();
    if (intervals * step - 2.0).abs() > 1e-9 {
        return Err(Error::Validation(format!("axis step {step} does not divide [-1, 1]")));
    }
    let n = intervals as i64;
    // (2i - n)/n keeps decimal steps exact, e.g. -0.7 rather than -0.7000000000000001
    Ok((0..=n).map(|i| (2 * i - n) as f64 / n as f64).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub fixed_prefix: [f64; 4],
    /// Strictly increasing values in `[-1, 1]`, shared by both swept axes.
    pub axis_values: Vec<f64>,
    pub runs_per_cell: usize,
    /// Template for every run; its `seed` is ignored.
    pub scenario: ScenarioConfig,
}

impl GridSpec {
    /// 21 × 21 grid in steps of 0.1, 30 runs per cell, 3 groups of 25.
    pub fn full() -> Self {
        Self {
            fixed_prefix: FIXED_PREFIX,
            axis_values: axis(0.1).expect("0.1 divides the axis"),
            runs_per_cell: 30,
            scenario: ScenarioConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis_values.is_empty() {
            return Err(Error::Validation("empty axis".into()));
        }
        if !self.axis_values.iter().all(|v| (-1.0..=1.0).contains(v)) {
            return Err(Error::Validation("axis values must lie in [-1, 1]".into()));
        }
        if !self.axis_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Validation("axis values must be strictly increasing".into()));
        }
        if self.runs_per_cell == 0 {
            return Err(Error::Validation("runs_per_cell must be at least 1".into()));
        }
        ControllerParams::from_prefix(self.fixed_prefix, WheelPair::new(0.0, 0.0))?;
        self.scenario.validate()
    }

    /// `(vl2, vr2)` for every cell, lexicographic.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.axis_values
            .iter()
            .flat_map(|&l| self.axis_values.iter().map(move |&r| (l, r)))
            .collect()
    }

    pub fn controller(&self, vl2: f64, vr2: f64) -> Result<ControllerParams> {
        ControllerParams::from_prefix(self.fixed_prefix, WheelPair::new(vl2, vr2))
    }

    pub fn run_config(&self, base_seed: u64, run: usize) -> ScenarioConfig {
        ScenarioConfig {
            seed: base_seed + run as u64,
            ..self.scenario.clone()
        }
    }

    pub fn total_runs(&self) -> usize {
        self.axis_values.len().pow(2) * self.runs_per_cell
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapCell {
    pub vl2: f64,
    pub vr2: f64,
    /// `U` of run `j` at index `j`.
    pub costs: Vec<f64>,
    pub mean_cost: f64,
    pub ln_mean_cost: f64,
}

impl HeatmapCell {
    pub fn from_costs(vl2: f64, vr2: f64, costs: Vec<f64>) -> Self {
        let mean_cost = costs.iter().sum::<f64>() / costs.len() as f64;
        Self {
            vl2,
            vr2,
            costs,
            mean_cost,
            ln_mean_cost: mean_cost.ln(),
        }
    }

    fn detail_lines(&self, base_seed: u64) -> String {
        self.costs
            .iter()
            .enumerate()
            .map(|(j, u)| format!("{:?},{:?},{},{}\n", self.vl2, self.vr2, base_seed + j as u64, u))
            .collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct SearchOptions<'a> {
    /// Worker threads (0 = available parallelism).
    pub jobs: usize,
    /// Append-only per-run results file used for persistence and resume.
    pub results_path: Option<&'a Path>,
    /// Stop after this many newly computed cells.
    pub max_new_cells: Option<usize>,
    pub step: StepConfig,
}

#[derive(Clone, Debug)]
pub struct GridOutcome {
    /// Completed cells in grid order.
    pub cells: Vec<HeatmapCell>,
    /// Whether every cell of the grid is present.
    pub complete: bool,
}

impl GridOutcome {
    pub fn best(&self) -> Result<&HeatmapCell> {
        best_cell(&self.cells)
    }
}

/// Cell with the lowest mean cost; ties go to the lexicographically
/// smaller `(vl2, vr2)`.
pub fn best_cell(cells: &[HeatmapCell]) -> Result<&HeatmapCell> {
    cells
        .iter()
        .min_by(|a, b| {
            a.mean_cost
                .total_cmp(&b.mean_cost)
                .then(a.vl2.total_cmp(&b.vl2))
                .then(a.vr2.total_cmp(&b.vr2))
        })
        .ok_or(Error::NoData("no heatmap cells"))
}

pub fn best_controller(cells: &[HeatmapCell], prefix: [f64; 4]) -> Result<ControllerParams> {
    let best = best_cell(cells)?;
    ControllerParams::from_prefix(prefix, WheelPair::new(best.vl2, best.vr2))
}

fn cell_key(vl2: f64, vr2: f64) -> (u64, u64) {
    (vl2.to_bits(), vr2.to_bits())
}

/// Reads completed cells from a results file. A truncated final line or an
/// incomplete final cell is dropped; anything else that does not belong to
/// this sweep is an error.
fn load_completed(text: &str, spec: &GridSpec, base_seed: u64) -> Result<BTreeMap<(u64, u64), Vec<f64>>> {
    let mut lines = text.split_inclusive('\n').peekable();
    match lines.next() {
        None => return Ok(BTreeMap::new()),
        Some(h) if h.trim_end() == DETAIL_HEADER => {}
        Some(h) => return Err(Error::Parse(format!("unexpected results header {:?}", h.trim_end()))),
    }
    let known: BTreeMap<(u64, u64), ()> = spec.cells().into_iter().map(|(l, r)| (cell_key(l, r), ())).collect();
    let mut runs: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
    while let Some(line) = lines.next() {
        let is_last = lines.peek().is_none();
        let parsed = line.strip_suffix('\n').and_then(|body| {
            let fields: Vec<&str> = body.split(',').collect();
            match fields.as_slice() {
                [l, r, seed, u] => Some((
                    l.parse::<f64>().ok()?,
                    r.parse::<f64>().ok()?,
                    seed.parse::<u64>().ok()?,
                    u.parse::<f64>().ok()?,
                )),
                _ => None,
            }
        });
        let Some((vl2, vr2, seed, u)) = parsed else {
            if is_last {
                break;
            }
            return Err(Error::Parse(format!("malformed results line {:?}", line.trim_end())));
        };
        let key = cell_key(vl2, vr2);
        if !known.contains_key(&key) {
            return Err(Error::Parse(format!("results file has cell ({vl2}, {vr2}) outside this grid")));
        }
        let costs = runs.entry(key).or_default();
        if seed != base_seed + costs.len() as u64 || costs.len() >= spec.runs_per_cell {
            return Err(Error::Parse(format!(
                "results file has unexpected seed {seed} for cell ({vl2}, {vr2})"
            )));
        }
        costs.push(u);
    }
    runs.retain(|_, costs| costs.len() == spec.runs_per_cell);
    Ok(runs)
}

/// Runs (or resumes) the sweep.
pub fn grid_search(spec: &GridSpec, base_seed: u64, opts: &SearchOptions<'_>) -> Result<GridOutcome> {
    spec.validate()?;
    opts.step.validate()?;
    let all_cells = spec.cells();

    let mut done: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
    if let Some(path) = opts.results_path {
        if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            done = load_completed(&text, spec, base_seed)?;
        }
        // rewrite the file with only complete cells, in grid order
        let mut canonical = format!("{DETAIL_HEADER}\n");
        for &(l, r) in &all_cells {
            if let Some(costs) = done.get(&cell_key(l, r)) {
                canonical.push_str(&HeatmapCell::from_costs(l, r, costs.clone()).detail_lines(base_seed));
            }
        }
        fs::write(path, canonical).map_err(|e| Error::io(path, e))?;
    }

    let mut pending: Vec<(f64, f64)> = all_cells
        .iter()
        .copied()
        .filter(|&(l, r)| !done.contains_key(&cell_key(l, r)))
        .collect();
    if let Some(limit) = opts.max_new_cells {
        pending.truncate(limit);
    }

    let jobs: Vec<(usize, usize)> = (0..pending.len())
        .flat_map(|c| (0..spec.runs_per_cell).map(move |j| (c, j)))
        .collect();
    let pool = worker_pool(opts.jobs)?;
    let (tx, rx) = mpsc::channel::<(usize, usize, Result<f64>)>();

    let collected = std::thread::scope(|scope| {
        let collector = scope.spawn(|| collect(rx, &pending, spec, base_seed, opts.results_path));
        pool.install(|| {
            jobs.par_iter().for_each_with(tx, |tx, &(c, j)| {
                let (l, r) = pending[c];
                let outcome = spec
                    .controller(l, r)
                    .and_then(|ctrl| trial_cost(&spec.run_config(base_seed, j), &ctrl, &opts.step));
                // the collector only hangs up after every sender is gone
                let _ = tx.send((c, j, outcome));
            });
        });
        collector.join().expect("collector thread panicked")
    })?;

    for (l, r, costs) in collected {
        done.insert(cell_key(l, r), costs);
    }
    let cells: Vec<HeatmapCell> = all_cells
        .iter()
        .filter_map(|&(l, r)| done.get(&cell_key(l, r)).map(|c| HeatmapCell::from_costs(l, r, c.clone())))
        .collect();
    Ok(GridOutcome {
        complete: cells.len() == all_cells.len(),
        cells,
    })
}

type Finished = Vec<(f64, f64, Vec<f64>)>;

/// Single writer: gathers run results, and persists each cell once it and
/// every earlier pending cell are complete.
fn collect(
    rx: mpsc::Receiver<(usize, usize, Result<f64>)>,
    pending: &[(f64, f64)],
    spec: &GridSpec,
    base_seed: u64,
    results_path: Option<&Path>,
) -> Result<Finished> {
    let mut slots: Vec<Vec<Option<f64>>> = vec![vec![None; spec.runs_per_cell]; pending.len()];
    let mut first_error: Option<Error> = None;
    let mut failed = vec![false; pending.len()];
    let mut next = 0;
    let mut finished = Vec::new();
    let mut file = match results_path {
        Some(path) => Some((
            OpenOptions::new().append(true).open(path).map_err(|e| Error::io(path, e))?,
            path,
        )),
        None => None,
    };

    for (c, j, outcome) in rx {
        match outcome {
            Ok(u) => slots[c][j] = Some(u),
            Err(e) => {
                failed[c] = true;
                first_error.get_or_insert(e);
            }
        }
        // a failed cell blocks everything after it so the file stays a prefix
        while next < pending.len() && !failed[next] && slots[next].iter().all(Option::is_some) {
            let (l, r) = pending[next];
            let cell = HeatmapCell::from_costs(l, r, slots[next].iter().map(|u| u.unwrap()).collect());
            if let Some((f, path)) = file.as_mut() {
                f.write_all(cell.detail_lines(base_seed).as_bytes())
                    .and_then(|_| f.flush())
                    .map_err(|e| Error::io(*path, e))?;
            }
            finished.push((l, r, cell.costs));
            next += 1;
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(finished),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec(axis_values: Vec<f64>, runs: usize) -> GridSpec {
        GridSpec {
            fixed_prefix: FIXED_PREFIX,
            axis_values,
            runs_per_cell: runs,
            scenario: ScenarioConfig {
                g: 2,
                n_per_group: 3,
                arena_side: 120.0,
                bollards_enabled: true,
                duration_s: 1.0,
                seed: 0,
            },
        }
    }

    #[test]
    fn axis_values() {
        let a = axis(0.1).unwrap();
        assert_eq!(a.len(), 21);
        assert_eq!(a[0], -1.0);
        assert_eq!(a[3], -0.7);
        assert_eq!(a[10], 0.0);
        assert_eq!(a[20], 1.0);
        assert_eq!(axis(0.5).unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(axis(0.3).is_err());
        assert!(axis(0.0).is_err());
    }

    #[test]
    fn full_grid_size() {
        let spec = GridSpec::full();
        spec.validate().unwrap();
        assert_eq!(spec.cells().len(), 441);
        assert_eq!(spec.total_runs(), 13230);
        assert_eq!(spec.scenario.robot_count(), 75);
    }

    #[test]
    fn spec_validation() {
        assert!(tiny_spec(vec![0.5, 0.0], 1).validate().is_err());
        assert!(tiny_spec(vec![1.5], 1).validate().is_err());
        assert!(tiny_spec(vec![0.0], 0).validate().is_err());
        assert!(tiny_spec(vec![], 1).validate().is_err());
    }

    #[test]
    fn degenerate_grid() {
        let spec = tiny_spec(vec![0.3], 1);
        let out = grid_search(&spec, 5, &SearchOptions::default()).unwrap();
        assert!(out.complete);
        assert_eq!(out.cells.len(), 1);
        let best = out.best().unwrap();
        assert_eq!((best.vl2, best.vr2), (0.3, 0.3));
        assert_eq!(best.costs.len(), 1);
        let direct = trial_cost(&spec.run_config(5, 0), &spec.controller(0.3, 0.3).unwrap(), &StepConfig::default()).unwrap();
        assert_eq!(best.costs[0], direct);
        assert_eq!(best.ln_mean_cost, best.mean_cost.ln());
    }

    #[test]
    fn best_controller_assembly_and_ties() {
        let cells = vec![
            HeatmapCell::from_costs(0.0, 0.0, vec![10.0]),
            HeatmapCell::from_costs(-0.7, -1.0, vec![1.0, 2.0]),
            HeatmapCell::from_costs(0.5, 0.5, vec![3.0]),
        ];
        assert_eq!(best_controller(&cells, FIXED_PREFIX).unwrap(), ControllerParams::BEST);
        let single = [HeatmapCell::from_costs(0.3, 0.1, vec![4.0])];
        assert_eq!(
            best_controller(&single, FIXED_PREFIX).unwrap().values(),
            [-0.7, -1.0, 1.0, -1.0, 0.3, 0.1]
        );
        let tied = [
            HeatmapCell::from_costs(0.2, 0.0, vec![4.0]),
            HeatmapCell::from_costs(0.1, 0.9, vec![4.0]),
            HeatmapCell::from_costs(0.1, 0.5, vec![4.0]),
        ];
        let b = best_cell(&tied).unwrap();
        assert_eq!((b.vl2, b.vr2), (0.1, 0.5));
        assert!(matches!(best_controller(&[], FIXED_PREFIX), Err(Error::NoData(_))));
    }

    #[test]
    fn paired_seeding_and_cell_independence() {
        let spec = tiny_spec(vec![-1.0, 0.0, 1.0], 2);
        let full = grid_search(&spec, 40, &SearchOptions { jobs: 3, ..Default::default() }).unwrap();
        let sub = tiny_spec(vec![0.0], 2);
        let part = grid_search(&sub, 40, &SearchOptions { jobs: 1, ..Default::default() }).unwrap();
        let same = full.cells.iter().find(|c| c.vl2 == 0.0 && c.vr2 == 0.0).unwrap();
        assert_eq!(same, &part.cells[0]);
        // every run j starts from the same world regardless of the cell
        let w0 = crate::harness::generate_scenario(&spec.run_config(40, 1)).unwrap();
        let w1 = crate::harness::generate_scenario(&spec.run_config(40, 1)).unwrap();
        assert_eq!(w0, w1);
    }

    #[test]
    fn resume_matches_uninterrupted() {
        let dir = tempfile::tempdir().unwrap();
        let spec = tiny_spec(vec![-1.0, 0.0, 1.0], 2);
        let whole = dir.path().join("whole.csv");
        let split = dir.path().join("split.csv");

        let a = grid_search(&spec, 3, &SearchOptions { jobs: 2, results_path: Some(&whole), ..Default::default() }).unwrap();
        let first = grid_search(
            &spec,
            3,
            &SearchOptions { jobs: 2, results_path: Some(&split), max_new_cells: Some(4), ..Default::default() },
        )
        .unwrap();
        assert!(!first.complete);
        assert_eq!(first.cells.len(), 4);

        // simulate a crash mid-write: dangling partial line
        let mut text = fs::read_to_string(&split).unwrap();
        text.push_str("1.0,-1.0,3,12");
        fs::write(&split, text).unwrap();

        let b = grid_search(&spec, 3, &SearchOptions { jobs: 3, results_path: Some(&split), ..Default::default() }).unwrap();
        assert!(b.complete);
        assert_eq!(a.cells, b.cells);
        assert_eq!(fs::read(&whole).unwrap(), fs::read(&split).unwrap());
    }

    #[test]
    fn foreign_results_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        fs::write(&path, "vl2,vr2,seed,U\n0.25,0.0,0,1.0\n0.0,0.0,0,1.0\n").unwrap();
        let spec = tiny_spec(vec![0.0], 1);
        assert!(grid_search(&spec, 0, &SearchOptions { results_path: Some(&path), ..Default::default() }).is_err());
        fs::write(&path, "a,b\n").unwrap();
        assert!(grid_search(&spec, 0, &SearchOptions { results_path: Some(&path), ..Default::default() }).is_err());
    }
}
