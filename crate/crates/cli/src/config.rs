//! JSON run configuration. Every section is optional in a file; missing
//! fields take the defaults below, and command-line flags override both.

use std::fs;
use std::path::Path;

use multiswarm::harness::VALIDATION_CHECKPOINTS_S;
use multiswarm::synthesis::{axis, FIXED_PREFIX};
use multiswarm::{ControllerParams, GridSpec, ScenarioConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Scenario template. Its `seed` is the run seed, or the base seed for
    /// multi-run commands.
    pub scenario: ScenarioConfig,
    pub controller: [f64; 6],
    pub sample_every: usize,
    /// Simulated times (s) at which `trial` renders a snapshot.
    pub snapshots_s: Vec<f64>,
    pub grid: GridConfig,
    pub validation: ValidationConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub fixed_prefix: [f64; 4],
    pub axis_values: Vec<f64>,
    pub runs_per_cell: usize,
    /// Stop after this many newly computed cells.
    pub max_new_cells: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub groups: Vec<usize>,
    pub per_group: Vec<usize>,
    pub bollards: Vec<bool>,
    pub checkpoints_s: Vec<f64>,
    pub trials_per_config: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            controller: ControllerParams::BEST.values(),
            sample_every: 1,
            snapshots_s: Vec::new(),
            grid: GridConfig::default(),
            validation: ValidationConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            fixed_prefix: FIXED_PREFIX,
            axis_values: axis(0.1).expect("0.1 divides the axis"),
            runs_per_cell: 30,
            max_new_cells: None,
        }
    }
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            groups: vec![3, 5],
            per_group: vec![10, 15, 20, 25, 30],
            bollards: vec![true, false],
            checkpoints_s: VALIDATION_CHECKPOINTS_S.to_vec(),
            trials_per_config: 10,
        }
    }
}

impl RunConfig {
    /// Reads a config file. A run manifest is accepted too: its `config`
    /// member is used.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| format!("{} is not valid JSON: {e}", path.display()))?;
        let body = match value {
            serde_json::Value::Object(mut map) if map.contains_key("command") && map.contains_key("config") => {
                map.remove("config").expect("checked above")
            }
            other => other,
        };
        serde_json::from_value(body).map_err(|e| format!("bad config in {}: {e}", path.display()))
    }

    pub fn controller(&self) -> Result<ControllerParams, String> {
        ControllerParams::new(self.controller).map_err(|e| e.to_string())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            fixed_prefix: self.grid.fixed_prefix,
            axis_values: self.grid.axis_values.clone(),
            runs_per_cell: self.grid.runs_per_cell,
            scenario: self.scenario.clone(),
        }
    }

    pub fn validation_plan(&self) -> multiswarm::harness::ValidationPlan {
        multiswarm::harness::ValidationPlan {
            groups: self.validation.groups.clone(),
            per_group: self.validation.per_group.clone(),
            bollards: self.validation.bollards.clone(),
            arena_side: self.scenario.arena_side,
            duration_s: self.scenario.duration_s,
            checkpoints_s: self.validation.checkpoints_s.clone(),
            trials_per_config: self.validation.trials_per_config,
            base_seed: self.scenario.seed,
        }
    }
}
