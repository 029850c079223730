use multiswarm::harness::{generate_scenario, run_trial_with, trial_cost, ScenarioConfig};
use multiswarm::physics::step_control_cycle;
use multiswarm::{ControllerParams, StepConfig, World};

fn config() -> ScenarioConfig {
    ScenarioConfig { g: 3, n_per_group: 10, duration_s: 150.0, seed: 99, ..ScenarioConfig::default() }
}

fn bits(w: &World) -> Vec<u64> {
    w.robots
        .iter()
        .flat_map(|r| [r.pose.position.x, r.pose.position.y, r.pose.orientation, r.wheel_speeds.0, r.wheel_speeds.1])
        .map(f64::to_bits)
        .collect()
}

#[test]
fn identical_runs_are_bit_identical() {
    let step = StepConfig::default();
    let mut a = generate_scenario(&config()).unwrap();
    let mut b = generate_scenario(&config()).unwrap();
    assert_eq!(bits(&a), bits(&b));
    for _ in 0..1500 {
        step_control_cycle(&mut a, &ControllerParams::BEST, &step).unwrap();
        step_control_cycle(&mut b, &ControllerParams::BEST, &step).unwrap();
        assert_eq!(bits(&a), bits(&b), "diverged at tick {}", a.tick);
    }
    assert_eq!(a.tick, 1500);
}

#[test]
fn trial_series_and_cost_are_reproducible() {
    let step = StepConfig::default();
    let cfg = config();
    let mut worlds_a = Vec::new();
    let r1 = run_trial_with(&cfg, &ControllerParams::BEST, &step, |w| worlds_a.push(w.to_json())).unwrap();
    let mut worlds_b = Vec::new();
    let r2 = run_trial_with(&cfg, &ControllerParams::BEST, &step, |w| worlds_b.push(w.to_json())).unwrap();
    assert_eq!(worlds_a.len(), 1501);
    assert_eq!(worlds_a, worlds_b);
    assert_eq!(r1.series, r2.series);
    assert_eq!(r1.final_cost.to_bits(), r2.final_cost.to_bits());
    assert_eq!(trial_cost(&cfg, &ControllerParams::BEST, &step).unwrap().to_bits(), r1.final_cost.to_bits());
}

#[test]
fn seeds_change_the_run() {
    let step = StepConfig::default();
    let a = trial_cost(&config(), &ControllerParams::BEST, &step).unwrap();
    let b = trial_cost(&ScenarioConfig { seed: 100, ..config() }, &ControllerParams::BEST, &step).unwrap();
    assert_ne!(a, b);
}
