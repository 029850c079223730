//! Deterministic 2D simulator for multitask self-aggregation of
//! differential-drive robots.
//!
//! Robots are split into colored groups and carry a single forward
//! line-of-sight sensor that reports nothing, a same-group body, or an
//! other-group body. A memoryless controller maps that reading to wheel
//! speeds. On top of the simulator sit the dispersion/compactness metrics,
//! a seeded experiment harness, and a resumable grid search over the
//! controller's response to other-group robots.

pub mod controller;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod physics;
pub mod report;
pub mod rng;
pub mod sensing;
pub mod synthesis;
mod union_find;
pub mod world;

pub use controller::{ControllerParams, WheelPair};
pub use error::{Error, Result};
pub use geometry::{Pose, Vec2};
pub use harness::{ScenarioConfig, TrialResult};
pub use metrics::MetricSample;
pub use physics::StepConfig;
pub use sensing::SensorReading;
pub use synthesis::{GridSpec, HeatmapCell};
pub use world::World;
