//! One control cycle: sense, actuate, then integrate the differential-drive
//! kinematics in fixed substeps with positional collision resolution.

use crate::controller::{to_wheel_speeds, ControllerParams};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Pose, Vec2};
use crate::sensing::sense_all;
use crate::world::{World, MAX_WHEEL_SPEED};

/// Wheelbase of the e-puck, in cm.
pub const DEFAULT_AXLE_LENGTH: f64 = 5.3;

/// A collision pass whose deepest contact is below this (a tenth of the
/// post-cycle tolerance) ends resolution for the substep.
const CONTACT_SLOP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepConfig {
    /// Control period in seconds.
    pub control_dt: f64,
    pub substeps_per_cycle: u32,
    pub axle_length: f64,
    pub max_speed: f64,
    /// Upper bound on positional passes per substep.
    pub collision_iterations: u32,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            control_dt: 0.1,
            substeps_per_cycle: 10,
            axle_length: DEFAULT_AXLE_LENGTH,
            max_speed: MAX_WHEEL_SPEED,
            collision_iterations: 64,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.control_dt.is_finite() && self.control_dt > 0.0) {
            return Err(Error::Validation("control_dt must be positive".into()));
        }
        if self.substeps_per_cycle == 0 {
            return Err(Error::Validation("substeps_per_cycle must be at least 1".into()));
        }
        if !(self.max_speed.is_finite() && self.max_speed > 0.0) {
            return Err(Error::Validation("max_speed must be positive".into()));
        }
        if !(self.axle_length.is_finite() && self.axle_length > 0.0) {
            return Err(Error::Validation("axle_length must be positive".into()));
        }
        Ok(())
    }

    pub fn substep_dt(&self) -> f64 {
        self.control_dt / f64::from(self.substeps_per_cycle)
    }

    /// Number of control cycles covering `duration_s`.
    pub fn cycles_for(&self, duration_s: f64) -> u64 {
        (duration_s / self.control_dt).round() as u64
    }
}

/// Exact unicycle update for constant wheel speeds over `dt`.
///
/// With `Δθ = (vr - vl)·dt/axle` and forward speed `v = (vl + vr)/2` the robot
/// travels along a circular arc; the chord is evaluated as
/// `v·dt·sinc(Δθ/2)` in direction `θ + Δθ/2`, which reduces to a straight
/// segment when the wheel speeds are equal.
pub fn integrate_differential_drive(pose: Pose, vl: f64, vr: f64, axle: f64, dt: f64) -> Result<Pose> {
    if !(vl.is_finite() && vr.is_finite() && axle.is_finite() && dt.is_finite()) {
        return Err(Error::Numeric("wheel speeds or time step"));
    }
    if !pose.position.is_finite() || !pose.orientation.is_finite() {
        return Err(Error::Numeric("pose"));
    }
    let theta = pose.orientation;
    let forward = 0.5 * (vl + vr) * dt;
    if vl == vr {
        return Ok(Pose {
            position: pose.position + Vec2::from_angle(theta) * forward,
            orientation: normalize_angle(theta),
        });
    }
    let turn = (vr - vl) * dt / axle;
    let half = 0.5 * turn;
    let chord = forward * (half.sin() / half);
    Ok(Pose {
        position: pose.position + Vec2::from_angle(theta + half) * chord,
        orientation: normalize_angle(theta + turn),
    })
}

/// Positional contact resolution.
///
/// Each pass visits body pairs `(i, j)` in ascending order, robots first and
/// bollards after them, and pushes overlapping pairs apart along the line of
/// centers. Two robots split the correction; against a bollard the robot
/// takes all of it. Robots are then projected back inside the walls. Passes
/// repeat, up to `collision_iterations`, until no wall projection happens and
/// no contact deeper than 0.001 cm is met.
pub fn resolve_collisions(world: &mut World, cfg: &StepConfig) {
    let side = world.arena.side;
    let n = world.robots.len();
    for _ in 0..cfg.collision_iterations {
        let mut worst = 0.0f64;
        for i in 0..n {
            let (head, tail) = world.robots.split_at_mut(i + 1);
            let a = &mut head[i];
            for b in tail.iter_mut() {
                let reach = a.radius + b.radius;
                let delta = b.pose.position - a.pose.position;
                if delta.x.abs() >= reach || delta.y.abs() >= reach {
                    continue;
                }
                let dist = delta.norm();
                let pen = reach - dist;
                if pen <= 0.0 {
                    continue;
                }
                worst = worst.max(pen);
                let normal = contact_normal(delta, dist);
                let push = normal * (0.5 * pen);
                a.pose.position -= push;
                b.pose.position += push;
            }
            for bollard in &world.bollards {
                let reach = a.radius + bollard.radius;
                let delta = bollard.position - a.pose.position;
                if delta.x.abs() >= reach || delta.y.abs() >= reach {
                    continue;
                }
                let dist = delta.norm();
                let pen = reach - dist;
                if pen <= 0.0 {
                    continue;
                }
                worst = worst.max(pen);
                a.pose.position -= contact_normal(delta, dist) * pen;
            }
        }

        let mut clamped = false;
        for robot in &mut world.robots {
            let r = robot.radius;
            let p = &mut robot.pose.position;
            let x = p.x.clamp(r, side - r);
            let y = p.y.clamp(r, side - r);
            if x != p.x || y != p.y {
                clamped = true;
                p.x = x;
                p.y = y;
            }
        }

        if worst <= CONTACT_SLOP && !clamped {
            break;
        }
    }
}

/// Unit vector from the first body toward the second; coincident centers
/// separate along +x.
fn contact_normal(delta: Vec2, dist: f64) -> Vec2 {
    if dist > 0.0 {
        delta * (1.0 / dist)
    } else {
        Vec2::new(1.0, 0.0)
    }
}

/// Advances the world by one control cycle.
///
/// Every sensor is read from the pre-step snapshot before any robot moves;
/// wheel speeds then stay fixed for all substeps of the cycle.
pub fn step_control_cycle(world: &mut World, controller: &ControllerParams, cfg: &StepConfig) -> Result<()> {
    let readings = sense_all(world);
    for (robot, reading) in world.robots.iter_mut().zip(readings) {
        robot.wheel_speeds = to_wheel_speeds(controller.actuate(reading), cfg.max_speed)?;
    }

    let dt = cfg.substep_dt();
    for _ in 0..cfg.substeps_per_cycle {
        for robot in &mut world.robots {
            let (vl, vr) = robot.wheel_speeds;
            if vl == 0.0 && vr == 0.0 {
                continue;
            }
            robot.pose = integrate_differential_drive(robot.pose, vl, vr, cfg.axle_length, dt)?;
        }
        resolve_collisions(world, cfg);
    }
    world.tick += 1;
    Ok(())
}
