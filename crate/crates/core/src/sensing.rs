//! Forward line-of-sight sensor.
//!
//! A single infinitely thin ray leaves the robot's center along its heading.
//! Intersections closer than the robot's own radius are ignored, so the ray
//! effectively starts at the robot's rim. The nearest body hit decides the
//! reading. Bodies lie inside the convex arena, so any hit precedes the
//! wall and range is unbounded.

use crate::geometry::Vec2;
use crate::world::World;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum SensorReading {
    Nothing = 0,
    SameGroup = 1,
    OtherGroup = 2,
}

impl SensorReading {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Smallest ray parameter `t > min_t` at which the ray `origin + t·dir`
/// meets the circle, if any. `dir` must be a unit vector. Tangency counts
/// as a hit.
pub fn ray_circle_hit(origin: Vec2, dir: Vec2, min_t: f64, center: Vec2, radius: f64) -> Option<f64> {
    let to_center = center - origin;
    let along = to_center.dot(dir);
    let disc = along * along - (to_center.norm_squared() - radius * radius);
    if disc < 0.0 {
        return None;
    }
    let half_chord = disc.sqrt();
    let near = along - half_chord;
    if near > min_t {
        return Some(near);
    }
    let far = along + half_chord;
    (far > min_t).then_some(far)
}

/// Reads the sensor of robot `robot_id`.
///
/// # Panics
/// If `robot_id` is out of range.
pub fn line_of_sight(world: &World, robot_id: usize) -> SensorReading {
    let me = &world.robots[robot_id];
    let origin = me.position();
    let dir = me.pose.heading();
    let min_t = me.radius;

    // (distance, group) of the nearest hit; ties keep the earlier body
    let mut nearest: Option<(f64, usize)> = None;
    let mut consider = |t: Option<f64>, group: usize| {
        if let Some(t) = t {
            if nearest.is_none_or(|(best, _)| t < best) {
                nearest = Some((t, group));
            }
        }
    };
    for other in &world.robots {
        if other.id == robot_id {
            continue;
        }
        consider(
            ray_circle_hit(origin, dir, min_t, other.position(), other.radius),
            other.group,
        );
    }
    for bollard in &world.bollards {
        consider(
            ray_circle_hit(origin, dir, min_t, bollard.position, bollard.radius),
            bollard.group,
        );
    }

    match nearest {
        None => SensorReading::Nothing,
        Some((_, group)) if group == me.group => SensorReading::SameGroup,
        Some(_) => SensorReading::OtherGroup,
    }
}

/// Readings for every robot, all taken from the same snapshot.
pub fn sense_all(world: &World) -> Vec<SensorReading> {
    (0..world.robots.len())
        .map(|id| line_of_sight(world, id))
        .collect()
}
