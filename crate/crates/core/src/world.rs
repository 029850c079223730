//! Simulation state: arena, robots, bollards, and the control-cycle clock.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, overlap, Pose, Vec2};

/// Body radius of the simulated e-puck (7.4 cm diameter).
pub const ROBOT_RADIUS: f64 = 3.7;
/// Bollards share the robots' footprint.
pub const BOLLARD_RADIUS: f64 = ROBOT_RADIUS;
/// Maximum wheel speed in cm/s.
pub const MAX_WHEEL_SPEED: f64 = 12.8;
/// Largest pairwise penetration tolerated after a completed control cycle.
pub const PENETRATION_TOLERANCE: f64 = 0.01;
pub const DEFAULT_ARENA_SIDE: f64 = 450.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArenaConfig {
    /// Side of the square arena `[0, side]²`, in cm.
    pub side: f64,
}

impl ArenaConfig {
    pub fn new(side: f64) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "arena side must be positive, got {side}"
            )));
        }
        Ok(Self { side })
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.side / 2.0, self.side / 2.0)
    }

    /// Whether a disc lies fully inside the walls.
    pub fn contains_disc(&self, center: Vec2, radius: f64) -> bool {
        center.x >= radius
            && center.x <= self.side - radius
            && center.y >= radius
            && center.y <= self.side - radius
    }
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self {
            side: DEFAULT_ARENA_SIDE,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotBody {
    pub id: usize,
    pub group: usize,
    pub pose: Pose,
    /// Left and right wheel speeds in cm/s.
    pub wheel_speeds: (f64, f64),
    pub radius: f64,
}

impl RobotBody {
    pub fn new(id: usize, group: usize, pose: Pose) -> Self {
        Self {
            id,
            group,
            pose,
            wheel_speeds: (0.0, 0.0),
            radius: ROBOT_RADIUS,
        }
    }

    pub fn position(&self) -> Vec2 {
        self.pose.position
    }
}

/// A fixed landmark that robots sense like a member of its group.
#[derive(Clone, Debug, PartialEq)]
pub struct Bollard {
    pub group: usize,
    pub position: Vec2,
    pub radius: f64,
}

impl Bollard {
    pub fn new(group: usize, position: Vec2) -> Self {
        Self {
            group,
            position,
            radius: BOLLARD_RADIUS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub arena: ArenaConfig,
    pub robots: Vec<RobotBody>,
    pub bollards: Vec<Bollard>,
    /// Completed control cycles.
    pub tick: u64,
    group_count: usize,
}

impl World {
    /// Builds a world. Robot ids must equal their position in `robots` and
    /// every group label must be below `group_count`. Overlap is not checked
    /// here; see [`World::check_invariants`].
    pub fn new(
        arena: ArenaConfig,
        robots: Vec<RobotBody>,
        bollards: Vec<Bollard>,
        group_count: usize,
    ) -> Result<Self> {
        for (i, robot) in robots.iter().enumerate() {
            if robot.id != i {
                return Err(Error::InvalidScenario(format!(
                    "robot at index {i} has id {}",
                    robot.id
                )));
            }
            if robot.group >= group_count {
                return Err(Error::InvalidGroup {
                    group: robot.group,
                    groups: group_count,
                });
            }
            if !robot.pose.position.is_finite() || !robot.pose.orientation.is_finite() {
                return Err(Error::Numeric("robot pose"));
            }
        }
        for bollard in &bollards {
            if bollard.group >= group_count {
                return Err(Error::InvalidGroup {
                    group: bollard.group,
                    groups: group_count,
                });
            }
            if !bollard.position.is_finite() {
                return Err(Error::Numeric("bollard position"));
            }
        }
        Ok(Self {
            arena,
            robots,
            bollards,
            tick: 0,
            group_count,
        })
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    /// Indices of the robots in group `k`, ascending.
    pub fn robots_of_group(&self, k: usize) -> Result<Vec<usize>> {
        if k >= self.group_count {
            return Err(Error::InvalidGroup {
                group: k,
                groups: self.group_count,
            });
        }
        Ok(self
            .robots
            .iter()
            .filter(|r| r.group == k)
            .map(|r| r.id)
            .collect())
    }

    /// Member positions for every group, indexed by group.
    pub fn group_positions(&self) -> Vec<Vec<Vec2>> {
        let mut groups = vec![Vec::new(); self.group_count];
        for robot in &self.robots {
            groups[robot.group].push(robot.position());
        }
        groups
    }

    /// Radius used to normalize the metrics (all robots share one body size).
    pub fn robot_radius(&self) -> f64 {
        self.robots.first().map_or(ROBOT_RADIUS, |r| r.radius)
    }

    /// Largest penetration over all robot–robot and robot–bollard pairs
    /// (0 when nothing overlaps).
    pub fn max_penetration(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.robots.iter().enumerate() {
            for b in &self.robots[i + 1..] {
                worst = worst.max(overlap(a.position(), a.radius, b.position(), b.radius));
            }
            for b in &self.bollards {
                worst = worst.max(overlap(a.position(), a.radius, b.position, b.radius));
            }
        }
        worst
    }

    pub fn all_inside(&self) -> bool {
        self.robots
            .iter()
            .all(|r| self.arena.contains_disc(r.position(), r.radius))
    }

    /// Checks the post-cycle invariants: bounded penetration, every robot
    /// inside the walls, normalized headings.
    pub fn check_invariants(&self) -> Result<()> {
        let pen = self.max_penetration();
        if pen > PENETRATION_TOLERANCE {
            return Err(Error::Validation(format!(
                "penetration {pen:.6} cm exceeds {PENETRATION_TOLERANCE} cm at tick {}",
                self.tick
            )));
        }
        if !self.all_inside() {
            return Err(Error::Validation(format!(
                "robot outside arena at tick {}",
                self.tick
            )));
        }
        if let Some(r) = self
            .robots
            .iter()
            .find(|r| !(-std::f64::consts::PI..std::f64::consts::PI).contains(&r.pose.orientation))
        {
            return Err(Error::Validation(format!(
                "robot {} has unnormalized heading {}",
                r.id, r.pose.orientation
            )));
        }
        Ok(())
    }

    /// Serializes the world snapshot as a single-line JSON document with a
    /// fixed field order and six decimal digits on every float.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        write!(
            out,
            "{{\"arena_side\":{:.6},\"tick\":{},\"robots\":[",
            self.arena.side, self.tick
        )
        .unwrap();
        for (i, r) in self.robots.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(
                out,
                "{{\"id\":{},\"group\":{},\"x\":{:.6},\"y\":{:.6},\"theta\":{:.6}}}",
                r.id, r.group, r.pose.position.x, r.pose.position.y, r.pose.orientation
            )
            .unwrap();
        }
        out.push_str("],\"bollards\":[");
        for (i, b) in self.bollards.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(
                out,
                "{{\"group\":{},\"x\":{:.6},\"y\":{:.6}}}",
                b.group, b.position.x, b.position.y
            )
            .unwrap();
        }
        out.push_str("]}");
        out
    }

    /// Parses a snapshot produced by [`World::to_json`]. The group count is
    /// inferred as one past the largest group label present.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct RobotDoc {
            id: usize,
            group: usize,
            x: f64,
            y: f64,
            theta: f64,
        }
        #[derive(Deserialize)]
        struct BollardDoc {
            group: usize,
            x: f64,
            y: f64,
        }
        #[derive(Deserialize)]
        struct WorldDoc {
            arena_side: f64,
            tick: u64,
            robots: Vec<RobotDoc>,
            bollards: Vec<BollardDoc>,
        }

        let doc: WorldDoc = serde_json::from_str(text)?;
        let group_count = doc
            .robots
            .iter()
            .map(|r| r.group + 1)
            .chain(doc.bollards.iter().map(|b| b.group + 1))
            .max()
            .unwrap_or(0);
        let robots = doc
            .robots
            .iter()
            .map(|r| {
                RobotBody::new(
                    r.id,
                    r.group,
                    Pose {
                        position: Vec2::new(r.x, r.y),
                        orientation: normalize_angle(r.theta),
                    },
                )
            })
            .collect();
        let bollards = doc
            .bollards
            .iter()
            .map(|b| Bollard::new(b.group, Vec2::new(b.x, b.y)))
            .collect();
        let mut world = World::new(ArenaConfig::new(doc.arena_side)?, robots, bollards, group_count)?;
        world.tick = doc.tick;
        Ok(world)
    }
}
