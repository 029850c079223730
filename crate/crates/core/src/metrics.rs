//! Dispersion and compactness measures.
//!
//! * `d`: sum over groups of the largest distance between two members.
//! * `U`: time-weighted sum of `d` over a run, `Σ t·d(t)`.
//! * `u`: squared distance of every robot to its group centroid, normalized
//!   by `4·r²` (r = body radius).
//! * `pc`: fraction of robots that belong to their group's largest connected
//!   component, where two members are linked when their centers are closer
//!   than `4·r`.
//!
//! Each measure has a world-level entry point and a variant over plain
//! per-group position lists so it can be evaluated on arbitrary inputs.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::union_find::UnionFind;
use crate::world::World;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricSample {
    pub tick: u64,
    /// Group dispersion in cm.
    pub d: f64,
    /// Group-based second moment.
    pub u: f64,
    /// Proportion of clustered robots over all groups.
    pub pc: f64,
    /// Largest component size per group.
    pub lc: Vec<usize>,
    /// `lc_k / n_k` per group.
    pub pc_k: Vec<f64>,
}

/// Running `Σ t·d(t)` over control steps `t = 1, 2, ...`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostAccumulator {
    sum: f64,
    last_t: u64,
}

impl CostAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `t·d`. Steps must arrive in strictly increasing order starting
    /// at 1 or later.
    pub fn accumulate(&mut self, t: u64, d: f64) -> Result<()> {
        if t <= self.last_t {
            return Err(Error::Sequencing {
                last: self.last_t,
                got: t,
            });
        }
        if !d.is_finite() {
            return Err(Error::Numeric("dispersion"));
        }
        self.sum += t as f64 * d;
        self.last_t = t;
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.sum
    }

    /// Last step accumulated (the run length `T` once a run completes).
    pub fn steps(&self) -> u64 {
        self.last_t
    }
}

/// Re-accumulates `U` from a dispersion series whose first entry is step 1.
pub fn cost_of_series(d: impl IntoIterator<Item = f64>) -> Result<f64> {
    let mut acc = CostAccumulator::new();
    for (i, d) in d.into_iter().enumerate() {
        acc.accumulate(i as u64 + 1, d)?;
    }
    Ok(acc.total())
}

fn require_nonempty(groups: &[Vec<Vec2>]) -> Result<()> {
    match groups.iter().position(Vec::is_empty) {
        Some(k) => Err(Error::InvalidScenario(format!("group {k} has no robots"))),
        None => Ok(()),
    }
}

pub fn group_dispersion(world: &World) -> Result<f64> {
    dispersion_of(&world.group_positions())
}

/// Sum of per-group diameters. A singleton group contributes 0.
pub fn dispersion_of(groups: &[Vec<Vec2>]) -> Result<f64> {
    require_nonempty(groups)?;
    Ok(groups.iter().map(|g| diameter(g)).sum())
}

/// Largest pairwise distance in a point set. The farthest pair always lies
/// on the convex hull, so only hull vertices are compared.
pub fn diameter(points: &[Vec2]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let hull = convex_hull(points);
    let mut best = 0.0f64;
    for (i, &a) in hull.iter().enumerate() {
        for &b in &hull[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

/// Andrew's monotone chain. Collinear boundary points are dropped.
fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Vec2, a: Vec2, b: Vec2| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

pub fn second_moment(world: &World) -> Result<f64> {
    second_moment_of(&world.group_positions(), world.robot_radius())
}

pub fn second_moment_of(groups: &[Vec<Vec2>], radius: f64) -> Result<f64> {
    require_nonempty(groups)?;
    let mut total = 0.0;
    for group in groups {
        let n = group.len() as f64;
        let sum = group.iter().fold(Vec2::ZERO, |acc, &p| acc + p);
        let centroid = sum * (1.0 / n);
        total += group.iter().map(|&p| (p - centroid).norm_squared()).sum::<f64>();
    }
    Ok(total / (4.0 * radius * radius))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub pc: f64,
    pub lc: Vec<usize>,
    pub pc_k: Vec<f64>,
}

pub fn clustered_proportion(world: &World) -> Result<Clustering> {
    clustering_of(&world.group_positions(), world.robot_radius())
}

/// Whether two same-group robots count as connected: center distance
/// strictly below four body radii.
pub fn connected(a: Vec2, b: Vec2, radius: f64) -> bool {
    (a - b).norm() < 4.0 * radius
}

pub fn clustering_of(groups: &[Vec<Vec2>], radius: f64) -> Result<Clustering> {
    require_nonempty(groups)?;
    let mut lc = Vec::with_capacity(groups.len());
    for group in groups {
        let mut uf = UnionFind::new(group.len());
        for (i, &a) in group.iter().enumerate() {
            for (j, &b) in group.iter().enumerate().skip(i + 1) {
                if connected(a, b, radius) {
                    uf.union(i, j);
                }
            }
        }
        lc.push(uf.largest());
    }
    let total: usize = groups.iter().map(Vec::len).sum();
    let pc = lc.iter().sum::<usize>() as f64 / total as f64;
    let pc_k = lc
        .iter()
        .zip(groups)
        .map(|(&l, g)| l as f64 / g.len() as f64)
        .collect();
    Ok(Clustering { pc, lc, pc_k })
}

/// All metrics for the world's current tick.
pub fn sample(world: &World) -> Result<MetricSample> {
    let groups = world.group_positions();
    let radius = world.robot_radius();
    let Clustering { pc, lc, pc_k } = clustering_of(&groups, radius)?;
    Ok(MetricSample {
        tick: world.tick,
        d: dispersion_of(&groups)?,
        u: second_moment_of(&groups, radius)?,
        pc,
        lc,
        pc_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::ROBOT_RADIUS;
    use proptest::prelude::*;

    const R: f64 = ROBOT_RADIUS;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion_of(&[vec![v(0.0, 0.0), v(3.0, 4.0)]]).unwrap(), 5.0);
        let two = [
            vec![v(0.0, 0.0), v(3.0, 4.0), v(1.0, 1.0)],
            vec![v(10.0, 0.0), v(17.0, 0.0)],
        ];
        assert_eq!(dispersion_of(&two).unwrap(), 12.0);
        assert_eq!(dispersion_of(&[vec![v(5.0, 5.0)]]).unwrap(), 0.0);
        assert!(matches!(
            dispersion_of(&[vec![v(0.0, 0.0)], vec![]]),
            Err(Error::InvalidScenario(_))
        ));
    }

    #[test]
    fn diameter_with_collinear_and_duplicate_points() {
        let pts = [v(0.0, 0.0), v(1.0, 0.0), v(2.0, 0.0), v(2.0, 0.0), v(3.0, 0.0)];
        assert_eq!(diameter(&pts), 3.0);
        let square = [v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0), v(0.5, 0.5)];
        assert_eq!(diameter(&square), 2f64.sqrt());
    }

    #[test]
    fn cost_accumulation() {
        assert_eq!(cost_of_series([2.0, 3.0, 4.0]).unwrap(), 20.0);
        assert_eq!(cost_of_series([0.0; 10]).unwrap(), 0.0);
        let c = 7.5;
        let t = 240u64;
        let u = cost_of_series(std::iter::repeat_n(c, t as usize)).unwrap();
        assert_eq!(u, c * (t * (t + 1) / 2) as f64);

        let mut acc = CostAccumulator::new();
        assert!(acc.accumulate(0, 1.0).is_err());
        acc.accumulate(1, 1.0).unwrap();
        acc.accumulate(2, 1.0).unwrap();
        assert!(matches!(acc.accumulate(2, 1.0), Err(Error::Sequencing { last: 2, got: 2 })));
        assert_eq!(acc.steps(), 2);
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(second_moment_of(&[vec![v(3.0, 3.0); 4], vec![v(9.0, 1.0); 2]], R).unwrap(), 0.0);
        let pair = [vec![v(-2.0 * R, 0.0), v(2.0 * R, 0.0)]];
        assert!((second_moment_of(&pair, R).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn clustering_examples() {
        let tight = [
            vec![v(0.0, 0.0), v(7.4, 0.0), v(3.7, 6.4)],
            vec![v(100.0, 100.0), v(107.4, 100.0)],
        ];
        assert_eq!(clustering_of(&tight, R).unwrap().pc, 1.0);

        let mixed = [
            vec![v(0.0, 0.0), v(3.0 * R, 0.0), v(6.0 * R, 0.0)],
            vec![v(200.0, 0.0), v(200.0 + 10.0 * R, 0.0)],
        ];
        let c = clustering_of(&mixed, R).unwrap();
        assert_eq!(c.lc, vec![3, 1]);
        assert_eq!(c.pc, 0.8);
        assert_eq!(c.pc_k, vec![1.0, 0.5]);
    }

    #[test]
    fn connection_threshold_is_strict() {
        assert!(!connected(v(0.0, 0.0), v(4.0 * R, 0.0), R));
        assert!(connected(v(0.0, 0.0), v(4.0 * R - 1e-9, 0.0), R));
        let c = clustering_of(&[vec![v(0.0, 0.0), v(4.0 * R, 0.0)]], R).unwrap();
        assert_eq!(c.lc, vec![1]);
    }

    fn cloud(max: usize) -> impl Strategy<Value = Vec<Vec2>> {
        proptest::collection::vec((0.0f64..300.0, 0.0f64..300.0).prop_map(|(x, y)| v(x, y)), 1..max)
    }

    proptest! {
        #[test]
        fn dispersion_invariances(pts in cloud(30), dx in -50.0f64..50.0, dy in -50.0f64..50.0, k in 0.5f64..3.0) {
            let base = dispersion_of(std::slice::from_ref(&pts)).unwrap();
            let mut rev = pts.clone();
            rev.reverse();
            prop_assert!((dispersion_of(&[rev]).unwrap() - base).abs() <= 1e-9 * (1.0 + base));
            let moved: Vec<_> = pts.iter().map(|&p| p + v(dx, dy)).collect();
            prop_assert!((dispersion_of(&[moved]).unwrap() - base).abs() <= 1e-9 * (1.0 + base));
            let scaled: Vec<_> = pts.iter().map(|&p| p * k).collect();
            prop_assert!((dispersion_of(&[scaled]).unwrap() - k * base).abs() <= 1e-9 * (1.0 + k * base));
        }

        #[test]
        fn second_moment_invariances(pts in cloud(30), dx in -50.0f64..50.0, k in 0.5f64..3.0) {
            let base = second_moment_of(std::slice::from_ref(&pts), R).unwrap();
            prop_assert!(base >= 0.0);
            let moved: Vec<_> = pts.iter().map(|&p| p + v(dx, -dx)).collect();
            prop_assert!((second_moment_of(&[moved], R).unwrap() - base).abs() <= 1e-7 * (1.0 + base));
            let scaled: Vec<_> = pts.iter().map(|&p| p * k).collect();
            prop_assert!((second_moment_of(&[scaled], R).unwrap() - k * k * base).abs() <= 1e-7 * (1.0 + k * k * base));
        }

        #[test]
        fn clustering_bounds_and_monotonicity(pts in cloud(30), r1 in 1.0f64..10.0, grow in 0.0f64..10.0) {
            let c = clustering_of(std::slice::from_ref(&pts), R).unwrap();
            prop_assert!(c.pc > 0.0 && c.pc <= 1.0);
            prop_assert!(c.lc[0] >= 1);
            // a larger threshold only adds edges
            let small = clustering_of(std::slice::from_ref(&pts), r1).unwrap();
            let large = clustering_of(std::slice::from_ref(&pts), r1 + grow).unwrap();
            prop_assert!(large.lc[0] >= small.lc[0]);
        }
    }
}
