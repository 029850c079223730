//! Brute-force reference versions of the swarm metrics, used to cross-check
//! the fast implementations on a saved world.

use std::collections::VecDeque;

use multiswarm::metrics;
use multiswarm::{Vec2, World};
use serde::Serialize;

pub const RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub robots: usize,
    pub groups: usize,
    pub d: Check,
    pub u: Check,
    pub pc: Check,
    pub ok: bool,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub fast: f64,
    pub oracle: f64,
    pub ok: bool,
}

/// Sum of per-group diameters over all pairs.
pub fn dispersion(groups: &[Vec<Vec2>]) -> f64 {
    let mut total = 0.0;
    for pts in groups {
        let mut best = 0.0f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max((pts[i] - pts[j]).norm());
            }
        }
        total += best;
    }
    total
}

/// Neumaier-compensated summation.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn second_moment(groups: &[Vec<Vec2>], radius: f64) -> f64 {
    let mut terms = Vec::new();
    for pts in groups.iter().filter(|p| !p.is_empty()) {
        let n = pts.len() as f64;
        let cx = compensated_sum(pts.iter().map(|p| p.x)) / n;
        let cy = compensated_sum(pts.iter().map(|p| p.y)) / n;
        for p in pts {
            let (dx, dy) = (p.x - cx, p.y - cy);
            terms.push(dx * dx);
            terms.push(dy * dy);
        }
    }
    compensated_sum(terms) / (4.0 * radius * radius)
}

/// Fraction of robots in their group's largest component, found by BFS
/// over the `distance < 4r` graph.
pub fn clustered_proportion(groups: &[Vec<Vec2>], radius: f64) -> f64 {
    let total: usize = groups.iter().map(Vec::len).sum();
    if total == 0 {
        return 1.0;
    }
    let limit = 4.0 * radius;
    let mut clustered = 0;
    for pts in groups {
        let mut seen = vec![false; pts.len()];
        let mut largest = 0;
        for start in 0..pts.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            let mut size = 0;
            while let Some(i) = queue.pop_front() {
                size += 1;
                for j in 0..pts.len() {
                    if !seen[j] && (pts[i] - pts[j]).norm() < limit {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            largest = largest.max(size);
        }
        clustered += largest;
    }
    clustered as f64 / total as f64
}

fn relative_match(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= RELATIVE_TOLERANCE * a.abs().max(b.abs())
}

pub fn check_world(world: &World) -> multiswarm::Result<OracleReport> {
    let groups = world.group_positions();
    let radius = world.robot_radius();
    let fast = metrics::sample(world)?;
    let d = dispersion(&groups);
    let u = second_moment(&groups, radius);
    let pc = clustered_proportion(&groups, radius);
    let d = Check { fast: fast.d, oracle: d, ok: fast.d == d };
    let u = Check { fast: fast.u, oracle: u, ok: relative_match(fast.u, u) };
    let pc = Check { fast: fast.pc, oracle: pc, ok: fast.pc == pc };
    Ok(OracleReport {
        robots: world.robots.len(),
        groups: world.group_count(),
        ok: d.ok && u.ok && pc.ok,
        d,
        u,
        pc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracles_on_small_group() {
        let pts = vec![Vec2::new(0.0, 0.0), Vec2::new(3.0, 4.0), Vec2::new(40.0, 0.0)];
        assert_eq!(dispersion(std::slice::from_ref(&pts)), 40.0);
        // centroid (43/3, 4/3)
        let expected = [(0.0, 0.0), (3.0, 4.0), (40.0, 0.0)]
            .iter()
            .map(|&(x, y): &(f64, f64)| (x - 43.0 / 3.0).powi(2) + (y - 4.0 / 3.0).powi(2))
            .sum::<f64>()
            / 4.0;
        assert!((second_moment(std::slice::from_ref(&pts), 1.0) - expected).abs() < 1e-12);
        assert_eq!(clustered_proportion(&[pts], 1.5), 2.0 / 3.0);
    }

    #[test]
    fn compensation_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
    }
}
