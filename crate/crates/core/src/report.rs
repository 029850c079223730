//! CSV and SVG artifacts.
//!
//! Floats that feed later computations (costs, metric series) are printed
//! in Rust's shortest round-trip form so they parse back to the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{ValidationReport, TrialResult};
use crate::metrics::MetricSample;
use crate::physics::StepConfig;
use crate::synthesis::{HeatmapCell, DETAIL_HEADER, HEATMAP_HEADER};
use crate::world::World;

/// Group colors, in group order; groups past the end wrap around.
pub const GROUP_PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Pixels per centimeter in rendered snapshots.
pub const SVG_SCALE: f64 = 2.0;

pub const VALIDATION_HEADER: &str = "g,n_per_group,bollards,seed,checkpoint_s,pc,u,d_cm";
pub const SUMMARY_HEADER: &str =
    "g,n_per_group,bollards,checkpoint_s,trials,pc_mean,pc_min,pc_max,u_mean,u_min,u_max";

pub fn metrics_header(groups: usize) -> String {
    let mut h = String::from("tick,time_s,d_cm,u,pc");
    for k in 1..=groups {
        write!(h, ",lc_{k}").unwrap();
    }
    h
}

/// Metric time series, keeping every `sample_every`-th tick.
pub fn metrics_csv(series: &[MetricSample], groups: usize, step: &StepConfig, sample_every: usize) -> String {
    let every = sample_every.max(1) as u64;
    let mut out = metrics_header(groups);
    out.push('\n');
    for s in series.iter().filter(|s| s.tick % every == 0) {
        write!(
            out,
            "{},{:.1},{},{},{}",
            s.tick,
            s.tick as f64 * step.control_dt,
            s.d,
            s.u,
            s.pc
        )
        .unwrap();
        for lc in &s.lc {
            write!(out, ",{lc}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn trial_metrics_csv(result: &TrialResult, step: &StepConfig, sample_every: usize) -> String {
    metrics_csv(&result.series, result.config.g, step, sample_every)
}

pub fn validation_csv(report: &ValidationReport) -> String {
    let mut out = format!("{VALIDATION_HEADER}\n");
    for r in report.rows() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.g, r.n_per_group, r.bollards, r.seed, r.checkpoint_s, r.pc, r.u, r.d
        )
        .unwrap();
    }
    out
}

pub fn summary_csv(report: &ValidationReport) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for s in report.summary() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.g,
            s.n_per_group,
            s.bollards,
            s.checkpoint_s,
            s.trials,
            s.pc.mean,
            s.pc.min,
            s.pc.max,
            s.u.mean,
            s.u.min,
            s.u.max
        )
        .unwrap();
    }
    out
}

pub fn heatmap_csv(cells: &[HeatmapCell]) -> String {
    let mut out = format!("{HEATMAP_HEADER}\n");
    for c in cells {
        writeln!(
            out,
            "{:?},{:?},{},{},{}",
            c.vl2,
            c.vr2,
            c.mean_cost,
            c.ln_mean_cost,
            c.costs.len()
        )
        .unwrap();
    }
    out
}

/// Per-run costs; identical to the grid search's persisted results file.
pub fn detail_csv(cells: &[HeatmapCell], base_seed: u64) -> String {
    let mut out = format!("{DETAIL_HEADER}\n");
    for c in cells {
        for (j, u) in c.costs.iter().enumerate() {
            writeln!(out, "{:?},{:?},{},{}", c.vl2, c.vr2, base_seed + j as u64, u).unwrap();
        }
    }
    out
}

pub fn group_color(group: usize) -> &'static str {
    GROUP_PALETTE[group % GROUP_PALETTE.len()]
}

/// SVG rendering of a world: arena outline, robots as filled group-colored
/// discs with a heading tick, bollards as group-colored rings. World `y`
/// points up; the image is flipped accordingly.
pub fn snapshot_svg(world: &World) -> String {
    let side = world.arena.side;
    let size = side * SVG_SCALE;
    let px = |x: f64| x * SVG_SCALE;
    let py = |y: f64| (side - y) * SVG_SCALE;
    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size:.0}\" height=\"{size:.0}\" viewBox=\"0 0 {size:.2} {size:.2}\">"
    )
    .unwrap();
    writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{size:.2}\" height=\"{size:.2}\" fill=\"white\" stroke=\"black\" stroke-width=\"2\"/>"
    )
    .unwrap();
    for b in &world.bollards {
        writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>",
            px(b.position.x),
            py(b.position.y),
            b.radius * SVG_SCALE,
            group_color(b.group)
        )
        .unwrap();
    }
    for r in &world.robots {
        let p = r.position();
        let tip = p + r.pose.heading() * r.radius;
        writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"{}\"/>",
            px(p.x),
            py(p.y),
            r.radius * SVG_SCALE,
            group_color(r.group)
        )
        .unwrap();
        writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"1\"/>",
            px(p.x),
            py(p.y),
            px(tip.x),
            py(tip.y)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_snapshot(world: &World, out: &Path) -> Result<()> {
    fs::write(out, snapshot_svg(world)).map_err(|e| Error::io(out, e))
}
