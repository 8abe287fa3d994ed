use std::fmt::Write as _;
use std::path::Path;

use super::{write_text, Scenario};
use crate::cecbs::Solution;
use crate::error::Result;
use crate::geometry::Point;
use crate::planner::RrtTree;

/// Renders the map, optionally with solution paths and an RRT* tree.
///
/// World y points up, so everything is drawn inside a group that flips the
/// SVG y axis. Output depends only on the inputs.
pub fn render_svg(scenario: &Scenario, solution: Option<&Solution>, tree: Option<&RrtTree>) -> String {
    let (w, h) = (scenario.world.width, scenario.world.height);
    let stroke = w.max(h) / 400.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}">"#
    );
    let _ = writeln!(out, r#"<g transform="translate(0 {h}) scale(1 -1)">"#);
    let _ = writeln!(
        out,
        r#"<rect class="world" x="0" y="0" width="{w}" height="{h}" fill="white" stroke="black" stroke-width="{stroke}"/>"#
    );
    for r in &scenario.obstacles {
        let _ = writeln!(
            out,
            r#"<rect class="obstacle" x="{}" y="{}" width="{}" height="{}" fill="dimgray"/>"#,
            r.x, r.y, r.w, r.h
        );
    }
    if let Some(tree) = tree {
        for (a, b) in tree.edges() {
            let _ = writeln!(
                out,
                r#"<line class="tree" x1="{}" y1="{}" x2="{}" y2="{}" stroke="red" stroke-width="{}"/>"#,
                a.x,
                a.y,
                b.x,
                b.y,
                stroke * 0.5
            );
        }
    }
    if let Some(sol) = solution {
        for (id, plan) in &sol.paths {
            let _ = writeln!(
                out,
                r#"<polyline class="path" data-agent="{id}" points="{}" fill="none" stroke="green" stroke-width="{stroke}"/>"#,
                points_attr(plan.smooth_path.points())
            );
        }
    }
    for a in &scenario.agents {
        let _ = writeln!(
            out,
            r#"<circle class="start" data-agent="{}" cx="{}" cy="{}" r="{}" fill="blue"/>"#,
            a.id, a.start.x, a.start.y, a.radius
        );
        let _ = writeln!(
            out,
            r#"<circle class="goal" data-agent="{}" cx="{}" cy="{}" r="{}" fill="green"/>"#,
            a.id, a.goal.x, a.goal.y, a.radius
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

fn points_attr(points: &[Point]) -> String {
    let mut s = String::new();
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{},{}", p.x, p.y);
    }
    s
}

pub fn write_svg(
    path: impl AsRef<Path>,
    scenario: &Scenario,
    solution: Option<&Solution>,
    tree: Option<&RrtTree>,
) -> Result<()> {
    write_text(path.as_ref(), &render_svg(scenario, solution, tree))
}
